//! On-disk JSON formats for map and potential specs.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

use super::potential::Potential;
use super::rational::{CurveSpec, RationalMap};

/// A polynomial coefficient: plain real number or [re, im] pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Re(f64),
    Pair([f64; 2]),
}

impl CoeffSpec {
    fn to_complex<T: Real>(self) -> Complex<T> {
        match self {
            CoeffSpec::Re(x) => Complex::new(T::from_f(x), T::zero()),
            CoeffSpec::Pair([re, im]) => Complex::new(T::from_f(re), T::from_f(im)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Rational {
        num: Vec<CoeffSpec>,
        den: Vec<CoeffSpec>,
        curve: String,
        #[serde(rename = "n_C")]
        n_c: usize,
    },
    Subdivision {
        post_count: usize,
        tiles: Vec<TileColorSpec>,
        template: TemplateSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileColorSpec {
    pub color: String,
}

/// Declarative level-1 complex of a two-tile subdivision rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateSpec {
    /// One entry per 1-vertex: the 0-vertex it maps to. The first
    /// `post_count` vertices are the 0-vertices themselves.
    pub vertices: Vec<VertexSpec>,
    /// Declared local degrees, validated against the complex.
    pub vertex_degrees: Vec<usize>,
    pub edges: Vec<EdgeSpec>,
    pub tiles: Vec<TileSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexSpec {
    pub label: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub ends: [usize; 2],
    pub container: ContainerSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContainerSpec {
    Edge { edge: usize },
    Tile { tile: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileSpec {
    pub color: String,
    /// Positively oriented boundary word.
    pub boundary: Vec<DartSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DartSpec {
    pub e: usize,
    #[serde(default)]
    pub rev: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    Constant { a: f64 },
    ChordalPower { a: f64, beta: f64, center: [f64; 2] },
}

impl PotentialSpec {
    pub fn build<T: Real>(&self) -> Potential<T> {
        match *self {
            PotentialSpec::Constant { a } => Potential::Constant(T::from_f(a)),
            PotentialSpec::ChordalPower { a, beta, center } => Potential::ChordalPower {
                a: T::from_f(a),
                beta: T::from_f(beta),
                center: SpherePoint::from_re_im(T::from_f(center[0]), T::from_f(center[1])),
            },
        }
    }
}

impl MapSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build_rational<T: Real>(&self) -> Result<RationalMap<T>> {
        match self {
            MapSpec::Rational { num, den, curve, n_c } => {
                let curve = match curve.as_str() {
                    "real_line" => CurveSpec::RealLine,
                    other => {
                        return Err(Error::InvalidSpec(format!("unknown curve kind {other:?}")))
                    }
                };
                let num = Poly::new(num.iter().map(|c| c.to_complex()).collect());
                let den = Poly::new(den.iter().map(|c| c.to_complex()).collect());
                RationalMap::new(num, den, curve, *n_c)
            }
            MapSpec::Subdivision { .. } => Err(Error::Unsupported(
                "subdivision spec does not define a rational map",
            )),
        }
    }
}

pub fn parse_potential<T: Real>(text: &str) -> Result<Potential<T>> {
    let spec: PotentialSpec = serde_json::from_str(text)?;
    Ok(spec.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_spec_round_trip() {
        let text = r#"{"kind":"rational","num":[-2,0,1],"den":[0,0,1],"curve":"real_line","n_C":1}"#;
        let spec = MapSpec::from_json(text).unwrap();
        let map = spec.build_rational::<f64>().unwrap();
        assert_eq!(map.degree, 2);
        assert_eq!(map.post.len(), 3);
    }

    #[test]
    fn potential_spec_parses() {
        let p: Potential<f64> =
            parse_potential(r#"{"family":"chordal_power","a":0.2,"beta":1.0,"center":[0.3,0.6]}"#)
                .unwrap();
        assert!(!p.is_constant());
        let c: Potential<f64> = parse_potential(r#"{"family":"constant","a":-0.5}"#).unwrap();
        assert_eq!(c.eval(&SpherePoint::zero()), -0.5);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        assert!(MapSpec::from_json(r#"{"kind":"nonsense"}"#).is_err());
        // degree 1 map
        let text = r#"{"kind":"rational","num":[1,1],"den":[1],"curve":"real_line","n_C":1}"#;
        let spec = MapSpec::from_json(text).unwrap();
        assert!(spec.build_rational::<f64>().is_err());
    }
}
