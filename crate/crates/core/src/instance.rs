//! JSON instance files.
//!
//! Coordinates, masses and radii may be written as JSON numbers or as
//! decimal strings; either way they are parsed once, with correct rounding,
//! and written back as the shortest decimal that round-trips.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "norm": "l2",
//!   "epsilon": "0.6",
//!   "scene": [["0"], ["0.5"], ["1"]],
//!   "p0": [{"location": ["1"], "mass": "0.5"}],
//!   "p1": [{"location": ["0"], "mass": "0.5"}],
//!   "loss": {"family": "rho_margin", "rho": 1},
//!   "classifiers": [{"name": "sign", "values": ["inf", 0, "-inf"]}],
//!   "value_grid": ["-inf", -1, 0, 1, "inf"],
//!   "budgets": {"primal": 2000000, "dual": 1000000},
//!   "candidate": {"p0": [1], "p1": [1]}
//! }
//! ```
//!
//! Only `dimension`, `epsilon`, `p0` and `p1` are required. Without a
//! `scene` the support of `P0 + P1` is used. Candidate destinations index
//! scene points, one per atom of the measure after duplicate locations are
//! merged.

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::classifiers::{Scene, TabulatedClassifier};
use crate::duality::DualCandidate;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::losses::LossFunction;
use crate::measures::{Atom, DiscreteMeasure, LabeledDistribution, Norm};
use crate::risks::default_value_grid;

/// A finite real read from a JSON number or a decimal string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct DecimalVisitor;

        impl Visitor<'_> for DecimalVisitor {
            type Value = Decimal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a finite number or decimal string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Decimal, E> {
                match v.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Decimal(x)),
                    _ => Err(E::custom(format!("not a finite decimal: {v:?}"))),
                }
            }
        }

        d.deserialize_any(DecimalVisitor)
    }
}

fn reals(xs: &[Decimal]) -> Vec<f64> {
    xs.iter().map(|d| d.0).collect()
}

fn decimals(xs: &[f64]) -> Vec<Decimal> {
    xs.iter().map(|&x| Decimal(x)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub location: Vec<Decimal>,
    pub mass: Decimal,
}

impl AtomSpec {
    pub fn from_atom(a: &Atom) -> Self {
        AtomSpec { location: decimals(&a.location), mass: Decimal(a.mass) }
    }
}

fn measure(dimension: usize, norm: Norm, atoms: &[AtomSpec]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(dimension, norm, atoms.iter().map(|a| Atom::new(reals(&a.location), a.mass.0)))
}

/// Values aligned with the scene point order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub values: Vec<ExtReal>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<u64>,
}

/// Scene index receiving each atom of `P0` and of `P1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    pub p0: Vec<usize>,
    pub p1: Vec<usize>,
}

fn default_norm() -> Norm {
    Norm::L2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub dimension: usize,
    #[serde(default = "default_norm")]
    pub norm: Norm,
    pub epsilon: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Vec<Vec<Decimal>>>,
    pub p0: Vec<AtomSpec>,
    pub p1: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossFunction>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classifiers: Vec<ClassifierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_grid: Option<Vec<ExtReal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Budgets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateSpec>,
}

/// An instance with every field validated and converted.
#[derive(Clone, Debug)]
pub struct Problem {
    pub dist: LabeledDistribution,
    pub scene: Arc<Scene>,
    pub eps: f64,
    pub loss: Option<LossFunction>,
    pub classifiers: Vec<(String, TabulatedClassifier)>,
    pub value_grid: Vec<ExtReal>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("instance: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances always serialize")
    }

    /// An instance with no loss, classifiers or options.
    pub fn from_parts(dist: &LabeledDistribution, scene: Option<&Scene>, eps: f64) -> Self {
        Instance {
            dimension: dist.dimension(),
            norm: dist.norm(),
            epsilon: Decimal(eps),
            scene: scene.map(|s| s.points().iter().map(|p| decimals(p)).collect()),
            p0: dist.p0().atoms().iter().map(AtomSpec::from_atom).collect(),
            p1: dist.p1().atoms().iter().map(AtomSpec::from_atom).collect(),
            loss: None,
            classifiers: Vec::new(),
            value_grid: None,
            budgets: None,
            candidate: None,
        }
    }

    pub fn distribution(&self) -> Result<LabeledDistribution> {
        LabeledDistribution::new(measure(self.dimension, self.norm, &self.p0)?, measure(self.dimension, self.norm, &self.p1)?)
    }

    /// Validates the instance. `eps` overrides the instance radius.
    pub fn resolve(&self, eps: Option<f64>) -> Result<Problem> {
        let dist = self.distribution()?;
        let scene = match &self.scene {
            Some(points) => Scene::new(self.dimension, self.norm, points.iter().map(|p| reals(p)).collect())?,
            None => Scene::covering(&dist),
        };
        scene.locate(dist.p0())?;
        scene.locate(dist.p1())?;
        let scene = Arc::new(scene);
        let eps = eps.unwrap_or(self.epsilon.0);
        if !(eps >= 0.0) {
            return Err(Error::Invalid(format!("epsilon must be non-negative, got {eps}")));
        }
        let classifiers = self
            .classifiers
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let name = c.name.clone().unwrap_or_else(|| format!("f{i}"));
                Ok((name, TabulatedClassifier::new(scene.clone(), c.values.clone())?))
            })
            .collect::<Result<_>>()?;
        let value_grid = match &self.value_grid {
            Some(g) if g.is_empty() => return Err(Error::Invalid("value_grid is empty".into())),
            Some(g) => g.clone(),
            None => default_value_grid(self.loss.as_ref()),
        };
        Ok(Problem { dist, scene, eps, loss: self.loss.clone(), classifiers, value_grid })
    }

    /// The declared candidate, if any, checked against `problem`.
    pub fn candidate(&self, problem: &Problem) -> Option<Result<DualCandidate>> {
        self.candidate.as_ref().map(|c| {
            DualCandidate::from_assignment(&problem.dist, &problem.scene, problem.eps, &c.p0, &c.p1, problem.loss.as_ref())
        })
    }
}

/// Two measures of equal mass for `W∞` queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportInstance {
    pub dimension: usize,
    #[serde(default = "default_norm")]
    pub norm: Norm,
    pub q: Vec<AtomSpec>,
    pub q_prime: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Decimal>,
}

impl TransportInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("transport instance: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances always serialize")
    }

    pub fn measures(&self) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        Ok((measure(self.dimension, self.norm, &self.q)?, measure(self.dimension, self.norm, &self.q_prime)?))
    }
}
