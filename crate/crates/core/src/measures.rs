//! Finite atomic measures on `ℝ^d` and the labeled pair `(P0, P1)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ext::fsum;

/// Tolerance on `P0(ℝ^d) + P1(ℝ^d) = 1`.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let diffs = x.iter().zip(y).map(|(a, b)| (a - b).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 if x.len() == 1 => (x[0] - y[0]).abs(),
            Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::Linf => diffs.fold(0.0, f64::max),
        }
    }
}

/// Hashable key for exact coordinate equality (`-0.0` and `0.0` coincide).
pub(crate) type LocationKey = Vec<u64>;

pub(crate) fn location_key(x: &[f64]) -> LocationKey {
    x.iter().map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(location: Vec<f64>, mass: f64) -> Self {
        Atom { location, mass }
    }
}

/// A finite sum of weighted Dirac masses.
///
/// Atoms sharing a location are merged (masses summed, first occurrence
/// keeps its position) and zero-mass atoms are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    dimension: usize,
    norm: Norm,
}

impl DiscreteMeasure {
    pub fn new(dimension: usize, norm: Norm, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        let mut merged: Vec<Atom> = Vec::new();
        let mut seen: HashMap<LocationKey, usize> = HashMap::new();
        for atom in atoms {
            if atom.location.len() != dimension {
                return Err(Error::Invalid(format!(
                    "atom at {:?} has dimension {}, expected {dimension}",
                    atom.location,
                    atom.location.len()
                )));
            }
            if atom.location.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("non-finite atom location {:?}", atom.location)));
            }
            if !(atom.mass.is_finite() && atom.mass >= 0.0) {
                return Err(Error::Invalid(format!("atom mass must be finite and non-negative, got {}", atom.mass)));
            }
            match seen.get(&location_key(&atom.location)) {
                Some(&i) => merged[i].mass += atom.mass,
                None => {
                    seen.insert(location_key(&atom.location), merged.len());
                    merged.push(atom);
                }
            }
        }
        merged.retain(|a| a.mass > 0.0);
        Ok(DiscreteMeasure { atoms: merged, dimension, norm })
    }

    pub fn empty(dimension: usize, norm: Norm) -> Self {
        DiscreteMeasure { atoms: Vec::new(), dimension, norm }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn mass(&self) -> f64 {
        fsum(self.atoms.iter().map(|a| a.mass))
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `∫ g dQ` for a function given on atom locations.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        fsum(self.atoms.iter().map(|a| a.mass * g(&a.location)))
    }

    pub(crate) fn compatible(&self, other: &DiscreteMeasure) -> Result<()> {
        if self.dimension != other.dimension || self.norm != other.norm {
            return domain(format!(
                "measures live in different spaces: ({}, {:?}) vs ({}, {:?})",
                self.dimension, self.norm, other.dimension, other.norm
            ));
        }
        Ok(())
    }
}

/// `n` equally spaced atoms on `[−R, R]`, each with mass `half_mass / n`.
pub fn uniform_segment(radius: f64, n: usize, half_mass: f64) -> Result<DiscreteMeasure> {
    if n < 2 {
        return domain(format!("uniform_segment needs n >= 2, got {n}"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return domain(format!("radius must be positive, got {radius}"));
    }
    let last = (n - 1) as f64;
    let mass = half_mass / n as f64;
    // integer numerators keep the grid symmetric and hit 0 exactly for odd n
    let atoms = (0..n).map(|i| Atom::new(vec![radius * ((2 * i) as f64 - last) / last], mass));
    DiscreteMeasure::new(1, Norm::L2, atoms)
}

/// The class-conditional pair `(P0, P1)` of a binary distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDistribution {
    p0: DiscreteMeasure,
    p1: DiscreteMeasure,
}

impl LabeledDistribution {
    pub fn new(p0: DiscreteMeasure, p1: DiscreteMeasure) -> Result<Self> {
        p0.compatible(&p1)?;
        let total = p0.mass() + p1.mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Invalid(format!("P0 and P1 must carry total mass 1, got {total}")));
        }
        Ok(LabeledDistribution { p0, p1 })
    }

    pub fn p0(&self) -> &DiscreteMeasure {
        &self.p0
    }

    pub fn p1(&self) -> &DiscreteMeasure {
        &self.p1
    }

    pub fn dimension(&self) -> usize {
        self.p0.dimension
    }

    pub fn norm(&self) -> Norm {
        self.p0.norm
    }

    pub fn posterior(&self) -> PosteriorView {
        PosteriorView::from_pair(&self.p0, &self.p1)
    }
}

/// `P = P0 + P1` and `η = dP1/dP` on the support of `P`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorView {
    pub support: Vec<Vec<f64>>,
    pub p_mass: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PosteriorView {
    /// Support order: atoms of `p0` in order, then atoms of `p1` not already
    /// present.
    pub fn from_pair(p0: &DiscreteMeasure, p1: &DiscreteMeasure) -> Self {
        let mut index: HashMap<LocationKey, usize> = HashMap::new();
        let mut support = Vec::new();
        let mut m0 = Vec::new();
        let mut m1 = Vec::new();
        for (label, measure) in [(0, p0), (1, p1)] {
            for atom in &measure.atoms {
                let i = *index.entry(location_key(&atom.location)).or_insert_with(|| {
                    support.push(atom.location.clone());
                    m0.push(0.0);
                    m1.push(0.0);
                    support.len() - 1
                });
                if label == 0 {
                    m0[i] += atom.mass;
                } else {
                    m1[i] += atom.mass;
                }
            }
        }
        let p_mass: Vec<f64> = m0.iter().zip(&m1).map(|(a, b)| a + b).collect();
        let eta = m1.iter().zip(&p_mass).map(|(b, p)| (b / p).clamp(0.0, 1.0)).collect();
        PosteriorView { support, p_mass, eta }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Reconstructs `(P0, P1)` as `((1−η)P, ηP)`.
    pub fn reconstruct(&self, dimension: usize, norm: Norm) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        let p0 = self.support.iter().zip(&self.p_mass).zip(&self.eta).map(|((x, p), e)| Atom::new(x.clone(), (1.0 - e) * p));
        let p1 = self.support.iter().zip(&self.p_mass).zip(&self.eta).map(|((x, p), e)| Atom::new(x.clone(), e * p));
        Ok((DiscreteMeasure::new(dimension, norm, p0)?, DiscreteMeasure::new(dimension, norm, p1)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(x: f64, m: f64) -> Atom {
        Atom::new(vec![x], m)
    }

    #[test]
    fn norms() {
        let (x, y) = ([0.0, 0.0], [3.0, -4.0]);
        assert_eq!(Norm::L1.distance(&x, &y), 7.0);
        assert_eq!(Norm::L2.distance(&x, &y), 5.0);
        assert_eq!(Norm::Linf.distance(&x, &y), 4.0);
    }

    #[test]
    fn duplicate_locations_merge() {
        let q = DiscreteMeasure::new(1, Norm::L2, [dirac(0.0, 0.25), dirac(1.0, 0.5), dirac(-0.0, 0.25)]).unwrap();
        assert_eq!(q.atoms().len(), 2);
        assert_eq!(q.atoms()[0].mass, 0.5);
        assert_eq!(q.integrate(|x| x[0] + 1.0), 0.5 + 1.0);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(DiscreteMeasure::new(1, Norm::L2, [dirac(0.0, -0.1)]).is_err());
        assert!(DiscreteMeasure::new(2, Norm::L2, [dirac(0.0, 0.1)]).is_err());
        assert!(DiscreteMeasure::new(1, Norm::L2, [dirac(f64::NAN, 0.1)]).is_err());
    }

    #[test]
    fn distribution_mass_must_be_one() {
        let p0 = DiscreteMeasure::new(1, Norm::L2, [dirac(0.0, 0.5)]).unwrap();
        let p1 = DiscreteMeasure::new(1, Norm::L2, [dirac(0.0, 0.4)]).unwrap();
        assert!(LabeledDistribution::new(p0.clone(), p1).is_err());
        let p1 = DiscreteMeasure::new(1, Norm::L1, [dirac(0.0, 0.5)]).unwrap();
        assert!(LabeledDistribution::new(p0, p1).is_err());
    }

    #[test]
    fn posterior_examples() {
        let half = |x| DiscreteMeasure::new(1, Norm::L2, [dirac(x, 0.5)]).unwrap();
        let post = LabeledDistribution::new(half(0.0), half(0.0)).unwrap().posterior();
        assert_eq!(post.support, vec![vec![0.0]]);
        assert_eq!(post.eta, vec![0.5]);

        let post = LabeledDistribution::new(half(1.0), half(0.0)).unwrap().posterior();
        assert_eq!(post.eta, vec![0.0, 1.0]);

        let p0 = DiscreteMeasure::new(1, Norm::L2, [dirac(0.0, 0.2), dirac(1.0, 0.2)]).unwrap();
        let p1 = DiscreteMeasure::new(1, Norm::L2, [dirac(0.0, 0.6)]).unwrap();
        let post = LabeledDistribution::new(p0, p1).unwrap().posterior();
        assert!((post.eta[0] - 0.75).abs() < 1e-15);
        assert_eq!(post.eta[1], 0.0);
        assert!((post.p_mass[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn uniform_segment_examples() {
        let q = uniform_segment(1.0, 5, 0.5).unwrap();
        let xs: Vec<f64> = q.atoms().iter().map(|a| a.location[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(q.atoms().iter().all(|a| a.mass == 0.1));
        assert!((q.mass() - 0.5).abs() < 1e-15);

        let q = uniform_segment(1.0, 2, 0.5).unwrap();
        assert_eq!(q.atoms(), &[dirac(-1.0, 0.25), dirac(1.0, 0.25)]);
        assert!(uniform_segment(1.0, 1, 0.5).is_err());

        let q = uniform_segment(1.0, 21, 0.5).unwrap();
        assert!(q.atoms().iter().any(|a| a.location[0] == 0.0));
    }
}
