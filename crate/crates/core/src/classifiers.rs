//! Classifiers tabulated on a finite scene, and the ball supremum `S_ε`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::ext::ExtReal;
use crate::measures::{location_key, DiscreteMeasure, LabeledDistribution, LocationKey, Norm};

/// Finite evaluation domain. Every measure evaluated against a scene must
/// have its support among the scene points.
#[derive(Clone, Debug)]
pub struct Scene {
    points: Vec<Vec<f64>>,
    dimension: usize,
    norm: Norm,
    index: HashMap<LocationKey, usize>,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.dimension == other.dimension && self.norm == other.norm
    }
}

impl Scene {
    pub fn new(dimension: usize, norm: Norm, points: Vec<Vec<f64>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dimension || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("bad scene point {p:?}")));
            }
            if index.insert(location_key(p), i).is_some() {
                return Err(Error::Invalid(format!("duplicate scene point {p:?}")));
            }
        }
        Ok(Scene { points, dimension, norm, index })
    }

    /// The union of the supports of `P0` and `P1`, in posterior order.
    pub fn covering(dist: &LabeledDistribution) -> Self {
        Scene::new(dist.dimension(), dist.norm(), dist.posterior().support).expect("supports are valid points")
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.index.get(&location_key(x)).copied()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.norm.distance(&self.points[i], &self.points[j])
    }

    /// Indices of the scene points in the closed `eps`-ball around point `i`.
    pub fn ball(&self, i: usize, eps: f64) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.distance(i, j) <= eps).collect()
    }

    pub fn balls(&self, eps: f64) -> Vec<Vec<usize>> {
        (0..self.len()).map(|i| self.ball(i, eps)).collect()
    }

    /// Scene index of every atom of `q`.
    pub fn locate(&self, q: &DiscreteMeasure) -> Result<Vec<usize>> {
        if q.dimension() != self.dimension || q.norm() != self.norm {
            return domain("measure and scene live in different spaces");
        }
        q.atoms()
            .iter()
            .map(|a| self.index_of(&a.location).ok_or_else(|| Error::Domain(format!("support point {:?} is not in the scene", a.location))))
            .collect()
    }
}

/// An extended-real-valued function on the points of a scene.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedClassifier {
    scene: Arc<Scene>,
    values: Vec<ExtReal>,
}

impl TabulatedClassifier {
    pub fn new(scene: Arc<Scene>, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != scene.len() {
            return Err(Error::Invalid(format!("{} values for a scene of {} points", values.len(), scene.len())));
        }
        Ok(TabulatedClassifier { scene, values })
    }

    pub fn constant(scene: Arc<Scene>, value: ExtReal) -> Self {
        let values = vec![value; scene.len()];
        TabulatedClassifier { scene, values }
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn value_at(&self, x: &[f64]) -> Result<ExtReal> {
        match self.scene.index_of(x) {
            Some(i) => Ok(self.values[i]),
            None => domain(format!("{x:?} is not a scene point")),
        }
    }

    /// `S_ε(f)(x)`.
    pub fn sup_ball(&self, x: &[f64], eps: f64) -> Result<ExtReal> {
        sup_ball(&self.scene, &self.values, x, eps)
    }

    pub fn negated(&self) -> Self {
        TabulatedClassifier { scene: self.scene.clone(), values: self.values.iter().map(|&v| -v).collect() }
    }
}

/// `sgn α`: `+1` when `α > 0`, `−1` otherwise (so `sgn 0 = −1`).
pub fn sgn(alpha: ExtReal) -> i8 {
    if alpha > ExtReal::ZERO {
        1
    } else {
        -1
    }
}

/// `S_ε(g)(x) = max { g(y) : y in the scene, ‖x − y‖ ≤ ε }`.
pub fn sup_ball<T: Copy + PartialOrd>(scene: &Scene, g: &[T], x: &[f64], eps: f64) -> Result<T> {
    if g.len() != scene.len() {
        return domain("function and scene sizes differ");
    }
    if !(eps >= 0.0) {
        return domain(format!("eps must be non-negative, got {eps}"));
    }
    let i = scene.index_of(x).ok_or_else(|| Error::Domain(format!("{x:?} is not a scene point")))?;
    Ok(ball_max(g, &scene.ball(i, eps)))
}

pub(crate) fn ball_max<T: Copy + PartialOrd>(g: &[T], ball: &[usize]) -> T {
    let mut it = ball.iter().map(|&j| g[j]);
    let first = it.next().expect("a closed ball contains its centre");
    it.fold(first, |m, v| if v > m { v } else { m })
}

/// `S_ε(g)` on every scene point.
pub fn sup_transform<T: Copy + PartialOrd>(scene: &Scene, g: &[T], eps: f64) -> Vec<T> {
    scene.balls(eps).iter().map(|b| ball_max(g, b)).collect()
}

/// `σ_[−N, N]` applied to every value.
pub fn truncate(f: &TabulatedClassifier, bound: f64) -> Result<TabulatedClassifier> {
    if !(bound > 0.0) {
        return domain(format!("truncation bound must be positive, got {bound}"));
    }
    let (lo, hi) = (ExtReal::from_f64(-bound), ExtReal::from_f64(bound));
    Ok(TabulatedClassifier { scene: f.scene.clone(), values: f.values.iter().map(|&v| v.clamp(lo, hi)).collect() })
}

/// `f_n = 1/n` at the origin and `−1/n` elsewhere.
pub fn counterexample_classifier(scene: Arc<Scene>, n: u32) -> Result<TabulatedClassifier> {
    if n == 0 {
        return domain("n must be positive");
    }
    let origin = vec![0.0; scene.dimension()];
    let o = scene.index_of(&origin).ok_or_else(|| Error::Domain("the scene does not contain the origin".into()))?;
    let step = 1.0 / f64::from(n);
    let values = (0..scene.len()).map(|i| ExtReal::Finite(if i == o { step } else { -step })).collect();
    Ok(TabulatedClassifier { scene, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{NegInf, PosInf};
    use crate::losses::LossFunction;

    fn line(xs: &[f64]) -> Arc<Scene> {
        Arc::new(Scene::new(1, Norm::L2, xs.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    fn fin(v: f64) -> ExtReal {
        ExtReal::Finite(v)
    }

    #[test]
    fn sign_convention() {
        assert_eq!(sgn(ExtReal::ZERO), -1);
        assert_eq!(sgn(PosInf), 1);
        assert_eq!(sgn(NegInf), -1);
        assert_eq!(sgn(fin(-0.0001)), -1);
        assert_eq!(sgn(fin(1e-300)), 1);
    }

    #[test]
    fn scene_rejects_duplicates() {
        assert!(Scene::new(1, Norm::L2, vec![vec![0.0], vec![-0.0]]).is_err());
        assert!(Scene::new(1, Norm::L2, vec![vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn sup_ball_examples() {
        let scene = line(&[0.0, 0.5, 1.0]);
        let g = [3.0, 7.0, 2.0];
        assert_eq!(sup_ball(&scene, &g, &[0.0], 0.5).unwrap(), 7.0);
        assert_eq!(sup_ball(&scene, &g, &[0.0], 0.0).unwrap(), 3.0);
        assert_eq!(sup_ball(&scene, &g, &[1.0], 0.49).unwrap(), 2.0);
        assert!(matches!(sup_ball(&scene, &g, &[0.25], 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn counterexample_sup_is_constant() {
        let scene = line(&[-1.0, -0.5, 0.0, 0.5, 1.0]);
        let hinge = LossFunction::Hinge;
        for n in [1, 3, 10] {
            let f = counterexample_classifier(scene.clone(), n).unwrap();
            let phi_f: Vec<ExtReal> = f.values().iter().map(|&v| hinge.eval(v)).collect();
            let expected = hinge.eval(fin(-1.0 / n as f64));
            for x in scene.points() {
                assert_eq!(sup_ball(&scene, &phi_f, x, 2.0).unwrap(), expected);
            }
        }
    }

    #[test]
    fn counterexample_values() {
        let scene = line(&[-1.0, 0.0, 1.0]);
        let f = counterexample_classifier(scene.clone(), 1).unwrap();
        assert_eq!(f.values(), &[fin(-1.0), fin(1.0), fin(-1.0)]);
        let signs: Vec<i8> = f.values().iter().map(|&v| sgn(v)).collect();
        assert_eq!(signs, vec![-1, 1, -1]);
        assert!(counterexample_classifier(line(&[1.0, 2.0]), 1).is_err());
        assert!(counterexample_classifier(scene, 0).is_err());
    }

    #[test]
    fn truncation() {
        let scene = line(&[0.0, 1.0, 2.0, 3.0]);
        let f = TabulatedClassifier::new(scene.clone(), vec![PosInf, fin(0.2), fin(-5.0), NegInf]).unwrap();
        let t = truncate(&f, 3.0).unwrap();
        assert_eq!(t.values(), &[fin(3.0), fin(0.2), fin(-3.0), fin(-3.0)]);
        assert_eq!(truncate(&f.negated(), 3.0).unwrap().values(), t.negated().values());
        assert!(truncate(&f, 0.0).is_err());
    }

    #[test]
    fn classifier_length_checked() {
        assert!(TabulatedClassifier::new(line(&[0.0, 1.0]), vec![ExtReal::ZERO]).is_err());
    }
}
