#![allow(dead_code)]

use std::sync::Arc;

use advrisk::{Atom, DiscreteMeasure, ExtReal, LabeledDistribution, LossFunction, Norm, Scene, SeededRng, TabulatedClassifier};

pub fn line(atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::new(1, Norm::L2, atoms.iter().map(|&(x, m)| Atom::new(vec![x], m))).unwrap()
}

pub fn line_scene(xs: &[f64]) -> Arc<Scene> {
    Arc::new(Scene::new(1, Norm::L2, xs.iter().map(|&x| vec![x]).collect()).unwrap())
}

/// `P1 = δ_0`, `P0 = δ_1`, mass 1/2 each, on the scene `{0, 0.5, 1}`.
pub fn two_dirac() -> (LabeledDistribution, Arc<Scene>) {
    let dist = LabeledDistribution::new(line(&[(1.0, 0.5)]), line(&[(0.0, 0.5)])).unwrap();
    (dist, line_scene(&[0.0, 0.5, 1.0]))
}

/// Both classes uniform on `points` equally spaced atoms of `[-1, 1]`.
pub fn counterexample(points: usize) -> (LabeledDistribution, Arc<Scene>) {
    let seg = advrisk::uniform_segment(1.0, points, 0.5).unwrap();
    let dist = LabeledDistribution::new(seg.clone(), seg).unwrap();
    let scene = Arc::new(Scene::covering(&dist));
    (dist, scene)
}

pub fn pick<T: Clone>(rng: &mut SeededRng, xs: &[T]) -> T {
    xs[(rng.next_f64() * xs.len() as f64) as usize].clone()
}

pub fn below(rng: &mut SeededRng, n: usize) -> usize {
    (rng.next_f64() * n as f64) as usize
}

/// A random labeled distribution on a small lattice scene: every scene
/// point carries integer weights for each class, normalized to total mass 1.
pub fn random_instance(rng: &mut SeededRng, max_points: usize) -> (LabeledDistribution, Arc<Scene>, f64) {
    let dimension = 1 + below(rng, 2);
    let norm = pick(rng, &[Norm::L1, Norm::L2, Norm::Linf]);
    let points_wanted = 2 + below(rng, max_points - 1);
    let mut points: Vec<Vec<f64>> = Vec::new();
    while points.len() < points_wanted {
        let p: Vec<f64> = (0..dimension).map(|_| 0.5 * (below(rng, 9) as f64 - 4.0)).collect();
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let mut weights: Vec<(u32, u32)> = points.iter().map(|_| (below(rng, 4) as u32, below(rng, 4) as u32)).collect();
    if weights.iter().all(|&(a, b)| a + b == 0) {
        weights[0].1 = 1;
    }
    let total: u32 = weights.iter().map(|&(a, b)| a + b).sum();
    let atoms = |pick_class: fn(&(u32, u32)) -> u32| {
        points.iter().zip(&weights).map(|(p, w)| Atom::new(p.clone(), f64::from(pick_class(w)) / f64::from(total))).collect::<Vec<_>>()
    };
    let p0 = DiscreteMeasure::new(dimension, norm, atoms(|w| w.0)).unwrap();
    let p1 = DiscreteMeasure::new(dimension, norm, atoms(|w| w.1)).unwrap();
    let dist = LabeledDistribution::new(p0, p1).unwrap();
    let scene = Arc::new(Scene::new(dimension, norm, points).unwrap());
    let eps = pick(rng, &[0.0, 0.5, 1.0, 1.5, 2.0, 3.0]);
    (dist, scene, eps)
}

/// Uniform values in `[-2, 2)`, each replaced by `±∞` with probability 1/10.
pub fn random_classifier(rng: &mut SeededRng, scene: Arc<Scene>) -> TabulatedClassifier {
    let f = rng.classifier(scene.clone());
    let values = f
        .values()
        .iter()
        .map(|&v| match below(rng, 20) {
            0 => ExtReal::PosInf,
            1 => ExtReal::NegInf,
            _ => v,
        })
        .collect();
    TabulatedClassifier::new(scene, values).unwrap()
}

/// A random destination in the `eps`-ball of every atom.
pub fn random_assignment(rng: &mut SeededRng, dist: &LabeledDistribution, scene: &Scene, eps: f64) -> (Vec<usize>, Vec<usize>) {
    let mut dests = |q: &DiscreteMeasure| -> Vec<usize> {
        scene.locate(q).unwrap().into_iter().map(|i| pick(rng, &scene.ball(i, eps))).collect()
    };
    let d0 = dests(dist.p0());
    let d1 = dests(dist.p1());
    (d0, d1)
}

pub fn builtin_losses() -> Vec<LossFunction> {
    vec![
        LossFunction::Hinge,
        LossFunction::SquaredHinge,
        LossFunction::Exponential,
        LossFunction::Logistic,
        LossFunction::RhoMargin { rho: 1.0 },
        LossFunction::RhoMargin { rho: 0.5 },
        LossFunction::ShiftedSigmoid { tau: 1.0 },
    ]
}
