//! Standard and adversarial risks of tabulated classifiers, and the
//! brute-force minimum over classifiers with values drawn from a finite grid.

use std::sync::Arc;

use crate::classifiers::{ball_max, Scene, TabulatedClassifier};
use crate::error::{domain, Error, Result};
use crate::ext::{fsum, ExtReal, NegInf, PosInf};
use crate::losses::LossFunction;
use crate::measures::{DiscreteMeasure, LabeledDistribution, PosteriorView};

/// Default cap on the number of classifiers enumerated by
/// [`brute_force_optimal_risk`].
pub const DEFAULT_PRIMAL_BUDGET: u64 = 2_000_000;

/// Which adversarial risk to minimize.
#[derive(Clone, Debug, PartialEq)]
pub enum RiskKind {
    ZeroOne,
    Surrogate(LossFunction),
}

fn mass_at(scene: &Scene, q: &DiscreteMeasure) -> Result<Vec<(usize, f64)>> {
    Ok(scene.locate(q)?.into_iter().zip(q.atoms().iter().map(|a| a.mass)).collect())
}

fn sum_weighted(terms: impl Iterator<Item = (f64, ExtReal)>) -> ExtReal {
    terms.map(|(m, v)| v.weighted(m)).sum()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && !eps.is_nan() {
        Ok(())
    } else {
        domain(format!("eps must be non-negative, got {eps}"))
    }
}

/// Atom masses of `P0` and `P1` placed on scene indices, plus the ε-balls.
struct Evaluator {
    p0: Vec<(usize, f64)>,
    p1: Vec<(usize, f64)>,
    balls: Vec<Vec<usize>>,
}

impl Evaluator {
    fn new(dist: &LabeledDistribution, scene: &Scene, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Evaluator { p0: mass_at(scene, dist.p0())?, p1: mass_at(scene, dist.p1())?, balls: scene.balls(eps) })
    }

    /// `∫ S_ε(1[f ≤ 0]) dP1 + ∫ S_ε(1[f > 0]) dP0` from the two indicator tables.
    fn zero_one(&self, nonpositive: &[bool], positive: &[bool]) -> f64 {
        let hit = |ind: &[bool], i: usize| self.balls[i].iter().any(|&j| ind[j]);
        let r1 = self.p1.iter().filter(|&&(i, _)| hit(nonpositive, i)).map(|&(_, m)| m);
        let r0 = self.p0.iter().filter(|&&(i, _)| hit(positive, i)).map(|&(_, m)| m);
        fsum(r1.chain(r0))
    }

    /// `∫ S_ε(φ∘f) dP1 + ∫ S_ε(φ∘−f) dP0` from the tables of `φ(f)` and `φ(−f)`.
    fn surrogate(&self, phi_f: &[ExtReal], phi_neg_f: &[ExtReal]) -> ExtReal {
        let r1 = self.p1.iter().map(|&(i, m)| (m, ball_max(phi_f, &self.balls[i])));
        let r0 = self.p0.iter().map(|&(i, m)| (m, ball_max(phi_neg_f, &self.balls[i])));
        sum_weighted(r1.chain(r0))
    }
}

fn indicator_tables(f: &TabulatedClassifier) -> (Vec<bool>, Vec<bool>) {
    let nonpositive: Vec<bool> = f.values().iter().map(|&v| v <= ExtReal::ZERO).collect();
    let positive = nonpositive.iter().map(|b| !b).collect();
    (nonpositive, positive)
}

fn loss_tables(f: &TabulatedClassifier, loss: &LossFunction) -> (Vec<ExtReal>, Vec<ExtReal>) {
    (f.values().iter().map(|&v| loss.eval(v)).collect(), f.values().iter().map(|&v| loss.eval(-v)).collect())
}

/// `R(f) = ∫ 1[f ≤ 0] dP1 + ∫ 1[f > 0] dP0`.
pub fn classification_risk(dist: &LabeledDistribution, f: &TabulatedClassifier) -> Result<f64> {
    adversarial_classification_risk(dist, f, 0.0)
}

/// `R_φ(f) = ∫ φ(f) dP1 + ∫ φ(−f) dP0`.
pub fn surrogate_risk(dist: &LabeledDistribution, f: &TabulatedClassifier, loss: &LossFunction) -> Result<ExtReal> {
    adversarial_surrogate_risk(dist, f, loss, 0.0)
}

/// `R_φ(f)` written as `∫ C_φ(η, f) dP`.
pub fn pointwise_surrogate_risk(post: &PosteriorView, f: &TabulatedClassifier, loss: &LossFunction) -> Result<ExtReal> {
    let mut terms = Vec::with_capacity(post.len());
    for ((x, &p), &eta) in post.support.iter().zip(&post.p_mass).zip(&post.eta) {
        terms.push(loss.cond(eta, f.value_at(x)?).weighted(p));
    }
    Ok(terms.into_iter().sum())
}

/// `inf_f R_φ(f) = ∫ C_φ*(η) dP`.
pub fn optimal_surrogate_risk(post: &PosteriorView, loss: &LossFunction) -> f64 {
    fsum(post.p_mass.iter().zip(&post.eta).map(|(p, &eta)| p * loss.optimal_unchecked(eta).value))
}

/// `inf_f R(f) = ∫ C*(η) dP = ∫ min(η, 1−η) dP`.
pub fn optimal_classification_risk(post: &PosteriorView) -> f64 {
    fsum(post.p_mass.iter().zip(&post.eta).map(|(p, eta)| p * eta.min(1.0 - eta)))
}

/// `R^ε(f) = ∫ S_ε(1[f ≤ 0]) dP1 + ∫ S_ε(1[f > 0]) dP0`.
pub fn adversarial_classification_risk(dist: &LabeledDistribution, f: &TabulatedClassifier, eps: f64) -> Result<f64> {
    let ev = Evaluator::new(dist, f.scene(), eps)?;
    let (nonpositive, positive) = indicator_tables(f);
    Ok(ev.zero_one(&nonpositive, &positive))
}

/// `R_φ^ε(f) = ∫ S_ε(φ∘f) dP1 + ∫ S_ε(φ∘−f) dP0`.
pub fn adversarial_surrogate_risk(dist: &LabeledDistribution, f: &TabulatedClassifier, loss: &LossFunction, eps: f64) -> Result<ExtReal> {
    let ev = Evaluator::new(dist, f.scene(), eps)?;
    let (phi_f, phi_neg_f) = loss_tables(f, loss);
    Ok(ev.surrogate(&phi_f, &phi_neg_f))
}

/// `{−∞, −1, −c, 0, c, 1, +∞}` with `c` from the margin constants of `loss`
/// (`1/2` when the loss has none), or `{−1, 0, 1}` without a loss.
pub fn default_value_grid(loss: Option<&LossFunction>) -> Vec<ExtReal> {
    let Some(loss) = loss else {
        return vec![ExtReal::Finite(-1.0), ExtReal::ZERO, ExtReal::Finite(1.0)];
    };
    let c = loss.margin_constants().map(|m| m.c).unwrap_or(0.5);
    let mut grid: Vec<ExtReal> =
        [NegInf, ExtReal::Finite(-1.0), ExtReal::Finite(-c), ExtReal::ZERO, ExtReal::Finite(c), ExtReal::Finite(1.0), PosInf].into();
    grid.sort();
    grid.dedup();
    grid
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceResult {
    pub value: ExtReal,
    /// Lexicographically first minimizer (by grid position, scene order).
    pub classifier: TabulatedClassifier,
    pub evaluated: u128,
}

pub(crate) fn enumeration_size(choices: impl IntoIterator<Item = usize>) -> u128 {
    choices.into_iter().try_fold(1u128, |acc, k| acc.checked_mul(k as u128)).unwrap_or(u128::MAX)
}

/// Exact minimum of the chosen adversarial risk over every classifier on
/// `scene` whose values are drawn from `value_grid`.
pub fn brute_force_optimal_risk(
    dist: &LabeledDistribution,
    scene: Arc<Scene>,
    eps: f64,
    value_grid: &[ExtReal],
    kind: &RiskKind,
    budget: u64,
) -> Result<BruteForceResult> {
    if value_grid.is_empty() {
        return domain("value grid is empty");
    }
    let ev = Evaluator::new(dist, &scene, eps)?;
    let n = scene.len();
    let required = enumeration_size(std::iter::repeat_n(value_grid.len(), n));
    if required > u128::from(budget) {
        return Err(Error::Budget { required, budget });
    }

    let nonpos_tab: Vec<bool> = value_grid.iter().map(|&v| v <= ExtReal::ZERO).collect();
    let (phi_tab, phi_neg_tab): (Vec<ExtReal>, Vec<ExtReal>) = match kind {
        RiskKind::Surrogate(loss) => value_grid.iter().map(|&v| (loss.eval(v), loss.eval(-v))).unzip(),
        RiskKind::ZeroOne => (Vec::new(), Vec::new()),
    };

    let mut idx = vec![0usize; n];
    let mut best: Option<(ExtReal, Vec<usize>)> = None;
    let (mut nonpositive, mut positive) = (vec![false; n], vec![false; n]);
    let (mut phi_f, mut phi_neg_f) = (vec![ExtReal::ZERO; n], vec![ExtReal::ZERO; n]);
    let mut evaluated = 0u128;
    loop {
        let value = match kind {
            RiskKind::ZeroOne => {
                for (s, &k) in idx.iter().enumerate() {
                    nonpositive[s] = nonpos_tab[k];
                    positive[s] = !nonpos_tab[k];
                }
                ExtReal::Finite(ev.zero_one(&nonpositive, &positive))
            }
            RiskKind::Surrogate(_) => {
                for (s, &k) in idx.iter().enumerate() {
                    phi_f[s] = phi_tab[k];
                    phi_neg_f[s] = phi_neg_tab[k];
                }
                ev.surrogate(&phi_f, &phi_neg_f)
            }
        };
        evaluated += 1;
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, idx.clone()));
        }
        if !advance(&mut idx, |_| value_grid.len()) {
            break;
        }
    }

    let (value, arg) = best.expect("at least one classifier is enumerated");
    let classifier = TabulatedClassifier::new(scene, arg.iter().map(|&k| value_grid[k]).collect())?;
    Ok(BruteForceResult { value, classifier, evaluated })
}

/// Odometer step in lexicographic order (last position fastest). Returns
/// `false` after the final assignment.
pub(crate) fn advance(idx: &mut [usize], choices: impl Fn(usize) -> usize) -> bool {
    for pos in (0..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < choices(pos) {
            return true;
        }
        idx[pos] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::counterexample_classifier;
    use crate::measures::{uniform_segment, Atom, Norm};

    fn line_scene(xs: &[f64]) -> Arc<Scene> {
        Arc::new(Scene::new(1, Norm::L2, xs.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    fn measure(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(1, Norm::L2, atoms.iter().map(|&(x, m)| Atom::new(vec![x], m))).unwrap()
    }

    fn two_dirac() -> LabeledDistribution {
        LabeledDistribution::new(measure(&[(1.0, 0.5)]), measure(&[(0.0, 0.5)])).unwrap()
    }

    fn counterexample(points: usize) -> LabeledDistribution {
        LabeledDistribution::new(uniform_segment(1.0, points, 0.5).unwrap(), uniform_segment(1.0, points, 0.5).unwrap()).unwrap()
    }

    fn fin(v: f64) -> ExtReal {
        ExtReal::Finite(v)
    }

    #[test]
    fn classification_risk_examples() {
        let pure = LabeledDistribution::new(DiscreteMeasure::empty(1, Norm::L2), measure(&[(0.0, 0.5), (1.0, 0.5)])).unwrap();
        let scene = Arc::new(Scene::covering(&pure));
        assert_eq!(classification_risk(&pure, &TabulatedClassifier::constant(scene, fin(1.0))).unwrap(), 0.0);

        let d = two_dirac();
        let scene = line_scene(&[0.0, 1.0]);
        let f = TabulatedClassifier::new(scene.clone(), vec![fin(1.0), fin(-1.0)]).unwrap();
        assert_eq!(classification_risk(&d, &f).unwrap(), 0.0);

        let ce = counterexample(5);
        let zero = TabulatedClassifier::constant(Arc::new(Scene::covering(&ce)), ExtReal::ZERO);
        assert!((classification_risk(&ce, &zero).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_support_point_is_a_domain_error() {
        let f = TabulatedClassifier::constant(line_scene(&[0.0]), ExtReal::ZERO);
        assert!(matches!(classification_risk(&two_dirac(), &f), Err(Error::Domain(_))));
    }

    #[test]
    fn surrogate_risk_examples() {
        let hinge = LossFunction::Hinge;
        let pure = LabeledDistribution::new(DiscreteMeasure::empty(1, Norm::L2), measure(&[(0.0, 1.0)])).unwrap();
        let scene = Arc::new(Scene::covering(&pure));
        assert_eq!(surrogate_risk(&pure, &TabulatedClassifier::constant(scene, PosInf), &hinge).unwrap(), ExtReal::ZERO);

        let ce = counterexample(5);
        let scene = Arc::new(Scene::covering(&ce));
        let zero = TabulatedClassifier::constant(scene.clone(), ExtReal::ZERO);
        assert!((surrogate_risk(&ce, &zero, &hinge).unwrap().to_f64() - 1.0).abs() < 1e-15);

        let f = counterexample_classifier(scene, 4).unwrap();
        let r = surrogate_risk(&ce, &f, &hinge).unwrap().to_f64();
        // 0.1 mass per class at the origin sees 1/n; the remaining 0.4 sees -1/n
        let expected = 0.1 * hinge.value(0.25) + 0.4 * hinge.value(-0.25) + 0.1 * hinge.value(-0.25) + 0.4 * hinge.value(0.25);
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn pointwise_identity_examples() {
        let ce = counterexample(5);
        let scene = Arc::new(Scene::covering(&ce));
        let f = counterexample_classifier(scene, 3).unwrap();
        let post = ce.posterior();
        for loss in [LossFunction::Hinge, LossFunction::Logistic, LossFunction::RhoMargin { rho: 0.5 }] {
            let a = surrogate_risk(&ce, &f, &loss).unwrap().to_f64();
            let b = pointwise_surrogate_risk(&post, &f, &loss).unwrap().to_f64();
            assert!((a - b).abs() <= 1e-12, "{loss}: {a} vs {b}");
        }
        let half = LabeledDistribution::new(measure(&[(0.0, 0.5)]), measure(&[(0.0, 0.5)])).unwrap();
        let zero = TabulatedClassifier::constant(Arc::new(Scene::covering(&half)), ExtReal::ZERO);
        assert_eq!(pointwise_surrogate_risk(&half.posterior(), &zero, &LossFunction::Hinge).unwrap(), fin(1.0));
    }

    #[test]
    fn optimal_risks() {
        let rho = LossFunction::RhoMargin { rho: 1.0 };
        let post = counterexample(5).posterior();
        assert!((optimal_surrogate_risk(&post, &rho) - 0.5).abs() < 1e-12);
        assert_eq!(optimal_surrogate_risk(&two_dirac().posterior(), &LossFunction::Exponential), 0.0);

        let d = LabeledDistribution::new(measure(&[(0.0, 0.35), (1.0, 0.1)]), measure(&[(0.0, 0.15), (1.0, 0.4)])).unwrap();
        let post = d.posterior();
        assert!((post.eta[0] - 0.3).abs() < 1e-15 && (post.eta[1] - 0.8).abs() < 1e-15);
        assert!((optimal_classification_risk(&post) - (0.3 * 0.5 + 0.2 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn adversarial_risks_on_counterexample() {
        let ce = counterexample(5);
        let scene = Arc::new(Scene::covering(&ce));
        let hinge = LossFunction::Hinge;
        for n in [1, 10, 100] {
            let f = counterexample_classifier(scene.clone(), n).unwrap();
            assert_eq!(adversarial_classification_risk(&ce, &f, 2.0).unwrap(), 1.0);
            let r = adversarial_surrogate_risk(&ce, &f, &hinge, 2.0).unwrap().to_f64();
            assert!((r - hinge.value(-1.0 / n as f64)).abs() < 1e-12);
        }
        let zero = TabulatedClassifier::constant(scene, ExtReal::ZERO);
        assert_eq!(adversarial_classification_risk(&ce, &zero, 2.0).unwrap(), 0.5);
        assert!((adversarial_surrogate_risk(&ce, &zero, &hinge, 2.0).unwrap().to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_radius_reduces_to_standard_risks() {
        let ce = counterexample(5);
        let scene = Arc::new(Scene::covering(&ce));
        let f = counterexample_classifier(scene, 2).unwrap();
        let loss = LossFunction::Logistic;
        assert_eq!(adversarial_classification_risk(&ce, &f, 0.0).unwrap(), classification_risk(&ce, &f).unwrap());
        assert_eq!(adversarial_surrogate_risk(&ce, &f, &loss, 0.0).unwrap(), surrogate_risk(&ce, &f, &loss).unwrap());
        assert!(adversarial_classification_risk(&ce, &f, -1.0).is_err());
    }

    #[test]
    fn brute_force_two_dirac() {
        let d = two_dirac();
        let scene = line_scene(&[0.0, 0.5, 1.0]);
        let grid = default_value_grid(None);
        let r = brute_force_optimal_risk(&d, scene.clone(), 0.6, &grid, &RiskKind::ZeroOne, DEFAULT_PRIMAL_BUDGET).unwrap();
        assert_eq!(r.value, fin(0.5));
        assert_eq!(r.evaluated, 27);
        let r = brute_force_optimal_risk(&d, scene, 0.2, &grid, &RiskKind::ZeroOne, DEFAULT_PRIMAL_BUDGET).unwrap();
        assert_eq!(r.value, ExtReal::ZERO);
        assert!(r.classifier.values()[0] > ExtReal::ZERO && r.classifier.values()[2] <= ExtReal::ZERO);
    }

    #[test]
    fn brute_force_pure_labels() {
        let pure = LabeledDistribution::new(measure(&[(1.0, 0.5)]), measure(&[(0.0, 0.5)])).unwrap();
        let grid = [fin(-1.0), fin(1.0)];
        let r = brute_force_optimal_risk(&pure, Arc::new(Scene::covering(&pure)), 0.0, &grid, &RiskKind::ZeroOne, 10).unwrap();
        assert_eq!(r.value, ExtReal::ZERO);
    }

    #[test]
    fn brute_force_budget() {
        let ce = counterexample(21);
        let err = brute_force_optimal_risk(&ce, Arc::new(Scene::covering(&ce)), 2.0, &default_value_grid(None), &RiskKind::ZeroOne, 1000)
            .unwrap_err();
        assert_eq!(err, Error::Budget { required: 3u128.pow(21), budget: 1000 });
    }

    #[test]
    fn default_grids() {
        assert_eq!(default_value_grid(None).len(), 3);
        let g = default_value_grid(Some(&LossFunction::RhoMargin { rho: 1.0 }));
        assert_eq!(g.len(), 7);
        assert!((g[2].to_f64() + 0.25).abs() < 1e-8);
        assert_eq!(default_value_grid(Some(&LossFunction::Hinge))[2], fin(-0.5));
    }
}
