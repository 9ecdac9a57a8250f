//! Dual objectives over pairs of measures in ∞-Wasserstein balls, a search
//! for good dual pairs supported on a scene, and diagnostics comparing
//! classifiers against a dual pair.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::classifiers::{ball_max, Scene, TabulatedClassifier};
use crate::error::{domain, Error, Result};
use crate::ext::{Compensated, ExtReal};
use crate::losses::LossFunction;
use crate::measures::{location_key, Atom, DiscreteMeasure, LabeledDistribution, PosteriorView};
use crate::risks::{
    adversarial_classification_risk, advance, brute_force_optimal_risk, enumeration_size, optimal_classification_risk,
    optimal_surrogate_risk, pointwise_surrogate_risk, RiskKind,
};
use crate::transport::{Coupling, CouplingEntry};

/// Default cap on the number of assignments searched exhaustively by
/// [`maximize_dual`].
pub const DEFAULT_DUAL_BUDGET: u64 = 1_000_000;

/// Slack allowed in weak duality and in the one-sided slackness checks.
pub const DUALITY_TOL: f64 = 1e-12;

/// Where one atom of `P0` (`label = 0`) or `P1` (`label = 1`) is moved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Move {
    pub label: u8,
    pub atom: usize,
    pub destination: usize,
}

/// A pair `(P0', P1')` with `W∞(Pi', Pi) ≤ ε`, obtained by moving every atom
/// of `Pi` to a scene point.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCandidate {
    pub p0_prime: DiscreteMeasure,
    pub p1_prime: DiscreteMeasure,
    /// Coupling with source `P0'` and target `P0`.
    pub witness0: Coupling,
    /// Coupling with source `P1'` and target `P1`.
    pub witness1: Coupling,
    pub posterior_prime: PosteriorView,
    pub objective_classification: f64,
    pub objective_surrogate: Option<f64>,
    pub assignment: Vec<Move>,
}

impl DualCandidate {
    /// Moves atom `k` of `P0` to scene point `dest0[k]` and atom `k` of `P1`
    /// to `dest1[k]`. Fails with a precondition error if some atom moves
    /// farther than `eps`.
    pub fn from_assignment(
        dist: &LabeledDistribution,
        scene: &Scene,
        eps: f64,
        dest0: &[usize],
        dest1: &[usize],
        loss: Option<&LossFunction>,
    ) -> Result<Self> {
        let (p0_prime, witness0) = push_forward(dist.p0(), scene, eps, dest0)?;
        let (p1_prime, witness1) = push_forward(dist.p1(), scene, eps, dest1)?;
        let posterior_prime = PosteriorView::from_pair(&p0_prime, &p1_prime);
        let objective_classification = optimal_classification_risk(&posterior_prime);
        let objective_surrogate = loss.map(|l| optimal_surrogate_risk(&posterior_prime, l));
        let assignment = [(0u8, dest0), (1, dest1)]
            .into_iter()
            .flat_map(|(label, dest)| dest.iter().enumerate().map(move |(atom, &destination)| Move { label, atom, destination }))
            .collect();
        Ok(DualCandidate { p0_prime, p1_prime, witness0, witness1, posterior_prime, objective_classification, objective_surrogate, assignment })
    }

    /// Checks both witnesses against the original measures.
    pub fn verify(&self, dist: &LabeledDistribution, eps: f64) -> Result<()> {
        self.witness0.certifies(&self.p0_prime, dist.p0(), eps)?;
        self.witness1.certifies(&self.p1_prime, dist.p1(), eps)
    }
}

fn push_forward(q: &DiscreteMeasure, scene: &Scene, eps: f64, dest: &[usize]) -> Result<(DiscreteMeasure, Coupling)> {
    if dest.len() != q.atoms().len() {
        return Err(Error::Invalid(format!("{} destinations for {} atoms", dest.len(), q.atoms().len())));
    }
    if let Some(&bad) = dest.iter().find(|&&d| d >= scene.len()) {
        return Err(Error::Invalid(format!("destination {bad} is outside a scene of {} points", scene.len())));
    }
    let moved = q.atoms().iter().zip(dest).map(|(a, &d)| Atom::new(scene.points()[d].clone(), a.mass));
    let image = DiscreteMeasure::new(q.dimension(), q.norm(), moved)?;
    let index: HashMap<_, usize> = image.atoms().iter().enumerate().map(|(i, a)| (location_key(&a.location), i)).collect();
    let entries = q
        .atoms()
        .iter()
        .zip(dest)
        .enumerate()
        .filter(|(_, (a, _))| a.mass > 0.0)
        .map(|(k, (a, &d))| {
            let y = &scene.points()[d];
            CouplingEntry { source: index[&location_key(y)], target: k, mass: a.mass, distance: q.norm().distance(y, &a.location) }
        })
        .collect();
    let coupling = Coupling { entries };
    coupling.certifies(&image, q, eps)?;
    Ok((image, coupling))
}

/// `R̄(P0', P1') = ∫ C*(η') d(P0' + P1')`.
pub fn dual_classification_objective(p0p: &DiscreteMeasure, p1p: &DiscreteMeasure) -> f64 {
    optimal_classification_risk(&PosteriorView::from_pair(p0p, p1p))
}

/// `R̄_φ(P0', P1') = ∫ C_φ*(η') d(P0' + P1')`.
pub fn dual_surrogate_objective(p0p: &DiscreteMeasure, p1p: &DiscreteMeasure, loss: &LossFunction) -> f64 {
    optimal_surrogate_risk(&PosteriorView::from_pair(p0p, p1p), loss)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub candidate: DualCandidate,
    /// `true` when every assignment was (implicitly) examined, so the
    /// candidate is optimal among scene-supported pairs.
    pub exhaustive: bool,
    pub evaluated: u128,
}

/// Objective of an assignment, with `C*` or `C_φ*` memoized by `η`.
struct DualObjective<'a> {
    loss: Option<&'a LossFunction>,
    memo: HashMap<u64, f64>,
    masses: Vec<(u8, f64)>,
    m0: Vec<f64>,
    m1: Vec<f64>,
}

impl DualObjective<'_> {
    fn optimal(&mut self, eta: f64) -> f64 {
        match self.loss {
            None => eta.min(1.0 - eta),
            Some(loss) => *self.memo.entry(eta.to_bits()).or_insert_with(|| loss.optimal_unchecked(eta).value),
        }
    }

    fn eval(&mut self, dest: &[usize]) -> f64 {
        self.m0.iter_mut().chain(self.m1.iter_mut()).for_each(|m| *m = 0.0);
        for (&(label, mass), &d) in self.masses.iter().zip(dest) {
            if label == 0 {
                self.m0[d] += mass;
            } else {
                self.m1[d] += mass;
            }
        }
        let mut total = Compensated::default();
        for s in 0..self.m0.len() {
            let p = self.m0[s] + self.m1[s];
            if p > 0.0 {
                total.add(p * self.optimal((self.m1[s] / p).clamp(0.0, 1.0)));
            }
        }
        total.value()
    }
}

/// Maximizes the dual objective (`R̄_φ` when a loss is given, `R̄` otherwise)
/// over pairs obtained by moving each atom to a scene point within `eps`.
///
/// When the number of assignments is at most `budget` the search is
/// exhaustive, in lexicographic order (atoms of `P0` first, destinations in
/// scene order), and stops early at an assignment reaching the upper bound
/// `total mass · C_φ*(1/2)`. Otherwise it runs coordinate ascent from the
/// identity assignment, sweeping atoms in order and moving an atom only on a
/// strict improvement (lowest destination index among ties).
pub fn maximize_dual(
    dist: &LabeledDistribution,
    eps: f64,
    scene: &Scene,
    loss: Option<&LossFunction>,
    budget: u64,
) -> Result<DualSolution> {
    if !(eps >= 0.0) {
        return domain(format!("eps must be non-negative, got {eps}"));
    }
    let origins: Vec<usize> = scene.locate(dist.p0())?.into_iter().chain(scene.locate(dist.p1())?).collect();
    let masses: Vec<(u8, f64)> = dist
        .p0()
        .atoms()
        .iter()
        .map(|a| (0, a.mass))
        .chain(dist.p1().atoms().iter().map(|a| (1, a.mass)))
        .collect();
    let choices: Vec<Vec<usize>> = origins.iter().map(|&o| scene.ball(o, eps)).collect();
    let mut objective = DualObjective { loss, memo: HashMap::new(), masses, m0: vec![0.0; scene.len()], m1: vec![0.0; scene.len()] };

    let required = enumeration_size(choices.iter().map(Vec::len));
    let exhaustive = required <= u128::from(budget);
    let mut evaluated = 0u128;
    let best = if exhaustive {
        let bound = (dist.p0().mass() + dist.p1().mass()) * objective.optimal(0.5);
        let mut idx = vec![0usize; choices.len()];
        let mut dest: Vec<usize> = choices.iter().map(|c| c[0]).collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        loop {
            let value = objective.eval(&dest);
            evaluated += 1;
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, dest.clone()));
                if value >= bound {
                    break;
                }
            }
            if !advance(&mut idx, |k| choices[k].len()) {
                break;
            }
            for (k, &i) in idx.iter().enumerate() {
                dest[k] = choices[k][i];
            }
        }
        best.expect("at least one assignment is evaluated").1
    } else {
        let mut dest = origins.clone();
        let mut current = objective.eval(&dest);
        evaluated += 1;
        loop {
            let mut improved = false;
            for k in 0..dest.len() {
                let keep = dest[k];
                let (mut best_value, mut best_dest) = (current, keep);
                for &c in &choices[k] {
                    if c == keep {
                        continue;
                    }
                    dest[k] = c;
                    let value = objective.eval(&dest);
                    evaluated += 1;
                    if value > best_value {
                        (best_value, best_dest) = (value, c);
                    }
                }
                dest[k] = best_dest;
                if best_dest != keep {
                    current = best_value;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        dest
    };

    let n0 = dist.p0().atoms().len();
    let candidate = DualCandidate::from_assignment(dist, scene, eps, &best[..n0], &best[n0..], loss)?;
    Ok(DualSolution { candidate, exhaustive, evaluated })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub classifier: TabulatedClassifier,
    pub dual_solution: DualSolution,
}

/// Brute-force primal minimum against the dual search on the same scene:
/// the zero-one problem without a loss, the surrogate problem with one.
pub fn duality_gap(
    dist: &LabeledDistribution,
    eps: f64,
    scene: Arc<Scene>,
    loss: Option<&LossFunction>,
    value_grid: &[ExtReal],
    primal_budget: u64,
    dual_budget: u64,
) -> Result<GapReport> {
    let kind = loss.map_or(RiskKind::ZeroOne, |l| RiskKind::Surrogate(l.clone()));
    let primal = brute_force_optimal_risk(dist, scene.clone(), eps, value_grid, &kind, primal_budget)?;
    let dual_solution = maximize_dual(dist, eps, &scene, loss, dual_budget)?;
    let dual = dual_solution.candidate.objective_surrogate.unwrap_or(dual_solution.candidate.objective_classification);
    let primal_value = primal.value.to_f64();
    Ok(GapReport { primal: primal_value, dual, gap: primal_value - dual, classifier: primal.classifier, dual_solution })
}

/// `R^ε(f) ≥ R̄(P0', P1') − tol`, after checking the candidate's witnesses.
pub fn weak_duality_check(dist: &LabeledDistribution, eps: f64, f: &TabulatedClassifier, candidate: &DualCandidate) -> Result<bool> {
    candidate.verify(dist, eps)?;
    let risk = adversarial_classification_risk(dist, f, eps)?;
    Ok(risk >= candidate.objective_classification - DUALITY_TOL)
}

/// Residuals of the approximate complementary slackness relations for one
/// member `f_n` of a sequence, against a fixed dual pair `(P0*, P1*)`.
/// Surrogate residuals are `None` where both sides are the same infinity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlacknessRow {
    pub n: u32,
    /// `∫ C_φ(η*, f_n) dP* − ∫ C_φ*(η*) dP*`.
    pub surrogate_conditional: Option<ExtReal>,
    /// `∫ S_ε(φ∘f_n) dP1 − ∫ φ∘f_n dP1*`.
    pub surrogate_transport_p1: Option<ExtReal>,
    /// `∫ S_ε(φ∘−f_n) dP0 − ∫ φ∘−f_n dP0*`.
    pub surrogate_transport_p0: Option<ExtReal>,
    /// `∫ C(η*, f_n) dP* − ∫ C*(η*) dP*`.
    pub classification_conditional: f64,
    /// `∫ S_ε(1[f_n ≤ 0]) dP1 − ∫ 1[f_n ≤ 0] dP1*`.
    pub classification_transport_p1: f64,
    /// `∫ S_ε(1[f_n > 0]) dP0 − ∫ 1[f_n > 0] dP0*`.
    pub classification_transport_p0: f64,
    /// `∫ S_ε(1[f_n ≤ 0]) dP1 ≤ ∫ 1[f_n ≤ 0] dP1*` up to tolerance.
    pub classification_p1_tight: bool,
    /// `∫ S_ε(1[f_n > 0]) dP0 ≤ ∫ 1[f_n > 0] dP0*` up to tolerance.
    pub classification_p0_tight: bool,
}

fn integrate_table<T: Copy>(scene: &Scene, q: &DiscreteMeasure, table: &[T], mut acc: impl FnMut(f64, T)) -> Result<()> {
    for (i, a) in scene.locate(q)?.into_iter().zip(q.atoms()) {
        acc(a.mass, table[i]);
    }
    Ok(())
}

fn ext_integral(scene: &Scene, q: &DiscreteMeasure, table: &[ExtReal]) -> Result<ExtReal> {
    let mut terms = Vec::new();
    integrate_table(scene, q, table, |m, v| terms.push(v.weighted(m)))?;
    Ok(terms.into_iter().sum())
}

fn indicator_integral(scene: &Scene, q: &DiscreteMeasure, table: &[bool]) -> Result<f64> {
    let mut total = Compensated::default();
    integrate_table(scene, q, table, |m, v| {
        if v {
            total.add(m)
        }
    })?;
    Ok(total.value())
}

fn slackness_row(
    dist: &LabeledDistribution,
    eps: f64,
    loss: &LossFunction,
    n: u32,
    f: &TabulatedClassifier,
    candidate: &DualCandidate,
) -> Result<SlacknessRow> {
    let scene = f.scene();
    let balls = scene.balls(eps);
    let sup = |t: &[ExtReal]| -> Vec<ExtReal> { balls.iter().map(|b| ball_max(t, b)).collect() };
    let sup_bool = |t: &[bool]| -> Vec<bool> { balls.iter().map(|b| b.iter().any(|&j| t[j])).collect() };

    let phi_f: Vec<ExtReal> = f.values().iter().map(|&v| loss.eval(v)).collect();
    let phi_neg_f: Vec<ExtReal> = f.values().iter().map(|&v| loss.eval(-v)).collect();
    let nonpositive: Vec<bool> = f.values().iter().map(|&v| v <= ExtReal::ZERO).collect();
    let positive: Vec<bool> = nonpositive.iter().map(|b| !b).collect();

    let post = &candidate.posterior_prime;
    let cond = pointwise_surrogate_risk(post, f, loss)?;
    let surrogate_conditional = cond.checked_sub(ExtReal::Finite(optimal_surrogate_risk(post, loss)));
    let surrogate_transport_p1 =
        ext_integral(scene, dist.p1(), &sup(&phi_f))?.checked_sub(ext_integral(scene, &candidate.p1_prime, &phi_f)?);
    let surrogate_transport_p0 =
        ext_integral(scene, dist.p0(), &sup(&phi_neg_f))?.checked_sub(ext_integral(scene, &candidate.p0_prime, &phi_neg_f)?);

    let mut zero_one_cond = Compensated::default();
    for ((x, &p), &eta) in post.support.iter().zip(&post.p_mass).zip(&post.eta) {
        zero_one_cond.add(p * if f.value_at(x)? <= ExtReal::ZERO { eta } else { 1.0 - eta });
    }
    let classification_conditional = zero_one_cond.value() - optimal_classification_risk(post);
    let classification_transport_p1 =
        indicator_integral(scene, dist.p1(), &sup_bool(&nonpositive))? - indicator_integral(scene, &candidate.p1_prime, &nonpositive)?;
    let classification_transport_p0 =
        indicator_integral(scene, dist.p0(), &sup_bool(&positive))? - indicator_integral(scene, &candidate.p0_prime, &positive)?;

    Ok(SlacknessRow {
        n,
        surrogate_conditional,
        surrogate_transport_p1,
        surrogate_transport_p0,
        classification_conditional,
        classification_transport_p1,
        classification_transport_p0,
        classification_p1_tight: classification_transport_p1 <= DUALITY_TOL,
        classification_p0_tight: classification_transport_p0 <= DUALITY_TOL,
    })
}

/// One [`SlacknessRow`] per `(n, f_n)` in `family`.
pub fn slackness_report(
    dist: &LabeledDistribution,
    eps: f64,
    loss: &LossFunction,
    family: &[(u32, TabulatedClassifier)],
    candidate: &DualCandidate,
) -> Result<Vec<SlacknessRow>> {
    candidate.verify(dist, eps)?;
    family.iter().map(|(n, f)| slackness_row(dist, eps, loss, *n, f, candidate)).collect()
}
