use std::sync::Arc;

use serde::Serialize;

use advrisk::duality::{DualSolution, Move};
use advrisk::{
    adversarial_classification_risk, adversarial_surrogate_risk, brute_force_optimal_risk, classification_risk,
    counterexample_classifier, duality_gap, in_ball, maximize_dual, optimal_classification_risk, optimal_surrogate_risk,
    slackness_report, surrogate_risk, uniform_segment, Atom, ConsistencyCertificate, Coupling, DualCandidate, Error, ExtReal,
    Instance, LabeledDistribution, LossFunction, MarginConstants, Problem, RiskKind, Scene, SeededRng, SlacknessRow,
    TabulatedClassifier, TransportInstance,
};

use crate::{CliError, Format, Objective, ResolvedBudgets};

/// Gap and equality tolerance for certifying `inf R^ε = inf R_ρ^ε`.
const GAP_TOL: f64 = 1e-9;

fn json<T: Serialize>(report: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(report).map_err(|e| CliError::Input(e.to_string()))
}

fn csv_text(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| CliError::Input(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn require_loss(problem: &Problem, flag: Option<LossFunction>) -> Result<LossFunction, CliError> {
    flag.or_else(|| problem.loss.clone()).ok_or_else(|| CliError::Input("this command needs a loss (instance \"loss\" or --loss)".into()))
}

#[derive(Serialize)]
struct LossReport<'a> {
    loss: &'a LossFunction,
    #[serde(flatten)]
    certificate: ConsistencyCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    constants: Option<MarginConstants>,
}

pub fn check_loss(loss: &LossFunction) -> Result<String, CliError> {
    let certificate = loss.certificate();
    let constants = if certificate.adversarially_consistent { Some(loss.margin_constants()?) } else { None };
    json(&LossReport { loss, certificate, constants })
}

#[derive(Serialize)]
struct ClassifierRisks {
    name: String,
    classification: f64,
    adversarial_classification: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    surrogate: Option<ExtReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    adversarial_surrogate: Option<ExtReal>,
}

#[derive(Serialize)]
struct OptimalRisks {
    classification: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    surrogate: Option<f64>,
}

#[derive(Serialize)]
struct RisksReport {
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss: Option<LossFunction>,
    optimal: OptimalRisks,
    classifiers: Vec<ClassifierRisks>,
}

pub fn risks(inst: &Instance, eps: Option<f64>) -> Result<String, CliError> {
    let p = inst.resolve(eps)?;
    let post = p.dist.posterior();
    let optimal = OptimalRisks {
        classification: optimal_classification_risk(&post),
        surrogate: p.loss.as_ref().map(|l| optimal_surrogate_risk(&post, l)),
    };
    let classifiers = p
        .classifiers
        .iter()
        .map(|(name, f)| {
            let surrogate = |e: f64| p.loss.as_ref().map(|l| adversarial_surrogate_risk(&p.dist, f, l, e)).transpose();
            Ok(ClassifierRisks {
                name: name.clone(),
                classification: classification_risk(&p.dist, f)?,
                adversarial_classification: adversarial_classification_risk(&p.dist, f, p.eps)?,
                surrogate: p.loss.as_ref().map(|l| surrogate_risk(&p.dist, f, l)).transpose()?,
                adversarial_surrogate: surrogate(p.eps)?,
            })
        })
        .collect::<Result<_, Error>>()?;
    json(&RisksReport { epsilon: p.eps, loss: p.loss.clone(), optimal, classifiers })
}

#[derive(Serialize)]
struct WinfReport<'a> {
    distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    in_ball: Option<bool>,
    coupling: &'a Coupling,
}

pub fn winf(inst: &TransportInstance, eps: Option<f64>, format: Format) -> Result<String, CliError> {
    let (q, qp) = inst.measures()?;
    let result = advrisk::winf_distance(&q, &qp)?;
    let eps = eps.or(inst.epsilon.map(|d| d.0));
    let member = eps.map(|e| in_ball(&q, &qp, e)).transpose()?.map(|b| b.member);
    match format {
        Format::Json => json(&WinfReport { distance: result.distance, epsilon: eps, in_ball: member, coupling: &result.coupling }),
        Format::Csv => csv_text(|w| {
            w.write_record(["source_idx", "target_idx", "mass", "distance"])?;
            for e in &result.coupling.entries {
                w.serialize((e.source, e.target, e.mass, e.distance))?;
            }
            Ok(())
        }),
    }
}

#[derive(Serialize)]
struct CandidateReport<'a> {
    objective_classification: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective_surrogate: Option<f64>,
    assignments: &'a [Move],
    p0_prime: &'a [Atom],
    p1_prime: &'a [Atom],
}

impl<'a> CandidateReport<'a> {
    fn new(c: &'a DualCandidate) -> Self {
        CandidateReport {
            objective_classification: c.objective_classification,
            objective_surrogate: c.objective_surrogate,
            assignments: &c.assignment,
            p0_prime: c.p0_prime.atoms(),
            p1_prime: c.p1_prime.atoms(),
        }
    }
}

#[derive(Serialize)]
struct DualReport<'a> {
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss: Option<&'a LossFunction>,
    exhaustive: bool,
    evaluated: u128,
    candidate: CandidateReport<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    declared_candidate: Option<CandidateReport<'a>>,
}

pub fn dual(inst: &Instance, eps: Option<f64>, budgets: ResolvedBudgets) -> Result<String, CliError> {
    let p = inst.resolve(eps)?;
    let sol = maximize_dual(&p.dist, p.eps, &p.scene, p.loss.as_ref(), budgets.dual)?;
    let declared = inst.candidate(&p).transpose()?;
    json(&DualReport {
        epsilon: p.eps,
        loss: p.loss.as_ref(),
        exhaustive: sol.exhaustive,
        evaluated: sol.evaluated,
        candidate: CandidateReport::new(&sol.candidate),
        declared_candidate: declared.as_ref().map(CandidateReport::new),
    })
}

#[derive(Serialize)]
struct GapReportJson<'a> {
    objective: &'static str,
    epsilon: f64,
    primal: f64,
    dual: f64,
    gap: f64,
    /// `false` when the dual value came from coordinate ascent and is only a lower bound.
    dual_exhaustive: bool,
    value_grid: &'a [ExtReal],
    classifier: &'a [ExtReal],
    candidate: CandidateReport<'a>,
}

pub fn gap(inst: &Instance, eps: Option<f64>, budgets: ResolvedBudgets, objective: Option<Objective>) -> Result<String, CliError> {
    let p = inst.resolve(eps)?;
    let objective = objective.unwrap_or(if p.loss.is_some() { Objective::Surrogate } else { Objective::ZeroOne });
    let loss = match objective {
        Objective::ZeroOne => None,
        Objective::Surrogate => Some(require_loss(&p, None)?),
    };
    let g = duality_gap(&p.dist, p.eps, p.scene.clone(), loss.as_ref(), &p.value_grid, budgets.primal, budgets.dual)?;
    json(&GapReportJson {
        objective: if loss.is_some() { "surrogate" } else { "zero_one" },
        epsilon: p.eps,
        primal: g.primal,
        dual: g.dual,
        gap: g.gap,
        dual_exhaustive: g.dual_solution.exhaustive,
        value_grid: &p.value_grid,
        classifier: g.classifier.values(),
        candidate: CandidateReport::new(&g.dual_solution.candidate),
    })
}

#[derive(Serialize)]
struct CounterexampleRow {
    classifier: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    adversarial_surrogate: ExtReal,
    adversarial_classification: f64,
}

#[derive(Serialize)]
struct Contrast {
    primal: f64,
    dual: f64,
    gap: f64,
    classifier_adversarial_classification: f64,
}

#[derive(Serialize)]
struct CounterexampleReport {
    radius: f64,
    points: usize,
    epsilon: f64,
    loss: LossFunction,
    rows: Vec<CounterexampleRow>,
    /// `R_φ^ε(f_n) = φ(−1/n)` and `R^ε(f_n) = 1` for every listed `n`.
    verified: bool,
    /// Surrogate duality gap on the same instance, when the loss passes the
    /// certificate and the enumeration fits in the budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    contrast: Option<Contrast>,
}

pub fn counterexample(
    radius: f64,
    points: usize,
    n_list: &[u32],
    loss: &LossFunction,
    budgets: ResolvedBudgets,
    format: Format,
) -> Result<String, CliError> {
    let seg = uniform_segment(radius, points, 0.5)?;
    let dist = LabeledDistribution::new(seg.clone(), seg)?;
    let scene = Arc::new(Scene::covering(&dist));
    let eps = 2.0 * radius;

    let f_star = TabulatedClassifier::constant(scene.clone(), ExtReal::ZERO);
    let mut rows = vec![CounterexampleRow {
        classifier: "f*".into(),
        n: None,
        adversarial_surrogate: adversarial_surrogate_risk(&dist, &f_star, loss, eps)?,
        adversarial_classification: adversarial_classification_risk(&dist, &f_star, eps)?,
    }];
    let mut verified = true;
    for &n in n_list {
        let f = counterexample_classifier(scene.clone(), n)?;
        let row = CounterexampleRow {
            classifier: "f_n".into(),
            n: Some(n),
            adversarial_surrogate: adversarial_surrogate_risk(&dist, &f, loss, eps)?,
            adversarial_classification: adversarial_classification_risk(&dist, &f, eps)?,
        };
        let expected = loss.value(-1.0 / f64::from(n));
        verified &= (row.adversarial_surrogate.to_f64() - expected).abs() <= 1e-12 && row.adversarial_classification == 1.0;
        rows.push(row);
    }

    if format == Format::Csv {
        return csv_text(|w| {
            w.write_record(["classifier", "n", "adversarial_surrogate", "adversarial_classification"])?;
            for r in &rows {
                let n = r.n.map(|n| n.to_string()).unwrap_or_default();
                w.write_record([r.classifier.clone(), n, r.adversarial_surrogate.to_string(), r.adversarial_classification.to_string()])?;
            }
            Ok(())
        });
    }

    let contrast = if loss.certificate().adversarially_consistent {
        let grid = advrisk::default_value_grid(Some(loss));
        match duality_gap(&dist, eps, scene, Some(loss), &grid, budgets.primal, budgets.dual) {
            Ok(g) => Some(Contrast {
                primal: g.primal,
                dual: g.dual,
                gap: g.gap,
                classifier_adversarial_classification: adversarial_classification_risk(&dist, &g.classifier, eps)?,
            }),
            Err(Error::Budget { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    json(&CounterexampleReport { radius, points, epsilon: eps, loss: loss.clone(), rows, verified, contrast })
}

#[derive(Serialize)]
struct Certification {
    inf_classification: f64,
    inf_surrogate: f64,
    dual: f64,
    dual_exhaustive: bool,
    certified: bool,
}

#[derive(Serialize)]
struct OptimumExcess {
    classification: f64,
    surrogate: f64,
}

#[derive(Serialize)]
struct MarginBoundReport {
    epsilon: f64,
    loss: LossFunction,
    status: &'static str,
    certification: Certification,
    /// Excess risks `R^ε(f) − D` and `R_ρ^ε(f) − D` of the surrogate brute-force minimizer.
    optimum: OptimumExcess,
    trials: u32,
    seed: u64,
    /// `max (R^ε(f) − R_ρ^ε(f))` over the random classifiers; absent when `trials = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    max_violation: Option<f64>,
    violations: u32,
}

pub fn margin_bound(
    inst: &Instance,
    eps: Option<f64>,
    budgets: ResolvedBudgets,
    trials: u32,
    seed: u64,
    loss: Option<LossFunction>,
) -> Result<String, CliError> {
    let p = inst.resolve(eps)?;
    let loss = match loss.or_else(|| p.loss.clone()) {
        Some(l @ LossFunction::RhoMargin { .. }) => l,
        Some(other) => return Err(CliError::Input(format!("margin-bound needs a rho_margin loss, got {other}"))),
        None => LossFunction::RhoMargin { rho: 1.0 },
    };
    let grid = match &inst.value_grid {
        Some(g) => g.clone(),
        None => advrisk::default_value_grid(Some(&loss)),
    };
    let zero_one = brute_force_optimal_risk(&p.dist, p.scene.clone(), p.eps, &grid, &RiskKind::ZeroOne, budgets.primal)?;
    let surrogate = brute_force_optimal_risk(&p.dist, p.scene.clone(), p.eps, &grid, &RiskKind::Surrogate(loss.clone()), budgets.primal)?;
    let dual: DualSolution = maximize_dual(&p.dist, p.eps, &p.scene, Some(&loss), budgets.dual)?;
    let d = dual.candidate.objective_surrogate.expect("loss was supplied");
    let (inf_r, inf_rs) = (zero_one.value.to_f64(), surrogate.value.to_f64());
    let certified = (inf_r - d).abs() <= GAP_TOL && (inf_rs - d).abs() <= GAP_TOL;

    let best = &surrogate.classifier;
    let optimum = OptimumExcess {
        classification: adversarial_classification_risk(&p.dist, best, p.eps)? - d,
        surrogate: adversarial_surrogate_risk(&p.dist, best, &loss, p.eps)?.to_f64() - d,
    };

    let mut rng = SeededRng::new(seed);
    let mut max_violation: Option<f64> = None;
    let mut violations = 0;
    for _ in 0..trials {
        let f = rng.classifier(p.scene.clone());
        let excess = adversarial_classification_risk(&p.dist, &f, p.eps)? - adversarial_surrogate_risk(&p.dist, &f, &loss, p.eps)?.to_f64();
        if excess > 0.0 {
            violations += 1;
        }
        max_violation = Some(max_violation.map_or(excess, |m| m.max(excess)));
    }

    json(&MarginBoundReport {
        epsilon: p.eps,
        loss,
        status: if certified { "verified" } else { "bound unverified on this instance" },
        certification: Certification { inf_classification: inf_r, inf_surrogate: inf_rs, dual: d, dual_exhaustive: dual.exhaustive, certified },
        optimum,
        trials,
        seed,
        max_violation,
        violations,
    })
}

#[derive(Serialize)]
struct SlacknessReport<'a> {
    epsilon: f64,
    loss: &'a LossFunction,
    candidate_source: &'static str,
    candidate: CandidateReport<'a>,
    rows: &'a [SlacknessRow],
}

pub fn slackness(
    inst: &Instance,
    eps: Option<f64>,
    budgets: ResolvedBudgets,
    n_list: Option<&[u32]>,
    loss: Option<LossFunction>,
) -> Result<String, CliError> {
    let p = inst.resolve(eps)?;
    let loss = require_loss(&p, loss)?;
    let family: Vec<(u32, TabulatedClassifier)> = match n_list {
        Some(ns) => ns.iter().map(|&n| Ok((n, counterexample_classifier(p.scene.clone(), n)?))).collect::<Result<_, Error>>()?,
        None if p.classifiers.is_empty() => return Err(CliError::Input("no classifiers in the instance and no --n-list".into())),
        None => p.classifiers.iter().zip(1..).map(|((_, f), n)| (n, f.clone())).collect(),
    };
    let (candidate, source) = match inst.candidate(&p).transpose()? {
        Some(c) => (c, "instance"),
        None => (maximize_dual(&p.dist, p.eps, &p.scene, Some(&loss), budgets.dual)?.candidate, "search"),
    };
    let rows = slackness_report(&p.dist, p.eps, &loss, &family, &candidate)?;
    json(&SlacknessReport { epsilon: p.eps, loss: &loss, candidate_source: source, candidate: CandidateReport::new(&candidate), rows: &rows })
}
