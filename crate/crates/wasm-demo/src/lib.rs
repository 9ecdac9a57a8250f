//! Browser bindings for three interactive views of the `advrisk` library:
//! loss profiles with their consistency certificate, ∞-Wasserstein couplings
//! between point clouds, and the counterexample sequence `f_n = ±1/n`.
//!
//! Each binding takes plain strings and numbers and returns a JSON string,
//! so the page needs no generated glue beyond `wasm-bindgen`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use advrisk::{
    adversarial_classification_risk, adversarial_surrogate_risk, counterexample_classifier, uniform_segment, winf_distance, Atom,
    ConsistencyCertificate, CouplingEntry, DiscreteMeasure, ExtReal, LabeledDistribution, LossFunction, MarginConstants, Norm,
    Scene, TabulatedClassifier,
};

const PROFILE_POINTS: usize = 161;

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("reports always serialize")
}

#[derive(Serialize)]
struct LossProfile {
    certificate: ConsistencyCertificate,
    constants: Option<MarginConstants>,
    alphas: Vec<f64>,
    phi: Vec<f64>,
    /// `C_φ(1/2, α)` on the same grid.
    cond_half: Vec<f64>,
    etas: Vec<f64>,
    /// `C_φ*(η)` and `min(η, 1 − η)`.
    cstar: Vec<f64>,
    cstar_zero_one: Vec<f64>,
}

/// Loss curve, `C_φ(1/2, ·)`, `C_φ*` and the consistency certificate on
/// `α ∈ [−span, span]`.
pub fn loss_profile_json(spec: &str, span: f64) -> Result<String, String> {
    let loss: LossFunction = spec.parse().map_err(|e: advrisk::Error| e.to_string())?;
    if !(span > 0.0 && span.is_finite()) {
        return Err(format!("span must be positive, got {span}"));
    }
    let step = 2.0 * span / (PROFILE_POINTS - 1) as f64;
    let alphas: Vec<f64> = (0..PROFILE_POINTS).map(|i| -span + step * i as f64).collect();
    let etas: Vec<f64> = (0..=100).map(|i| f64::from(i) / 100.0).collect();
    let certificate = loss.certificate();
    let profile = LossProfile {
        certificate,
        constants: loss.margin_constants().ok(),
        phi: alphas.iter().map(|&a| loss.value(a)).collect(),
        cond_half: alphas.iter().map(|&a| loss.conditional_risk(0.5, ExtReal::Finite(a)).map(ExtReal::to_f64).unwrap_or(f64::NAN)).collect(),
        cstar: etas.iter().map(|&e| loss.optimal_conditional_risk(e).map(|o| o.value).unwrap_or(f64::NAN)).collect(),
        cstar_zero_one: etas.iter().map(|&e| e.min(1.0 - e)).collect(),
        alphas,
        etas,
    };
    Ok(to_json(&profile))
}

#[derive(Deserialize)]
struct PlanarAtom(f64, f64, f64);

#[derive(Serialize)]
struct CouplingView {
    distance: f64,
    entries: Vec<CouplingEntry>,
}

fn planar(text: &str, norm: Norm) -> Result<DiscreteMeasure, String> {
    let atoms: Vec<PlanarAtom> = serde_json::from_str(text).map_err(|e| format!("expected [[x, y, mass], ...]: {e}"))?;
    DiscreteMeasure::new(2, norm, atoms.into_iter().map(|PlanarAtom(x, y, m)| Atom::new(vec![x, y], m))).map_err(|e| e.to_string())
}

/// Optimal ∞-Wasserstein coupling between two planar point clouds given as
/// `[[x, y, mass], ...]`. Entry indices refer to atoms after duplicate
/// locations are merged.
pub fn winf_coupling_json(q: &str, q_prime: &str, norm: &str) -> Result<String, String> {
    let norm: Norm = serde_json::from_value(serde_json::Value::String(norm.to_lowercase())).map_err(|_| format!("unknown norm {norm:?}"))?;
    let (q, qp) = (planar(q, norm)?, planar(q_prime, norm)?);
    let w = winf_distance(&q, &qp).map_err(|e| e.to_string())?;
    Ok(to_json(&CouplingView { distance: w.distance, entries: w.coupling.entries }))
}

#[derive(Serialize)]
struct SequenceRow {
    n: u32,
    adversarial_surrogate: f64,
    adversarial_classification: f64,
    phi_minus_one_over_n: f64,
}

#[derive(Serialize)]
struct SequenceTable {
    f_star_surrogate: f64,
    f_star_classification: f64,
    rows: Vec<SequenceRow>,
}

/// `R_φ^ε(f_n)` and `R^ε(f_n)` for `n = 1..=n_max` on the two-class uniform
/// segment `[−1, 1]` with `points` atoms per class and `ε = 2`.
pub fn counterexample_json(spec: &str, points: usize, n_max: u32) -> Result<String, String> {
    let loss: LossFunction = spec.parse().map_err(|e: advrisk::Error| e.to_string())?;
    let seg = uniform_segment(1.0, points, 0.5).map_err(|e| e.to_string())?;
    let dist = LabeledDistribution::new(seg.clone(), seg).map_err(|e| e.to_string())?;
    let scene = Arc::new(Scene::covering(&dist));
    if scene.index_of(&[0.0]).is_none() {
        return Err("use an odd number of points so the origin is an atom".into());
    }
    let eps = 2.0;
    let risks = |f: &TabulatedClassifier| -> Result<(f64, f64), String> {
        let s = adversarial_surrogate_risk(&dist, f, &loss, eps).map_err(|e| e.to_string())?;
        let c = adversarial_classification_risk(&dist, f, eps).map_err(|e| e.to_string())?;
        Ok((s.to_f64(), c))
    };
    let (f_star_surrogate, f_star_classification) = risks(&TabulatedClassifier::constant(scene.clone(), ExtReal::ZERO))?;
    let rows = (1..=n_max)
        .map(|n| {
            let f = counterexample_classifier(scene.clone(), n).map_err(|e| e.to_string())?;
            let (adversarial_surrogate, adversarial_classification) = risks(&f)?;
            Ok(SequenceRow { n, adversarial_surrogate, adversarial_classification, phi_minus_one_over_n: loss.value(-1.0 / f64::from(n)) })
        })
        .collect::<Result<_, String>>()?;
    Ok(to_json(&SequenceTable { f_star_surrogate, f_star_classification, rows }))
}

#[wasm_bindgen]
pub fn loss_profile(spec: &str, span: f64) -> Result<String, JsValue> {
    loss_profile_json(spec, span).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn winf_coupling(q: &str, q_prime: &str, norm: &str) -> Result<String, JsValue> {
    winf_coupling_json(q, q_prime, norm).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn counterexample_table(spec: &str, points: usize, n_max: u32) -> Result<String, JsValue> {
    counterexample_json(spec, points, n_max).map_err(|e| JsValue::from_str(&e))
}
