//! Surrogate losses, conditional risks and the adversarial-consistency
//! certificate `C_φ*(1/2) < φ(0)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ext::{ExtReal, NegInf, PosInf};
use crate::minimize::{self, minimize_ext, TOL_OPT};

/// A margin below this is reported as "not adversarially consistent".
pub const CERT_TOL: f64 = 1e-8;

/// Side length of the `(α, η)` product grid used for `δ`.
pub const DELTA_GRID: usize = 513;

const DELTA_REFINE: usize = 33;

/// A surrogate loss: non-increasing, non-negative, continuous, with
/// `φ(α) → 0` as `α → +∞`.
///
/// Construct through the validating constructors or by deserializing a spec
/// such as `{"family": "rho_margin", "rho": 1.0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossSpec", into = "LossSpec")]
pub enum LossFunction {
    Hinge,
    SquaredHinge,
    Exponential,
    Logistic,
    RhoMargin { rho: f64 },
    ShiftedSigmoid { tau: f64 },
    Tabulated(TabulatedLoss),
}

/// Piecewise-linear loss through `knots`, constant to the left of the first
/// knot and constant (zero) to the right of the last one.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedLoss {
    knots: Vec<(f64, f64)>,
}

impl TabulatedLoss {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Invalid("tabulated loss needs at least one knot".into()));
        }
        for &(x, v) in &knots {
            if !x.is_finite() || !v.is_finite() {
                return Err(Error::Invalid("tabulated knots must be finite".into()));
            }
            if v < 0.0 {
                return Err(Error::Invalid(format!("negative loss value {v} at {x}")));
            }
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Invalid("knot arguments must be strictly increasing".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Invalid(format!("loss increases between {} and {}", w[0].0, w[1].0)));
            }
        }
        let last = knots[knots.len() - 1].1;
        if last != 0.0 {
            return Err(Error::Invalid(format!("the right tail must be 0, last knot value is {last}")));
        }
        Ok(TabulatedLoss { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn eval(&self, alpha: ExtReal) -> f64 {
        let k = &self.knots;
        let a = match alpha {
            NegInf => return k[0].1,
            PosInf => return k[k.len() - 1].1,
            ExtReal::Finite(a) => a,
        };
        if a <= k[0].0 {
            return k[0].1;
        }
        if a >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let j = k.partition_point(|&(x, _)| x <= a);
        let (x0, v0) = k[j - 1];
        let (x1, v1) = k[j];
        let s = (a - x0) / (x1 - x0);
        (v0 + s * (v1 - v0)).max(v1)
    }
}

/// Serialized form of a loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    Hinge,
    SquaredHinge,
    Exponential,
    Logistic,
    RhoMargin { rho: f64 },
    ShiftedSigmoid { tau: f64 },
    Tabulated { knots: Vec<(f64, f64)> },
}

impl TryFrom<LossSpec> for LossFunction {
    type Error = Error;

    fn try_from(spec: LossSpec) -> Result<Self> {
        Ok(match spec {
            LossSpec::Hinge => LossFunction::Hinge,
            LossSpec::SquaredHinge => LossFunction::SquaredHinge,
            LossSpec::Exponential => LossFunction::Exponential,
            LossSpec::Logistic => LossFunction::Logistic,
            LossSpec::RhoMargin { rho } => LossFunction::rho_margin(rho)?,
            LossSpec::ShiftedSigmoid { tau } => LossFunction::shifted_sigmoid(tau)?,
            LossSpec::Tabulated { knots } => LossFunction::Tabulated(TabulatedLoss::new(knots)?),
        })
    }
}

impl From<LossFunction> for LossSpec {
    fn from(loss: LossFunction) -> Self {
        match loss {
            LossFunction::Hinge => LossSpec::Hinge,
            LossFunction::SquaredHinge => LossSpec::SquaredHinge,
            LossFunction::Exponential => LossSpec::Exponential,
            LossFunction::Logistic => LossSpec::Logistic,
            LossFunction::RhoMargin { rho } => LossSpec::RhoMargin { rho },
            LossFunction::ShiftedSigmoid { tau } => LossSpec::ShiftedSigmoid { tau },
            LossFunction::Tabulated(t) => LossSpec::Tabulated { knots: t.knots },
        }
    }
}

/// Accepts either a JSON spec or the shorthand `name[:parameter]`,
/// e.g. `hinge`, `rho_margin:0.5`, `shifted_sigmoid:1`.
impl FromStr for LossFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Invalid(format!("loss spec: {e}")));
        }
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let p: f64 = p.trim().parse().map_err(|_| Error::Invalid(format!("bad loss parameter in {s:?}")))?;
                (n.trim(), Some(p))
            }
            None => (s, None),
        };
        let need = |p: Option<f64>| p.ok_or_else(|| Error::Invalid(format!("{name} needs a parameter, e.g. {name}:1")));
        match name {
            "hinge" => Ok(LossFunction::Hinge),
            "squared_hinge" => Ok(LossFunction::SquaredHinge),
            "exponential" => Ok(LossFunction::Exponential),
            "logistic" => Ok(LossFunction::Logistic),
            "rho_margin" => LossFunction::rho_margin(need(param)?),
            "shifted_sigmoid" => LossFunction::shifted_sigmoid(need(param)?),
            _ => Err(Error::Invalid(format!("unknown loss family {name:?}"))),
        }
    }
}

impl fmt::Display for LossFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossFunction::Hinge => f.write_str("hinge"),
            LossFunction::SquaredHinge => f.write_str("squared_hinge"),
            LossFunction::Exponential => f.write_str("exponential"),
            LossFunction::Logistic => f.write_str("logistic"),
            LossFunction::RhoMargin { rho } => write!(f, "rho_margin:{rho}"),
            LossFunction::ShiftedSigmoid { tau } => write!(f, "shifted_sigmoid:{tau}"),
            LossFunction::Tabulated(t) => write!(f, "tabulated({} knots)", t.knots.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalRisk {
    pub value: f64,
    pub argmin: ExtReal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConsistencyCertificate {
    pub cstar_half: f64,
    pub phi_zero: f64,
    pub adversarially_consistent: bool,
    pub margin: f64,
}

/// Constants `(a, c, δ)`: on `[−c, c]` every conditional risk exceeds its
/// optimum by at least `δ`, uniformly in `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginConstants {
    /// Smallest non-negative minimizer of `C_φ(1/2, ·)`.
    pub a: ExtReal,
    pub c: f64,
    pub delta: f64,
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        domain(format!("eta = {eta} is outside [0, 1]"))
    }
}

impl LossFunction {
    pub fn rho_margin(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(LossFunction::RhoMargin { rho })
        } else {
            Err(Error::Invalid(format!("rho must be positive and finite, got {rho}")))
        }
    }

    pub fn shifted_sigmoid(tau: f64) -> Result<Self> {
        if tau.is_finite() && tau > 0.0 {
            Ok(LossFunction::ShiftedSigmoid { tau })
        } else {
            Err(Error::Invalid(format!("tau must be positive and finite, got {tau}")))
        }
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        TabulatedLoss::new(knots).map(LossFunction::Tabulated)
    }

    /// `φ(α)`. Total on the extended line: `φ(+∞) = 0`, `φ(−∞)` is the
    /// monotone limit (`+∞` for the unbounded families).
    pub fn eval(&self, alpha: ExtReal) -> ExtReal {
        if alpha == PosInf {
            return ExtReal::ZERO;
        }
        match self {
            LossFunction::Hinge => match alpha {
                ExtReal::Finite(a) => ExtReal::saturating((1.0 - a).max(0.0)),
                _ => PosInf,
            },
            LossFunction::SquaredHinge => match alpha {
                ExtReal::Finite(a) => ExtReal::saturating((1.0 - a).max(0.0).powi(2)),
                _ => PosInf,
            },
            LossFunction::Exponential => match alpha {
                ExtReal::Finite(a) => ExtReal::saturating((-a).exp()),
                _ => PosInf,
            },
            LossFunction::Logistic => match alpha {
                ExtReal::Finite(a) if a >= 0.0 => ExtReal::Finite((-a).exp().ln_1p()),
                ExtReal::Finite(a) => ExtReal::saturating(-a + a.exp().ln_1p()),
                _ => PosInf,
            },
            LossFunction::RhoMargin { rho } => match alpha {
                ExtReal::Finite(a) => ExtReal::Finite((1.0 - a / rho).clamp(0.0, 1.0)),
                _ => ExtReal::Finite(1.0),
            },
            LossFunction::ShiftedSigmoid { tau } => match alpha {
                ExtReal::Finite(a) => ExtReal::Finite(1.0 / (1.0 + (a - tau).exp())),
                _ => ExtReal::Finite(1.0),
            },
            LossFunction::Tabulated(t) => ExtReal::Finite(t.eval(alpha)),
        }
    }

    /// `φ(α)` for a finite argument.
    pub fn value(&self, alpha: f64) -> f64 {
        self.eval(ExtReal::Finite(alpha)).to_f64()
    }

    /// `sup_α φ(α) = φ(−∞)`.
    pub fn supremum(&self) -> ExtReal {
        self.eval(NegInf)
    }

    /// Unchecked `η φ(α) + (1−η) φ(−α)`.
    pub(crate) fn cond(&self, eta: f64, alpha: ExtReal) -> ExtReal {
        self.eval(alpha).weighted(eta) + self.eval(-alpha).weighted(1.0 - eta)
    }

    /// `C_φ(η, α) = η φ(α) + (1−η) φ(−α)` with `0·∞ = 0`.
    pub fn conditional_risk(&self, eta: f64, alpha: ExtReal) -> Result<ExtReal> {
        check_eta(eta)?;
        Ok(self.cond(eta, alpha))
    }

    /// `C_φ*(η)` and a minimizing α over the extended line.
    pub fn optimal_conditional_risk(&self, eta: f64) -> Result<OptimalRisk> {
        check_eta(eta)?;
        Ok(self.optimal_unchecked(eta))
    }

    pub(crate) fn optimal_unchecked(&self, eta: f64) -> OptimalRisk {
        let m = minimize_ext(|a| self.cond(eta, a));
        OptimalRisk { value: m.value.to_f64(), argmin: m.argmin }
    }

    pub fn certificate(&self) -> ConsistencyCertificate {
        let cstar_half = self.optimal_unchecked(0.5).value;
        let phi_zero = self.value(0.0);
        let margin = phi_zero - cstar_half;
        ConsistencyCertificate { cstar_half, phi_zero, adversarially_consistent: margin > CERT_TOL, margin }
    }

    /// `φ⁻(y) = sup{α : φ(α) ≥ y}` for `y ∈ [0, sup φ]`.
    pub fn right_inverse(&self, y: f64) -> Result<ExtReal> {
        if y.is_nan() || y < 0.0 || ExtReal::Finite(y) > self.supremum() {
            return domain(format!("y = {y} is outside [0, sup phi = {}]", self.supremum()));
        }
        if y == 0.0 {
            return Ok(PosInf);
        }
        let reaches = |a: f64| self.value(a) >= y;
        // bracket lo (reaches) < hi (does not)
        let (mut lo, mut hi);
        if reaches(0.0) {
            lo = 0.0;
            hi = 1.0;
            while reaches(hi) {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return Ok(PosInf);
                }
            }
        } else {
            hi = 0.0;
            lo = -1.0;
            while !reaches(lo) {
                hi = lo;
                lo *= 2.0;
                if !lo.is_finite() {
                    return Ok(NegInf);
                }
            }
        }
        loop {
            let mid = lo + (hi - lo) / 2.0;
            if mid <= lo || mid >= hi {
                return Ok(ExtReal::Finite(lo));
            }
            if reaches(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// Margin constants for a loss that passes the certificate.
    pub fn margin_constants(&self) -> Result<MarginConstants> {
        let cert = self.certificate();
        if !cert.adversarially_consistent {
            return Err(Error::Precondition(format!(
                "{self} is not adversarially consistent (margin {:e})",
                cert.margin
            )));
        }
        let a = self.smallest_nonneg_minimizer(cert.cstar_half);

        let level = 0.5 * (cert.phi_zero + cert.cstar_half);
        let c = match self.right_inverse(level)? {
            ExtReal::Finite(c) => c,
            other => return Err(Error::Precondition(format!("right inverse at level {level} is {other}"))),
        };
        if !(c > 0.0 && self.value(c) < cert.phi_zero) {
            return Err(Error::Precondition(format!("margin radius c = {c} violates phi(c) < phi(0)")));
        }

        let delta = self.excess_infimum(c);
        if !(delta > 0.0) {
            return Err(Error::Precondition(format!("delta = {delta} is not positive")));
        }
        Ok(MarginConstants { a, c, delta })
    }

    fn smallest_nonneg_minimizer(&self, cstar_half: f64) -> ExtReal {
        let is_min = |t: f64| self.cond(0.5, minimize::from_compact(t)).to_f64() <= cstar_half + TOL_OPT;
        let n = minimize::GRID_POINTS;
        let first = (n / 2..n).find(|&i| is_min(minimize::grid_t(i))).unwrap_or(n - 1);
        if first == n / 2 {
            return ExtReal::ZERO;
        }
        let (mut lo, mut hi) = (minimize::grid_t(first - 1), minimize::grid_t(first));
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if is_min(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        minimize::from_compact(hi)
    }

    /// `inf { C_φ(η, α) − C_φ*(η) : α ∈ [−c, c], η ∈ [0, 1] }` on a product
    /// grid followed by one local refinement around the best cell.
    fn excess_infimum(&self, c: f64) -> f64 {
        let (alphas, etas) = (linspace(-c, c, DELTA_GRID), linspace(0.0, 1.0, DELTA_GRID));
        let (best, i, j) = self.grid_excess(&alphas, &etas);

        let a_lo = alphas[i.saturating_sub(1)];
        let a_hi = alphas[(i + 1).min(DELTA_GRID - 1)];
        let e_lo = etas[j.saturating_sub(1)];
        let e_hi = etas[(j + 1).min(DELTA_GRID - 1)];
        let (fine, _, _) = self.grid_excess(&linspace(a_lo, a_hi, DELTA_REFINE), &linspace(e_lo, e_hi, DELTA_REFINE));
        best.min(fine)
    }

    fn grid_excess(&self, alphas: &[f64], etas: &[f64]) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for (j, &eta) in etas.iter().enumerate() {
            let opt = self.optimal_unchecked(eta).value;
            for (i, &a) in alphas.iter().enumerate() {
                let excess = self.cond(eta, ExtReal::Finite(a)).to_f64() - opt;
                if excess < best.0 {
                    best = (excess, i, j);
                }
            }
        }
        best
    }

    /// The `η` on an `n`-point grid of `[0, 1]` at which `α = 0` minimizes
    /// `C_φ(η, ·)` up to [`CERT_TOL`]. For a loss that is consistent, every
    /// returned `η` is within one grid spacing of `1/2`.
    pub fn etas_minimized_at_zero(&self, n: usize) -> Vec<f64> {
        linspace(0.0, 1.0, n)
            .into_iter()
            .filter(|&eta| self.cond(eta, ExtReal::ZERO).to_f64() <= self.optimal_unchecked(eta).value + CERT_TOL)
            .collect()
    }
}

/// `C(η, α) = η·1[α ≤ 0] + (1−η)·1[α > 0]`.
pub fn zero_one_conditional_risk(eta: f64, alpha: ExtReal) -> Result<f64> {
    check_eta(eta)?;
    Ok(if alpha <= ExtReal::ZERO { eta } else { 1.0 - eta })
}

/// `C*(η) = min(η, 1−η)`.
pub fn zero_one_optimal(eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(eta.min(1.0 - eta))
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => lo + (hi - lo) * (i as f64 / last),
        })
        .collect()
}
