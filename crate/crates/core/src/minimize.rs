//! Global minimization of a function of one extended-real argument.
//!
//! The extended line is compactified by `t ↦ tan(πt/2)` on `[−1, 1]`, with the
//! endpoints mapping to `∓∞`. A uniform grid in `t` locates the best bracket,
//! which is then refined by golden-section search. The returned value is
//! always an attained function value, so it never undershoots the infimum.

use std::f64::consts::FRAC_PI_2;
use std::sync::LazyLock;

use crate::ext::{ExtReal, NegInf, PosInf};

pub const GRID_POINTS: usize = 4097;

/// Golden-section stopping width in the compact coordinate.
pub const TOL_OPT: f64 = 1e-10;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maps the compact coordinate `t ∈ [−1, 1]` onto the extended line.
pub fn from_compact(t: f64) -> ExtReal {
    if t <= -1.0 {
        NegInf
    } else if t >= 1.0 {
        PosInf
    } else if t == 0.0 {
        ExtReal::ZERO
    } else {
        ExtReal::Finite((FRAC_PI_2 * t).tan())
    }
}

/// Inverse of [`from_compact`].
pub fn to_compact(alpha: ExtReal) -> f64 {
    match alpha {
        NegInf => -1.0,
        PosInf => 1.0,
        ExtReal::Finite(a) => a.atan() / FRAC_PI_2,
    }
}

pub(crate) fn grid_t(i: usize) -> f64 {
    let half = (GRID_POINTS - 1) as f64 / 2.0;
    (i as f64 - half) / half
}

static GRID: LazyLock<Vec<ExtReal>> = LazyLock::new(|| (0..GRID_POINTS).map(|i| from_compact(grid_t(i))).collect());

/// The fixed α-grid (ascending, first entry −∞, middle entry 0, last +∞).
pub fn alpha_grid() -> &'static [ExtReal] {
    &GRID
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub value: ExtReal,
    pub argmin: ExtReal,
}

/// Minimizes `f` over the extended real line.
///
/// Ties on the grid resolve to an infinite endpoint if one attains the
/// minimum, and to the smallest α otherwise.
pub fn minimize_ext<F>(f: F) -> Minimum
where
    F: Fn(ExtReal) -> ExtReal,
{
    let grid = alpha_grid();
    let mut best = 0;
    let mut best_val = f(grid[0]);
    for (i, &a) in grid.iter().enumerate().skip(1) {
        let v = f(a);
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    // the infinite endpoints win exact ties
    for end in [0, GRID_POINTS - 1] {
        if end != best && f(grid[end]) <= best_val {
            best = end;
        }
    }
    let mut result = Minimum { value: best_val, argmin: grid[best] };

    let lo = grid_t(best.saturating_sub(1));
    let hi = grid_t((best + 1).min(GRID_POINTS - 1));
    let refined = golden(|t| f(from_compact(t)), lo, hi);
    if refined.value < result.value {
        result = refined;
    }
    result
}

fn golden<F>(f: F, mut a: f64, mut b: f64) -> Minimum
where
    F: Fn(f64) -> ExtReal,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > TOL_OPT {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        Minimum { value: fc, argmin: from_compact(c) }
    } else {
        Minimum { value: fd, argmin: from_compact(d) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric_and_contains_endpoints() {
        let g = alpha_grid();
        assert_eq!(g.len(), GRID_POINTS);
        assert_eq!(g[0], NegInf);
        assert_eq!(g[GRID_POINTS / 2], ExtReal::ZERO);
        assert_eq!(g[GRID_POINTS - 1], PosInf);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn compact_round_trip() {
        for a in [-123.5, -1.0, 0.0, 0.3, 40.0] {
            let back = from_compact(to_compact(ExtReal::Finite(a))).finite().unwrap();
            assert!((back - a).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn finds_interior_quadratic_minimum() {
        let m = minimize_ext(|a| match a {
            ExtReal::Finite(x) => ExtReal::Finite((x - 0.7).powi(2) + 2.0),
            _ => PosInf,
        });
        assert!((m.value.to_f64() - 2.0).abs() < 1e-15);
        assert!((m.argmin.to_f64() - 0.7).abs() < 1e-7);
    }

    #[test]
    fn infinite_endpoint_can_be_the_minimizer() {
        let m = minimize_ext(|a| ExtReal::from_f64((-a.to_f64()).exp()));
        assert_eq!(m.argmin, PosInf);
        assert_eq!(m.value, ExtReal::ZERO);
    }
}
