//! Extended real numbers `ℝ ∪ {−∞, +∞}`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A value in the extended real line.
///
/// `Finite` never holds NaN or an IEEE infinity; use [`ExtReal::from_f64`]
/// to map those onto the dedicated variants.
#[derive(Clone, Copy, Debug)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtReal::{NegInf, PosInf};

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities onto `±∞`. Panics on NaN.
    pub fn from_f64(v: f64) -> ExtReal {
        assert!(!v.is_nan(), "NaN is not an extended real");
        if v == f64::INFINITY {
            PosInf
        } else if v == f64::NEG_INFINITY {
            NegInf
        } else {
            ExtReal::Finite(v)
        }
    }

    /// A finite value obtained from a computation that may have overflowed.
    /// Overflow saturates at the largest finite double instead of producing
    /// an infinity.
    pub(crate) fn saturating(v: f64) -> ExtReal {
        debug_assert!(!v.is_nan());
        if v.is_finite() {
            ExtReal::Finite(v)
        } else if v > 0.0 {
            ExtReal::Finite(f64::MAX)
        } else {
            ExtReal::Finite(f64::MIN)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// IEEE view of the value (`±∞` become `f64` infinities).
    pub fn to_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            PosInf => f64::INFINITY,
        }
    }

    /// `weight · self` for a non-negative weight, with `0 · (±∞) = 0`.
    pub fn weighted(self, weight: f64) -> ExtReal {
        debug_assert!(weight >= 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::saturating(weight * v),
            _ if weight == 0.0 => ExtReal::ZERO,
            inf => inf,
        }
    }

    /// Difference `self − other`, or `None` when both are the same infinity.
    pub fn checked_sub(self, other: ExtReal) -> Option<ExtReal> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Some(ExtReal::saturating(a - b)),
            (PosInf, PosInf) | (NegInf, NegInf) => None,
            (PosInf, _) | (_, NegInf) => Some(PosInf),
            (NegInf, _) | (_, PosInf) => Some(NegInf),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v)
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (PosInf, _) | (_, NegInf) => Ordering::Greater,
            // -0.0 == 0.0 here, unlike total_cmp
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b).unwrap_or_else(|| a.total_cmp(b)),
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            NegInf => PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            PosInf => NegInf,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    /// Panics on `+∞ + −∞`, which has no value.
    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::saturating(a + b),
            (PosInf, NegInf) | (NegInf, PosInf) => panic!("+inf + -inf is undefined"),
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of finite terms.
pub(crate) fn fsum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

/// Compensated over the finite terms. Panics if both infinities occur.
impl std::iter::Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> ExtReal {
        let mut acc = Compensated::default();
        let (mut pos, mut neg) = (false, false);
        for x in iter {
            match x {
                ExtReal::Finite(v) => acc.add(v),
                PosInf => pos = true,
                NegInf => neg = true,
            }
        }
        match (pos, neg) {
            (true, true) => panic!("+inf + -inf is undefined"),
            (true, false) => PosInf,
            (false, true) => NegInf,
            (false, false) => ExtReal::saturating(acc.value()),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => f.write_str("-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
            PosInf => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for ExtReal {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(PosInf),
            "-inf" | "-infinity" => Ok(NegInf),
            t => match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(ExtReal::Finite(v)),
                _ => Err(crate::Error::Invalid(format!("not an extended real: {s:?}"))),
            },
        }
    }
}

/// Finite values serialize as JSON numbers; infinities as `"inf"` / `"-inf"`.
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            NegInf => s.serialize_str("-inf"),
            PosInf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", or a decimal string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                Ok(ExtReal::from_f64(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_order() {
        let mut v = vec![PosInf, ExtReal::Finite(3.0), NegInf, ExtReal::Finite(-1e300), ExtReal::ZERO];
        v.sort();
        assert_eq!(v, vec![NegInf, ExtReal::Finite(-1e300), ExtReal::ZERO, ExtReal::Finite(3.0), PosInf]);
        assert_eq!(ExtReal::Finite(-0.0), ExtReal::ZERO);
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(PosInf.weighted(0.0), ExtReal::ZERO);
        assert_eq!(PosInf.weighted(0.5), PosInf);
    }

    #[test]
    fn finite_arithmetic_saturates() {
        let big = ExtReal::Finite(f64::MAX);
        assert_eq!(big + big, ExtReal::Finite(f64::MAX));
        assert!(big.weighted(4.0).is_finite());
    }

    #[test]
    fn checked_sub_rejects_same_infinities() {
        assert_eq!(PosInf.checked_sub(PosInf), None);
        assert_eq!(PosInf.checked_sub(ExtReal::ZERO), Some(PosInf));
        assert_eq!(ExtReal::Finite(1.0).checked_sub(NegInf), Some(PosInf));
    }

    #[test]
    fn json_round_trip() {
        let v = vec![NegInf, ExtReal::Finite(0.25), PosInf];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["-inf",0.25,"inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let from_str: Vec<ExtReal> = serde_json::from_str(r#"["0.5", 2, "+inf"]"#).unwrap();
        assert_eq!(from_str, vec![ExtReal::Finite(0.5), ExtReal::Finite(2.0), PosInf]);
    }
}
