//! Host intervals for regulated functions.
//!
//! Four kinds cover every host interval used by the crate: compact `[a, b]`,
//! the closed rays `[a, +inf)` and `(-inf, a]`, and the full line. The
//! nonnegative half-line is the ray from zero; [`IntervalSpec::non_negative`]
//! builds it.

use serde::de::{Deserializer, Error as DeError};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval of the real line hosting a regulated function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalSpec {
    /// `[a, b]` with `a < b`.
    Compact { a: f64, b: f64 },
    /// `[a, +inf)`.
    From { a: f64 },
    /// `(-inf, a]`.
    To { a: f64 },
    /// The whole real line.
    Full,
}

impl IntervalSpec {
    /// `[a, b]`. Returns an error unless `a < b` and both are finite.
    pub fn compact(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidModel {
                reason: format!("compact interval needs finite a < b, got [{a}, {b}]"),
            });
        }
        Ok(IntervalSpec::Compact { a, b })
    }

    /// The nonnegative half-line `[0, +inf)`.
    pub fn non_negative() -> Self {
        IntervalSpec::From { a: 0.0 }
    }

    /// Membership test, endpoints included.
    pub fn contains(&self, t: f64) -> bool {
        match *self {
            IntervalSpec::Compact { a, b } => a <= t && t <= b,
            IntervalSpec::From { a } => t >= a,
            IntervalSpec::To { a } => t <= a,
            IntervalSpec::Full => true,
        }
    }

    /// Membership in the interior (endpoints excluded).
    pub fn interior_contains(&self, t: f64) -> bool {
        self.contains(t) && !self.is_endpoint(t)
    }

    /// `true` when `t` is a finite endpoint of the interval.
    pub fn is_endpoint(&self, t: f64) -> bool {
        self.left_endpoint() == Some(t) || self.right_endpoint() == Some(t)
    }

    /// Finite left endpoint, if any.
    pub fn left_endpoint(&self) -> Option<f64> {
        match *self {
            IntervalSpec::Compact { a, .. } | IntervalSpec::From { a } => Some(a),
            _ => None,
        }
    }

    /// Finite right endpoint, if any.
    pub fn right_endpoint(&self) -> Option<f64> {
        match *self {
            IntervalSpec::Compact { b, .. } => Some(b),
            IntervalSpec::To { a } => Some(a),
            _ => None,
        }
    }

    /// `true` only for compact intervals.
    pub fn is_compact(&self) -> bool {
        matches!(self, IntervalSpec::Compact { .. })
    }

    /// `true` when the interval is bounded on both sides.
    pub fn is_bounded(&self) -> bool {
        self.is_compact()
    }

    /// The mirror image `-I = {-t : t in I}`. Exact: endpoint negation does
    /// not round, so reflecting twice restores the original.
    pub fn reflected(&self) -> Self {
        match *self {
            IntervalSpec::Compact { a, b } => IntervalSpec::Compact { a: -b, b: -a },
            IntervalSpec::From { a } => IntervalSpec::To { a: -a },
            IntervalSpec::To { a } => IntervalSpec::From { a: -a },
            IntervalSpec::Full => IntervalSpec::Full,
        }
    }

    /// `true` when every point of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &IntervalSpec) -> bool {
        let lo_ok = match (self.lower_bound(), other.lower_bound()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(x), Some(y)) => x >= y,
        };
        let hi_ok = match (self.upper_bound(), other.upper_bound()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(x), Some(y)) => x <= y,
        };
        lo_ok && hi_ok
    }

    fn lower_bound(&self) -> Option<f64> {
        match *self {
            IntervalSpec::Compact { a, .. } | IntervalSpec::From { a } => Some(a),
            _ => None,
        }
    }

    fn upper_bound(&self) -> Option<f64> {
        match *self {
            IntervalSpec::Compact { b, .. } => Some(b),
            IntervalSpec::To { a } => Some(a),
            _ => None,
        }
    }
}

impl Serialize for IntervalSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            IntervalSpec::Compact { a, b } => {
                let mut s = serializer.serialize_struct("IntervalSpec", 3)?;
                s.serialize_field("kind", "compact")?;
                s.serialize_field("a", &a)?;
                s.serialize_field("b", &b)?;
                s.end()
            }
            IntervalSpec::From { a } => {
                let mut s = serializer.serialize_struct("IntervalSpec", 2)?;
                s.serialize_field("kind", "from")?;
                s.serialize_field("a", &a)?;
                s.end()
            }
            IntervalSpec::To { a } => {
                let mut s = serializer.serialize_struct("IntervalSpec", 2)?;
                s.serialize_field("kind", "to")?;
                s.serialize_field("a", &a)?;
                s.end()
            }
            IntervalSpec::Full => {
                let mut s = serializer.serialize_struct("IntervalSpec", 1)?;
                s.serialize_field("kind", "full")?;
                s.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for IntervalSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            kind: String,
            a: Option<f64>,
            b: Option<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| DeError::custom(format!("interval kind {:?} needs field {name}", raw.kind)))
        };
        match raw.kind.as_str() {
            "compact" => {
                let a = need(raw.a, "a")?;
                let b = need(raw.b, "b")?;
                IntervalSpec::compact(a, b).map_err(DeError::custom)
            }
            "from" => Ok(IntervalSpec::From { a: need(raw.a, "a")? }),
            "to" => Ok(IntervalSpec::To { a: need(raw.a, "a")? }),
            "full" => Ok(IntervalSpec::Full),
            // Accepted on input as a synonym for the ray from zero.
            "nonneg" => Ok(IntervalSpec::non_negative()),
            other => Err(DeError::custom(format!("unknown interval kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_and_interior() {
        let i = IntervalSpec::compact(0.0, 2.0).unwrap();
        assert!(i.contains(0.0) && i.contains(2.0) && i.contains(1.0));
        assert!(!i.contains(-0.1) && !i.contains(2.1));
        assert!(i.interior_contains(1.0));
        assert!(!i.interior_contains(0.0) && !i.interior_contains(2.0));

        let r = IntervalSpec::non_negative();
        assert!(r.contains(0.0) && r.contains(1e300));
        assert!(!r.contains(-1e-300));
        assert!(!r.interior_contains(0.0));
    }

    #[test]
    fn compact_requires_ordered_finite_endpoints() {
        assert!(IntervalSpec::compact(1.0, 1.0).is_err());
        assert!(IntervalSpec::compact(2.0, 1.0).is_err());
        assert!(IntervalSpec::compact(f64::NEG_INFINITY, 1.0).is_err());
    }

    #[test]
    fn reflection_is_an_exact_involution() {
        let cases = [
            IntervalSpec::compact(0.25, 7.5).unwrap(),
            IntervalSpec::From { a: -3.0 },
            IntervalSpec::To { a: 0.0 },
            IntervalSpec::Full,
            IntervalSpec::non_negative(),
        ];
        for i in cases {
            assert_eq!(i.reflected().reflected(), i);
        }
        assert_eq!(
            IntervalSpec::non_negative().reflected(),
            IntervalSpec::To { a: 0.0 }
        );
    }

    #[test]
    fn subset_relation() {
        let d = IntervalSpec::compact(0.0, 10.0).unwrap();
        let w = IntervalSpec::compact(1.0, 2.0).unwrap();
        assert!(w.is_subset_of(&d));
        assert!(!d.is_subset_of(&w));
        assert!(d.is_subset_of(&IntervalSpec::non_negative()));
        assert!(d.is_subset_of(&IntervalSpec::Full));
        assert!(!IntervalSpec::non_negative().is_subset_of(&d));
        assert!(IntervalSpec::non_negative().is_subset_of(&IntervalSpec::Full));
    }

    #[test]
    fn json_round_trip_and_nonneg_synonym() {
        let i = IntervalSpec::compact(0.0, 2.0).unwrap();
        let js = serde_json::to_string(&i).unwrap();
        assert_eq!(js, r#"{"kind":"compact","a":0.0,"b":2.0}"#);
        assert_eq!(serde_json::from_str::<IntervalSpec>(&js).unwrap(), i);

        let r: IntervalSpec = serde_json::from_str(r#"{"kind":"nonneg"}"#).unwrap();
        assert_eq!(r, IntervalSpec::non_negative());
        assert!(serde_json::from_str::<IntervalSpec>(r#"{"kind":"compact","a":0.0}"#).is_err());
    }
}
