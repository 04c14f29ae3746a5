//! Index keys and index-set expressions.
//!
//! Weight families are indexed by *keys* — either real numbers (time
//! points) or opaque labels. Restrictions, partitions, and rectangle time
//! components are described by a small boolean algebra of set expressions
//! over those keys. Members of generated families additionally carry their
//! generation ordinal `k = 1, 2, ...`, which stride sets match on.

use std::fmt;

use ordered_float::NotNan;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of one weight in a family: a real point or an opaque label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexKey {
    Real(NotNan<f64>),
    Label(String),
}

impl IndexKey {
    /// A real-valued key. Errors on NaN, which cannot index anything.
    pub fn real(x: f64) -> Result<IndexKey> {
        NotNan::new(x)
            .map(IndexKey::Real)
            .map_err(|_| Error::InvalidModel { reason: "NaN index key".into() })
    }

    pub fn label(s: impl Into<String>) -> IndexKey {
        IndexKey::Label(s.into())
    }

    /// The real value, if this key is one.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            IndexKey::Real(x) => Some(x.into_inner()),
            IndexKey::Label(_) => None,
        }
    }
}

impl fmt::Display for IndexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexKey::Real(x) => write!(f, "{}", x.into_inner()),
            IndexKey::Label(s) => f.write_str(s),
        }
    }
}

/// A set of index keys, described structurally.
///
/// JSON forms: `"all"`, `"empty"`, `{"explicit": [1.5, "s2"]}`,
/// `{"interval": {"lo": 0.0, "hi": 1.0}}` (half-open `(lo, hi]` by
/// default; `lo_open`/`hi_open` override, `null`/absent bound means
/// unbounded), `{"stride": {"modulus": 2, "residue": 0}}`,
/// `{"complement": ...}`, `{"union": [...]}`, `{"intersection": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexSetExpr {
    All,
    Empty,
    Explicit(Vec<IndexKey>),
    Interval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
        #[serde(default = "default_true", skip_serializing_if = "is_true")]
        lo_open: bool,
        #[serde(default, skip_serializing_if = "is_false")]
        hi_open: bool,
    },
    /// Generation ordinals `k` with `k % modulus == residue`. Matches only
    /// members of generated families; explicit keys carry no ordinal.
    Stride { modulus: u64, residue: u64 },
    Complement(Box<IndexSetExpr>),
    Union(Vec<IndexSetExpr>),
    Intersection(Vec<IndexSetExpr>),
}

fn default_true() -> bool {
    true
}
fn is_true(b: &bool) -> bool {
    *b
}
fn is_false(b: &bool) -> bool {
    !*b
}

impl IndexSetExpr {
    /// The half-open window `(lo, hi]`.
    pub fn half_open(lo: f64, hi: f64) -> IndexSetExpr {
        IndexSetExpr::Interval { lo: Some(lo), hi: Some(hi), lo_open: true, hi_open: false }
    }

    /// The closed window `[lo, hi]`.
    pub fn closed(lo: f64, hi: f64) -> IndexSetExpr {
        IndexSetExpr::Interval { lo: Some(lo), hi: Some(hi), lo_open: false, hi_open: false }
    }

    pub fn complement(self) -> IndexSetExpr {
        IndexSetExpr::Complement(Box::new(self))
    }

    /// Structural sanity: stride modulus positive, interval bounds ordered
    /// and not NaN.
    pub fn validate(&self) -> Result<()> {
        match self {
            IndexSetExpr::All | IndexSetExpr::Empty | IndexSetExpr::Explicit(_) => Ok(()),
            IndexSetExpr::Interval { lo, hi, .. } => {
                for b in [lo, hi] {
                    if b.is_some_and(f64::is_nan) {
                        return Err(Error::InvalidModel { reason: "NaN interval bound".into() });
                    }
                }
                if let (Some(u), Some(v)) = (lo, hi) {
                    if u > v {
                        return Err(Error::InvalidModel {
                            reason: format!("interval bounds out of order: {u} > {v}"),
                        });
                    }
                }
                Ok(())
            }
            IndexSetExpr::Stride { modulus, .. } => {
                if *modulus == 0 {
                    Err(Error::InvalidModel { reason: "stride modulus must be positive".into() })
                } else {
                    Ok(())
                }
            }
            IndexSetExpr::Complement(inner) => inner.validate(),
            IndexSetExpr::Union(parts) | IndexSetExpr::Intersection(parts) => {
                parts.iter().try_for_each(IndexSetExpr::validate)
            }
        }
    }

    /// Membership of `key`; `ordinal` is the generation index for members
    /// of generated families (`None` for explicit members).
    pub fn contains(&self, key: &IndexKey, ordinal: Option<u64>) -> bool {
        match self {
            IndexSetExpr::All => true,
            IndexSetExpr::Empty => false,
            IndexSetExpr::Explicit(keys) => keys.contains(key),
            IndexSetExpr::Interval { lo, hi, lo_open, hi_open } => match key.as_real() {
                Some(x) => {
                    let lo_ok = match lo {
                        Some(u) => if *lo_open { x > *u } else { x >= *u },
                        None => true,
                    };
                    let hi_ok = match hi {
                        Some(v) => if *hi_open { x < *v } else { x <= *v },
                        None => true,
                    };
                    lo_ok && hi_ok
                }
                None => false,
            },
            IndexSetExpr::Stride { modulus, residue } => match ordinal {
                Some(k) if *modulus > 0 => k % *modulus == *residue % *modulus,
                _ => false,
            },
            IndexSetExpr::Complement(inner) => !inner.contains(key, ordinal),
            IndexSetExpr::Union(parts) => parts.iter().any(|p| p.contains(key, ordinal)),
            IndexSetExpr::Intersection(parts) => parts.iter().all(|p| p.contains(key, ordinal)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(x: f64) -> IndexKey {
        IndexKey::real(x).unwrap()
    }

    #[test]
    fn key_basics() {
        assert!(IndexKey::real(f64::NAN).is_err());
        assert_eq!(real(1.5).as_real(), Some(1.5));
        assert_eq!(IndexKey::label("s1").as_real(), None);
        assert_eq!(real(0.25).to_string(), "0.25");
        assert_eq!(IndexKey::label("s1").to_string(), "s1");
    }

    #[test]
    fn interval_is_half_open_by_default() {
        let w = IndexSetExpr::half_open(0.0, 1.0);
        assert!(!w.contains(&real(0.0), None));
        assert!(w.contains(&real(0.5), None));
        assert!(w.contains(&real(1.0), None));
        assert!(!w.contains(&real(1.5), None));
        assert!(!w.contains(&IndexKey::label("s1"), None));

        let c = IndexSetExpr::closed(0.0, 1.0);
        assert!(c.contains(&real(0.0), None));

        let unbounded = IndexSetExpr::Interval {
            lo: Some(2.0),
            hi: None,
            lo_open: true,
            hi_open: false,
        };
        assert!(unbounded.contains(&real(1e12), None));
        assert!(!unbounded.contains(&real(2.0), None));
    }

    #[test]
    fn stride_matches_only_generated_ordinals() {
        let even = IndexSetExpr::Stride { modulus: 2, residue: 0 };
        assert!(even.contains(&real(0.75), Some(2)));
        assert!(!even.contains(&real(0.5), Some(1)));
        assert!(!even.contains(&real(0.75), None));
        assert!(!even.contains(&IndexKey::label("s1"), None));
    }

    #[test]
    fn boolean_algebra() {
        let a = IndexSetExpr::Explicit(vec![real(1.0), IndexKey::label("x")]);
        let b = IndexSetExpr::half_open(0.0, 2.0);
        let union = IndexSetExpr::Union(vec![a.clone(), b.clone()]);
        assert!(union.contains(&IndexKey::label("x"), None));
        assert!(union.contains(&real(0.5), None));
        let inter = IndexSetExpr::Intersection(vec![a.clone(), b]);
        assert!(inter.contains(&real(1.0), None));
        assert!(!inter.contains(&IndexKey::label("x"), None));
        let comp = a.complement();
        assert!(!comp.contains(&real(1.0), None));
        assert!(comp.contains(&real(7.0), None));
        assert!(IndexSetExpr::All.contains(&real(0.0), None));
        assert!(!IndexSetExpr::Empty.contains(&real(0.0), None));
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        assert!(IndexSetExpr::Stride { modulus: 0, residue: 0 }.validate().is_err());
        assert!(IndexSetExpr::half_open(2.0, 1.0).validate().is_err());
        assert!(IndexSetExpr::half_open(1.0, 2.0).validate().is_ok());
        let nested = IndexSetExpr::Union(vec![
            IndexSetExpr::All,
            IndexSetExpr::Stride { modulus: 0, residue: 0 }.complement(),
        ]);
        assert!(nested.validate().is_err());
    }

    #[test]
    fn json_shapes() {
        assert_eq!(serde_json::to_string(&IndexSetExpr::All).unwrap(), r#""all""#);
        assert_eq!(
            serde_json::to_string(&IndexSetExpr::half_open(0.0, 1.0)).unwrap(),
            r#"{"interval":{"lo":0.0,"hi":1.0}}"#
        );
        assert_eq!(
            serde_json::to_string(&IndexSetExpr::closed(0.0, 1.0)).unwrap(),
            r#"{"interval":{"lo":0.0,"hi":1.0,"lo_open":false}}"#
        );
        assert_eq!(
            serde_json::to_string(&IndexSetExpr::Stride { modulus: 2, residue: 1 }).unwrap(),
            r#"{"stride":{"modulus":2,"residue":1}}"#
        );
        let keys = IndexSetExpr::Explicit(vec![real(1.5), IndexKey::label("s2")]);
        assert_eq!(serde_json::to_string(&keys).unwrap(), r#"{"explicit":[1.5,"s2"]}"#);

        let back: IndexSetExpr = serde_json::from_str(r#"{"interval":{"hi":1.0}}"#).unwrap();
        assert_eq!(
            back,
            IndexSetExpr::Interval { lo: None, hi: Some(1.0), lo_open: true, hi_open: false }
        );
        let comp: IndexSetExpr =
            serde_json::from_str(r#"{"complement":{"explicit":[2.0]}}"#).unwrap();
        assert!(comp.contains(&real(1.0), None));
        assert!(!comp.contains(&real(2.0), None));
    }
}
