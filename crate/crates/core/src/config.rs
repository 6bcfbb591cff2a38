//! Textual and JSON specifications for schedules, weights, sequences and
//! models, shared by the command line and config files.
//!
//! Every spec is either a short string (`"example1"`, `"degenerate:2.5"`,
//! `"0,1"`) or a JSON object with explicit parameters; unknown object keys
//! are rejected.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dnmeans::{DeferredSchedule, RealSeq, WeightScheme};
use crate::error::{Error, Result};
use crate::rvmodel::{JointAtom, RvModel};

fn numbers<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::config(format!("bad number {p:?} in {what} {s:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub a: i64,
    #[serde(default)]
    pub b: i64,
}

/// `"plain"`, `"example1"`, `"xa,ya"` (meaning `x = xa m`, `y = ya m`),
/// `"xa,xb,ya,yb"`, or `{"x": {"a", "b"}, "y": {"a", "b"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Named(String),
    Affine(AffinePair),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePair {
    pub x: AffineSpec,
    pub y: AffineSpec,
}

impl ScheduleSpec {
    pub fn resolve(&self) -> Result<DeferredSchedule> {
        Ok(match self {
            Self::Affine(AffinePair { x, y }) => DeferredSchedule::affine(x.a, x.b, y.a, y.b),
            Self::Named(s) => match s.trim() {
                "plain" => DeferredSchedule::plain(),
                "example1" => DeferredSchedule::example1(),
                other => match numbers::<i64>("schedule", other)?.as_slice() {
                    [xa, ya] => DeferredSchedule::affine(*xa, 0, *ya, 0),
                    [xa, xb, ya, yb] => DeferredSchedule::affine(*xa, *xb, *ya, *yb),
                    _ => {
                        return Err(Error::config(format!(
                            "schedule {other:?}: expected plain, example1, \"xa,ya\" or \"xa,xb,ya,yb\""
                        )))
                    }
                },
            },
        })
    }

    /// Resolves and checks the first `horizon` windows.
    pub fn resolve_checked(&self, horizon: u64) -> Result<DeferredSchedule> {
        let s = self.resolve()?;
        for m in 1..=horizon {
            s.bounds(m)?;
        }
        Ok(s)
    }
}

/// `"ones"`, `"identity"`, `"example1"`, or `{"e": [...], "g": [...]}` with
/// tables starting at index 0 and repeating their last entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(String),
    Tabulated(WeightTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightTable {
    pub e: Vec<f64>,
    pub g: Vec<f64>,
}

impl WeightSpec {
    pub fn resolve(&self) -> Result<WeightScheme> {
        match self {
            Self::Tabulated(t) => WeightScheme::tabulated(t.e.clone(), t.g.clone()),
            Self::Named(s) => match s.trim() {
                "ones" => Ok(WeightScheme::ones()),
                "identity" => Ok(WeightScheme::identity()),
                "example1" => Ok(WeightScheme::example1()),
                other => Err(Error::config(format!(
                    "weights {other:?}: expected ones, identity, example1 or a table"
                ))),
            },
        }
    }
}

/// `"identity"`, `"const:c"`, `"squares"`, `"alternating"`, or a list of
/// values (the last repeating).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeqSpec {
    Named(String),
    Values(Vec<f64>),
}

impl SeqSpec {
    pub fn resolve(&self) -> Result<RealSeq> {
        match self {
            Self::Values(v) if v.is_empty() => Err(Error::config("sequence values must be nonempty")),
            Self::Values(v) => Ok(RealSeq::from_values("values", v.clone())),
            Self::Named(s) => {
                let s = s.trim();
                if let Some(c) = s.strip_prefix("const:") {
                    let c: f64 = c
                        .trim()
                        .parse()
                        .map_err(|_| Error::config(format!("bad constant in {s:?}")))?;
                    return Ok(RealSeq::constant(c));
                }
                match s {
                    "identity" => Ok(RealSeq::identity()),
                    "squares" => Ok(RealSeq::square_indicator()),
                    "alternating" => Ok(RealSeq::alternating()),
                    other => Err(Error::config(format!(
                        "sequence {other:?}: expected identity, const:c, squares, alternating or values"
                    ))),
                }
            }
        }
    }
}

/// Preset strings `example1`, `example2`, `degenerate:c`,
/// `deterministic:a,b,p` (`a + b m^-p`), `spike:h,p`, `shrinking:s,r`, or a
/// tabulated joint law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Named(String),
    Tabulated(ModelTable),
}

/// Joint supports for `m = 1, 2, ...` (the last repeating) and the limit law
/// as `(value, probability)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTable {
    pub per_index: Vec<Vec<JointAtom>>,
    #[serde(default)]
    pub limit: Option<Vec<(f64, f64)>>,
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<RvModel> {
        let s = match self {
            Self::Named(s) => s.trim(),
            Self::Tabulated(t) => return RvModel::tabulated(t.per_index.clone(), t.limit.clone()),
        };
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let params = |n: usize| -> Result<Vec<f64>> {
            let v = numbers::<f64>("model", args)?;
            if v.len() != n {
                return Err(Error::config(format!("model {s:?} takes {n} parameter(s)")));
            }
            Ok(v)
        };
        Ok(match kind {
            "example1" => RvModel::example1(),
            "example2" => RvModel::example2(),
            "degenerate" => RvModel::degenerate(params(1)?[0]),
            "deterministic" => {
                let p = params(3)?;
                RvModel::power_decay(p[0], p[1], p[2])
            }
            "spike" => {
                let p = params(2)?;
                RvModel::spike(p[0], p[1])
            }
            "shrinking" => {
                let p = params(2)?;
                RvModel::shrinking_noise(p[0], p[1])
            }
            other => {
                return Err(Error::config(format!(
                    "unknown model {other:?}; expected example1, example2, degenerate:c, \
                     deterministic:a,b,p, spike:h,p, shrinking:s,r or a table"
                )))
            }
        })
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Named(s) => f.write_str(s),
            Self::Affine(AffinePair { x, y }) => write!(f, "{},{},{},{}", x.a, x.b, y.a, y.b),
        }
    }
}
