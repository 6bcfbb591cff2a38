//! Finite-horizon evidence for the algebra of `st_dnp` limits: uniqueness,
//! squares, products, quotients, and the Cauchy-style anchor condition,
//! plus pushforward under uniformly continuous maps.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{st_dnp, DetectorConfig};
use crate::density::{density_limit, ConvergenceVerdict, Verdict, WeightedThreshold};
use crate::dnmeans::{DeferredSchedule, WeightScheme};
use crate::error::{Error, Result};
use crate::rvmodel::RvModel;

/// Largest anchor index tried by [`algebra_suite`]'s Cauchy search.
pub const CAUCHY_ANCHOR_LIMIT: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub model: String,
    pub verdict: Verdict,
    pub tail_max: f64,
}

impl VerdictSummary {
    fn of(model: &RvModel, v: &ConvergenceVerdict) -> Self {
        Self {
            model: model.name().to_string(),
            verdict: v.verdict,
            tail_max: v.tail_max,
        }
    }
}

/// One implication `premise => conclusion`, observed on a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub assertion: String,
    pub inputs: Vec<String>,
    pub premise_holds: bool,
    pub premise: Vec<VerdictSummary>,
    /// `None` when the premise fails and the conclusion was not evaluated.
    pub conclusion_holds: Option<bool>,
    pub conclusion: Option<VerdictSummary>,
    pub implication_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: DetectorConfig,
    pub records: Vec<AssertionRecord>,
}

impl SuiteReport {
    pub fn all_hold(&self) -> bool {
        self.records.iter().all(|r| r.implication_holds)
    }

    pub fn record(&self, assertion: &str) -> Option<&AssertionRecord> {
        self.records.iter().find(|r| r.assertion == assertion)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "yes" } else { "no" };
        writeln!(f, "{:<14} {:<8} {:<12} {:<11} note", "assertion", "premise", "conclusion", "implication")?;
        for r in &self.records {
            let conclusion = match (&r.conclusion, r.conclusion_holds) {
                (Some(c), _) => c.verdict.to_string(),
                (None, Some(b)) => yn(b).to_string(),
                (None, None) => "-".to_string(),
            };
            let mut line = String::new();
            write!(
                line,
                "{:<14} {:<8} {:<12} {:<11} {}",
                r.assertion,
                yn(r.premise_holds),
                conclusion,
                yn(r.implication_holds),
                r.note.as_deref().unwrap_or("")
            )?;
            writeln!(f, "{}", line.trim_end())?;
        }
        Ok(())
    }
}

/// A real function the caller declares uniformly continuous on the reals.
/// The declaration is trusted, not verified.
#[derive(Clone)]
pub struct UniformlyContinuous {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl UniformlyContinuous {
    pub fn declare(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn identity() -> Self {
        Self::declare("id", |t| t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

impl fmt::Debug for UniformlyContinuous {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("UniformlyContinuous").field(&self.label).finish()
    }
}

/// `st_dnp` on the pushforward `(f(Y_m), f(Y))`.
pub fn continuous_map_check(
    model: &RvModel,
    f: &UniformlyContinuous,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DetectorConfig,
) -> Result<ConvergenceVerdict> {
    let g = f.f.clone();
    let mapped = model.map(&f.label, move |t| g(t));
    st_dnp(&mapped, schedule, weights, cfg)
}

/// Smallest anchor `a <= max_anchor` for which the density of
/// `{n : weight * P(|Y_n - Y_a| >= eps) >= delta}` converges to zero.
pub fn cauchy_search(
    model: &RvModel,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DetectorConfig,
    max_anchor: u64,
) -> Result<Option<u64>> {
    cfg.validate()?;
    for a in 1..=max_anchor {
        let pair = model.cauchy_pair(a)?;
        let q = |n| pair.exceedance_prob(n, cfg.eps);
        if density_limit(&WeightedThreshold::new(cfg.delta, q), schedule, weights, &cfg.density)?.converges() {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

/// `P(Y = Z)` for independent `Y`, `Z` with the given finite laws.
fn prob_equal(y: &[(f64, f64)], z: &[(f64, f64)]) -> f64 {
    y.iter()
        .map(|&(v, p)| p * z.iter().filter(|&&(u, _)| u == v).map(|&(_, q)| q).sum::<f64>())
        .sum()
}

struct Runner<'a> {
    schedule: &'a DeferredSchedule,
    weights: &'a WeightScheme,
    cfg: &'a DetectorConfig,
}

impl Runner<'_> {
    fn dnp(&self, model: &RvModel) -> Result<VerdictSummary> {
        let v = st_dnp(model, self.schedule, self.weights, self.cfg)?;
        Ok(VerdictSummary::of(model, &v))
    }

    fn implication(
        &self,
        assertion: &str,
        premise: Vec<VerdictSummary>,
        extra_premise: std::result::Result<(), String>,
        conclusion: impl FnOnce() -> Result<RvModel>,
    ) -> Result<AssertionRecord> {
        let inputs = premise.iter().map(|s| s.model.clone()).collect();
        let converged = premise.iter().all(|s| s.verdict == Verdict::Converges);
        let premise_holds = converged && extra_premise.is_ok();
        let mut record = AssertionRecord {
            assertion: assertion.to_string(),
            inputs,
            premise_holds,
            premise,
            conclusion_holds: None,
            conclusion: None,
            implication_holds: true,
            note: extra_premise.err(),
        };
        if premise_holds {
            let derived = conclusion()?;
            let summary = self.dnp(&derived)?;
            let holds = summary.verdict == Verdict::Converges;
            record.conclusion_holds = Some(holds);
            record.conclusion = Some(summary);
            record.implication_holds = holds;
        }
        Ok(record)
    }
}

fn constant(model: &RvModel) -> std::result::Result<f64, String> {
    model
        .constant_limit()
        .ok_or_else(|| format!("limit of {} is not constant", model.name()))
}

/// Runs every algebra assertion on `a` (and `b` where two sequences are
/// involved) with `st_dnp` at the given configuration.
///
/// Fails when `b`'s limit is the constant 0, for which the quotient has no
/// limit to test against.
pub fn algebra_suite(
    a: &RvModel,
    b: &RvModel,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DetectorConfig,
) -> Result<SuiteReport> {
    cfg.validate()?;
    if b.constant_limit() == Some(0.0) {
        return Err(Error::config(format!(
            "quotient needs a nonzero limit, but {} tends to 0",
            b.name()
        )));
    }
    let run = Runner { schedule, weights, cfg };
    let (sa, sb) = (run.dnp(a)?, run.dnp(b)?);
    let mut records = Vec::with_capacity(6);

    // uniqueness: A's index variables against B's limit as a second candidate
    let alt = a.with_limit_of(b)?;
    let s_alt = run.dnp(&alt)?;
    let premise_holds = sa.verdict == Verdict::Converges && s_alt.verdict == Verdict::Converges;
    let mut unique = AssertionRecord {
        assertion: "uniqueness".into(),
        inputs: vec![a.name().to_string(), alt.name().to_string()],
        premise_holds,
        premise: vec![sa.clone(), s_alt],
        conclusion_holds: None,
        conclusion: None,
        implication_holds: true,
        note: None,
    };
    if premise_holds {
        let (ly, lz) = (a.limit_law().unwrap_or(&[]), b.limit_law().unwrap_or(&[]));
        let p = prob_equal(ly, lz);
        let holds = (p - 1.0).abs() <= 1e-12;
        unique.conclusion_holds = Some(holds);
        unique.implication_holds = holds;
        unique.note = Some(format!("P(Y=Z) = {p}"));
    }
    records.push(unique);

    records.push(run.implication("square", vec![sa.clone()], constant(a).map(drop), || {
        Ok(a.map("sq", |t| t * t))
    })?);

    let both_constant = constant(a).and(constant(b)).map(drop);
    records.push(run.implication("product", vec![sa.clone(), sb.clone()], both_constant.clone(), || {
        Ok(a.combine(b, "*", |u, v| u * v))
    })?);
    records.push(run.implication("quotient", vec![sa.clone(), sb.clone()], both_constant, || {
        Ok(a.combine(b, "/", |u, v| u / v))
    })?);
    records.push(run.implication("product-rv", vec![sa.clone(), sb], Ok(()), || {
        Ok(a.combine(b, "*", |u, v| u * v))
    })?);

    let converged = sa.verdict == Verdict::Converges;
    let mut cauchy = AssertionRecord {
        assertion: "cauchy".into(),
        inputs: vec![a.name().to_string()],
        premise_holds: converged,
        premise: vec![sa],
        conclusion_holds: None,
        conclusion: None,
        implication_holds: true,
        note: None,
    };
    if converged {
        let limit = CAUCHY_ANCHOR_LIMIT.min(cfg.density.horizon);
        let found = cauchy_search(a, schedule, weights, cfg, limit)?;
        cauchy.conclusion_holds = Some(found.is_some());
        cauchy.implication_holds = found.is_some();
        cauchy.note = Some(match found {
            Some(k) => format!("a = {k}"),
            None => format!("none found for a <= {limit}"),
        });
    }
    records.push(cauchy);

    Ok(SuiteReport {
        config: cfg.clone(),
        records,
    })
}
