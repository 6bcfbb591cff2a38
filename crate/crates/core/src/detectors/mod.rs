//! Detectors for deferred Nörlund statistical convergence of random-variable
//! sequences in probability (`st_dnp`), in r-th mean (`st_dnm`) and in
//! distribution (`st_dndc`).
//!
//! Each detector reduces to [`density_limit`] over the predicate
//! `weight(m, n) * q(n) >= threshold`, where `q(n)` is an exact functional of
//! the law of `(Y_n, Y)`:
//!
//! | detector | `q(n)`                         | threshold |
//! |----------|--------------------------------|-----------|
//! | dnp      | `P(|Y_n - Y| >= eps)`          | `delta`   |
//! | dnm      | `E|Y_n - Y|^r`                 | `eps`     |
//! | dndc     | `|F_{Y_n}(t) - F_Y(t)|` per `t` | `eps`     |

mod suite;

pub use suite::{
    algebra_suite, cauchy_search, continuous_map_check, AssertionRecord, SuiteReport,
    UniformlyContinuous, VerdictSummary,
};

use serde::{Deserialize, Serialize};

use crate::density::{density_limit, ConvergenceVerdict, DensityConfig, SequencePoint, Verdict, WeightedThreshold};
use crate::dnmeans::{DeferredSchedule, WeightScheme};
use crate::error::{Error, Result};
use crate::rvmodel::{CdfAt, RvModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub eps: f64,
    pub delta: f64,
    /// Moment order for `st_dnm`.
    pub r: f64,
    /// Evaluation points for `st_dndc`; defaults to [`default_grid`].
    pub grid: Option<Vec<f64>>,
    pub density: DensityConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            eps: 0.5,
            delta: 0.5,
            r: 1.0,
            grid: None,
            density: DensityConfig::default(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !(self.delta > 0.0) {
            return Err(Error::config(format!(
                "eps and delta must be positive, got eps={} delta={}",
                self.eps, self.delta
            )));
        }
        if !(self.r >= 1.0) {
            return Err(Error::config(format!("r must be >= 1, got {}", self.r)));
        }
        if matches!(&self.grid, Some(g) if g.is_empty()) {
            return Err(Error::config("grid must be non-empty"));
        }
        self.density.validate()
    }
}

fn record_raw(
    mut verdict: ConvergenceVerdict,
    q: impl Fn(u64) -> Result<f64>,
) -> Result<ConvergenceVerdict> {
    let raw = verdict
        .trace
        .iter()
        .map(|p| q(p.m).map(|value| SequencePoint { n: p.m, value }))
        .collect::<Result<Vec<_>>>()?;
    verdict.raw_sequence = Some(raw);
    Ok(verdict)
}

/// Convergence in probability: density of
/// `{n : weight * P(|Y_n - Y| >= eps) >= delta}`.
pub fn st_dnp(
    model: &RvModel,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DetectorConfig,
) -> Result<ConvergenceVerdict> {
    cfg.validate()?;
    let q = |n| model.exceedance_prob(n, cfg.eps);
    let verdict = density_limit(&WeightedThreshold::new(cfg.delta, q), schedule, weights, &cfg.density)?;
    record_raw(verdict, q)
}

/// Convergence in r-th mean: density of `{n : weight * E|Y_n - Y|^r >= eps}`.
/// The trace records the raw moment sequence.
pub fn st_dnm(
    model: &RvModel,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DetectorConfig,
) -> Result<ConvergenceVerdict> {
    cfg.validate()?;
    let q = |n| model.abs_moment(n, cfg.r);
    let verdict = density_limit(&WeightedThreshold::new(cfg.eps, q), schedule, weights, &cfg.density)?;
    record_raw(verdict, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointVerdict {
    pub t: f64,
    pub result: ConvergenceVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionVerdict {
    pub verdict: Verdict,
    pub points: Vec<GridPointVerdict>,
}

impl DistributionVerdict {
    pub fn converges(&self) -> bool {
        self.verdict == Verdict::Converges
    }

    pub fn tail_max(&self) -> f64 {
        self.points.iter().map(|p| p.result.tail_max).fold(0.0, f64::max)
    }
}

/// Continuity points of the limit distribution function: midpoints between
/// adjacent atoms, plus one point below the smallest and one above the
/// largest atom, each half the smallest gap away (0.5 for a point mass).
pub fn default_grid(model: &RvModel) -> Result<Vec<f64>> {
    let atoms = model
        .limit_atoms()
        .ok_or_else(|| Error::config(format!("model {} declares no limit law", model.name())))?;
    let half_gap = atoms
        .windows(2)
        .map(|w| (w[1] - w[0]) / 2.0)
        .fold(f64::INFINITY, f64::min);
    let h = if half_gap.is_finite() { half_gap } else { 0.5 };
    let mut grid = vec![atoms[0] - h];
    grid.extend(atoms.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    grid.push(atoms[atoms.len() - 1] + h);
    Ok(grid)
}

/// Convergence in distribution, checked at each grid point `t`: density of
/// `{n : weight * |F_{Y_n}(t) - F_Y(t)| >= eps}`. Converges iff every grid
/// point converges.
pub fn st_dndc(
    model: &RvModel,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DetectorConfig,
) -> Result<DistributionVerdict> {
    cfg.validate()?;
    let grid = match &cfg.grid {
        Some(g) => g.clone(),
        None => default_grid(model)?,
    };
    let atoms = model
        .limit_atoms()
        .ok_or_else(|| Error::config(format!("model {} declares no limit law", model.name())))?;
    if let Some(t) = grid.iter().find(|t| atoms.contains(t)) {
        return Err(Error::config(format!(
            "grid point {t} is a discontinuity of the limit distribution function"
        )));
    }
    let mut points = Vec::with_capacity(grid.len());
    for t in grid {
        let limit = model.cdf(CdfAt::Limit, t)?;
        let q = |n| model.cdf(CdfAt::Index(n), t).map(|f| (f - limit).abs());
        let verdict = density_limit(&WeightedThreshold::new(cfg.eps, q), schedule, weights, &cfg.density)?;
        points.push(GridPointVerdict {
            t,
            result: record_raw(verdict, q)?,
        });
    }
    let verdict = if points.iter().all(|p| p.result.converges()) {
        Verdict::Converges
    } else if points.iter().any(|p| p.result.verdict == Verdict::Diverges) {
        Verdict::Diverges
    } else {
        Verdict::Inconclusive
    };
    Ok(DistributionVerdict { verdict, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovCheck {
    pub holds: bool,
    /// `bound - exceedance`.
    pub margin: f64,
    pub exceedance: f64,
    /// `E|Y_m - Y|^r / eps^r`.
    pub bound: f64,
}

/// Relative rounding allowance when comparing the two exact sides.
const MARKOV_ROUNDING: f64 = 1e-12;

/// Checks `P(|Y_m - Y| >= eps) <= E|Y_m - Y|^r / eps^r`.
pub fn markov_bound_check(model: &RvModel, m: u64, eps: f64, r: f64) -> Result<MarkovCheck> {
    let exceedance = model.exceedance_prob(m, eps)?;
    let bound = model.abs_moment(m, r)? / eps.powf(r);
    Ok(MarkovCheck {
        holds: exceedance <= bound + MARKOV_ROUNDING * bound.max(1.0),
        margin: bound - exceedance,
        exceedance,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_scheme() -> (DeferredSchedule, WeightScheme) {
        (DeferredSchedule::example1(), WeightScheme::example1())
    }

    fn plain() -> (DeferredSchedule, WeightScheme) {
        (DeferredSchedule::plain(), WeightScheme::ones())
    }

    fn cfg(horizon: u64) -> DetectorConfig {
        DetectorConfig {
            density: DensityConfig::default().with_horizon(horizon),
            ..Default::default()
        }
    }

    #[test]
    fn dnp_examples() {
        let (s, w) = example1_scheme();
        let v = st_dnp(&RvModel::example1(), &s, &w, &cfg(2000)).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);
        // P(Y_n = n) = 1/sqrt(n) >= 1/2 exactly for n <= 4.
        assert!(v.tail().all(|p| p.count == 4));

        let v = st_dnp(&RvModel::example2(), &s, &w, &cfg(2000)).unwrap();
        assert_eq!(v.verdict, Verdict::Diverges);

        let (s, w) = plain();
        let v = st_dnp(&RvModel::degenerate(1.0), &s, &w, &cfg(200)).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);
        assert_eq!(v.tail_max, 0.0);
    }

    #[test]
    fn dnm_examples() {
        let (s, w) = example1_scheme();
        let v = st_dnm(&RvModel::example1(), &s, &w, &cfg(500)).unwrap();
        assert_eq!(v.verdict, Verdict::Diverges);
        let raw = v.raw_sequence.as_ref().unwrap();
        let at_400 = raw.iter().find(|p| p.n == 400).unwrap();
        assert!((at_400.value - 20.0).abs() < 1e-12);

        let (s, w) = plain();
        assert!(st_dnm(&RvModel::degenerate(-2.0), &s, &w, &cfg(100)).unwrap().converges());
        let recip = RvModel::power_decay(0.0, 1.0, 1.0);
        let c = DetectorConfig { r: 2.0, ..cfg(1000) };
        let v = st_dnm(&recip, &s, &w, &c).unwrap();
        assert!(v.converges());
        let raw = v.raw_sequence.unwrap();
        assert!((raw[9].value - 0.01).abs() < 1e-15);
    }

    #[test]
    fn dndc_examples() {
        let (s, w) = example1_scheme();
        let c = DetectorConfig {
            grid: Some(vec![-0.5, 0.25, 0.75, 1.5]),
            ..cfg(1000)
        };
        let v = st_dndc(&RvModel::example2(), &s, &w, &c).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);
        assert_eq!(v.tail_max(), 0.0);

        let c = DetectorConfig {
            grid: Some(vec![-1.0, 0.5]),
            ..cfg(1000)
        };
        let v = st_dndc(&RvModel::example1(), &s, &w, &c).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);

        let (s, w) = plain();
        let v = st_dndc(&RvModel::degenerate(3.0), &s, &w, &cfg(100)).unwrap();
        assert!(v.converges());
        assert_eq!(v.points.iter().map(|p| p.t).collect::<Vec<_>>(), vec![2.5, 3.5]);
    }

    #[test]
    fn dndc_rejects_discontinuity_points() {
        let (s, w) = plain();
        let c = DetectorConfig {
            grid: Some(vec![0.5, 1.0]),
            ..cfg(100)
        };
        assert!(st_dndc(&RvModel::example2(), &s, &w, &c).is_err());
        let c = DetectorConfig {
            grid: Some(vec![]),
            ..cfg(100)
        };
        assert!(st_dndc(&RvModel::example2(), &s, &w, &c).is_err());
    }

    #[test]
    fn default_grid_uses_midpoints() {
        assert_eq!(default_grid(&RvModel::example2()).unwrap(), vec![-0.5, 0.5, 1.5]);
        assert_eq!(default_grid(&RvModel::degenerate(0.0)).unwrap(), vec![-0.5, 0.5]);
    }

    #[test]
    fn markov_examples() {
        let c = markov_bound_check(&RvModel::example1(), 16, 1.0, 2.0).unwrap();
        assert!(c.holds);
        assert!((c.margin - 63.75).abs() < 1e-12);

        let c = markov_bound_check(&RvModel::degenerate(4.0), 3, 0.5, 1.0).unwrap();
        assert!(c.holds);
        assert_eq!((c.exceedance, c.bound, c.margin), (0.0, 0.0, 0.0));

        let c = markov_bound_check(&RvModel::example2(), 5, 1.0, 1.0).unwrap();
        assert!(c.holds);
        assert_eq!((c.exceedance, c.bound, c.margin), (1.0, 1.0, 0.0));
    }

    #[test]
    fn invalid_configs() {
        let (s, w) = plain();
        let bad = DetectorConfig { eps: 0.0, ..cfg(100) };
        assert!(st_dnp(&RvModel::example1(), &s, &w, &bad).is_err());
        let bad = DetectorConfig { r: 0.5, ..cfg(100) };
        assert!(st_dnm(&RvModel::example1(), &s, &w, &bad).is_err());
        assert_eq!(
            st_dnp(&RvModel::example1(), &s, &w, &cfg(5)).unwrap_err(),
            Error::Underpowered(5)
        );
    }
}
