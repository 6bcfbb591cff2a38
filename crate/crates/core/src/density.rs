//! Deferred-Nörlund-weighted density of index sets and finite-horizon limit
//! estimation.
//!
//! For each `m` the counted set is `{n : 1 <= n <= floor(R_m), pred(m, n)}`
//! and its density is the count divided by `R_m`. A limit of zero can only be
//! witnessed on a finite horizon, so [`density_limit`] returns the full trace
//! together with a verdict computed from its tail.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dnmeans::{density_normalizer, DeferredSchedule, NormalizerMode, WeightScheme};
use crate::error::{Error, Result};

/// Traces longer than this many head points are subsampled.
pub const DENSE_TRACE_LIMIT: u64 = 1_000;

/// How window weights enter weighted predicates.
///
/// `WindowRelative` divides `w(m, n)` by its mean over the window of `m`, so
/// rescaling all weights of one window (which leaves the mean `t_m`
/// unchanged) leaves the predicate unchanged too. `Literal` uses `w(m, n)`
/// as is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Literal,
    #[default]
    WindowRelative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    pub horizon: u64,
    pub tail_fraction: f64,
    pub tolerance: f64,
    pub mode: NormalizerMode,
    pub weighting: Weighting,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            tail_fraction: 0.2,
            tolerance: 0.02,
            mode: NormalizerMode::Regular,
            weighting: Weighting::WindowRelative,
        }
    }
}

impl DensityConfig {
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Number of trailing `m` values that form the tail window.
    pub fn tail_len(&self) -> u64 {
        ((self.tail_fraction * self.horizon as f64).ceil() as u64).min(self.horizon)
    }

    pub fn tail_start(&self) -> u64 {
        self.horizon - self.tail_len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 10 {
            return Err(Error::Underpowered(self.horizon));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::config(format!(
                "tail_fraction must lie in (0, 1], got {}",
                self.tail_fraction
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.tail_len() < 2 {
            return Err(Error::config("tail window must contain at least 2 points"));
        }
        Ok(())
    }

    /// The `m` values at which the density is evaluated: a stride-subsampled
    /// head followed by the dense tail window.
    pub fn evaluation_points(&self) -> Vec<u64> {
        let tail_start = self.tail_start();
        let head_len = tail_start - 1;
        let stride = if self.horizon <= DENSE_TRACE_LIMIT {
            1
        } else {
            head_len.div_ceil(DENSE_TRACE_LIMIT).max(1)
        };
        let mut points: Vec<u64> = (1..tail_start).step_by(stride as usize).collect();
        points.extend(tail_start..=self.horizon);
        points
    }
}

/// Everything a predicate needs to know about window `m`.
#[derive(Debug, Clone)]
pub struct WindowCtx<'a> {
    pub m: u64,
    /// Upper end `y(m)` of the window.
    pub upper: u64,
    /// Density normalizer `R_m`.
    pub normalizer: f64,
    /// `floor(R_m)`: indices `1..=count_limit` are counted.
    pub count_limit: u64,
    scale: f64,
    /// The common predicate weight when the scheme is uniform in `n`.
    uniform_weight: Option<f64>,
    weights: &'a WeightScheme,
}

impl<'a> WindowCtx<'a> {
    pub fn new(
        schedule: &DeferredSchedule,
        weights: &'a WeightScheme,
        m: u64,
        mode: NormalizerMode,
        weighting: Weighting,
    ) -> Result<Self> {
        let (x, y) = schedule.bounds(m)?;
        let normalizer = density_normalizer(schedule, weights, m, mode)?;
        let scale = match weighting {
            Weighting::Literal => 1.0,
            Weighting::WindowRelative => {
                let mean = if weights.is_uniform() {
                    let w = weights.weight_with_upper(m, y, x + 1);
                    if w < 0.0 {
                        return Err(Error::NegativeWeight { m, n: x + 1, value: w });
                    }
                    w
                } else {
                    weights.window_sum(schedule, m)? / (y - x) as f64
                };
                if !(mean > 0.0) {
                    return Err(Error::DegenerateNormalizer { m });
                }
                mean
            }
        };
        let uniform_weight = weights
            .is_uniform()
            .then(|| weights.weight_with_upper(m, y, x + 1) / scale);
        Ok(Self {
            m,
            upper: y,
            normalizer,
            count_limit: normalizer.floor() as u64,
            scale,
            uniform_weight,
            weights,
        })
    }

    /// Predicate weight of index `n` in this window.
    #[inline]
    pub fn weight(&self, n: u64) -> f64 {
        match self.uniform_weight {
            Some(w) => w,
            None => self.weights.weight_with_upper(self.m, self.upper, n) / self.scale,
        }
    }

    /// Counted indices beyond this bound carry zero weight.
    pub fn weight_bound(&self) -> u64 {
        match self.weights.nonzero_bound(self.upper) {
            Some(b) => b.min(self.count_limit),
            None => self.count_limit,
        }
    }
}

/// A predicate on `(m, n)` ready for counting.
pub trait PreparedPredicate: Sync {
    fn holds(&self, ctx: &WindowCtx<'_>, n: u64) -> bool;

    /// Last index that can possibly satisfy the predicate in this window.
    fn scan_limit(&self, ctx: &WindowCtx<'_>) -> u64 {
        ctx.count_limit
    }

    /// Number of `n` in `1..=limit` where the predicate holds.
    fn count(&self, ctx: &WindowCtx<'_>, limit: u64) -> u64 {
        (1..=limit).filter(|&n| self.holds(ctx, n)).count() as u64
    }
}

/// A predicate that may precompute per-index data before counting.
pub trait IndexPredicate {
    type Prepared: PreparedPredicate;

    /// `max_index` bounds every index at which a weighted predicate will be
    /// asked about a nonzero weight.
    fn prepare(&self, max_index: u64) -> Result<Self::Prepared>;
}

/// Adapter turning a closure into a predicate.
#[derive(Clone)]
pub struct FnPredicate<F>(pub F);

impl<F> PreparedPredicate for FnPredicate<F>
where
    F: Fn(&WindowCtx<'_>, u64) -> bool + Sync,
{
    fn holds(&self, ctx: &WindowCtx<'_>, n: u64) -> bool {
        (self.0)(ctx, n)
    }
}

impl<F> IndexPredicate for FnPredicate<F>
where
    F: Fn(&WindowCtx<'_>, u64) -> bool + Sync + Clone,
{
    type Prepared = Self;

    fn prepare(&self, _max_index: u64) -> Result<Self> {
        Ok(self.clone())
    }
}

/// `weight(m, n) * q(n) >= threshold`, where `q` depends on `n` only.
///
/// A NaN or infinite `q(n)` under a positive weight counts as exceeding the
/// threshold.
pub struct WeightedThreshold<Q> {
    pub threshold: f64,
    source: Q,
}

impl<Q> WeightedThreshold<Q>
where
    Q: Fn(u64) -> Result<f64>,
{
    pub fn new(threshold: f64, source: Q) -> Self {
        Self { threshold, source }
    }
}

impl<Q> IndexPredicate for WeightedThreshold<Q>
where
    Q: Fn(u64) -> Result<f64>,
{
    type Prepared = PreparedThreshold;

    fn prepare(&self, max_index: u64) -> Result<PreparedThreshold> {
        let values = (1..=max_index)
            .map(|n| (self.source)(n).map_err(|e| e.at(n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedThreshold {
            threshold: self.threshold,
            values,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PreparedThreshold {
    pub threshold: f64,
    pub values: Vec<f64>,
}

impl PreparedThreshold {
    /// Wraps precomputed values `q(1), q(2), ...`.
    pub fn new(threshold: f64, values: Vec<f64>) -> Self {
        Self { threshold, values }
    }
}

impl PreparedPredicate for PreparedThreshold {
    #[inline]
    fn holds(&self, ctx: &WindowCtx<'_>, n: u64) -> bool {
        let w = ctx.weight(n);
        if w == 0.0 {
            return false;
        }
        let q = self.values.get(n as usize - 1).copied().unwrap_or(f64::NAN);
        !(w * q < self.threshold)
    }

    fn scan_limit(&self, ctx: &WindowCtx<'_>) -> u64 {
        ctx.weight_bound()
    }

    fn count(&self, ctx: &WindowCtx<'_>, limit: u64) -> u64 {
        match (ctx.uniform_weight, self.values.get(..limit as usize)) {
            (Some(0.0), _) => 0,
            // same comparison as `holds`, without the per-index weight call
            (Some(w), Some(values)) => values.iter().filter(|&&q| !(w * q < self.threshold)).count() as u64,
            _ => (1..=limit).filter(|&n| self.holds(ctx, n)).count() as u64,
        }
    }
}

impl IndexPredicate for PreparedThreshold {
    type Prepared = PreparedThreshold;

    fn prepare(&self, max_index: u64) -> Result<PreparedThreshold> {
        if (self.values.len() as u64) < max_index {
            return Err(Error::config(format!(
                "precomputed values cover n <= {}, need n <= {max_index}",
                self.values.len()
            )));
        }
        Ok(self.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub m: u64,
    pub normalizer: f64,
    pub count: u64,
    pub density: f64,
}

/// Counts the predicate over `1..=floor(R_m)`.
pub fn count_window<P: PreparedPredicate + ?Sized>(pred: &P, ctx: &WindowCtx<'_>) -> TracePoint {
    let limit = pred.scan_limit(ctx).min(ctx.count_limit);
    let count = pred.count(ctx, limit);
    TracePoint {
        m: ctx.m,
        normalizer: ctx.normalizer,
        count,
        density: count as f64 / ctx.normalizer,
    }
}

/// `(1 / R_m) |{n <= floor(R_m) : pred(m, n)}|` with window-relative
/// predicate weights.
pub fn weighted_density<F>(
    pred: F,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    m: u64,
    mode: NormalizerMode,
) -> Result<f64>
where
    F: Fn(&WindowCtx<'_>, u64) -> bool + Sync,
{
    let ctx = WindowCtx::new(schedule, weights, m, mode, Weighting::WindowRelative)?;
    Ok(count_window(&FnPredicate(pred), &ctx).density)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "Converges",
            Verdict::Diverges => "Diverges",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

/// A value `q(n)` recorded alongside a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequencePoint {
    pub n: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub verdict: Verdict,
    pub tail_max: f64,
    pub tail_start: u64,
    pub config: DensityConfig,
    pub trace: Vec<TracePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_sequence: Option<Vec<SequencePoint>>,
}

impl ConvergenceVerdict {
    /// Assembles the verdict from a trace ordered by `m`.
    pub fn from_trace(trace: Vec<TracePoint>, config: DensityConfig) -> Self {
        let tail_start = config.tail_start();
        let tail: Vec<f64> = trace
            .iter()
            .filter(|p| p.m >= tail_start)
            .map(|p| p.density)
            .collect();
        let tail_max = tail.iter().copied().fold(0.0, f64::max);
        let (rise, drop) = oscillation(&tail);
        let verdict = if tail_max < config.tolerance {
            Verdict::Converges
        } else if rise > config.tolerance && drop > config.tolerance {
            Verdict::Inconclusive
        } else {
            Verdict::Diverges
        };
        Self {
            verdict,
            tail_max,
            tail_start,
            config,
            trace,
            raw_sequence: None,
        }
    }

    pub fn converges(&self) -> bool {
        self.verdict == Verdict::Converges
    }

    pub fn tail(&self) -> impl Iterator<Item = &TracePoint> {
        self.trace.iter().filter(move |p| p.m >= self.tail_start)
    }

    /// Writes the trace as CSV with header `m,R_m,count,d_m`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,R_m,count,d_m")?;
        for p in &self.trace {
            writeln!(out, "{},{},{},{}", p.m, p.normalizer, p.count, p.density)?;
        }
        Ok(())
    }
}

/// Largest rise `max_{i<j} (d_j - d_i)` and largest drop `max_{i<j} (d_i - d_j)`.
fn oscillation(values: &[f64]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut rise, mut drop) = (0.0f64, 0.0f64);
    for &v in values {
        rise = rise.max(v - lo);
        drop = drop.max(hi - v);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (rise, drop)
}

/// Largest index any evaluation point of `cfg` can count with nonzero weight.
pub fn scan_bound(schedule: &DeferredSchedule, weights: &WeightScheme, cfg: &DensityConfig) -> Result<u64> {
    cfg.validate()?;
    cfg.evaluation_points().into_iter().try_fold(0, |acc, m| {
        let ctx = WindowCtx::new(schedule, weights, m, cfg.mode, cfg.weighting).map_err(|e| e.at(m))?;
        Ok(acc.max(ctx.weight_bound()))
    })
}

/// Evaluates the density of `pred` over the configured horizon and decides
/// whether it tends to zero.
pub fn density_limit<P: IndexPredicate>(
    pred: &P,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DensityConfig,
) -> Result<ConvergenceVerdict> {
    cfg.validate()?;
    let ctxs = cfg
        .evaluation_points()
        .into_iter()
        .map(|m| WindowCtx::new(schedule, weights, m, cfg.mode, cfg.weighting).map_err(|e| e.at(m)))
        .collect::<Result<Vec<_>>>()?;
    let max_index = ctxs.iter().map(WindowCtx::weight_bound).max().unwrap_or(0);
    let prepared = pred.prepare(max_index)?;
    let trace = ctxs.iter().map(|ctx| count_window(&prepared, ctx)).collect();
    Ok(ConvergenceVerdict::from_trace(trace, *cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::is_perfect_square;

    fn plain() -> (DeferredSchedule, WeightScheme) {
        (DeferredSchedule::plain(), WeightScheme::ones())
    }

    #[test]
    fn density_examples() {
        let (s, w) = plain();
        let mode = NormalizerMode::Regular;
        assert_eq!(weighted_density(|_, _| false, &s, &w, 37, mode).unwrap(), 0.0);
        assert_eq!(weighted_density(|_, _| true, &s, &w, 37, mode).unwrap(), 1.0);
        let d = weighted_density(|_, n| is_perfect_square(n), &s, &w, 100, mode).unwrap();
        assert_eq!(d, 0.10);
    }

    #[test]
    fn config_validation() {
        assert!(DensityConfig::default().validate().is_ok());
        assert_eq!(DensityConfig::default().with_horizon(9).validate(), Err(Error::Underpowered(9)));
        let bad = DensityConfig {
            tail_fraction: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DensityConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let thin = DensityConfig {
            tail_fraction: 0.1,
            ..DensityConfig::default().with_horizon(10)
        };
        assert!(thin.validate().is_err());
    }

    #[test]
    fn evaluation_points_keep_tail_dense() {
        let cfg = DensityConfig::default();
        let pts = cfg.evaluation_points();
        assert_eq!(pts[0], 1);
        assert_eq!(*pts.last().unwrap(), 10_000);
        let tail: Vec<_> = pts.iter().filter(|&&m| m >= cfg.tail_start()).collect();
        assert_eq!(tail.len(), 2000);
        assert!(pts.len() <= 2000 + 1000);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        let small = DensityConfig::default().with_horizon(500);
        assert_eq!(small.evaluation_points(), (1..=500).collect::<Vec<_>>());
    }

    #[test]
    fn limit_examples() {
        let (s, w) = plain();
        let cfg = DensityConfig::default();

        let v = density_limit(&FnPredicate(|_: &WindowCtx<'_>, _| false), &s, &w, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);
        assert_eq!(v.tail_max, 0.0);

        let v = density_limit(&FnPredicate(|_: &WindowCtx<'_>, n| is_perfect_square(n)), &s, &w, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Converges);
        // brute force over the tail window m = 8001..=10000
        let oracle = (8001..=10_000u64)
            .map(|m| (1..=m).filter(|k| k * k <= m).count() as f64 / m as f64)
            .fold(0.0, f64::max);
        assert_eq!(v.tail_max, oracle);
        assert_eq!(oracle, 89.0 / 8001.0);

        let v = density_limit(&FnPredicate(|_: &WindowCtx<'_>, n| n % 2 == 0), &s, &w, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Diverges);
        for p in v.tail() {
            assert_eq!(p.count, p.m / 2);
        }
    }

    #[test]
    fn oscillating_tail_is_inconclusive() {
        let cfg = DensityConfig::default().with_horizon(100);
        let trace = (1..=100u64)
            .map(|m| TracePoint {
                m,
                normalizer: m as f64,
                count: 0,
                density: if m % 2 == 0 { 0.5 } else { 0.0 },
            })
            .collect();
        let v = ConvergenceVerdict::from_trace(trace, cfg);
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert_eq!(v.tail_max, 0.5);
    }

    #[test]
    fn complement_sums_to_floor_ratio() {
        let s = DeferredSchedule::affine(1, 0, 3, 1);
        let w = WeightScheme::identity();
        for m in 1..60 {
            let a = weighted_density(|_, n| n % 3 == 0, &s, &w, m, NormalizerMode::Regular).unwrap();
            let b = weighted_density(|_, n| n % 3 != 0, &s, &w, m, NormalizerMode::Regular).unwrap();
            let r = density_normalizer(&s, &w, m, NormalizerMode::Regular).unwrap();
            assert!((a + b - r.floor() / r).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_threshold_skips_zero_weights() {
        // identity weights vanish for n >= y(m) = m + 1, so q is never needed
        // past 51 even though R_m = m(m+1)/2 reaches 1275.
        let s = DeferredSchedule::affine(0, 0, 1, 1);
        let w = WeightScheme::identity();
        let cfg = DensityConfig::default().with_horizon(50);
        let pred = WeightedThreshold::new(0.5, |n| {
            assert!(n <= 51, "q({n}) requested");
            Ok(1.0)
        });
        let v = density_limit(&pred, &s, &w, &cfg).unwrap();
        let last = v.trace.last().unwrap();
        assert_eq!(last.normalizer, 1275.0);
        // 2(51 - n)/50 >= 0.5  <=>  n <= 38
        assert_eq!(last.count, 38);
    }

    #[test]
    fn uniform_fast_path_matches_generic_count() {
        let s = DeferredSchedule::example1();
        let fast = WeightScheme::example1();
        let mut slow = fast.clone();
        slow.window_override.as_mut().unwrap().uniform = false;
        let q = |n: u64| Ok(((n as f64) * 0.37).sin().abs());
        let cfg = DensityConfig::default().with_horizon(300);
        for weighting in [Weighting::WindowRelative, Weighting::Literal] {
            let cfg = DensityConfig { weighting, ..cfg };
            let a = density_limit(&WeightedThreshold::new(0.6, q), &s, &fast, &cfg).unwrap();
            let b = density_limit(&WeightedThreshold::new(0.6, q), &s, &slow, &cfg).unwrap();
            assert_eq!(a.trace, b.trace);
        }
        let (s, w) = plain();
        let v = density_limit(&WeightedThreshold::new(0.5, q), &s, &w, &cfg).unwrap();
        let brute = (1..=300u64).filter(|&n| q(n).unwrap() >= 0.5).count() as u64;
        assert_eq!(v.trace.last().unwrap().count, brute);
    }
}
