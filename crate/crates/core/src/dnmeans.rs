//! Deferred schedules, weight schemes and the deferred Nörlund mean.
//!
//! A [`DeferredSchedule`] picks, for every `m >= 1`, the window
//! `x(m)+1 ..= y(m)`. A [`WeightScheme`] attaches the weight
//! `w(m, n) = e(y(m) - n) * g(n)` (or an explicit per-window override) to each
//! index, and the deferred Nörlund mean of a sequence is the weighted average
//! of that sequence over the window.

use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{self, ConvergenceVerdict, DensityConfig, WeightedThreshold};
use crate::error::{Error, Result};
use crate::numeric::{ordered_sum, NeumaierSum};

/// Which normalizer the convolution uses.
///
/// The numerator of the mean weights index `n` by `e(y(m) - n) * g(n)`, while
/// the historical convolution sums `e(v) * g(y(m) - v)` over the same window.
/// The two differ by a reflection of the window, so only `Regular` preserves
/// constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizerMode {
    PaperLiteral,
    #[default]
    Regular,
}

impl fmt::Display for NormalizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizerMode::PaperLiteral => f.write_str("paper-literal"),
            NormalizerMode::Regular => f.write_str("regular"),
        }
    }
}

/// An integer-valued function of the index `m`.
#[derive(Clone)]
pub enum IndexFn {
    /// `a * m + b`.
    Affine { a: i64, b: i64 },
    Custom {
        label: String,
        f: Arc<dyn Fn(u64) -> i64 + Send + Sync>,
    },
}

impl IndexFn {
    pub fn affine(a: i64, b: i64) -> Self {
        IndexFn::Affine { a, b }
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(u64) -> i64 + Send + Sync + 'static) -> Self {
        IndexFn::Custom {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, m: u64) -> i64 {
        match self {
            IndexFn::Affine { a, b } => a.saturating_mul(m as i64).saturating_add(*b),
            IndexFn::Custom { f, .. } => f(m),
        }
    }
}

impl fmt::Debug for IndexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for IndexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexFn::Affine { a, b } => match (*a, *b) {
                (0, b) => write!(f, "{b}"),
                (a, 0) => write!(f, "{a}m"),
                (a, b) if b < 0 => write!(f, "{a}m-{}", -b),
                (a, b) => write!(f, "{a}m+{b}"),
            },
            IndexFn::Custom { label, .. } => f.write_str(label),
        }
    }
}

/// The pair `(x(m), y(m))` defining the deferred windows.
#[derive(Debug, Clone)]
pub struct DeferredSchedule {
    pub x: IndexFn,
    pub y: IndexFn,
}

impl DeferredSchedule {
    pub fn new(x: IndexFn, y: IndexFn) -> Self {
        Self { x, y }
    }

    /// `x(m) = xa*m + xb`, `y(m) = ya*m + yb`.
    pub fn affine(xa: i64, xb: i64, ya: i64, yb: i64) -> Self {
        Self::new(IndexFn::affine(xa, xb), IndexFn::affine(ya, yb))
    }

    /// The non-deferred schedule `x(m) = 0`, `y(m) = m`.
    pub fn plain() -> Self {
        Self::affine(0, 0, 1, 0)
    }

    /// `x(m) = 2m - 1`, `y(m) = 4m - 1`.
    pub fn example1() -> Self {
        Self::affine(2, -1, 4, -1)
    }

    pub fn label(&self) -> String {
        format!("x(m)={}, y(m)={}", self.x, self.y)
    }

    /// Validated `(x(m), y(m))`.
    pub fn bounds(&self, m: u64) -> Result<(u64, u64)> {
        if m == 0 {
            return Err(Error::ZeroIndex(m));
        }
        let (x, y) = (self.x.eval(m), self.y.eval(m));
        if x < 0 || x >= y {
            return Err(Error::ScheduleViolation { m, x, y });
        }
        Ok((x as u64, y as u64))
    }

    pub fn upper(&self, m: u64) -> Result<u64> {
        self.bounds(m).map(|(_, y)| y)
    }

    /// Checks `x(m) < y(m)` on `1..=horizon` and that `y` exceeds `threshold`
    /// somewhere on that range.
    pub fn check_horizon(&self, horizon: u64, threshold: u64) -> Result<()> {
        let mut max_y = 0;
        for m in 1..=horizon {
            max_y = max_y.max(self.upper(m)?);
        }
        if max_y <= threshold {
            return Err(Error::config(format!(
                "y(m) stays <= {threshold} on 1..={horizon}; schedule is not unbounded"
            )));
        }
        Ok(())
    }
}

/// The inclusive index window `x(m)+1 ..= y(m)`.
pub fn window(schedule: &DeferredSchedule, m: u64) -> Result<RangeInclusive<u64>> {
    let (x, y) = schedule.bounds(m)?;
    Ok(x + 1..=y)
}

/// A non-negative sequence indexed by integers; negative indices read as zero.
#[derive(Clone)]
pub enum WeightSequence {
    Constant(f64),
    /// `k -> k`.
    Identity,
    /// Tabulated values for `k = 0, 1, ...`; indices past the end repeat the
    /// last entry.
    Table(Arc<[f64]>),
    Custom {
        label: String,
        f: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    },
}

impl WeightSequence {
    pub fn at(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        match self {
            WeightSequence::Constant(c) => *c,
            WeightSequence::Identity => k as f64,
            WeightSequence::Table(t) => t
                .get(k as usize)
                .or_else(|| t.last())
                .copied()
                .unwrap_or(0.0),
            WeightSequence::Custom { f, .. } => f(k as u64),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, WeightSequence::Constant(_))
    }
}

impl fmt::Debug for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSequence::Constant(c) => write!(f, "const({c})"),
            WeightSequence::Identity => f.write_str("identity"),
            WeightSequence::Table(t) => write!(f, "table[{}]", t.len()),
            WeightSequence::Custom { label, .. } => f.write_str(label),
        }
    }
}

type WindowWeightFn = Arc<dyn Fn(u64, u64) -> f64 + Send + Sync>;
type NormalizerFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// A per-window weight `w(m, n)` replacing `e(y(m) - n) * g(n)`, with an
/// optional replacement for the density normalizer.
#[derive(Clone)]
pub struct WindowOverride {
    pub label: String,
    pub weight: WindowWeightFn,
    pub density_normalizer: Option<NormalizerFn>,
    /// Declares that `weight(m, n)` does not depend on `n`.
    pub uniform: bool,
}

/// Weight sequences `(e, g)` and an optional per-window override.
#[derive(Clone)]
pub struct WeightScheme {
    pub e: WeightSequence,
    pub g: WeightSequence,
    pub window_override: Option<WindowOverride>,
    label: String,
}

impl fmt::Debug for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightScheme")
            .field("label", &self.label)
            .field("e", &self.e)
            .field("g", &self.g)
            .field("override", &self.window_override.as_ref().map(|o| &o.label))
            .finish()
    }
}

impl WeightScheme {
    pub fn new(e: WeightSequence, g: WeightSequence) -> Self {
        let label = format!("e={e:?}, g={g:?}");
        Self {
            e,
            g,
            window_override: None,
            label,
        }
    }

    /// `e ≡ 1`, `g ≡ 1`.
    pub fn ones() -> Self {
        Self::new(WeightSequence::Constant(1.0), WeightSequence::Constant(1.0)).with_label("ones")
    }

    /// `e(n) = n`, `g ≡ 1`.
    pub fn identity() -> Self {
        Self::new(WeightSequence::Identity, WeightSequence::Constant(1.0)).with_label("identity")
    }

    /// Constant weight `2m` on every index of window `m`, with density
    /// normalizer `2m`.
    pub fn example1() -> Self {
        Self::ones()
            .with_override(WindowOverride {
                label: "w(m,n)=2m".into(),
                weight: Arc::new(|m, _| 2.0 * m as f64),
                density_normalizer: Some(Arc::new(|m| 2.0 * m as f64)),
                uniform: true,
            })
            .with_label("example1")
    }

    pub fn tabulated(e: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if e.is_empty() || g.is_empty() {
            return Err(Error::config("tabulated weights must be non-empty"));
        }
        if let Some(v) = e.iter().chain(&g).find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::config(format!("tabulated weight {v} is not a non-negative real")));
        }
        let label = format!("table(e[{}], g[{}])", e.len(), g.len());
        Ok(Self::new(WeightSequence::Table(e.into()), WeightSequence::Table(g.into())).with_label(label))
    }

    pub fn with_override(mut self, o: WindowOverride) -> Self {
        self.window_override = Some(o);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `w(m, n)` for any `n >= 0`, given `y = y(m)`.
    #[inline]
    pub fn weight_with_upper(&self, m: u64, y: u64, n: u64) -> f64 {
        match &self.window_override {
            Some(o) => (o.weight)(m, n),
            None => self.e.at(y as i64 - n as i64) * self.g.at(n as i64),
        }
    }

    pub fn weight(&self, schedule: &DeferredSchedule, m: u64, n: u64) -> Result<f64> {
        Ok(self.weight_with_upper(m, schedule.upper(m)?, n))
    }

    /// Largest `n` at which `w(m, n)` can be nonzero, when known.
    pub fn nonzero_bound(&self, y: u64) -> Option<u64> {
        match self.window_override {
            Some(_) => None,
            None => Some(y),
        }
    }

    /// `Σ_{n ∈ window} w(m, n)`, validating non-negativity.
    pub(crate) fn window_sum(&self, schedule: &DeferredSchedule, m: u64) -> Result<f64> {
        let (x, y) = schedule.bounds(m)?;
        let mut acc = NeumaierSum::new();
        for n in x + 1..=y {
            let w = self.weight_with_upper(m, y, n);
            if !(w >= 0.0) {
                return Err(Error::NegativeWeight { m, n, value: w });
            }
            acc.add(w);
        }
        Ok(acc.value())
    }

    /// Whether `w(m, n)` is the same for every `n` of a window.
    pub fn is_uniform(&self) -> bool {
        match &self.window_override {
            Some(o) => o.uniform,
            None => self.e.is_constant() && self.g.is_constant(),
        }
    }

    /// Whether the two normalizer conventions coincide structurally.
    pub fn is_constant(&self) -> bool {
        self.window_override.is_none() && self.e.is_constant() && self.g.is_constant()
    }
}

/// A deterministic real sequence `n -> value(n)`.
#[derive(Clone)]
pub struct RealSeq {
    label: String,
    f: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RealSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealSeq({})", self.label)
    }
}

impl RealSeq {
    pub fn new(label: impl Into<String>, f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const:{c}"), move |_| c)
    }

    pub fn identity() -> Self {
        Self::new("identity", |n| n as f64)
    }

    /// 1 on perfect squares, 0 elsewhere.
    pub fn square_indicator() -> Self {
        Self::new("square-indicator", |n| {
            if crate::numeric::is_perfect_square(n) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// `(-1)^n`.
    pub fn alternating() -> Self {
        Self::new("alternating", |n| if n % 2 == 0 { 1.0 } else { -1.0 })
    }

    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Self {
        let values: Arc<[f64]> = values.into();
        Self::new(label, move |n| {
            values
                .get(n.saturating_sub(1) as usize)
                .or_else(|| values.last())
                .copied()
                .unwrap_or(0.0)
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, n: u64) -> f64 {
        (self.f)(n)
    }
}

/// The convolution normalizer `R_m`.
///
/// `Regular` sums `w(m, n)` over the window; `PaperLiteral` sums
/// `e(v) * g(y(m) - v)`, i.e. the weights of the reflected indices
/// `y(m) - v`. Zero is reported as [`Error::DegenerateNormalizer`].
pub fn convolution(
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    m: u64,
    mode: NormalizerMode,
) -> Result<f64> {
    let r = match mode {
        NormalizerMode::Regular => weights.window_sum(schedule, m)?,
        NormalizerMode::PaperLiteral => {
            let (x, y) = schedule.bounds(m)?;
            let mut values = Vec::with_capacity((y - x) as usize);
            for v in x + 1..=y {
                let w = weights.weight_with_upper(m, y, y - v);
                if !(w >= 0.0) {
                    return Err(Error::NegativeWeight { m, n: y - v, value: w });
                }
                values.push(w);
            }
            ordered_sum(values.into_iter())
        }
    };
    if r > 0.0 {
        Ok(r)
    } else {
        Err(Error::DegenerateNormalizer { m })
    }
}

/// The normalizer used by densities: the override's normalizer when the
/// weight scheme carries one, otherwise [`convolution`].
pub fn density_normalizer(
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    m: u64,
    mode: NormalizerMode,
) -> Result<f64> {
    if let Some(norm) = weights.window_override.as_ref().and_then(|o| o.density_normalizer.as_ref()) {
        schedule.bounds(m)?;
        let r = norm(m);
        return if r > 0.0 {
            Ok(r)
        } else {
            Err(Error::DegenerateNormalizer { m })
        };
    }
    convolution(schedule, weights, m, mode)
}

/// `t_m = (1 / R_m) Σ_{n ∈ window} w(m, n) * seq(n)`.
pub fn dn_mean(
    seq: &RealSeq,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    m: u64,
    mode: NormalizerMode,
) -> Result<f64> {
    let r = convolution(schedule, weights, m, mode)?;
    let (x, y) = schedule.bounds(m)?;
    let numerator = ordered_sum((x + 1..=y).map(|n| weights.weight_with_upper(m, y, n) * seq.value(n)));
    Ok(numerator / r)
}

/// Deferred Nörlund statistical limit of a real sequence: the density of
/// `{n <= R_m : w(m, n) * |seq(n) - candidate| >= eps}` over `m` up to the
/// configured horizon.
pub fn dn_stat_limit(
    seq: &RealSeq,
    candidate: f64,
    eps: f64,
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &DensityConfig,
) -> Result<ConvergenceVerdict> {
    if !(eps > 0.0) {
        return Err(Error::config(format!("eps must be positive, got {eps}")));
    }
    let seq = seq.clone();
    let pred = WeightedThreshold::new(eps, move |n| Ok((seq.value(n) - candidate).abs()));
    density::density_limit(&pred, schedule, weights, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_of_example1_schedule() {
        let s = DeferredSchedule::example1();
        assert_eq!(window(&s, 1).unwrap(), 2..=3);
        assert_eq!(window(&s, 2).unwrap(), 4..=7);
        assert_eq!(window(&DeferredSchedule::plain(), 1).unwrap(), 1..=1);
    }

    #[test]
    fn schedule_violation_names_m() {
        let s = DeferredSchedule::affine(1, 0, 1, 0);
        match window(&s, 3) {
            Err(Error::ScheduleViolation { m, x, y }) => assert_eq!((m, x, y), (3, 3, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(window(&DeferredSchedule::plain(), 0), Err(Error::ZeroIndex(0)));
    }

    #[test]
    fn unbounded_check() {
        assert!(DeferredSchedule::plain().check_horizon(20, 10).is_ok());
        let bounded = DeferredSchedule::affine(0, 0, 0, 5);
        assert!(bounded.check_horizon(20, 10).is_err());
    }

    #[test]
    fn convolution_examples() {
        let plain = DeferredSchedule::plain();
        for mode in [NormalizerMode::Regular, NormalizerMode::PaperLiteral] {
            assert_eq!(convolution(&plain, &WeightScheme::ones(), 5, mode).unwrap(), 5.0);
        }
        let s = DeferredSchedule::affine(0, 0, 0, 3);
        let w = WeightScheme::identity();
        // e(v) g(3 - v), v = 1..3 -> 1 + 2 + 3
        assert_eq!(convolution(&s, &w, 3, NormalizerMode::PaperLiteral).unwrap(), 6.0);
        // e(3 - n) g(n), n = 1..3 -> 2 + 1 + 0
        assert_eq!(convolution(&s, &w, 3, NormalizerMode::Regular).unwrap(), 3.0);
    }

    #[test]
    fn example1_normalizers() {
        let s = DeferredSchedule::example1();
        let w = WeightScheme::example1();
        for m in 1..50u64 {
            let r = convolution(&s, &w, m, NormalizerMode::Regular).unwrap();
            assert_eq!(r, (4 * m * m) as f64);
            let d = density_normalizer(&s, &w, m, NormalizerMode::Regular).unwrap();
            assert_eq!(d, (2 * m) as f64);
        }
    }

    #[test]
    fn degenerate_normalizer_is_refused() {
        let w = WeightScheme::new(WeightSequence::Constant(0.0), WeightSequence::Constant(1.0));
        let s = DeferredSchedule::plain();
        assert_eq!(
            convolution(&s, &w, 4, NormalizerMode::Regular),
            Err(Error::DegenerateNormalizer { m: 4 })
        );
        assert_eq!(
            dn_mean(&RealSeq::constant(1.0), &s, &w, 4, NormalizerMode::Regular),
            Err(Error::DegenerateNormalizer { m: 4 })
        );
        // identity e with y(m) = 1: only e(0) = 0 contributes.
        let r = convolution(&s, &WeightScheme::identity(), 1, NormalizerMode::Regular);
        assert_eq!(r, Err(Error::DegenerateNormalizer { m: 1 }));
    }

    #[test]
    fn negative_weights_rejected() {
        let w = WeightScheme::new(WeightSequence::Constant(-1.0), WeightSequence::Constant(1.0));
        let err = convolution(&DeferredSchedule::plain(), &w, 2, NormalizerMode::Regular).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { m: 2, .. }));
    }

    #[test]
    fn mean_examples() {
        let plain = DeferredSchedule::plain();
        let t = dn_mean(&RealSeq::identity(), &plain, &WeightScheme::ones(), 4, NormalizerMode::Regular).unwrap();
        assert_eq!(t, 2.5);

        let s = DeferredSchedule::affine(0, 0, 0, 3);
        let w = WeightScheme::identity();
        // Independent direct summation of e(3 - n) g(n) n over n = 1..3,
        // divided by the reflected convolution 1 + 2 + 3.
        let numerator: f64 = (1..=3).map(|n| (3 - n) as f64 * n as f64).sum();
        let t = dn_mean(&RealSeq::identity(), &s, &w, 3, NormalizerMode::PaperLiteral).unwrap();
        assert_eq!(t, numerator / 6.0);
        assert_eq!(t, 4.0 / 6.0);

        for m in 1..30 {
            let t = dn_mean(
                &RealSeq::constant(7.0),
                &DeferredSchedule::example1(),
                &WeightScheme::example1(),
                m,
                NormalizerMode::Regular,
            )
            .unwrap();
            assert!((t - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_weights_repeat_last_entry() {
        let w = WeightScheme::tabulated(vec![1.0, 2.0], vec![3.0]).unwrap();
        assert_eq!(w.e.at(0), 1.0);
        assert_eq!(w.e.at(5), 2.0);
        assert_eq!(w.e.at(-1), 0.0);
        assert_eq!(w.g.at(9), 3.0);
        assert!(WeightScheme::tabulated(vec![-1.0], vec![1.0]).is_err());
        assert!(WeightScheme::tabulated(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn stat_limit_examples() {
        let plain = DeferredSchedule::plain();
        let ones = WeightScheme::ones();
        let cfg = DensityConfig::default();

        let v = dn_stat_limit(&RealSeq::constant(3.0), 3.0, 0.1, &plain, &ones, &cfg).unwrap();
        assert_eq!(v.verdict, density::Verdict::Converges);
        assert!(v.trace.iter().all(|p| p.density == 0.0));

        let v = dn_stat_limit(&RealSeq::square_indicator(), 0.0, 0.5, &plain, &ones, &cfg).unwrap();
        assert_eq!(v.verdict, density::Verdict::Converges);
        for p in &v.trace {
            assert!(p.density <= (p.m as f64).sqrt() / p.m as f64 + 1e-15);
        }

        let v = dn_stat_limit(&RealSeq::alternating(), 0.0, 0.5, &plain, &ones, &cfg).unwrap();
        assert_eq!(v.verdict, density::Verdict::Diverges);
        assert!(v.trace.iter().all(|p| p.density == 1.0));

        assert!(dn_stat_limit(&RealSeq::constant(0.0), 0.0, 0.0, &plain, &ones, &cfg).is_err());
        let short = DensityConfig { horizon: 9, ..cfg };
        assert_eq!(
            dn_stat_limit(&RealSeq::constant(0.0), 0.0, 0.1, &plain, &ones, &short).unwrap_err(),
            Error::Underpowered(9)
        );
    }
}
