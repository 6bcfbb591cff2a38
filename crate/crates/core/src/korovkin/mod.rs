//! Positive linear operators on `C[0, 1]` and the Korovkin three-function
//! condition checker.
//!
//! For an operator sequence `L_n` the checker forms the deterministic sup-norm
//! sequences `s_n = ||L_n(f) - f||` for the test functions `1`, `z`, `z^2`
//! and for each supplied `f`, and runs the deferred Nörlund statistical limit
//! of each against 0.

mod mkz;

pub use mkz::{mkz_apply, mkz_apply_many, mkz_apply_nodes, second_moment_audit, MkzNodes, SecondMomentAudit, ITERATION_CAP};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{density_limit, scan_bound, ConvergenceVerdict, DensityConfig, PreparedThreshold, SequencePoint, Verdict};
use crate::dnmeans::{DeferredSchedule, NormalizerMode, WeightScheme};
use crate::error::{Error, Result};
use crate::numeric::is_perfect_square;
use crate::rvmodel::{CdfAt, RvModel};

/// Grid used to bound `sup |f|` when a function is constructed.
const SUP_GRID: usize = 1025;

pub const DEFAULT_GRID_SIZE: usize = 257;

/// A bounded function on `[0, 1]`.
#[derive(Clone)]
pub struct SampledFunction {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    sup: f64,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("label", &self.label)
            .field("sup", &self.sup)
            .finish()
    }
}

impl SampledFunction {
    /// Fails if `f` is not finite somewhere on the check grid.
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let label = label.into();
        let mut sup = 0.0f64;
        for y in uniform_grid(SUP_GRID) {
            let v = f(y);
            if !v.is_finite() {
                return Err(Error::config(format!("function {label} is not finite at {y}")));
            }
            sup = sup.max(v.abs());
        }
        Ok(Self {
            label,
            f: Arc::new(f),
            sup,
        })
    }

    fn preset(label: &str, f: fn(f64) -> f64) -> Self {
        Self::new(label, f).expect("preset functions are bounded")
    }

    pub fn one() -> Self {
        Self::preset("1", |_| 1.0)
    }

    pub fn identity() -> Self {
        Self::preset("y", |y| y)
    }

    pub fn square() -> Self {
        Self::preset("y^2", |y| y * y)
    }

    pub fn cube() -> Self {
        Self::preset("y^3", |y| y * y * y)
    }

    pub fn exp() -> Self {
        Self::preset("e^y", f64::exp)
    }

    pub fn abs_half() -> Self {
        Self::preset("|y-1/2|", |y| (y - 0.5).abs())
    }

    /// The three Korovkin test functions `1, z, z^2`.
    pub fn test_functions() -> [Self; 3] {
        [Self::one(), Self::identity(), Self::square()]
    }

    /// Looks up a preset by label or alias.
    pub fn named(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "1" | "one" => Self::one(),
            "y" | "z" | "identity" | "id" => Self::identity(),
            "y^2" | "z^2" | "square" => Self::square(),
            "y^3" | "z^3" | "cube" => Self::cube(),
            "e^y" | "exp" => Self::exp(),
            "|y-1/2|" | "abs" | "abs_half" => Self::abs_half(),
            other => {
                return Err(Error::config(format!(
                    "unknown function {other:?}; expected one of 1, y, y^2, y^3, e^y, |y-1/2|"
                )))
            }
        })
    }

    /// `a * f + b * g`.
    pub fn linear(a: f64, f: &Self, b: f64, g: &Self) -> Result<Self> {
        let (ff, gf) = (f.f.clone(), g.f.clone());
        Self::new(format!("{a}*({})+{b}*({})", f.label, g.label), move |y| a * ff(y) + b * gf(y))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    /// `max |f|` on the check grid.
    pub fn sup_abs(&self) -> f64 {
        self.sup
    }
}

/// `size` equispaced points from 0 to 1 inclusive.
pub fn uniform_grid(size: usize) -> Vec<f64> {
    match size {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..size).map(|i| i as f64 / (size - 1) as f64).collect(),
    }
}

/// `max_{y in grid} |a(y) - b(y)|`.
pub fn sup_distance(a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::config("sup_distance needs a nonempty grid"));
    }
    Ok(grid.iter().map(|&y| (a(y) - b(y)).abs()).fold(0.0, f64::max))
}

/// A sequence of linear operators `L_n` acting on functions on `[0, 1]`.
pub trait OperatorSequence: Sync {
    fn label(&self) -> String;

    /// Whether `f >= 0` implies `L_n f >= 0`.
    fn is_positive(&self) -> bool {
        true
    }

    fn apply(&self, n: u64, f: &SampledFunction, y: f64) -> Result<f64> {
        Ok(self.apply_many(n, &[f], y)?[0])
    }

    fn apply_many(&self, n: u64, fs: &[&SampledFunction], y: f64) -> Result<Vec<f64>>;

    /// Caveats to attach to any report on this operator.
    fn notes(&self) -> Vec<String> {
        Vec::new()
    }
}

/// The Meyer-König–Zeller operators `M_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mkz {
    pub tail_tol: f64,
}

impl OperatorSequence for Mkz {
    fn label(&self) -> String {
        "mkz".into()
    }

    fn apply_many(&self, n: u64, fs: &[&SampledFunction], y: f64) -> Result<Vec<f64>> {
        mkz_apply_many(fs, n, y, self.tail_tol)
    }
}

/// Multiplicative perturbation `(1 + c_n(y))` applied to `M_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    #[default]
    None,
    /// `c_n(y) = F_{Y_n}(y)` for the fair-coin model `Y_n = Y ~ Bernoulli(1/2)`.
    PaperCdf,
    /// `c_n = 1` when `n` is a perfect square, else 0. Squares have density
    /// zero under any scheme whose normalizer grows without bound.
    NullSet,
}

impl Perturbation {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "papercdf" | "paper-cdf" => Ok(Self::PaperCdf),
            "nullset" | "null-set" => Ok(Self::NullSet),
            other => Err(Error::config(format!(
                "unknown perturbation {other:?}; expected none, papercdf or nullset"
            ))),
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::PaperCdf => "papercdf",
            Self::NullSet => "nullset",
        })
    }
}

/// `(1 + c_n(y)) M_n(f, y)`.
#[derive(Debug, Clone)]
pub struct LiftedMkz {
    pub base: Mkz,
    pub perturbation: Perturbation,
    coin: RvModel,
}

impl LiftedMkz {
    pub fn new(perturbation: Perturbation, tail_tol: f64) -> Self {
        Self {
            base: Mkz { tail_tol },
            perturbation,
            coin: RvModel::example2(),
        }
    }

    pub fn factor(&self, n: u64, y: f64) -> Result<f64> {
        Ok(match self.perturbation {
            Perturbation::None => 1.0,
            Perturbation::PaperCdf => 1.0 + self.coin.cdf(CdfAt::Index(n), y)?,
            Perturbation::NullSet => {
                if is_perfect_square(n) {
                    2.0
                } else {
                    1.0
                }
            }
        })
    }
}

impl OperatorSequence for LiftedMkz {
    fn label(&self) -> String {
        match self.perturbation {
            Perturbation::None => self.base.label(),
            p => format!("mkz+{p}"),
        }
    }

    fn notes(&self) -> Vec<String> {
        match self.perturbation {
            Perturbation::PaperCdf => vec![
                "the factor 1 + F_{Y_n}(y) equals 1 + F_Y(y) for every n and is at least 1.5 on [0, 1], \
                 so ||L_n(1) - 1|| does not tend to 0 and the condition for 1 cannot converge in any mode; \
                 the verdicts below are measured, not assumed"
                    .into(),
            ],
            _ => Vec::new(),
        }
    }

    fn apply_many(&self, n: u64, fs: &[&SampledFunction], y: f64) -> Result<Vec<f64>> {
        let c = self.factor(n, y)?;
        let mut out = self.base.apply_many(n, fs, y)?;
        out.iter_mut().for_each(|v| *v *= c);
        Ok(out)
    }
}

/// `(1 + c_n(y)) M_n(f, y)` for a single evaluation.
pub fn lifted_apply(f: &SampledFunction, n: u64, y: f64, perturbation: Perturbation, tail_tol: f64) -> Result<f64> {
    LiftedMkz::new(perturbation, tail_tol).apply(n, f, y)
}

/// Label attached to a report; the three convergence modes coincide on the
/// deterministic sup-norm sequences the checker works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    #[default]
    Dnp,
    Dnm,
    Dndc,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dnp" => Ok(Self::Dnp),
            "dnm" => Ok(Self::Dnm),
            "dndc" => Ok(Self::Dndc),
            other => Err(Error::config(format!("unknown mode {other:?}; expected dnp, dnm or dndc"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KorovkinConfig {
    /// Threshold for `weight * s_n`.
    pub eps: f64,
    pub grid_size: usize,
    pub tail_tol: f64,
    pub density: DensityConfig,
}

impl Default for KorovkinConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            grid_size: DEFAULT_GRID_SIZE,
            tail_tol: 1e-10,
            density: DensityConfig {
                horizon: 200,
                tolerance: 0.05,
                ..DensityConfig::default()
            },
        }
    }
}

impl KorovkinConfig {
    /// Unit weights on the windows `1..=5m`: long enough windows that the
    /// perfect squares already look sparse at `m = 200`.
    pub fn default_scheme() -> (DeferredSchedule, WeightScheme) {
        (DeferredSchedule::affine(0, 0, 5, 0), WeightScheme::ones())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !(self.tail_tol > 0.0) {
            return Err(Error::config(format!(
                "eps and tail_tol must be positive, got eps={} tail_tol={}",
                self.eps, self.tail_tol
            )));
        }
        if self.grid_size < 2 {
            return Err(Error::config(format!("grid_size must be >= 2, got {}", self.grid_size)));
        }
        self.density.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionVerdict {
    pub function: String,
    pub result: ConvergenceVerdict,
}

/// `s_n` for each reported function, in the order of `KorovkinReport::functions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNormRow {
    pub n: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KorovkinReport {
    pub operator: String,
    pub mode: Mode,
    pub grid_size: usize,
    pub horizon: u64,
    pub normalizer_mode: NormalizerMode,
    pub config: KorovkinConfig,
    /// Test functions first, then the supplied functions.
    pub functions: Vec<String>,
    pub conditions: Vec<FunctionVerdict>,
    pub conclusions: Vec<FunctionVerdict>,
    pub sup_norms: Vec<SupNormRow>,
    pub notes: Vec<String>,
}

impl KorovkinReport {
    pub fn conditions_converge(&self) -> bool {
        self.conditions.iter().all(|c| c.result.converges())
    }

    pub fn conclusions_converge(&self) -> bool {
        self.conclusions.iter().all(|c| c.result.converges())
    }

    /// One row per `n` with header `n,<function labels...>`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,{}", self.functions.join(","))?;
        for row in &self.sup_norms {
            let values: Vec<String> = row.values.iter().map(f64::to_string).collect();
            writeln!(out, "{},{}", row.n, values.join(","))?;
        }
        Ok(())
    }
}

/// `s_n = max over grid |L_n(f)(y) - f(y)|` for `n = 1..=max_n`, one vector
/// per function.
pub fn sup_norm_sequences(
    ops: &dyn OperatorSequence,
    fs: &[&SampledFunction],
    grid: &[f64],
    max_n: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(max_n as usize); fs.len()];
    for n in 1..=max_n {
        let mut sup = vec![0.0f64; fs.len()];
        for &y in grid {
            let values = ops.apply_many(n, fs, y).map_err(|e| Error::OperatorFailure {
                n,
                y,
                reason: e.to_string(),
            })?;
            for ((s, v), f) in sup.iter_mut().zip(values).zip(fs) {
                *s = s.max((v - f.eval(y)).abs());
            }
        }
        for (seq, s) in out.iter_mut().zip(sup) {
            seq.push(s);
        }
    }
    Ok(out)
}

/// Runs the deferred Nörlund statistical limit of `s_n` against 0 for the
/// test functions (the conditions) and for each of `f_list` (the
/// conclusions).
pub fn korovkin_check(
    ops: &dyn OperatorSequence,
    mode: Mode,
    f_list: &[SampledFunction],
    schedule: &DeferredSchedule,
    weights: &WeightScheme,
    cfg: &KorovkinConfig,
) -> Result<KorovkinReport> {
    cfg.validate()?;
    if f_list.is_empty() {
        return Err(Error::config("korovkin_check needs at least one function"));
    }
    let tests = SampledFunction::test_functions();
    let all: Vec<&SampledFunction> = tests.iter().chain(f_list).collect();
    let grid = uniform_grid(cfg.grid_size);
    let max_n = scan_bound(schedule, weights, &cfg.density)?;
    let sequences = sup_norm_sequences(ops, &all, &grid, max_n)?;

    let mut verdicts = Vec::with_capacity(all.len());
    for (f, values) in all.iter().zip(&sequences) {
        let mut result = density_limit(&PreparedThreshold::new(cfg.eps, values.clone()), schedule, weights, &cfg.density)?;
        result.raw_sequence = Some(
            values
                .iter()
                .enumerate()
                .map(|(i, &value)| SequencePoint { n: i as u64 + 1, value })
                .collect(),
        );
        verdicts.push(FunctionVerdict {
            function: f.label().to_string(),
            result,
        });
    }
    let conclusions = verdicts.split_off(tests.len());
    let sup_norms = (0..max_n as usize)
        .map(|i| SupNormRow {
            n: i as u64 + 1,
            values: sequences.iter().map(|s| s[i]).collect(),
        })
        .collect();

    let mut notes = ops.notes();
    let conditions_hold = verdicts.iter().all(|v| v.result.converges());
    if conditions_hold && conclusions.iter().any(|v| v.result.verdict != Verdict::Converges) {
        notes.push("all test-function conditions converge but a conclusion does not".into());
    }
    if !conditions_hold {
        let failing: Vec<&str> = verdicts
            .iter()
            .filter(|v| !v.result.converges())
            .map(|v| v.function.as_str())
            .collect();
        notes.push(format!(
            "conditions fail for {}; the measured verdicts are reported as is",
            failing.join(", ")
        ));
    }

    Ok(KorovkinReport {
        operator: ops.label(),
        mode,
        grid_size: cfg.grid_size,
        horizon: cfg.density.horizon,
        normalizer_mode: cfg.density.mode,
        config: *cfg,
        functions: all.iter().map(|f| f.label().to_string()).collect(),
        conditions: verdicts,
        conclusions,
        sup_norms,
        notes,
    })
}
