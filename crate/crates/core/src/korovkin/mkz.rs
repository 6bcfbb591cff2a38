//! Series evaluation of the Meyer-König–Zeller operator
//!
//! ```text
//! M_m(f, y) = (1 - y)^(m+1) * sum_{t >= 0} f(t / (t + m)) * C(m + t, t) * y^t
//! ```
//!
//! With these nodes `M_m` reproduces `1` and `y` exactly. The variant with
//! nodes `t / (t + m + 1)` is available through [`MkzNodes::Wide`]; it fixes
//! constants only.
//!
//! The weights are the negative-binomial probabilities. Summation starts at
//! the first weight that matters (located with log-gamma) and proceeds with
//! the running ratio `y (m + t + 1) / (t + 1)`, with terms rescaled so that
//! nothing under- or overflows. Once the ratio drops below 1 it keeps
//! decreasing, so the mass after term `t` is at most `term * rho / (1 - rho)`;
//! summation stops when that bound is small enough. The kept weights are
//! renormalised to unit mass, which makes `M_m(1, y) = 1` hold to rounding and
//! keeps the total error below `tail_tol`.

use super::SampledFunction;
use crate::error::{Error, Result};

/// Node placement `u_t` at which `f` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MkzNodes {
    /// `t / (t + m)`.
    #[default]
    Standard,
    /// `t / (t + m + 1)`.
    Wide,
}

/// Maximum number of series terms before giving up.
pub const ITERATION_CAP: u64 = 1_000_000;

const RESCALE: f64 = 1e280;


/// `M_m(f, y)` for one function. At `y = 1` the operator's limit `f(1)` is
/// returned.
pub fn mkz_apply(f: &SampledFunction, m: u64, y: f64, tail_tol: f64) -> Result<f64> {
    Ok(mkz_apply_many(&[f], m, y, tail_tol)?[0])
}

/// `M_m(f, y)` for several functions sharing one pass over the weights.
pub fn mkz_apply_many(fs: &[&SampledFunction], m: u64, y: f64, tail_tol: f64) -> Result<Vec<f64>> {
    mkz_apply_nodes(fs, m, y, tail_tol, MkzNodes::Standard)
}

pub fn mkz_apply_nodes(
    fs: &[&SampledFunction],
    m: u64,
    y: f64,
    tail_tol: f64,
    nodes: MkzNodes,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::OutsideUnitInterval(y));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::config(format!("tail_tol must be positive, got {tail_tol}")));
    }
    if y == 1.0 {
        return Ok(fs.iter().map(|f| f.eval(1.0)).collect());
    }
    let sup = fs.iter().map(|f| f.sup_abs()).fold(0.0, f64::max);
    if sup == 0.0 {
        return Ok(vec![0.0; fs.len()]);
    }
    // The kept weights are renormalised to total mass 1, which costs twice
    // the dropped mass; the dropped mass is split between head and tail.
    let budget = tail_tol / (4.0 * sup);
    let shift = (m + 1) as f64;
    let offset = match nodes {
        MkzNodes::Standard => m as f64,
        MkzNodes::Wide => shift,
    };
    let t0 = first_relevant_term(m, y, budget);
    if t0 >= ITERATION_CAP {
        return Err(Error::SeriesNotConverged {
            m,
            y,
            cap: ITERATION_CAP,
        });
    }
    // scaled so that the first kept term is 1
    let mut stop_below = budget * (-ln_weight(m, y, t0)).exp();
    let mut term = 1.0f64;
    let mut mass = 0.0f64;
    let mut sums = vec![0.0f64; fs.len()];
    let mut t = t0;
    loop {
        let tf = t as f64;
        let u = if t == 0 { 0.0 } else { tf / (tf + offset) };
        for (s, f) in sums.iter_mut().zip(fs) {
            *s += f.eval(u) * term;
        }
        mass += term;
        let rho = y * (tf + shift) / (tf + 1.0);
        if rho < 1.0 && term * rho / (1.0 - rho) < stop_below {
            break;
        }
        term *= rho;
        t += 1;
        if term > RESCALE {
            term /= RESCALE;
            mass /= RESCALE;
            sums.iter_mut().for_each(|s| *s /= RESCALE);
            stop_below /= RESCALE;
        }
        if t >= ITERATION_CAP {
            return Err(Error::SeriesNotConverged {
                m,
                y,
                cap: ITERATION_CAP,
            });
        }
    }
    Ok(sums.into_iter().map(|s| s / mass).collect())
}

/// `ln[(1 - y)^(m+1) C(m + t, t) y^t]`, for `0 <= y < 1`.
fn ln_weight(m: u64, y: f64, t: u64) -> f64 {
    let (mf, tf) = (m as f64, t as f64);
    libm::lgamma(mf + tf + 1.0) - libm::lgamma(tf + 1.0) - libm::lgamma(mf + 1.0)
        + if t == 0 { 0.0 } else { tf * y.ln() }
        + (mf + 1.0) * (-y).ln_1p()
}

/// First index whose weight reaches `budget / ITERATION_CAP`. The weights
/// increase up to the mode, so the skipped head has mass at most `budget`.
fn first_relevant_term(m: u64, y: f64, budget: f64) -> u64 {
    if y == 0.0 {
        return 0;
    }
    // weights increase while y (t + m + 1) >= t + 1
    let mode = ((y * (m + 1) as f64 - 1.0) / (1.0 - y)).ceil().max(0.0) as u64;
    let floor = budget.ln() - (ITERATION_CAP as f64).ln();
    let (mut lo, mut hi) = (0u64, mode);
    if ln_weight(m, y, 0) >= floor {
        return 0;
    }
    // invariant: weight(lo) < floor <= weight(hi), or hi is the mode
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ln_weight(m, y, mid) >= floor {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The closed form `y^2 (m + 2) / (m + 1) + y / (m + 1)` sometimes quoted
/// for `M_m(u^2, y)`, set against the series value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SecondMomentAudit {
    pub m: u64,
    pub y: f64,
    pub series: f64,
    pub closed_form: f64,
    pub discrepancy: f64,
}

impl SecondMomentAudit {
    pub const TOLERANCE: f64 = 1e-3;

    pub fn agrees(&self) -> bool {
        self.discrepancy <= Self::TOLERANCE
    }
}

pub fn second_moment_audit(m: u64, y: f64, tail_tol: f64) -> Result<SecondMomentAudit> {
    let series = mkz_apply(&SampledFunction::square(), m, y, tail_tol)?;
    let mf = m as f64;
    let closed_form = y * y * (mf + 2.0) / (mf + 1.0) + y / (mf + 1.0);
    Ok(SecondMomentAudit {
        m,
        y,
        series,
        closed_form,
        discrepancy: (series - closed_form).abs(),
    })
}
