//! Random-variable sequences with exactly computable laws.
//!
//! A model gives, for each index `m`, the finite joint support of
//! `(Y_m, Y)`. Working with the joint law rather than the two marginals is
//! what lets distributional convergence (a statement about marginals) be told
//! apart from convergence in probability (a statement about the joint law).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// One atom of the joint law of `(Y_m, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointAtom {
    pub index_value: f64,
    pub limit_value: f64,
    pub prob: f64,
}

impl JointAtom {
    pub fn new(index_value: f64, limit_value: f64, prob: f64) -> Self {
        Self {
            index_value,
            limit_value,
            prob,
        }
    }

    #[inline]
    pub fn gap(&self) -> f64 {
        (self.index_value - self.limit_value).abs()
    }
}

/// Which distribution function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfAt {
    /// `F_{Y_m}`.
    Index(u64),
    /// `F_Y`, from the declared limit law.
    Limit,
}

type SupportFn = Arc<dyn Fn(u64) -> Vec<JointAtom> + Send + Sync>;

#[derive(Clone)]
pub struct RvModel {
    name: String,
    description: String,
    support: SupportFn,
    limit: Option<Arc<[(f64, f64)]>>,
}

impl fmt::Debug for RvModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RvModel")
            .field("name", &self.name)
            .field("limit", &self.limit)
            .finish()
    }
}

/// Merges equal values and drops zero-probability atoms, sorted by value.
fn merge_law(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.retain(|&(_, p)| p > 0.0);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    out
}

impl RvModel {
    /// `limit` is the law of `Y` as `(value, prob)` pairs; it must agree with
    /// the `Y`-marginal of every joint support.
    pub fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        support: impl Fn(u64) -> Vec<JointAtom> + Send + Sync + 'static,
        limit: Option<Vec<(f64, f64)>>,
    ) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            support: Arc::new(support),
            limit: limit.map(|l| merge_law(l).into()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn limit_law(&self) -> Option<&[(f64, f64)]> {
        self.limit.as_deref()
    }

    /// Sorted distinct atoms of the limit law.
    pub fn limit_atoms(&self) -> Option<Vec<f64>> {
        self.limit.as_ref().map(|l| l.iter().map(|&(v, _)| v).collect())
    }

    /// The limit is a point mass; returns its value.
    pub fn constant_limit(&self) -> Option<f64> {
        match self.limit.as_deref() {
            Some([(v, _)]) => Some(*v),
            _ => None,
        }
    }

    /// Validated joint support at index `m`.
    pub fn support(&self, m: u64) -> Result<Vec<JointAtom>> {
        if m == 0 {
            return Err(Error::ZeroIndex(0));
        }
        let atoms = (self.support)(m);
        let invalid = |reason: String| Error::InvalidModel { m, reason };
        if atoms.is_empty() {
            return Err(invalid("empty support".into()));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.prob >= 0.0 && a.prob.is_finite())) {
            return Err(invalid(format!("probability {} is not a non-negative real", a.prob)));
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(invalid(format!("probabilities sum to {total}")));
        }
        if let Some(limit) = &self.limit {
            let marginal = merge_law(atoms.iter().map(|a| (a.limit_value, a.prob)).collect());
            let consistent = marginal.len() == limit.len()
                && marginal
                    .iter()
                    .zip(limit.iter())
                    .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= PROB_SUM_TOL);
            if !consistent {
                return Err(invalid("Y-marginal disagrees with the declared limit law".into()));
            }
        }
        Ok(atoms)
    }

    /// `P(|Y_m - Y| >= eps)`; undefined gaps (NaN) count as exceeding.
    pub fn exceedance_prob(&self, m: u64, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::config(format!("eps must be positive, got {eps}")));
        }
        Ok(self
            .support(m)?
            .iter()
            .filter(|a| !(a.gap() < eps))
            .map(|a| a.prob)
            .sum())
    }

    /// `E|Y_m - Y|^r`.
    pub fn abs_moment(&self, m: u64, r: f64) -> Result<f64> {
        if !(r >= 1.0) {
            return Err(Error::config(format!("moment order must be >= 1, got {r}")));
        }
        Ok(self
            .support(m)?
            .iter()
            .filter(|a| a.prob > 0.0)
            .map(|a| a.prob * a.gap().powf(r))
            .sum())
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, at: CdfAt, t: f64) -> Result<f64> {
        let total: f64 = match at {
            CdfAt::Index(m) => self
                .support(m)?
                .iter()
                .filter(|a| a.index_value <= t)
                .map(|a| a.prob)
                .sum(),
            CdfAt::Limit => self
                .limit
                .as_ref()
                .ok_or_else(|| Error::config(format!("model {} declares no limit law", self.name)))?
                .iter()
                .filter(|(v, _)| *v <= t)
                .map(|(_, p)| p)
                .sum(),
        };
        // an empty f64 sum is -0.0
        Ok(total.clamp(0.0, 1.0) + 0.0)
    }

    /// `Y_m = m^height_exp` with probability `m^-prob_exp`, else 0; `Y ≡ 0`.
    pub fn spike(height_exp: f64, prob_exp: f64) -> Self {
        Self::new(
            format!("spike:{height_exp},{prob_exp}"),
            format!("Y_m = m^{height_exp} w.p. m^-{prob_exp}, else 0; Y = 0"),
            move |m| {
                let mf = m as f64;
                let p = if prob_exp == 0.5 { 1.0 / mf.sqrt() } else { mf.powf(-prob_exp) };
                let height = if height_exp == 1.0 { mf } else { mf.powf(height_exp) };
                vec![JointAtom::new(height, 0.0, p), JointAtom::new(0.0, 0.0, 1.0 - p)]
            },
            Some(vec![(0.0, 1.0)]),
        )
    }

    /// `Y_m = m` with probability `1/√m`, else 0; `Y ≡ 0`.
    pub fn example1() -> Self {
        let mut m = Self::spike(1.0, 0.5);
        m.name = "example1".into();
        m
    }

    /// `(Y_m, Y)` uniform on the discordant pairs `(1, 0)` and `(0, 1)`.
    pub fn example2() -> Self {
        Self::new(
            "example2",
            "(Y_m, Y) = (1, 0) or (0, 1) with probability 1/2 each",
            |_| vec![JointAtom::new(1.0, 0.0, 0.5), JointAtom::new(0.0, 1.0, 0.5)],
            Some(vec![(0.0, 0.5), (1.0, 0.5)]),
        )
    }

    pub fn degenerate(c: f64) -> Self {
        Self::new(
            format!("degenerate:{c}"),
            format!("Y_m = Y = {c}"),
            move |_| vec![JointAtom::new(c, c, 1.0)],
            Some(vec![(c, 1.0)]),
        )
    }

    /// Point mass at `f(m)` converging to the constant `limit`.
    pub fn deterministic(
        label: impl Into<String>,
        f: impl Fn(u64) -> f64 + Send + Sync + 'static,
        limit: f64,
    ) -> Self {
        let label = label.into();
        Self::new(
            format!("deterministic:{label}"),
            format!("Y_m = {label}; Y = {limit}"),
            move |m| vec![JointAtom::new(f(m), limit, 1.0)],
            Some(vec![(limit, 1.0)]),
        )
    }

    /// `a + b * m^-p`, converging to `a` for `p > 0`.
    pub fn power_decay(a: f64, b: f64, p: f64) -> Self {
        let mut m = Self::deterministic(format!("{a}+{b}*m^-{p}"), move |m| a + b * (m as f64).powf(-p), a);
        m.name = format!("deterministic:{a},{b},{p}");
        m
    }

    /// `Y` uniform on `{0, 1}` and `Y_m = Y ± scale * m^-rate` with equal
    /// probability, independent of `Y`.
    pub fn shrinking_noise(scale: f64, rate: f64) -> Self {
        Self::new(
            format!("shrinking:{scale},{rate}"),
            format!("Y ~ Bernoulli(1/2), Y_m = Y ± {scale}·m^-{rate}"),
            move |m| {
                let h = scale * (m as f64).powf(-rate);
                [0.0, 1.0]
                    .iter()
                    .flat_map(|&y| [JointAtom::new(y + h, y, 0.25), JointAtom::new(y - h, y, 0.25)])
                    .collect()
            },
            Some(vec![(0.0, 0.5), (1.0, 0.5)]),
        )
    }

    /// Explicit joint supports for `m = 1, 2, ...`; indices past the table
    /// reuse the last entry.
    pub fn tabulated(per_index: Vec<Vec<JointAtom>>, limit: Option<Vec<(f64, f64)>>) -> Result<Self> {
        if per_index.is_empty() {
            return Err(Error::config("tabulated model needs at least one index"));
        }
        let table: Arc<[Vec<JointAtom>]> = per_index.into();
        let len = table.len();
        let model = Self::new(
            "tabulated",
            format!("tabulated joint law for m = 1..={len}"),
            move |m| table[(m as usize - 1).min(len - 1)].clone(),
            limit,
        );
        for m in 1..=len as u64 {
            model.support(m)?;
        }
        Ok(model)
    }

    /// Pushforward `(f(Y_m), f(Y))`.
    pub fn map(&self, label: &str, f: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> Self {
        let inner = self.support.clone();
        let g = f.clone();
        Self::new(
            format!("{label}({})", self.name),
            format!("{label} applied to [{}]", self.description),
            move |m| {
                inner(m)
                    .into_iter()
                    .map(|a| JointAtom::new(g(a.index_value), g(a.limit_value), a.prob))
                    .collect()
            },
            self.limit.as_ref().map(|l| l.iter().map(|&(v, p)| (f(v), p)).collect()),
        )
    }

    /// `(op(Y_m, Z_m), op(Y, Z))` with the pairs `(Y_m, Y)` and `(Z_m, Z)`
    /// independent of each other.
    pub fn combine(
        &self,
        other: &RvModel,
        label: &str,
        op: impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static,
    ) -> Self {
        let (a, b) = (self.support.clone(), other.support.clone());
        let g = op.clone();
        let limit = match (&self.limit, &other.limit) {
            (Some(la), Some(lb)) => Some(
                la.iter()
                    .flat_map(|&(u, p)| lb.iter().map(|&(v, q)| (op(u, v), p * q)).collect::<Vec<_>>())
                    .collect(),
            ),
            _ => None,
        };
        Self::new(
            format!("{}{label}{}", self.name, other.name),
            format!("[{}] {label} [{}], independent", self.description, other.description),
            move |m| {
                let (sa, sb) = (a(m), b(m));
                sa.iter()
                    .flat_map(|x| {
                        sb.iter().map(|z| {
                            JointAtom::new(
                                g(x.index_value, z.index_value),
                                g(x.limit_value, z.limit_value),
                                x.prob * z.prob,
                            )
                        })
                    })
                    .collect()
            },
            limit,
        )
    }

    /// `(Y_m, Z)` where `Z` follows `other`'s limit law independently of
    /// `Y_m`.
    pub fn with_limit_of(&self, other: &RvModel) -> Result<Self> {
        let z = other
            .limit
            .clone()
            .ok_or_else(|| Error::config(format!("model {} declares no limit law", other.name)))?;
        let inner = self.support.clone();
        let law = z.clone();
        Ok(Self::new(
            format!("{}~lim({})", self.name, other.name),
            format!("index variables of [{}] against the limit of [{}]", self.description, other.description),
            move |m| {
                let marginal = merge_law(inner(m).iter().map(|a| (a.index_value, a.prob)).collect());
                marginal
                    .iter()
                    .flat_map(|&(u, p)| law.iter().map(move |&(v, q)| JointAtom::new(u, v, p * q)))
                    .collect()
            },
            Some(z.to_vec()),
        ))
    }

    /// `(Y_m, Y_a)` for a fixed `a`, coupled conditionally independently
    /// given `Y`.
    pub fn cauchy_pair(&self, a: u64) -> Result<Self> {
        let anchor = self.support(a)?;
        let anchor_law = merge_law(anchor.iter().map(|x| (x.index_value, x.prob)).collect());
        let inner = self.support.clone();
        Ok(Self::new(
            format!("{}|a={a}", self.name),
            format!("(Y_m, Y_{a}) of [{}], conditionally independent given Y", self.description),
            move |m| {
                let current = inner(m);
                let mut y_law = merge_law(current.iter().map(|x| (x.limit_value, x.prob)).collect());
                y_law.retain(|&(_, p)| p > 0.0);
                let mut out = Vec::new();
                for &(y, py) in &y_law {
                    for u in current.iter().filter(|x| x.limit_value == y && x.prob > 0.0) {
                        for v in anchor.iter().filter(|x| x.limit_value == y && x.prob > 0.0) {
                            out.push(JointAtom::new(u.index_value, v.index_value, u.prob * v.prob / py));
                        }
                    }
                }
                out
            },
            Some(anchor_law),
        ))
    }
}

/// Built-in models used as fixtures and CLI presets.
pub fn zoo() -> Vec<RvModel> {
    vec![
        RvModel::example1(),
        RvModel::example2(),
        RvModel::degenerate(0.0),
        RvModel::degenerate(2.5),
        RvModel::power_decay(0.0, 1.0, 1.0),
        RvModel::power_decay(1.0, 1.0, 1.0),
        RvModel::power_decay(2.0, -1.0, 1.0),
        RvModel::spike(1.0, 1.0),
        RvModel::spike(0.5, 1.5),
        RvModel::spike(2.0, 0.25),
        RvModel::shrinking_noise(1.0, 1.0),
        RvModel::shrinking_noise(0.3, 0.5),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_exact_values() {
        let m = RvModel::example1();
        assert_eq!(m.exceedance_prob(16, 0.5).unwrap(), 0.25);
        assert!((m.abs_moment(100, 1.0).unwrap() - 10.0).abs() < 1e-12);
        assert!((m.abs_moment(16, 2.0).unwrap() - 64.0).abs() < 1e-12);
        assert!((m.cdf(CdfAt::Index(25), 0.0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn example2_exact_values() {
        let m = RvModel::example2();
        for idx in [1, 7, 1000] {
            assert_eq!(m.exceedance_prob(idx, 0.5).unwrap(), 1.0);
            assert_eq!(m.cdf(CdfAt::Index(idx), 0.5).unwrap(), 0.5);
        }
        assert_eq!(m.cdf(CdfAt::Limit, -0.5).unwrap(), 0.0);
        assert_eq!(m.cdf(CdfAt::Limit, 0.5).unwrap(), 0.5);
        assert_eq!(m.cdf(CdfAt::Limit, 1.5).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_is_zero_everywhere() {
        let m = RvModel::degenerate(3.0);
        assert_eq!(m.exceedance_prob(5, 0.1).unwrap(), 0.0);
        assert_eq!(m.abs_moment(5, 2.0).unwrap(), 0.0);
        assert_eq!(m.cdf(CdfAt::Index(5), 2.9).unwrap(), 0.0);
        assert_eq!(m.constant_limit(), Some(3.0));
    }

    #[test]
    fn invalid_models_rejected() {
        let m = RvModel::new("bad", "", |_| vec![JointAtom::new(0.0, 0.0, 0.7)], None);
        assert!(matches!(m.exceedance_prob(3, 0.5), Err(Error::InvalidModel { m: 3, .. })));
        let m = RvModel::new(
            "neg",
            "",
            |_| vec![JointAtom::new(0.0, 0.0, 1.5), JointAtom::new(1.0, 0.0, -0.5)],
            None,
        );
        assert!(m.abs_moment(1, 1.0).is_err());
        let m = RvModel::new("empty", "", |_| vec![], None);
        assert!(m.cdf(CdfAt::Index(1), 0.0).is_err());
        let m = RvModel::new("mismatch", "", |_| vec![JointAtom::new(0.0, 1.0, 1.0)], Some(vec![(0.0, 1.0)]));
        assert!(m.support(1).is_err());
        assert!(RvModel::degenerate(0.0).abs_moment(1, 0.5).is_err());
        assert!(RvModel::degenerate(0.0).exceedance_prob(1, 0.0).is_err());
        let no_limit = RvModel::new("nolimit", "", |_| vec![JointAtom::new(0.0, 0.0, 1.0)], None);
        assert!(no_limit.cdf(CdfAt::Limit, 0.0).is_err());
    }

    #[test]
    fn tabulated_models() {
        let t = RvModel::tabulated(
            vec![
                vec![JointAtom::new(1.0, 0.0, 1.0)],
                vec![JointAtom::new(0.5, 0.0, 0.5), JointAtom::new(0.0, 0.0, 0.5)],
            ],
            Some(vec![(0.0, 1.0)]),
        )
        .unwrap();
        assert_eq!(t.exceedance_prob(1, 0.5).unwrap(), 1.0);
        assert_eq!(t.exceedance_prob(9, 0.5).unwrap(), 0.5);
        assert!(RvModel::tabulated(vec![], None).is_err());
        assert!(RvModel::tabulated(vec![vec![JointAtom::new(0.0, 0.0, 0.2)]], None).is_err());
    }

    #[test]
    fn derived_models_keep_laws_consistent() {
        let a = RvModel::shrinking_noise(1.0, 1.0);
        let b = RvModel::example1();
        for model in [
            a.map("sq", |t| t * t),
            a.combine(&b, "*", |x, y| x * y),
            a.combine(&RvModel::power_decay(2.0, -1.0, 1.0), "/", |x, y| x / y),
            b.with_limit_of(&a).unwrap(),
            a.cauchy_pair(4).unwrap(),
            RvModel::example2().cauchy_pair(3).unwrap(),
        ] {
            for m in 1..40 {
                model.support(m).unwrap_or_else(|e| panic!("{}: {e}", model.name()));
            }
        }
    }

    #[test]
    fn cauchy_pair_of_example2_is_degenerate_difference() {
        // Y_m = 1 - Y for every m, so Y_m - Y_a = 0 almost surely.
        let pair = RvModel::example2().cauchy_pair(2).unwrap();
        assert_eq!(pair.exceedance_prob(10, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn zoo_models_are_valid() {
        for model in zoo() {
            for m in [1, 2, 3, 10, 1000, 100_000] {
                model.support(m).unwrap_or_else(|e| panic!("{}: {e}", model.name()));
            }
            assert!(model.limit_law().is_some());
        }
    }
}
