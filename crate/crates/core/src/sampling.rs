//! Monte Carlo sampling of joint laws, used as an independent check on the
//! exact computations in [`crate::rvmodel`].
//!
//! Draw `i` at index `m` under seed `s` reads ChaCha8 stream `m` of key `s`
//! at word position `2i`, so any draw can be regenerated in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ordered_sum;
use crate::rvmodel::{JointAtom, RvModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl EmpiricalEstimate {
    /// `|estimate - exact| <= k * se`, where `se` is the larger of the
    /// empirical standard error and `reference_se` (the standard error
    /// implied by the exact law). A relative allowance of 1e-12 covers
    /// degenerate laws, where `se` is zero and only rounding separates the two.
    pub fn agrees_with(&self, exact: f64, reference_se: f64, k: f64) -> bool {
        (self.estimate - exact).abs() <= k * self.stderr.max(reference_se) + 1e-12 * exact.abs()
    }
}

/// The uniform in `[0, 1)` used for draw `i` at index `m`.
pub fn uniform_draw(seed: u64, m: u64, i: u64) -> f64 {
    let mut rng = stream(seed, m);
    rng.set_word_pos(2 * i as u128);
    rng.random::<f64>()
}

fn stream(seed: u64, m: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m);
    rng
}

/// Inverse-CDF lookup over the atoms in listed order.
fn pick(atoms: &[JointAtom], cumulative: &[f64], u: f64) -> JointAtom {
    let k = cumulative.partition_point(|&c| c <= u);
    match atoms.get(k) {
        Some(a) => *a,
        // u beyond the rounded total: take the last atom with positive mass
        None => *atoms.iter().rev().find(|a| a.prob > 0.0).unwrap_or(&atoms[atoms.len() - 1]),
    }
}

/// iid draws of `(Y_m, Y)`.
#[derive(Debug, Clone)]
pub struct Sample {
    pub m: u64,
    pub seed: u64,
    pub pairs: Vec<(f64, f64)>,
}

pub fn sample(model: &RvModel, m: u64, count: u64, seed: u64) -> Result<Sample> {
    if count == 0 {
        return Err(Error::config("sample count must be >= 1"));
    }
    let atoms = model.support(m)?;
    let mut acc = 0.0;
    let cumulative: Vec<f64> = atoms
        .iter()
        .map(|a| {
            acc += a.prob;
            acc
        })
        .collect();
    let mut rng = stream(seed, m);
    let pairs = (0..count)
        .map(|_| {
            let a = pick(&atoms, &cumulative, rng.random::<f64>());
            (a.index_value, a.limit_value)
        })
        .collect();
    Ok(Sample { m, seed, pairs })
}

impl Sample {
    fn len(&self) -> u64 {
        self.pairs.len() as u64
    }

    fn proportion(&self, hit: impl Fn(&(f64, f64)) -> bool) -> EmpiricalEstimate {
        let n = self.len() as f64;
        let p = self.pairs.iter().filter(|p| hit(p)).count() as f64 / n;
        EmpiricalEstimate {
            estimate: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            samples: self.len(),
            seed: self.seed,
        }
    }

    pub fn exceedance_prob(&self, eps: f64) -> EmpiricalEstimate {
        self.proportion(|(u, v)| !((u - v).abs() < eps))
    }

    /// Marginal `P(Y_m <= t)`.
    pub fn cdf_index(&self, t: f64) -> EmpiricalEstimate {
        self.proportion(|(u, _)| *u <= t)
    }

    pub fn cdf_limit(&self, t: f64) -> EmpiricalEstimate {
        self.proportion(|(_, v)| *v <= t)
    }

    pub fn abs_moment(&self, r: f64) -> EmpiricalEstimate {
        let n = self.len() as f64;
        let values: Vec<f64> = self.pairs.iter().map(|(u, v)| (u - v).abs().powf(r)).collect();
        let mean = ordered_sum(values.iter().copied()) / n;
        let var = if self.len() > 1 {
            ordered_sum(values.iter().map(|x| (x - mean).powi(2))) / (n - 1.0)
        } else {
            0.0
        };
        EmpiricalEstimate {
            estimate: mean,
            stderr: (var / n).sqrt(),
            samples: self.len(),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_addressable_by_counter() {
        let model = RvModel::example1();
        let s = sample(&model, 9, 50, 42).unwrap();
        let atoms = model.support(9).unwrap();
        let cumulative = [atoms[0].prob, 1.0];
        for (i, pair) in s.pairs.iter().enumerate() {
            let a = pick(&atoms, &cumulative, uniform_draw(42, 9, i as u64));
            assert_eq!(*pair, (a.index_value, a.limit_value));
        }
        let again = sample(&model, 9, 50, 42).unwrap();
        assert_eq!(s.pairs, again.pairs);
        let other_index = sample(&model, 10, 50, 42).unwrap();
        assert_ne!(s.pairs, other_index.pairs);
    }

    #[test]
    fn example1_exceedance_within_four_stderr() {
        let s = sample(&RvModel::example1(), 16, 1_000_000, 7).unwrap();
        let est = s.exceedance_prob(0.5);
        let se = (0.25f64 * 0.75 / 1e6).sqrt();
        assert!((est.estimate - 0.25).abs() <= 4.0 * se, "{est:?}");
        assert!((est.stderr - se).abs() < 1e-5);
    }

    #[test]
    fn degenerate_samples_are_identical() {
        let s = sample(&RvModel::degenerate(1.5), 3, 1000, 1).unwrap();
        assert!(s.pairs.iter().all(|p| *p == (1.5, 1.5)));
        let est = s.exceedance_prob(0.01);
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn example2_marginal() {
        let s = sample(&RvModel::example2(), 4, 1_000_000, 99).unwrap();
        let p_one = 1.0 - s.cdf_index(0.5).estimate;
        assert!((p_one - 0.5).abs() <= 0.002);
    }

    #[test]
    fn zero_mass_atoms_never_drawn() {
        let model = RvModel::new(
            "z",
            "",
            |_| {
                vec![
                    JointAtom::new(5.0, 0.0, 0.0),
                    JointAtom::new(1.0, 0.0, 1.0),
                    JointAtom::new(9.0, 0.0, 0.0),
                ]
            },
            None,
        );
        let s = sample(&model, 1, 10_000, 3).unwrap();
        assert!(s.pairs.iter().all(|p| p.0 == 1.0));
        assert!(sample(&model, 1, 0, 3).is_err());
    }
}
