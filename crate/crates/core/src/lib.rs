//! Deferred Nörlund summability, weighted statistical density and detectors
//! for stochastic convergence of random-variable sequences.
//!
//! The crate is organised bottom-up:
//!
//! - [`dnmeans`]: deferred schedules, weight schemes, the convolution
//!   normalizer and the deferred Nörlund mean;
//! - [`density`]: weighted densities of index sets and finite-horizon limit
//!   verdicts;
//! - [`rvmodel`] and [`sampling`]: exactly computable joint laws of
//!   `(Y_m, Y)` and a seeded Monte Carlo cross-check;
//! - [`detectors`]: convergence in probability, in r-th mean and in
//!   distribution, plus property suites for the implications between them;
//! - [`korovkin`]: Meyer-König–Zeller operators and the three-test-function
//!   condition checker.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod density;
pub mod detectors;
pub mod dnmeans;
pub mod error;
pub mod korovkin;
pub mod numeric;
pub mod repro;
pub mod rvmodel;
pub mod sampling;

pub use density::{ConvergenceVerdict, DensityConfig, TracePoint, Verdict, Weighting};
pub use detectors::DetectorConfig;
pub use dnmeans::{DeferredSchedule, NormalizerMode, RealSeq, WeightScheme};
pub use error::{Error, Result};
pub use korovkin::{KorovkinConfig, KorovkinReport, SampledFunction};
pub use rvmodel::{CdfAt, JointAtom, RvModel};
