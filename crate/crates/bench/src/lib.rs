//! Shared fixtures for the criterion benches.

use dnstat::{DeferredSchedule, WeightScheme};

/// The deferred schedule and weights used by the worked examples.
pub fn example1_scheme() -> (DeferredSchedule, WeightScheme) {
    (DeferredSchedule::example1(), WeightScheme::example1())
}

/// `x(m) = 0`, `y(m) = m` with unit weights.
pub fn plain_scheme() -> (DeferredSchedule, WeightScheme) {
    (DeferredSchedule::plain(), WeightScheme::ones())
}
