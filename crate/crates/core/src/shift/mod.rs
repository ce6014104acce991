//! Shift selection for runs over many starting vectors.
//!
//! Shifts are handled through the dimensionless `δ = γ / t`.
//!
//! * [`optimize_and_run`] minimizes the mean residual norm after `K` Arnoldi
//!   steps over a set of trial vectors with Brent's method, after which the
//!   found `δ*` is used for every remaining vector.
//! * [`IncrementalDriver`] processes vectors one at a time, bisecting the
//!   search interval on the sign of the residual derivative until the interval
//!   is narrower than a stopping width, then freezes the shift.

mod brent;
mod incremental;
mod optimize;

pub use brent::{brent_minimize, BrentResult};
pub use incremental::{
    incremental_update, DriverPhase, DriverStep, IncrementalDriver, IncrementalParams, IncrementalState,
    DEFAULT_STOP_WIDTH,
};
pub use optimize::{mean_residual_objective, optimize_and_run, OptimizeConfig, OptimizeOutcome};

use crate::{Error, Result};

/// Search bracket `[lo, hi]` for `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ShiftInterval {
    pub const DEFAULT_LO: f64 = 0.01;

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("shift interval needs 0 < lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, delta: f64) -> bool {
        self.lo <= delta && delta <= self.hi
    }
}
