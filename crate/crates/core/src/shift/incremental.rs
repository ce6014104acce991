use super::ShiftInterval;
use crate::derivative::{sai_expmv_with_derivative, DerivativeParams, PrimedNormSource, DEFAULT_DELTA_GAMMA};
use crate::krylov::{sai_expmv_factored, KrylovOutcome, SaiParams};
use crate::lu::{shifted_lu, LuFactorization};
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

pub const DEFAULT_STOP_WIDTH: f64 = 1e-5;

/// Bisection state of the incremental shift search.
///
/// The bracket is kept as `(lo, width)` so that every update halves the width
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalState {
    lo: f64,
    width: f64,
    converged_delta: Option<f64>,
    stop_width: f64,
    vectors_processed: usize,
}

impl IncrementalState {
    pub fn new(interval: ShiftInterval) -> Self {
        Self::with_stop_width(interval, DEFAULT_STOP_WIDTH)
    }

    pub fn with_stop_width(interval: ShiftInterval, stop_width: f64) -> Self {
        Self {
            lo: interval.lo,
            width: interval.width(),
            converged_delta: None,
            stop_width,
            vectors_processed: 0,
        }
    }

    pub fn interval(&self) -> ShiftInterval {
        ShiftInterval {
            lo: self.lo,
            hi: self.hi(),
        }
    }

    fn hi(&self) -> f64 {
        self.lo + self.width
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Next trial shift `δ⁽ⁱ⁾`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi())
    }

    pub fn converged_delta(&self) -> Option<f64> {
        self.converged_delta
    }

    pub fn is_converged(&self) -> bool {
        self.converged_delta.is_some()
    }

    pub fn stop_width(&self) -> f64 {
        self.stop_width
    }

    pub fn vectors_processed(&self) -> usize {
        self.vectors_processed
    }

    /// Applies one update with the derivative observed at [`Self::midpoint`]
    /// and returns that midpoint. A positive derivative moves `hi` down, zero
    /// or negative moves `lo` up, `None` leaves the bracket as it is.
    /// After convergence only the vector counter changes.
    pub fn bisect(&mut self, derivative: Option<f64>) -> f64 {
        self.vectors_processed += 1;
        if let Some(d) = self.converged_delta {
            return d;
        }
        let mid = self.midpoint();
        match derivative {
            Some(r) if r > 0.0 => self.width *= 0.5,
            Some(_) => {
                self.lo = mid;
                self.width *= 0.5;
            }
            None => {}
        }
        if self.width <= self.stop_width {
            self.converged_delta = Some(mid);
        }
        mid
    }
}

/// One step of the incremental method: runs the derivative-augmented solver
/// at the current midpoint and bisects on the sign of `r_γ`.
///
/// `p.base.gamma` is overwritten with `δ⁽ⁱ⁾ t`.
pub fn incremental_update(
    state: &IncrementalState,
    a: &SparseMatrix,
    v: &[f64],
    p: &DerivativeParams,
) -> Result<(KrylovOutcome, IncrementalState)> {
    if state.is_converged() {
        return Err(Error::InvalidParameter("incremental search has already converged".into()));
    }
    let delta = state.midpoint();
    let mut run = *p;
    run.base.gamma = delta * p.base.t;
    let outcome = sai_expmv_with_derivative(a, v, &run)?;
    let mut next = state.clone();
    next.bisect(outcome.derivative);
    Ok((outcome, next))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementalParams {
    pub t: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub reorthogonalize: bool,
    pub delta_gamma: f64,
    pub primed_norm: PrimedNormSource,
    pub stop_width: f64,
}

impl IncrementalParams {
    pub fn new(t: f64, tol: f64, max_iters: usize) -> Self {
        Self {
            t,
            tol,
            max_iters,
            reorthogonalize: false,
            delta_gamma: DEFAULT_DELTA_GAMMA,
            primed_norm: PrimedNormSource::Primed,
            stop_width: DEFAULT_STOP_WIDTH,
        }
    }

    fn sai(&self, delta: f64) -> SaiParams {
        SaiParams {
            gamma: delta * self.t,
            t: self.t,
            tol: self.tol,
            max_iters: self.max_iters,
            reorthogonalize: self.reorthogonalize,
        }
    }

    fn derivative(&self, delta: f64) -> DerivativeParams {
        DerivativeParams {
            base: self.sai(delta),
            delta_gamma: self.delta_gamma,
            primed_norm: self.primed_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverPhase {
    /// Shift still being bisected; derivative-augmented run with a fresh LU.
    Search,
    /// Shift frozen at `δ̃`; plain run reusing one factorization.
    Frozen,
}

#[derive(Debug, Clone)]
pub struct DriverStep {
    pub outcome: KrylovOutcome,
    /// Shift `δ` used for this vector.
    pub delta: f64,
    pub phase: DriverPhase,
    /// Sparse factorizations performed while processing this vector.
    pub lu_count: usize,
}

/// Processes vectors one at a time, bisecting the shift until the bracket
/// closes and then reusing a single factorization at `γ̃ = δ̃ t`.
pub struct IncrementalDriver<'a> {
    a: &'a SparseMatrix,
    params: IncrementalParams,
    state: IncrementalState,
    frozen: Option<LuFactorization>,
    lu_count: usize,
}

impl<'a> IncrementalDriver<'a> {
    pub fn new(a: &'a SparseMatrix, interval: ShiftInterval, params: IncrementalParams) -> Result<Self> {
        params.derivative(interval.midpoint()).validate()?;
        if !(params.stop_width > 0.0) {
            return Err(Error::InvalidParameter("stop_width must be positive".into()));
        }
        Ok(Self {
            a,
            params,
            state: IncrementalState::with_stop_width(interval, params.stop_width),
            frozen: None,
            lu_count: 0,
        })
    }

    pub fn state(&self) -> &IncrementalState {
        &self.state
    }

    /// Factorizations performed so far.
    pub fn lu_count(&self) -> usize {
        self.lu_count
    }

    pub fn process(&mut self, v: &[f64]) -> Result<DriverStep> {
        if let Some(delta) = self.state.converged_delta() {
            let mut fresh = 0;
            if self.frozen.is_none() {
                self.frozen = Some(shifted_lu(self.a, delta * self.params.t)?);
                fresh = 1;
            }
            let lu = self.frozen.as_ref().expect("factorization present");
            let outcome = sai_expmv_factored(self.a, lu, v, &self.params.sai(delta))?;
            self.lu_count += fresh;
            self.state.vectors_processed += 1;
            return Ok(DriverStep {
                outcome,
                delta,
                phase: DriverPhase::Frozen,
                lu_count: fresh,
            });
        }
        let delta = self.state.midpoint();
        let (outcome, next) = incremental_update(&self.state, self.a, v, &self.params.derivative(delta))?;
        self.state = next;
        self.lu_count += 1;
        Ok(DriverStep {
            outcome,
            delta,
            phase: DriverPhase::Search,
            lu_count: 1,
        })
    }
}
