//! SAI Arnoldi run that also estimates `d‖r‖∞/dγ` by a forward difference.
//!
//! A second ("primed") Arnoldi process is carried along for `γ' = γ + Δγ`.
//! Its shifted-and-inverted products reuse the factorization of `I + γA`,
//! improved by one preconditioned Richardson step:
//!
//! ```text
//! w' = (I + γA)⁻¹ V'_i
//! r̄  = V'_i - (w' + γ' A w')
//! w' = w' + (I + γA)⁻¹ r̄
//! ```
//!
//! The unprimed process performs exactly the same floating-point operations
//! as [`crate::krylov::sai_expmv`], so its outcome is bitwise identical.

use crate::krylov::{check_inputs, shifted_norm, KrylovOutcome, KrylovState, SaiParams};
use crate::lu::{shifted_lu, LuFactorization};
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

pub const DEFAULT_DELTA_GAMMA: f64 = 1e-7;

/// Which remainder enters the primed residual scale `c'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrimedNormSource {
    /// `c' = ‖(I + γ'A) w'‖₂`, the primed process's own remainder.
    #[default]
    Primed,
    /// `c' = ‖(I + γ'A) w‖₂` with the unprimed remainder, kept for comparison
    /// with the reference pseudocode.
    Unprimed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeParams {
    pub base: SaiParams,
    /// Absolute finite-difference step `Δγ`.
    pub delta_gamma: f64,
    pub primed_norm: PrimedNormSource,
}

impl DerivativeParams {
    pub fn new(base: SaiParams) -> Self {
        Self {
            base,
            delta_gamma: DEFAULT_DELTA_GAMMA,
            primed_norm: PrimedNormSource::Primed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.delta_gamma > 0.0 && self.delta_gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta_gamma must be positive, got {}",
                self.delta_gamma
            )));
        }
        Ok(())
    }
}

/// Factors `I + γA` once and runs the twin recursion.
pub fn sai_expmv_with_derivative(a: &SparseMatrix, v: &[f64], p: &DerivativeParams) -> Result<KrylovOutcome> {
    p.validate()?;
    let lu = shifted_lu(a, p.base.gamma)?;
    sai_expmv_with_derivative_factored(a, &lu, v, p)
}

/// Twin recursion with a caller-supplied factorization of `I + p.base.gamma·A`.
///
/// The derivative is reported only when the unprimed process converges, and
/// is computed from both processes at that same step. If the primed process
/// breaks down first, the primary outcome is returned with `derivative: None`
/// and `derivative_warning: true`.
pub fn sai_expmv_with_derivative_factored(
    a: &SparseMatrix,
    lu: &LuFactorization,
    v: &[f64],
    p: &DerivativeParams,
) -> Result<KrylovOutcome> {
    p.validate()?;
    let base = &p.base;
    check_inputs(a, lu, v, base)?;
    let gamma = base.gamma;
    let gamma_p = gamma + p.delta_gamma;
    let n = v.len();

    let mut state = KrylovState::new(v, base.max_iters)?;
    let mut primed = Some(KrylovState::new(v, base.max_iters)?);
    let mut w = vec![0.0; n];
    let mut wp = vec![0.0; n];
    let mut correction = vec![0.0; n];
    let mut rbar = vec![0.0; n];
    let mut work = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut warning = false;

    loop {
        // Unprimed step, identical to the plain run.
        lu.solve_into(state.current(), &mut w, &mut work)?;
        let ortho = state.orthogonalize(&mut w, base.reorthogonalize);

        let mut primed_step = None;
        if let Some(ps) = primed.as_mut() {
            lu.solve_into(ps.current(), &mut wp, &mut work)?;
            a.spmv_into(&wp, &mut scratch)?;
            for (((r, vi), wi), awi) in rbar.iter_mut().zip(ps.current()).zip(&wp).zip(&scratch) {
                *r = vi - (wi + gamma_p * awi);
            }
            lu.solve_into(&rbar, &mut correction, &mut work)?;
            for (wi, ci) in wp.iter_mut().zip(&correction) {
                *wi += ci;
            }
            primed_step = Some(ps.orthogonalize(&mut wp, base.reorthogonalize));
        }

        let c = shifted_norm(a, &w, gamma, &mut scratch)?;
        let eval = state.evaluate(gamma, base.t, c)?;
        let residual_norm = eval.residual_norm();
        let converged = residual_norm < base.tol;
        let breakdown = ortho.is_breakdown();
        let finished = converged || breakdown || state.iter() == base.max_iters;

        let mut derivative = None;
        if finished && converged {
            if let Some(ps) = primed.as_ref() {
                let remainder = match p.primed_norm {
                    PrimedNormSource::Primed => &wp,
                    PrimedNormSource::Unprimed => &w,
                };
                let cp = shifted_norm(a, remainder, gamma_p, &mut scratch)?;
                match ps.evaluate(gamma_p, base.t, cp) {
                    Ok(ev) => {
                        derivative = Some((ev.residual_norm() - residual_norm) / (gamma_p - gamma));
                    }
                    Err(Error::Breakdown { .. }) => warning = true,
                    Err(e) => return Err(e),
                }
            }
        }

        if finished {
            return Ok(KrylovOutcome {
                y: state.assemble(&eval.u_final),
                residual_norm,
                iterations: state.iter(),
                converged,
                breakdown,
                derivative,
                derivative_warning: warning,
            });
        }

        state.extend(&w, ortho.h_next);
        if let (Some(ps), Some(step)) = (primed.as_mut(), primed_step) {
            if step.is_breakdown() {
                primed = None;
                warning = true;
            } else {
                ps.extend(&wp, step.h_next);
            }
        }
    }
}
