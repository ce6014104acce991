//! Shift-and-invert Arnoldi approximation of `y(t) = exp(-tA)v`.
//!
//! The Krylov basis is built for `(I + γA)⁻¹`, whose projection `Ĥ` is mapped
//! back to an approximation of `A` through `H = (Ĥ⁻¹ - I)/γ`. The approximant
//! is `y_m = β V_m exp(-tH) e₁`.
//!
//! Stopping uses the residual of the ODE `y' = -Ay` evaluated for the
//! normalized starting vector at `s ∈ {t/3, 2t/3, t}`:
//!
//! ```text
//! r(s) = (c/γ) · e_mᵀ Ĥ⁻¹ exp(-sH) e₁,   c = ‖(I + γA) w‖₂
//! ```
//!
//! where `w` is the orthogonalized, not yet normalized, remainder of the
//! current step. The tolerance is therefore relative to `‖v‖₂`.

use crate::dense::{expm, hessenberg_inverse, DenseMatrix};
use crate::lu::{shifted_lu, LuFactorization};
use crate::sparse::SparseMatrix;
use crate::{dot, norm2, Error, Result};

/// A remainder at or below this fraction of its pre-orthogonalization norm
/// means the Krylov space became invariant.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// Parameters of one SAI run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaiParams {
    /// Shift `γ > 0`, in units of time.
    pub gamma: f64,
    pub t: f64,
    /// Residual tolerance `ε`.
    pub tol: f64,
    /// Maximum Arnoldi steps `k`.
    pub max_iters: usize,
    /// Run a second modified Gram–Schmidt sweep each step.
    pub reorthogonalize: bool,
}

impl SaiParams {
    pub fn new(gamma: f64, t: f64, tol: f64, max_iters: usize) -> Self {
        Self {
            gamma,
            t,
            tol,
            max_iters,
            reorthogonalize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        positive("t", self.t)?;
        positive("tol", self.tol)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of one matrix-exponential action.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovOutcome {
    pub y: Vec<f64>,
    /// Max-abs of the three residual samples at the final step.
    pub residual_norm: f64,
    /// Arnoldi steps executed (`m`).
    pub iterations: usize,
    pub converged: bool,
    /// The Krylov space became invariant before `max_iters`.
    pub breakdown: bool,
    /// Finite-difference estimate of `d‖r‖∞/dγ`; only set by the derivative run.
    pub derivative: Option<f64>,
    /// Set when the derivative recursion failed while the primary run did not.
    pub derivative_warning: bool,
}

/// Orthonormal basis and Hessenberg projection of an SAI Arnoldi run.
#[derive(Debug, Clone)]
pub struct KrylovState {
    basis: Vec<Vec<f64>>,
    h_hat: DenseMatrix,
    beta: f64,
    iter: usize,
}

pub(crate) struct Orthogonalized {
    pub h_next: f64,
    pub norm_before: f64,
}

impl Orthogonalized {
    pub fn is_breakdown(&self) -> bool {
        !(self.h_next > BREAKDOWN_TOL * self.norm_before)
    }
}

pub(crate) struct Evaluation {
    pub samples: [f64; 3],
    /// `exp(-tH) e₁`, used for the final approximant.
    pub u_final: Vec<f64>,
}

impl Evaluation {
    pub fn residual_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

impl KrylovState {
    /// Starts a run from `v`, normalizing it into the first basis vector.
    pub(crate) fn new(v: &[f64], capacity: usize) -> Result<Self> {
        let beta = norm2(v);
        if beta == 0.0 {
            return Err(Error::ZeroVector);
        }
        if !beta.is_finite() {
            return Err(Error::NonFinite);
        }
        let mut basis = Vec::with_capacity(capacity + 1);
        basis.push(v.iter().map(|x| x / beta).collect());
        Ok(Self {
            basis,
            h_hat: DenseMatrix::zeros(capacity + 1, capacity),
            beta,
            iter: 0,
        })
    }

    /// Basis vectors built so far: `V_{:,1..=iter}` plus, before the run ends,
    /// the next one once it has been normalized.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Full `(k+1) x k` Hessenberg storage.
    pub fn h_hat(&self) -> &DenseMatrix {
        &self.h_hat
    }

    /// Leading `iter x iter` block `Ĥ_{m,m}`.
    pub fn projected(&self) -> DenseMatrix {
        self.h_hat.block(self.iter, self.iter)
    }

    /// `Ĥ_{m+1,m}`.
    pub fn projected_rect(&self) -> DenseMatrix {
        self.h_hat.block(self.iter + 1, self.iter)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    pub(crate) fn current(&self) -> &[f64] {
        &self.basis[self.iter]
    }

    /// Modified Gram–Schmidt of `w` against the basis; fills column `iter` of `Ĥ`.
    pub(crate) fn orthogonalize(&mut self, w: &mut [f64], reorthogonalize: bool) -> Orthogonalized {
        let col = self.iter;
        let norm_before = norm2(w);
        for (j, vj) in self.basis.iter().enumerate() {
            let h = dot(w, vj);
            self.h_hat[(j, col)] = h;
            for (wi, vi) in w.iter_mut().zip(vj) {
                *wi -= h * vi;
            }
        }
        if reorthogonalize {
            for (j, vj) in self.basis.iter().enumerate() {
                let h = dot(w, vj);
                self.h_hat[(j, col)] += h;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= h * vi;
                }
            }
        }
        let h_next = norm2(w);
        self.h_hat[(col + 1, col)] = h_next;
        self.iter += 1;
        Orthogonalized { h_next, norm_before }
    }

    /// Residual samples for the current projection and remainder norm `c`.
    pub(crate) fn evaluate(&self, gamma: f64, t: f64, c: f64) -> Result<Evaluation> {
        let m = self.iter;
        let h_tilde = hessenberg_inverse(&self.projected())?;
        // -(t/3) H = (t / 3γ) (I - Ĥ⁻¹)
        let scale = t / (3.0 * gamma);
        let mut step = h_tilde.scaled(-scale);
        for i in 0..m {
            step[(i, i)] += scale;
        }
        let propagator = expm(&step)?;

        let last_row = h_tilde.row(m - 1);
        let mut u = vec![0.0; m];
        u[0] = 1.0;
        let mut samples = [0.0; 3];
        for r in &mut samples {
            u = propagator.matvec(&u);
            *r = c / gamma * dot(last_row, &u);
        }
        if !samples.iter().all(|r| r.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Evaluation {
            samples,
            u_final: u,
        })
    }

    /// Appends `w / h_next` as the next basis vector.
    pub(crate) fn extend(&mut self, w: &[f64], h_next: f64) {
        self.basis.push(w.iter().map(|x| x / h_next).collect());
    }

    /// `β V_m u`.
    pub(crate) fn assemble(&self, u: &[f64]) -> Vec<f64> {
        let n = self.basis[0].len();
        let mut y = vec![0.0; n];
        for (vj, &uj) in self.basis.iter().zip(u) {
            let coef = self.beta * uj;
            for (yi, vi) in y.iter_mut().zip(vj) {
                *yi += coef * vi;
            }
        }
        y
    }
}

/// `‖(I + γA) w‖₂`, with `scratch` receiving `A w`.
pub(crate) fn shifted_norm(a: &SparseMatrix, w: &[f64], gamma: f64, scratch: &mut [f64]) -> Result<f64> {
    a.spmv_into(w, scratch)?;
    Ok(w.iter()
        .zip(scratch.iter())
        .map(|(wi, awi)| {
            let z = wi + gamma * awi;
            z * z
        })
        .sum::<f64>()
        .sqrt())
}

/// Residual samples `r_j` at `s = t/3, 2t/3, t` for the current state and remainder `w`.
///
/// The caller takes the max-abs. Fails with [`Error::Breakdown`] when the
/// projected matrix cannot be inverted and with [`Error::NonFinite`] when a
/// sample overflows.
pub fn residual_samples(state: &KrylovState, p: &SaiParams, a: &SparseMatrix, w: &[f64]) -> Result<[f64; 3]> {
    if state.iter == 0 {
        return Err(Error::InvalidParameter("state has no Arnoldi steps yet".into()));
    }
    let mut scratch = vec![0.0; w.len()];
    let c = shifted_norm(a, w, p.gamma, &mut scratch)?;
    Ok(state.evaluate(p.gamma, p.t, c)?.samples)
}

/// Per-step view handed to tracing callbacks.
pub struct StepView<'a> {
    pub iteration: usize,
    pub state: &'a KrylovState,
    /// Orthogonalized remainder before normalization.
    pub remainder: &'a [f64],
    pub samples: [f64; 3],
}

/// Factors `I + γA` and runs the SAI Arnoldi process.
pub fn sai_expmv(a: &SparseMatrix, v: &[f64], p: &SaiParams) -> Result<KrylovOutcome> {
    p.validate()?;
    let lu = shifted_lu(a, p.gamma)?;
    sai_expmv_factored(a, &lu, v, p)
}

/// Same as [`sai_expmv`] with a factorization of `I + p.gamma·A` supplied by the caller.
pub fn sai_expmv_factored(a: &SparseMatrix, lu: &LuFactorization, v: &[f64], p: &SaiParams) -> Result<KrylovOutcome> {
    sai_expmv_traced(a, lu, v, p, |_| {}).map(|(outcome, _)| outcome)
}

pub(crate) fn check_inputs(a: &SparseMatrix, lu: &LuFactorization, v: &[f64], p: &SaiParams) -> Result<()> {
    p.validate()?;
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    if v.len() != a.n_rows() || lu.dim() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            found: if v.len() != a.n_rows() { v.len() } else { lu.dim() },
        });
    }
    if lu.gamma() != p.gamma {
        return Err(Error::InvalidParameter(format!(
            "factorization was built for gamma = {}, run requested {}",
            lu.gamma(),
            p.gamma
        )));
    }
    Ok(())
}

/// Runs the process, calling `observe` after the residual of every step, and
/// returns the final state alongside the outcome.
pub fn sai_expmv_traced(
    a: &SparseMatrix,
    lu: &LuFactorization,
    v: &[f64],
    p: &SaiParams,
    mut observe: impl FnMut(&StepView<'_>),
) -> Result<(KrylovOutcome, KrylovState)> {
    check_inputs(a, lu, v, p)?;
    let n = v.len();
    let mut state = KrylovState::new(v, p.max_iters)?;
    let mut w = vec![0.0; n];
    let mut work = vec![0.0; n];
    let mut scratch = vec![0.0; n];

    loop {
        lu.solve_into(state.current(), &mut w, &mut work)?;
        let ortho = state.orthogonalize(&mut w, p.reorthogonalize);
        let c = shifted_norm(a, &w, p.gamma, &mut scratch)?;
        let eval = state.evaluate(p.gamma, p.t, c)?;
        let residual_norm = eval.residual_norm();
        observe(&StepView {
            iteration: state.iter,
            state: &state,
            remainder: &w,
            samples: eval.samples,
        });

        let converged = residual_norm < p.tol;
        let breakdown = ortho.is_breakdown();
        if converged || breakdown || state.iter == p.max_iters {
            let y = state.assemble(&eval.u_final);
            let outcome = KrylovOutcome {
                y,
                residual_norm,
                iterations: state.iter,
                converged,
                breakdown,
                derivative: None,
                derivative_warning: false,
            };
            return Ok((outcome, state));
        }
        state.extend(&w, ortho.h_next);
    }
}
