use super::brent::brent_minimize;
use super::ShiftInterval;
use crate::krylov::{sai_expmv_factored, SaiParams};
use crate::lu::shifted_lu;
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

pub const DEFAULT_BRENT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_BRENT_ITERS: usize = 50;

/// Settings of the mean-residual objective.
#[derive(Debug, Clone)]
pub struct OptimizeConfig {
    /// The `N` trial vectors.
    pub trial_vectors: Vec<Vec<f64>>,
    /// Arnoldi steps `K` per objective evaluation.
    pub fixed_iters: usize,
    pub tol: f64,
    pub t: f64,
    pub brent_tol: f64,
    pub max_brent_iters: usize,
}

impl OptimizeConfig {
    pub fn new(trial_vectors: Vec<Vec<f64>>, fixed_iters: usize, tol: f64, t: f64) -> Self {
        Self {
            trial_vectors,
            fixed_iters,
            tol,
            t,
            brent_tol: DEFAULT_BRENT_TOL,
            max_brent_iters: DEFAULT_MAX_BRENT_ITERS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trial_vectors.is_empty() {
            return Err(Error::InvalidParameter("at least one trial vector is required".into()));
        }
        if self.fixed_iters == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if !(self.brent_tol > 0.0) || self.max_brent_iters == 0 {
            return Err(Error::InvalidParameter("Brent tolerance and budget must be positive".into()));
        }
        SaiParams::new(1.0, self.t, self.tol, self.fixed_iters).validate()
    }

    fn params(&self, delta: f64) -> SaiParams {
        SaiParams::new(delta * self.t, self.t, self.tol, self.fixed_iters)
    }
}

/// Mean over the trial vectors of the residual norm after `K` SAI steps with
/// `γ = δ t`. A run that converges earlier contributes its converged residual.
///
/// One factorization is made per call. Any solver failure yields `+∞`.
pub fn mean_residual_objective(a: &SparseMatrix, cfg: &OptimizeConfig, delta: f64) -> f64 {
    objective_counted(a, cfg, delta).0
}

// Objective value and the Arnoldi steps spent on it.
fn objective_counted(a: &SparseMatrix, cfg: &OptimizeConfig, delta: f64) -> (f64, usize) {
    let p = cfg.params(delta);
    let Ok(lu) = shifted_lu(a, p.gamma) else {
        return (f64::INFINITY, 0);
    };
    let mut sum = 0.0;
    let mut iters = 0;
    for v in &cfg.trial_vectors {
        match sai_expmv_factored(a, &lu, v, &p) {
            Ok(out) => {
                sum += out.residual_norm;
                iters += out.iterations;
            }
            Err(_) => return (f64::INFINITY, iters),
        }
    }
    (sum / cfg.trial_vectors.len() as f64, iters)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOutcome {
    pub delta_star: f64,
    /// Objective value at `delta_star`.
    pub objective: f64,
    /// Objective evaluations, each costing one sparse factorization (`s`).
    pub evals: usize,
    /// Arnoldi steps over all evaluations, at most `N K s`.
    pub arnoldi_iters: usize,
    pub converged: bool,
}

impl OptimizeOutcome {
    /// Shift `γ* = δ* t` to use for the remaining vectors.
    pub fn gamma(&self, t: f64) -> f64 {
        self.delta_star * t
    }
}

/// Minimizes [`mean_residual_objective`] over `interval` with Brent's method.
pub fn optimize_and_run(a: &SparseMatrix, cfg: &OptimizeConfig, interval: ShiftInterval) -> Result<OptimizeOutcome> {
    cfg.validate()?;
    let mut arnoldi_iters = 0;
    let r = brent_minimize(
        |delta| {
            let (f, k) = objective_counted(a, cfg, delta);
            arnoldi_iters += k;
            f
        },
        interval.lo,
        interval.hi,
        cfg.brent_tol,
        cfg.max_brent_iters,
    );
    Ok(OptimizeOutcome {
        delta_star: r.x_min,
        objective: r.f_min,
        evals: r.evals,
        arnoldi_iters,
        converged: r.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(n: usize) -> SparseMatrix {
        let d: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        SparseMatrix::from_diagonal(&d)
    }

    #[test]
    fn zero_operator_objective_vanishes() {
        let a = SparseMatrix::zeros(5);
        let cfg = OptimizeConfig::new(vec![vec![1.0; 5]], 5, 1e-6, 1.0);
        for delta in [0.01, 0.05, 0.1] {
            assert!(mean_residual_objective(&a, &cfg, delta) < 1e-12);
        }
    }

    #[test]
    fn full_dimension_is_exact() {
        let a = diag(10);
        let v: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 * 0.1).collect();
        // tolerance below reach so the run uses all K = n steps
        let cfg = OptimizeConfig::new(vec![v], 10, 1e-300, 1.0);
        let r = mean_residual_objective(&a, &cfg, 0.05);
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn two_trials_average_exactly() {
        let a = diag(30);
        let v1: Vec<f64> = (0..30).map(|i| (i as f64).sin() + 1.5).collect();
        let v2: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).cos()).collect();
        let c1 = OptimizeConfig::new(vec![v1.clone()], 6, 1e-12, 0.5);
        let c2 = OptimizeConfig::new(vec![v2.clone()], 6, 1e-12, 0.5);
        let both = OptimizeConfig::new(vec![v1, v2], 6, 1e-12, 0.5);
        for delta in [0.02, 0.07] {
            let mean = (mean_residual_objective(&a, &c1, delta) + mean_residual_objective(&a, &c2, delta)) / 2.0;
            assert_eq!(mean_residual_objective(&a, &both, delta), mean);
        }
    }

    #[test]
    fn constant_objective_terminates_quickly() {
        let a = SparseMatrix::zeros(4);
        let cfg = OptimizeConfig::new(vec![vec![1.0; 4]], 3, 1e-6, 1.0);
        let out = optimize_and_run(&a, &cfg, ShiftInterval::new(0.01, 0.1).unwrap()).unwrap();
        assert!((0.01..=0.1).contains(&out.delta_star));
        assert!(out.evals <= 25);
        assert!(out.arnoldi_iters <= out.evals * 3);
    }

    #[test]
    fn empty_trials_rejected() {
        let cfg = OptimizeConfig::new(vec![], 3, 1e-6, 1.0);
        let err = optimize_and_run(&diag(3), &cfg, ShiftInterval::new(0.01, 0.1).unwrap());
        assert!(err.is_err());
    }
}
