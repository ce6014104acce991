use std::fs::File;
use std::time::Instant;

use sai_core::mtx::write_matrix_market;
use sai_core::problems::{build_aniso, build_convdiff, gaussian_states, iid_normal_states, InitialStateSpec};
use sai_core::shift::{optimize_and_run, DriverPhase, IncrementalDriver, IncrementalParams, OptimizeConfig};
use sai_core::{sai_expmv_factored, shifted_lu, KrylovOutcome, SaiParams, SparseMatrix};

use crate::config::{ProblemConfig, RunConfig, StatesKind, Strategy};
use crate::Result;

/// One CSV row. Row 0 is the setup stage, rows `1..=M` the vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub vector_index: usize,
    pub delta_used: f64,
    pub arnoldi_iters: usize,
    /// Factorizations performed so far, including this row.
    pub lu_count: usize,
    pub wall_time_s: f64,
    pub residual_norm: f64,
    pub cumulative_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub strategy: Strategy,
    pub num_vectors: usize,
    /// Mean Arnoldi steps over the vectors, setup excluded.
    pub mean_arnoldi_iters: f64,
    /// Arnoldi steps including the setup stage.
    pub total_arnoldi_iters: usize,
    pub total_lu: usize,
    pub setup_time_s: f64,
    pub total_time_s: f64,
    /// Vector indices whose run stopped without reaching the tolerance.
    pub unconverged: Vec<usize>,
    /// Shift used for the last vector.
    pub final_delta: f64,
    /// Brent evaluations `s` (optimize-and-run only).
    pub brent_evals: Option<usize>,
    /// Vectors processed before the shift froze (incremental only).
    pub phase1_length: Option<usize>,
    pub derivative_warnings: usize,
    pub fingerprint: Vec<(&'static str, String)>,
}

impl Summary {
    /// `key = value` pairs written as CSV comments.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self.fingerprint.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("strategy", self.strategy.name().to_string());
        push("mean_arnoldi_iters", format!("{:?}", self.mean_arnoldi_iters));
        push("total_arnoldi_iters", self.total_arnoldi_iters.to_string());
        push("total_lu", self.total_lu.to_string());
        push("setup_time_s", format!("{:?}", self.setup_time_s));
        push("total_time_s", format!("{:?}", self.total_time_s));
        let unconverged: Vec<String> = self.unconverged.iter().map(usize::to_string).collect();
        push("unconverged", format!("[{}]", unconverged.join(" ")));
        push("final_delta", format!("{:?}", self.final_delta));
        if let Some(s) = self.brent_evals {
            push("brent_evals", s.to_string());
        }
        if let Some(p) = self.phase1_length {
            push("phase1_length", p.to_string());
        }
        push("derivative_warnings", self.derivative_warnings.to_string());
        out
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub records: Vec<BenchRecord>,
    pub summary: Summary,
}

pub fn build_matrix(problem: &ProblemConfig) -> Result<SparseMatrix> {
    Ok(match problem {
        ProblemConfig::ConvDiff(s) => build_convdiff(s)?,
        ProblemConfig::Aniso(s) => build_aniso(s)?,
    })
}

/// The `M` run vectors and the `N` trial vectors (disjoint RNG streams).
pub fn initial_states(cfg: &RunConfig) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let grid = cfg.problem.grid();
    let mut run = InitialStateSpec::new(cfg.seed, cfg.num_vectors);
    run.covariance_scale = cfg.covariance_scale;
    let mut trial = InitialStateSpec::trial(cfg.seed, cfg.n_trial);
    trial.covariance_scale = cfg.covariance_scale;
    Ok(match cfg.states {
        StatesKind::Gaussian => (gaussian_states(&run, &grid)?, gaussian_states(&trial, &grid)?),
        StatesKind::Normal => (
            iid_normal_states(&run, grid.unknowns()),
            iid_normal_states(&trial, grid.unknowns()),
        ),
    })
}

struct Recorder {
    records: Vec<BenchRecord>,
    lu_total: usize,
    elapsed: f64,
    unconverged: Vec<usize>,
    tol: f64,
}

impl Recorder {
    fn push(&mut self, delta: f64, iters: usize, new_lu: usize, wall: f64, residual: f64) {
        self.lu_total += new_lu;
        self.elapsed += wall;
        self.records.push(BenchRecord {
            vector_index: self.records.len(),
            delta_used: delta,
            arnoldi_iters: iters,
            lu_count: self.lu_total,
            wall_time_s: wall,
            residual_norm: residual,
            cumulative_time_s: self.elapsed,
        });
    }

    fn vector(&mut self, delta: f64, out: &KrylovOutcome, new_lu: usize, wall: f64) {
        if !(out.residual_norm < self.tol) {
            self.unconverged.push(self.records.len());
        }
        self.push(delta, out.iterations, new_lu, wall, out.residual_norm);
    }
}

/// Runs the configured strategy. Timing covers solver work only.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchRun> {
    cfg.validate()?;
    let a = build_matrix(&cfg.problem)?;
    if let Some(path) = &cfg.export_matrix {
        write_matrix_market(&a, File::create(path)?)?;
    }
    let (vectors, trials) = initial_states(cfg)?;
    let params = |delta: f64| SaiParams {
        gamma: delta * cfg.t,
        t: cfg.t,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        reorthogonalize: cfg.reorthogonalize,
    };

    let mut rec = Recorder {
        records: Vec::with_capacity(vectors.len() + 1),
        lu_total: 0,
        elapsed: 0.0,
        unconverged: Vec::new(),
        tol: cfg.tol,
    };
    let mut brent_evals = None;
    let mut phase1_length = None;
    let mut warnings = 0;
    let mut final_delta = cfg.fixed_delta;

    if !vectors.is_empty() {
        match cfg.strategy {
            Strategy::Fixed => {
                let clock = Instant::now();
                let lu = shifted_lu(&a, cfg.fixed_delta * cfg.t)?;
                rec.push(cfg.fixed_delta, 0, 1, clock.elapsed().as_secs_f64(), 0.0);
                for v in &vectors {
                    let clock = Instant::now();
                    let out = sai_expmv_factored(&a, &lu, v, &params(cfg.fixed_delta))?;
                    rec.vector(cfg.fixed_delta, &out, 0, clock.elapsed().as_secs_f64());
                }
            }
            Strategy::OptimizeAndRun => {
                let mut oc = OptimizeConfig::new(trials, cfg.k, cfg.tol, cfg.t);
                oc.brent_tol = cfg.brent_tol;
                oc.max_brent_iters = cfg.max_brent_iters;
                let clock = Instant::now();
                let opt = optimize_and_run(&a, &oc, cfg.interval)?;
                rec.push(opt.delta_star, opt.arnoldi_iters, opt.evals, clock.elapsed().as_secs_f64(), opt.objective);
                brent_evals = Some(opt.evals);
                final_delta = opt.delta_star;

                let mut lu = None;
                for v in &vectors {
                    let clock = Instant::now();
                    let fresh = usize::from(lu.is_none());
                    if lu.is_none() {
                        lu = Some(shifted_lu(&a, opt.gamma(cfg.t))?);
                    }
                    let f = lu.as_ref().expect("factorization present");
                    let out = sai_expmv_factored(&a, f, v, &params(opt.delta_star))?;
                    rec.vector(opt.delta_star, &out, fresh, clock.elapsed().as_secs_f64());
                }
            }
            Strategy::Incremental => {
                let mut ip = IncrementalParams::new(cfg.t, cfg.tol, cfg.max_iters);
                ip.reorthogonalize = cfg.reorthogonalize;
                ip.delta_gamma = cfg.delta_gamma;
                ip.stop_width = cfg.stop_width;
                let mut drv = IncrementalDriver::new(&a, cfg.interval, ip)?;
                rec.push(cfg.interval.midpoint(), 0, 0, 0.0, 0.0);
                let mut searched = 0;
                for v in &vectors {
                    let clock = Instant::now();
                    let step = drv.process(v)?;
                    let wall = clock.elapsed().as_secs_f64();
                    if step.phase == DriverPhase::Search {
                        searched += 1;
                    }
                    if step.outcome.derivative_warning {
                        warnings += 1;
                    }
                    final_delta = step.delta;
                    rec.vector(step.delta, &step.outcome, step.lu_count, wall);
                }
                phase1_length = Some(searched);
            }
        }
    }

    let vector_rows = rec.records.iter().skip(1);
    let m = vectors.len();
    let vector_iters: usize = vector_rows.clone().map(|r| r.arnoldi_iters).sum();
    let summary = Summary {
        strategy: cfg.strategy,
        num_vectors: m,
        mean_arnoldi_iters: if m == 0 { 0.0 } else { vector_iters as f64 / m as f64 },
        total_arnoldi_iters: rec.records.iter().map(|r| r.arnoldi_iters).sum(),
        total_lu: rec.lu_total,
        setup_time_s: rec.records.first().map_or(0.0, |r| r.wall_time_s),
        total_time_s: rec.elapsed,
        unconverged: rec.unconverged,
        final_delta,
        brent_evals,
        phase1_length,
        derivative_warnings: warnings,
        fingerprint: cfg.fingerprint(),
    };
    Ok(BenchRun {
        records: rec.records,
        summary,
    })
}
