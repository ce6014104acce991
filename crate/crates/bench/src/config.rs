//! Flat `key = value` run configuration.
//!
//! ```text
//! # convection-diffusion, fixed shift
//! problem = conv_diff
//! n = 200
//! peclet = 1000
//! t = 1e-4
//! tol = 1e-6
//! strategy = fixed
//! num_vectors = 20
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use sai_core::problems::{AnisoSpec, ConvDiffSpec, Diffusion, Grid, StencilScaling};
use sai_core::shift::ShiftInterval;

use crate::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemConfig {
    ConvDiff(ConvDiffSpec),
    Aniso(AnisoSpec),
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemConfig::ConvDiff(_) => "conv_diff",
            ProblemConfig::Aniso(_) => "aniso",
        }
    }

    pub fn grid(&self) -> Grid {
        match self {
            ProblemConfig::ConvDiff(s) => s.grid(),
            ProblemConfig::Aniso(s) => s.grid(),
        }
    }

    /// Default `δ̄`: 0.1 for convection–diffusion, 0.07 for anisotropic diffusion.
    pub fn default_delta(&self) -> f64 {
        match self {
            ProblemConfig::ConvDiff(_) => 0.1,
            ProblemConfig::Aniso(_) => 0.07,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Fixed,
    OptimizeAndRun,
    Incremental,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Fixed => "fixed",
            Strategy::OptimizeAndRun => "optimize_and_run",
            Strategy::Incremental => "incremental",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatesKind {
    /// Gaussian bumps with uniformly drawn centres.
    Gaussian,
    /// i.i.d. standard normal entries.
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub t: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub strategy: Strategy,
    pub fixed_delta: f64,
    pub interval: ShiftInterval,
    /// Arnoldi steps `K` per objective evaluation.
    pub k: usize,
    /// Number of trial vectors `N`.
    pub n_trial: usize,
    pub num_vectors: usize,
    pub seed: u64,
    pub states: StatesKind,
    pub covariance_scale: f64,
    pub brent_tol: f64,
    pub max_brent_iters: usize,
    pub stop_width: f64,
    pub delta_gamma: f64,
    pub reorthogonalize: bool,
    pub output: Option<PathBuf>,
    pub export_matrix: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "problem",
    "n",
    "peclet",
    "diffusion",
    "lambda",
    "theta",
    "stencil_scaling",
    "t",
    "tol",
    "max_iters",
    "strategy",
    "fixed_delta",
    "interval_lo",
    "interval_hi",
    "k",
    "n_trial",
    "num_vectors",
    "seed",
    "states",
    "covariance_scale",
    "brent_tol",
    "max_brent_iters",
    "stop_width",
    "delta_gamma",
    "reorthogonalize",
    "output",
    "export_matrix",
];

/// Splits `key = value` text into a map. `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_pair(line).ok_or_else(|| BenchError::Config(format!("line {}: expected key = value", idx + 1)))?;
        map.insert(k, v);
    }
    Ok(map)
}

/// Parses a single `key=value` override.
pub fn split_pair(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return None;
    }
    Some((k.to_ascii_lowercase(), v.to_string()))
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| BenchError::Config(format!("invalid value for {key}: {v:?}"))),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| BenchError::Config(format!("missing required key {key}")))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(BenchError::Config(format!("invalid boolean for {key}: {v:?}"))),
        }
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(parse_pairs(text)?)
    }

    /// Builds a config from a key map, applying `overrides` (`key=value`) on top.
    pub fn from_text_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut map = parse_pairs(text)?;
        for o in overrides {
            let (k, v) = split_pair(o).ok_or_else(|| BenchError::Config(format!("bad override {o:?}, expected key=value")))?;
            map.insert(k, v);
        }
        Self::from_pairs(map)
    }

    pub fn from_pairs(map: BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(BenchError::Config(format!("unknown key {k}")));
        }
        let f = Fields(map);
        let n: usize = f.required("n")?;
        let problem = match f.required::<String>("problem")?.as_str() {
            "conv_diff" => {
                let diffusion = match f.raw("diffusion").unwrap_or("piecewise") {
                    "piecewise" => Diffusion::Piecewise,
                    other => {
                        let c: f64 = other
                            .parse()
                            .map_err(|_| BenchError::Config(format!("diffusion must be `piecewise` or a number, got {other:?}")))?;
                        Diffusion::Constant { d1: c, d2: 0.5 * c }
                    }
                };
                ProblemConfig::ConvDiff(ConvDiffSpec {
                    n,
                    peclet: f.or("peclet", 1000.0)?,
                    diffusion,
                })
            }
            "aniso" => {
                let scaling = match f.raw("stencil_scaling").unwrap_or("grid") {
                    "grid" => StencilScaling::GridSpacing,
                    "unit" => StencilScaling::Unit,
                    other => return Err(BenchError::Config(format!("stencil_scaling must be grid or unit, got {other:?}"))),
                };
                ProblemConfig::Aniso(AnisoSpec {
                    n,
                    lambda: f.or("lambda", 5000.0)?,
                    theta: f.or("theta", std::f64::consts::FRAC_PI_4)?,
                    scaling,
                })
            }
            other => return Err(BenchError::Config(format!("unknown problem {other:?}"))),
        };
        match &problem {
            ProblemConfig::ConvDiff(s) => s.validate(),
            ProblemConfig::Aniso(s) => s.validate(),
        }
        .map_err(|e| BenchError::Config(e.to_string()))?;

        let strategy = match f.raw("strategy").unwrap_or("fixed") {
            "fixed" => Strategy::Fixed,
            "optimize_and_run" => Strategy::OptimizeAndRun,
            "incremental" => Strategy::Incremental,
            other => return Err(BenchError::Config(format!("unknown strategy {other:?}"))),
        };
        let states = match f.raw("states").unwrap_or("gaussian") {
            "gaussian" => StatesKind::Gaussian,
            "normal" => StatesKind::Normal,
            other => return Err(BenchError::Config(format!("states must be gaussian or normal, got {other:?}"))),
        };

        let fixed_delta = f.or("fixed_delta", problem.default_delta())?;
        let interval = ShiftInterval::new(
            f.or("interval_lo", ShiftInterval::DEFAULT_LO)?,
            f.or("interval_hi", problem.default_delta())?,
        )
        .map_err(|e| BenchError::Config(e.to_string()))?;

        let cfg = RunConfig {
            problem,
            t: f.required("t")?,
            tol: f.required("tol")?,
            max_iters: f.or("max_iters", 1000)?,
            strategy,
            fixed_delta,
            interval,
            k: f.or("k", 25)?,
            n_trial: f.or("n_trial", 1)?,
            num_vectors: f.or("num_vectors", 20)?,
            seed: f.or("seed", 0)?,
            states,
            covariance_scale: f.or("covariance_scale", 0.05)?,
            brent_tol: f.or("brent_tol", 1e-5)?,
            max_brent_iters: f.or("max_brent_iters", 50)?,
            stop_width: f.or("stop_width", 1e-5)?,
            delta_gamma: f.or("delta_gamma", 1e-7)?,
            reorthogonalize: f.flag("reorthogonalize")?,
            output: f.get("output")?,
            export_matrix: f.get("export_matrix")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad("t must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.fixed_delta > 0.0 && self.fixed_delta.is_finite()) {
            return bad("fixed_delta must be positive");
        }
        if self.k == 0 || self.n_trial == 0 {
            return bad("k and n_trial must be at least 1");
        }
        if !(self.covariance_scale > 0.0) {
            return bad("covariance_scale must be positive");
        }
        if !(self.brent_tol > 0.0) || self.max_brent_iters == 0 {
            return bad("brent_tol and max_brent_iters must be positive");
        }
        if !(self.stop_width > 0.0) || !(self.delta_gamma > 0.0) {
            return bad("stop_width and delta_gamma must be positive");
        }
        Ok(())
    }

    /// Settings that must agree for two runs to be compared.
    pub fn fingerprint(&self) -> Vec<(&'static str, String)> {
        let mut fp = vec![("problem", self.problem.name().to_string())];
        match self.problem {
            ProblemConfig::ConvDiff(s) => {
                fp.push(("n", s.n.to_string()));
                fp.push(("peclet", format!("{:?}", s.peclet)));
                let d = match s.diffusion {
                    Diffusion::Piecewise => "piecewise".to_string(),
                    Diffusion::Constant { d1, .. } => format!("{d1:?}"),
                };
                fp.push(("diffusion", d));
            }
            ProblemConfig::Aniso(s) => {
                fp.push(("n", s.n.to_string()));
                fp.push(("lambda", format!("{:?}", s.lambda)));
                fp.push(("theta", format!("{:?}", s.theta)));
                let sc = match s.scaling {
                    StencilScaling::GridSpacing => "grid",
                    StencilScaling::Unit => "unit",
                };
                fp.push(("stencil_scaling", sc.to_string()));
            }
        }
        fp.push(("t", format!("{:?}", self.t)));
        fp.push(("tol", format!("{:?}", self.tol)));
        fp.push(("seed", self.seed.to_string()));
        let states = match self.states {
            StatesKind::Gaussian => "gaussian",
            StatesKind::Normal => "normal",
        };
        fp.push(("states", states.to_string()));
        fp.push(("covariance_scale", format!("{:?}", self.covariance_scale)));
        fp.push(("num_vectors", self.num_vectors.to_string()));
        fp
    }
}

/// Keys written by [`RunConfig::fingerprint`].
pub const FINGERPRINT_KEYS: &[&str] = &[
    "problem",
    "n",
    "peclet",
    "diffusion",
    "lambda",
    "theta",
    "stencil_scaling",
    "t",
    "tol",
    "seed",
    "states",
    "covariance_scale",
    "num_vectors",
];

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "problem = conv_diff\nn = 10\nt = 1e-4\ntol = 1e-6 # inline comment\n";

    #[test]
    fn defaults_follow_problem() {
        let c = RunConfig::from_text(BASE).unwrap();
        assert_eq!(c.fixed_delta, 0.1);
        assert_eq!(c.interval, ShiftInterval::new(0.01, 0.1).unwrap());
        assert_eq!(c.strategy, Strategy::Fixed);
        let a = RunConfig::from_text("problem = aniso\nn = 8\nt = 0.1\ntol = 1e-8\n").unwrap();
        assert_eq!(a.fixed_delta, 0.07);
        assert_eq!(a.interval.hi, 0.07);
    }

    #[test]
    fn overrides_win() {
        let c = RunConfig::from_text_with_overrides(BASE, &["strategy=incremental".into(), "n = 12".into()]).unwrap();
        assert_eq!(c.strategy, Strategy::Incremental);
        assert!(matches!(c.problem, ProblemConfig::ConvDiff(s) if s.n == 12));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_text("problem = conv_diff\nn = 10\nt = 1e-4\n").is_err());
        assert!(RunConfig::from_text(&format!("{BASE}colour = red\n")).is_err());
        assert!(RunConfig::from_text(&format!("{BASE}tol = -1\n")).is_err());
        assert!(RunConfig::from_text(&format!("{BASE}strategy = guess\n")).is_err());
        assert!(RunConfig::from_text(&format!("{BASE}interval_lo = 0.2\n")).is_err());
        assert!(RunConfig::from_text("just words\n").is_err());
        assert!(RunConfig::from_text_with_overrides(BASE, &["novalue".into()]).is_err());
    }

    #[test]
    fn fingerprint_keys_listed() {
        for kind in [BASE, "problem = aniso\nn = 8\nt = 0.1\ntol = 1e-8\n"] {
            let c = RunConfig::from_text(kind).unwrap();
            for (k, _) in c.fingerprint() {
                assert!(FINGERPRINT_KEYS.contains(&k), "{k}");
            }
        }
    }
}
