//! Finite-difference test operators on uniform square grids, and initial
//! states for them.
//!
//! Unknowns are the `n × n` interior nodes, numbered `i + n·j` with `i` along
//! `x`. Homogeneous Dirichlet values are eliminated. The stored matrix is `A`
//! in `du/dt = -Au`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Stream offset that keeps trial vectors disjoint from the run vectors of
/// the same seed.
pub const TRIAL_STREAM_OFFSET: u64 = 1 << 32;

/// Uniform grid of `n` interior nodes per axis on `[lo, hi]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Grid {
    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.n + 1) as f64
    }

    /// Coordinate of node `k`, where `0` and `n + 1` are the boundary.
    pub fn coord(&self, k: usize) -> f64 {
        self.lo + (self.hi - self.lo) * k as f64 / (self.n + 1) as f64
    }

    /// Coordinate of the face between nodes `k` and `k + 1`.
    pub fn face(&self, k: usize) -> f64 {
        self.lo + (self.hi - self.lo) * (2 * k + 1) as f64 / (2 * (self.n + 1)) as f64
    }

    pub fn unknowns(&self) -> usize {
        self.n * self.n
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n * j
    }
}

/// Diffusion coefficients of the convection–diffusion operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diffusion {
    /// `D₁ = 1000` on the closed square `[¼, ¾]²`, `0.1` elsewhere; `D₂ = D₁/2`.
    Piecewise,
    Constant { d1: f64, d2: f64 },
}

impl Diffusion {
    fn at(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            Diffusion::Piecewise => {
                let inside = (0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y);
                let d1 = if inside { 1000.0 } else { 0.1 };
                (d1, 0.5 * d1)
            }
            Diffusion::Constant { d1, d2 } => (d1, d2),
        }
    }
}

/// `u_t = (D₁u_x)_x + (D₂u_y)_y + (Pe/2)(v·∇u + ∇·(vu))` on `[0,1]²` with
/// `v = (x + y, x − y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvDiffSpec {
    pub n: usize,
    pub peclet: f64,
    pub diffusion: Diffusion,
}

impl ConvDiffSpec {
    pub fn new(n: usize, peclet: f64) -> Self {
        Self {
            n,
            peclet,
            diffusion: Diffusion::Piecewise,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid { n: self.n, lo: 0.0, hi: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 3, got {}", self.n)));
        }
        if !self.peclet.is_finite() {
            return Err(Error::InvalidParameter("Peclet number must be finite".into()));
        }
        if let Diffusion::Constant { d1, d2 } = self.diffusion {
            if !(d1 >= 0.0 && d2 >= 0.0 && d1.is_finite() && d2.is_finite()) {
                return Err(Error::InvalidParameter("diffusion coefficients must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

fn velocity(x: f64, y: f64) -> (f64, f64) {
    (x + y, x - y)
}

/// Assembles `A = -L_h` for the convection–diffusion problem.
///
/// Diffusion uses the flux form with coefficients sampled at face midpoints.
/// Convection uses central differences of the split form, which makes its
/// contribution exactly skew-symmetric.
pub fn build_convdiff(spec: &ConvDiffSpec) -> Result<SparseMatrix> {
    spec.validate()?;
    let g = spec.grid();
    let n = g.n;
    let h = g.h();
    let h2 = h * h;
    let conv = spec.peclet / (4.0 * h);
    let mut trip = Vec::with_capacity(5 * g.unknowns());

    for j in 1..=n {
        let y = g.coord(j);
        for i in 1..=n {
            let x = g.coord(i);
            let row = g.index(i - 1, j - 1);
            let (d_w, _) = spec.diffusion.at(g.face(i - 1), y);
            let (d_e, _) = spec.diffusion.at(g.face(i), y);
            let (_, d_s) = spec.diffusion.at(x, g.face(j - 1));
            let (_, d_n) = spec.diffusion.at(x, g.face(j));
            trip.push((row, row, (d_w + d_e + d_s + d_n) / h2));

            let (vx, vy) = velocity(x, y);
            if i > 1 {
                let (vx_w, _) = velocity(g.coord(i - 1), y);
                trip.push((row, g.index(i - 2, j - 1), -d_w / h2 + conv * (vx + vx_w)));
            }
            if i < n {
                let (vx_e, _) = velocity(g.coord(i + 1), y);
                trip.push((row, g.index(i, j - 1), -d_e / h2 - conv * (vx + vx_e)));
            }
            if j > 1 {
                let (_, vy_s) = velocity(x, g.coord(j - 1));
                trip.push((row, g.index(i - 1, j - 2), -d_s / h2 + conv * (vy + vy_s)));
            }
            if j < n {
                let (_, vy_n) = velocity(x, g.coord(j + 1));
                trip.push((row, g.index(i - 1, j), -d_n / h2 - conv * (vy + vy_n)));
            }
        }
    }
    SparseMatrix::from_triplets(g.unknowns(), &trip)
}

/// Normalization of the nine-point stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StencilScaling {
    /// Divided by `h²`, a consistent discretization of the PDE.
    #[default]
    GridSpacing,
    /// Unit spacing (`h = 1`), as produced by common AMG test galleries.
    /// Equals `h²` times the [`StencilScaling::GridSpacing`] matrix.
    Unit,
}

/// `u_t = div(QᵀΛQ ∇u)` on `[-1,1]²` with `Λ = diag(1, λ)` and `Q` the
/// rotation by `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoSpec {
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub scaling: StencilScaling,
}

impl AnisoSpec {
    pub fn new(n: usize, lambda: f64, theta: f64) -> Self {
        Self {
            n,
            lambda,
            theta,
            scaling: StencilScaling::GridSpacing,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid { n: self.n, lo: -1.0, hi: 1.0 }
    }

    /// Entries `(c₁₁, c₂₂, c₁₂)` of the diffusion tensor.
    pub fn tensor(&self) -> (f64, f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let l = self.lambda;
        (c * c + l * s * s, s * s + l * c * c, (l - 1.0) * s * c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 3, got {}", self.n)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) || !self.theta.is_finite() {
            return Err(Error::InvalidParameter("lambda must be positive and theta finite".into()));
        }
        Ok(())
    }
}

/// Nine-point discretization of `-div(C∇u)`: central second differences for
/// the axis terms and the four-corner cross difference for `2c₁₂u_xy`.
pub fn build_aniso(spec: &AnisoSpec) -> Result<SparseMatrix> {
    spec.validate()?;
    let g = spec.grid();
    let n = g.n as isize;
    let h2 = match spec.scaling {
        StencilScaling::GridSpacing => g.h() * g.h(),
        StencilScaling::Unit => 1.0,
    };
    let (c11, c22, c12) = spec.tensor();
    let corner = c12 / (2.0 * h2);
    let stencil = [
        (0, 0, (2.0 * c11 + 2.0 * c22) / h2),
        (-1, 0, -c11 / h2),
        (1, 0, -c11 / h2),
        (0, -1, -c22 / h2),
        (0, 1, -c22 / h2),
        (1, 1, -corner),
        (-1, -1, -corner),
        (-1, 1, corner),
        (1, -1, corner),
    ];
    let mut trip = Vec::with_capacity(9 * g.unknowns());
    for j in 0..n {
        for i in 0..n {
            let row = (i + n * j) as usize;
            for &(di, dj, val) in &stencil {
                let (ii, jj) = (i + di, j + dj);
                if (0..n).contains(&ii) && (0..n).contains(&jj) && val != 0.0 {
                    trip.push((row, (ii + n * jj) as usize, val));
                }
            }
        }
    }
    SparseMatrix::from_triplets(g.unknowns(), &trip)
}

/// Seeded Gaussian-bump initial states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialStateSpec {
    pub seed: u64,
    /// `s` in the covariance `Σ = s·I`.
    pub covariance_scale: f64,
    pub count: usize,
    /// RNG stream of the first vector; vector `i` uses `first_stream + i`.
    pub first_stream: u64,
}

impl InitialStateSpec {
    pub fn new(seed: u64, count: usize) -> Self {
        Self {
            seed,
            covariance_scale: 0.05,
            count,
            first_stream: 0,
        }
    }

    /// Same seed, streams disjoint from [`InitialStateSpec::new`].
    pub fn trial(seed: u64, count: usize) -> Self {
        Self {
            first_stream: TRIAL_STREAM_OFFSET,
            ..Self::new(seed, count)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.covariance_scale > 0.0 && self.covariance_scale.is_finite()) {
            return Err(Error::InvalidParameter("covariance_scale must be positive".into()));
        }
        Ok(())
    }

    fn rng(&self, i: usize) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.first_stream.wrapping_add(i as u64));
        rng
    }
}

/// Values at the grid nodes of the density of `N(μ, sI)`.
pub fn gaussian_bump(grid: &Grid, mean: (f64, f64), scale: f64) -> Vec<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * scale);
    let mut v = vec![0.0; grid.unknowns()];
    for j in 1..=grid.n {
        let dy = grid.coord(j) - mean.1;
        for i in 1..=grid.n {
            let dx = grid.coord(i) - mean.0;
            v[grid.index(i - 1, j - 1)] = norm * (-(dx * dx + dy * dy) / (2.0 * scale)).exp();
        }
    }
    v
}

/// `spec.count` bumps with means drawn uniformly from the domain. Vector `i`
/// depends only on the seed and its stream, not on `count`.
pub fn gaussian_states(spec: &InitialStateSpec, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    Ok((0..spec.count)
        .map(|i| {
            let mut rng = spec.rng(i);
            let mx = rng.random_range(grid.lo..=grid.hi);
            let my = rng.random_range(grid.lo..=grid.hi);
            gaussian_bump(grid, (mx, my), spec.covariance_scale)
        })
        .collect())
}

/// Alternative states with i.i.d. standard normal entries.
pub fn iid_normal_states(spec: &InitialStateSpec, len: usize) -> Vec<Vec<f64>> {
    (0..spec.count)
        .map(|i| {
            let mut rng = spec.rng(i);
            (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect()
}
