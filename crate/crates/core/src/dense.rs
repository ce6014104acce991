//! Small dense kernels for the projected problem.
//!
//! The Krylov projection is at most a few hundred rows, so everything here is
//! plain row-major `Vec<f64>` arithmetic.

use std::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                found: values.len(),
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    /// Builds from a slice of equally long rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            n_rows,
            n_cols,
            values: rows.concat(),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Copy of the leading `rows x cols` block.
    pub fn block(&self, rows: usize, cols: usize) -> Self {
        assert!(rows <= self.n_rows && cols <= self.n_cols);
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            out.values[i * cols..(i + 1) * cols]
                .copy_from_slice(&self.values[i * self.n_cols..i * self.n_cols + cols]);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n_cols, other.n_rows, "inner dimensions differ");
        let (n, m, p) = (self.n_rows, self.n_cols, other.n_cols);
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            let out_row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.values[i * m + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.values[k * p..(k + 1) * p];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self {
            n_rows: n,
            n_cols: p,
            values: out,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n_cols, x.len());
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n_cols)
            .map(|j| (0..self.n_rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.n_cols + j]
    }
}

// Padé numerator coefficients b_0..b_m for the diagonal approximants used by
// scaling and squaring, with the matching 1-norm thresholds θ_m.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with diagonal Padé approximants.
///
/// Degree 3, 5, 7 or 9 is used when `‖M‖₁` is below the corresponding
/// threshold; otherwise `M` is scaled by `2⁻ˢ` so that `‖M‖₁/2ˢ ≤ θ₁₃` and the
/// degree-13 approximant is squared `s` times.
pub fn expm(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.n_rows,
            cols: m.n_cols,
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.n_rows;
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(DenseMatrix::from_diagonal(&[m.values[0].exp()]));
    }

    let norm = m.norm1();
    for &(degree, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let (u, v) = pade_low(m, coeffs);
            return pade_quotient(&u, &v);
        }
    }

    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = m.scaled(2f64.powi(-s));
    let (u, v) = pade13(&scaled);
    let mut r = pade_quotient(&u, &v)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// Odd/even parts `U`, `V` of a degree 3..9 approximant.
fn pade_low(a: &DenseMatrix, b: &[f64]) -> (DenseMatrix, DenseMatrix) {
    let n = a.n_rows;
    let a2 = a.matmul(a);
    let mut powers = vec![DenseMatrix::identity(n), a2.clone()];
    while 2 * powers.len() < b.len() {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }
    let mut u_inner = DenseMatrix::zeros(n, n);
    let mut v = DenseMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u_inner = u_inner.add_scaled(b[2 * k + 1], p);
        v = v.add_scaled(b[2 * k], p);
    }
    (a.matmul(&u_inner), v)
}

fn pade13(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let b = &PADE13;
    let n = a.n_rows;
    let ident = DenseMatrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let w1 = a6.scaled(b[13]).add_scaled(b[11], &a4).add_scaled(b[9], &a2);
    let w = a6
        .matmul(&w1)
        .add_scaled(b[7], &a6)
        .add_scaled(b[5], &a4)
        .add_scaled(b[3], &a2)
        .add_scaled(b[1], &ident);
    let u = a.matmul(&w);

    let z1 = a6.scaled(b[12]).add_scaled(b[10], &a4).add_scaled(b[8], &a2);
    let v = a6
        .matmul(&z1)
        .add_scaled(b[6], &a6)
        .add_scaled(b[4], &a4)
        .add_scaled(b[2], &a2)
        .add_scaled(b[0], &ident);
    (u, v)
}

/// `(V - U)⁻¹ (V + U)`.
fn pade_quotient(u: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    let num = v.add_scaled(1.0, u);
    let den = v.add_scaled(-1.0, u);
    solve_dense(den, num)
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: DenseMatrix, mut b: DenseMatrix) -> Result<DenseMatrix> {
    let n = a.n_rows;
    let m = b.n_cols;
    let scale = a.norm1();
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pv > 1e-300 * scale.max(1.0)) {
            return Err(Error::Breakdown { pivot: k });
        }
        if p != k {
            for j in 0..n {
                a.values.swap(k * n + j, p * n + j);
            }
            for j in 0..m {
                b.values.swap(k * m + j, p * m + j);
            }
        }
        let piv = a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
            for j in 0..m {
                let bkj = b[(k, j)];
                b[(i, j)] -= f * bkj;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..m {
            let mut s = b[(k, j)];
            for c in k + 1..n {
                s -= a[(k, c)] * b[(c, j)];
            }
            b[(k, j)] = s / a[(k, k)];
        }
    }
    Ok(b)
}

/// Relative pivot size below which the projected Hessenberg matrix is treated as singular.
pub const HESSENBERG_SINGULAR_TOL: f64 = 1e-14;

/// Explicit inverse of a square upper-Hessenberg matrix.
///
/// Gaussian elimination with partial pivoting touches only one subdiagonal
/// entry per column, so each step chooses between rows `k` and `k + 1`.
/// A pivot below `1e-14 ‖H‖₁` is reported as [`Error::Breakdown`].
pub fn hessenberg_inverse(h: &DenseMatrix) -> Result<DenseMatrix> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.n_rows,
            cols: h.n_cols,
        });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = h.n_rows;
    let threshold = HESSENBERG_SINGULAR_TOL * h.norm1();
    let mut u = h.clone();
    // swapped[k]: rows k and k+1 exchanged at step k; mult[k]: elimination factor.
    let mut swapped = vec![false; n];
    let mut mult = vec![0.0; n];
    for k in 0..n {
        if k + 1 < n && u[(k + 1, k)].abs() > u[(k, k)].abs() {
            swapped[k] = true;
            for j in k..n {
                u.values.swap(k * n + j, (k + 1) * n + j);
            }
        }
        let piv = u[(k, k)];
        if !(piv.abs() > threshold) {
            return Err(Error::Breakdown { pivot: k });
        }
        if k + 1 < n {
            let f = u[(k + 1, k)] / piv;
            mult[k] = f;
            u[(k + 1, k)] = 0.0;
            if f != 0.0 {
                for j in k + 1..n {
                    let ukj = u[(k, j)];
                    u[(k + 1, j)] -= f * ukj;
                }
            }
        }
    }

    // Apply the row operations to the identity, then back substitute every column.
    let mut inv = DenseMatrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        if swapped[k] {
            for j in 0..n {
                inv.values.swap(k * n + j, (k + 1) * n + j);
            }
        }
        let f = mult[k];
        if f != 0.0 {
            for j in 0..n {
                let v = inv[(k, j)];
                inv[(k + 1, j)] -= f * v;
            }
        }
    }
    for k in (0..n).rev() {
        let piv = u[(k, k)];
        for j in 0..n {
            let mut s = inv[(k, j)];
            for c in k + 1..n {
                s -= u[(k, c)] * inv[(c, j)];
            }
            inv[(k, j)] = s / piv;
        }
    }
    Ok(inv)
}
