//! Sparse LU factorization of `M = I + γA`, reused across many solves.
//!
//! Left-looking (Gilbert–Peierls) elimination on the compressed-column form of
//! `M`. Columns are visited in an approximate-minimum-degree order computed on
//! the pattern of `M + Mᵀ`; each column is obtained by a sparse triangular
//! solve with the part of `L` built so far, followed by threshold partial
//! pivoting that prefers the diagonal entry of the symmetrically permuted
//! matrix. The result satisfies `P M Q = L U` with unit lower triangular `L`.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Default relative threshold for accepting the diagonal as pivot.
pub const DEFAULT_PIVOT_THRESHOLD: f64 = 0.1;

/// Compressed-column storage used for the triangular factors.
#[derive(Debug, Clone, Default)]
struct CscFactor {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Factorization of `I + γA`.
///
/// Immutable after construction. Solves take `&self` and may run concurrently;
/// the only shared mutable state is a relaxed solve counter used for cost
/// accounting.
#[derive(Debug)]
pub struct LuFactorization {
    n: usize,
    gamma: f64,
    /// `pinv[i]` is the pivot step at which original row `i` was eliminated.
    pinv: Vec<usize>,
    /// `q[k]` is the original column eliminated at step `k`.
    q: Vec<usize>,
    l: CscFactor,
    u: CscFactor,
    solves: AtomicUsize,
}

impl Clone for LuFactorization {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            gamma: self.gamma,
            pinv: self.pinv.clone(),
            q: self.q.clone(),
            l: self.l.clone(),
            u: self.u.clone(),
            solves: AtomicUsize::new(self.solves.load(Ordering::Relaxed)),
        }
    }
}

impl LuFactorization {
    /// Factors an arbitrary square sparse matrix.
    ///
    /// `gamma` is only recorded; pass `0.0` when `m` is not of the form `I + γA`.
    pub fn factor(m: &SparseMatrix, gamma: f64, pivot_threshold: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.n_rows(),
                cols: m.n_cols(),
            });
        }
        if m.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(pivot_threshold > 0.0 && pivot_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pivot threshold must lie in (0, 1], got {pivot_threshold}"
            )));
        }
        let n = m.n_rows();
        let q = amd_order(m)?;
        // CSC of M is the CSR of Mᵀ.
        let csc = m.transpose();
        let (pinv, l, u) = left_looking(n, &csc, &q, pivot_threshold)?;
        Ok(Self {
            n,
            gamma,
            pinv,
            q,
            l,
            u,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Stored entries of `L` plus `U` (both diagonals included).
    pub fn factor_nnz(&self) -> usize {
        self.l.values.len() + self.u.values.len()
    }

    /// Number of solves performed with this factorization so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        let mut work = vec![0.0; self.n];
        self.solve_into(b, &mut x, &mut work)?;
        Ok(x)
    }

    /// Solves `M x = b` into `x`, using `work` (length `n`) as scratch.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64], work: &mut [f64]) -> Result<()> {
        for len in [b.len(), x.len(), work.len()] {
            if len != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: len,
                });
            }
        }
        self.solves.fetch_add(1, Ordering::Relaxed);

        for (i, &bi) in b.iter().enumerate() {
            work[self.pinv[i]] = bi;
        }
        // L is unit lower triangular with the diagonal stored first.
        let l = &self.l;
        for j in 0..self.n {
            let xj = work[j];
            if xj != 0.0 {
                for p in l.col_ptr[j] + 1..l.col_ptr[j + 1] {
                    work[l.row_idx[p]] -= l.values[p] * xj;
                }
            }
        }
        // U has its diagonal stored last in each column.
        let u = &self.u;
        for j in (0..self.n).rev() {
            let last = u.col_ptr[j + 1] - 1;
            work[j] /= u.values[last];
            let xj = work[j];
            if xj != 0.0 {
                for p in u.col_ptr[j]..last {
                    work[u.row_idx[p]] -= u.values[p] * xj;
                }
            }
        }
        for (k, &col) in self.q.iter().enumerate() {
            x[col] = work[k];
        }
        Ok(())
    }
}

/// Factors `I + γA`; `A` is left untouched.
pub fn shifted_lu(a: &SparseMatrix, gamma: f64) -> Result<LuFactorization> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("shift must be positive, got {gamma}")));
    }
    let m = a.shifted_identity(gamma)?;
    LuFactorization::factor(&m, gamma, DEFAULT_PIVOT_THRESHOLD)
}

pub fn lu_solve(f: &LuFactorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

fn amd_order(m: &SparseMatrix) -> Result<Vec<usize>> {
    let n = m.n_rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // AMD orders the pattern of M + Mᵀ, so feeding the CSR arrays as CSC is fine.
    let control = amd::Control::default();
    let (p, _pinv, _info) = amd::order::<usize>(n, m.row_ptr(), m.col_idx(), &control)
        .map_err(|status| Error::InvalidStructure(format!("AMD ordering failed: {status:?}")))?;
    Ok(p)
}

/// Core elimination. `a` holds the columns of `M` as rows (CSC via transpose).
fn left_looking(
    n: usize,
    a: &SparseMatrix,
    q: &[usize],
    tol: f64,
) -> Result<(Vec<usize>, CscFactor, CscFactor)> {
    const UNSET: usize = usize::MAX;
    let guess = 4 * a.nnz() + n;
    let mut l = CscFactor {
        col_ptr: Vec::with_capacity(n + 1),
        row_idx: Vec::with_capacity(guess),
        values: Vec::with_capacity(guess),
    };
    let mut u = CscFactor {
        col_ptr: Vec::with_capacity(n + 1),
        row_idx: Vec::with_capacity(guess),
        values: Vec::with_capacity(guess),
    };
    let mut pinv = vec![UNSET; n];
    let mut x = vec![0.0; n];
    let mut xi = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut pstack = vec![0usize; n];
    let mut marked = vec![false; n];

    for (k, &col) in q.iter().enumerate() {
        l.col_ptr.push(l.values.len());
        u.col_ptr.push(u.values.len());

        // Reach of column `col` in the graph of L: xi[top..n] in topological order.
        let mut top = n;
        for (row, _) in a.row(col) {
            if !marked[row] {
                top = dfs(row, &l, &pinv, top, &mut xi, &mut stack, &mut pstack, &mut marked);
            }
        }
        for &i in &xi[top..n] {
            marked[i] = false;
            x[i] = 0.0;
        }
        for (row, v) in a.row(col) {
            x[row] = v;
        }
        // x = L \ M(:, col) restricted to the reach
        for &j in &xi[top..n] {
            let jj = pinv[j];
            if jj == UNSET {
                continue;
            }
            let xj = x[j];
            for p in l.col_ptr[jj] + 1..l.col_ptr[jj + 1] {
                x[l.row_idx[p]] -= l.values[p] * xj;
            }
        }

        let mut ipiv = UNSET;
        let mut best = -1.0;
        for &i in &xi[top..n] {
            if pinv[i] == UNSET {
                let t = x[i].abs();
                if t > best {
                    best = t;
                    ipiv = i;
                }
            } else {
                u.row_idx.push(pinv[i]);
                u.values.push(x[i]);
            }
        }
        if ipiv == UNSET || best <= 0.0 || !best.is_finite() {
            return Err(Error::SingularPivot { column: k });
        }
        if pinv[col] == UNSET && x[col].abs() >= best * tol {
            ipiv = col;
        }
        let pivot = x[ipiv];
        u.row_idx.push(k);
        u.values.push(pivot);
        pinv[ipiv] = k;
        l.row_idx.push(ipiv);
        l.values.push(1.0);
        for &i in &xi[top..n] {
            if pinv[i] == UNSET {
                l.row_idx.push(i);
                l.values.push(x[i] / pivot);
            }
            x[i] = 0.0;
        }
    }
    l.col_ptr.push(l.values.len());
    u.col_ptr.push(u.values.len());
    for r in &mut l.row_idx {
        *r = pinv[*r];
    }
    Ok((pinv, l, u))
}

/// Non-recursive depth-first search from row `start` through the columns of `L`.
#[allow(clippy::too_many_arguments)]
fn dfs(
    start: usize,
    l: &CscFactor,
    pinv: &[usize],
    mut top: usize,
    xi: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
    marked: &mut [bool],
) -> usize {
    let mut head: isize = 0;
    stack[0] = start;
    while head >= 0 {
        let h = head as usize;
        let j = stack[h];
        let jcol = pinv[j];
        if !marked[j] {
            marked[j] = true;
            pstack[h] = if jcol == usize::MAX { 0 } else { l.col_ptr[jcol] };
        }
        let end = if jcol == usize::MAX { 0 } else { l.col_ptr[jcol + 1] };
        let mut done = true;
        let mut p = pstack[h];
        while p < end {
            let i = l.row_idx[p];
            if !marked[i] {
                pstack[h] = p + 1;
                head += 1;
                stack[head as usize] = i;
                done = false;
                break;
            }
            p += 1;
        }
        if done {
            head -= 1;
            top -= 1;
            xi[top] = j;
        }
    }
    top
}
