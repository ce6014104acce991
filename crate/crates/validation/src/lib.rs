//! Reference computations that share no numerical kernels with `sai-core`:
//! truncated Taylor series with compensated summation, Gauss–Jordan
//! inversion and plain dense products on row-major `Vec<f64>` storage.

use sai_core::SparseMatrix;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.a[i * n + k] * o.a[k * n + j];
                }
                out.a[i * n + j] = s;
            }
        }
        out
    }

    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|k| self.a[i * self.n + k] * x[k]).sum()).collect()
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            n: self.n,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `exp(M)` by squaring a compensated 150-term Taylor series of `M / 2^s`
/// with `‖M / 2^s‖₁ ≤ 1`.
pub fn taylor_expm(m: &Mat) -> Mat {
    let n = m.n;
    let norm = m.norm1();
    let s = if norm > 1.0 { norm.log2().ceil() as i32 } else { 0 };
    let x = m.scale(0.5f64.powi(s));

    let mut sum = Mat::identity(n);
    let mut comp = vec![0.0; n * n];
    let mut term = Mat::identity(n);
    for k in 1..150 {
        term = term.mul(&x).scale(1.0 / k as f64);
        for ((acc, c), t) in sum.a.iter_mut().zip(comp.iter_mut()).zip(&term.a) {
            // Kahan summation
            let y = t - *c;
            let z = *acc + y;
            *c = (z - *acc) - y;
            *acc = z;
        }
        if term.norm_max() == 0.0 {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.mul(&sum);
    }
    sum
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &Mat) -> Option<Mat> {
    let n = m.n;
    let mut a = m.a.clone();
    let mut inv = Mat::identity(n).a;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col] == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let d = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[i * n + k] -= f * a[col * n + k];
                        inv[i * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    Some(Mat { n, a: inv })
}

/// `exp(-tA)v` by Taylor steps of size `dt ≤ 0.5 / ‖A‖∞`, using only
/// sparse products.
pub fn taylor_expmv(a: &SparseMatrix, v: &[f64], t: f64) -> Vec<f64> {
    let norm_inf = (0..a.n_rows())
        .map(|r| a.row(r).map(|(_, x)| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let steps = ((t * norm_inf) / 0.5).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut y = v.to_vec();
    for _ in 0..steps {
        let mut term = y.clone();
        let mut acc = y.clone();
        for k in 1..60 {
            let at = a.spmv(&term).expect("dimensions agree");
            let f = -dt / k as f64;
            for (ti, ai) in term.iter_mut().zip(&at) {
                *ti = f * ai;
            }
            for (yi, ti) in acc.iter_mut().zip(&term) {
                *yi += ti;
            }
            let tn = term.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let an = acc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if tn <= 1e-18 * an {
                break;
            }
        }
        y = acc;
    }
    y
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_scalar() {
        let m = Mat { n: 1, a: vec![-7.5] };
        let e = taylor_expm(&m);
        assert!((e.a[0] - (-7.5f64).exp()).abs() <= 1e-15 * (-7.5f64).exp() * 10.0);
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat {
            n: 3,
            a: vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0],
        };
        let p = m.mul(&gauss_jordan_inverse(&m).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert!((p.at(i, j) - f64::from(u8::from(i == j))).abs() < 1e-14);
            }
        }
        assert!(gauss_jordan_inverse(&Mat::zeros(2)).is_none());
    }

    #[test]
    fn taylor_expmv_diagonal() {
        let a = SparseMatrix::from_diagonal(&[1.0, 50.0, 400.0]);
        let y = taylor_expmv(&a, &[1.0, 1.0, 1.0], 0.01);
        for (yi, d) in y.iter().zip([1.0f64, 50.0, 400.0]) {
            assert!((yi - (-0.01 * d).exp()).abs() < 1e-14);
        }
    }
}
