/// Result of a bounded scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrentResult {
    pub x_min: f64,
    pub f_min: f64,
    /// Number of objective evaluations.
    pub evals: usize,
    /// False when the evaluation budget ran out before the bracket closed.
    pub converged: bool,
}

/// Bounded Brent minimization (golden section + successive parabolic
/// interpolation) of `f` on `[lo, hi]` with absolute x-tolerance `xtol`.
///
/// Every evaluation point lies strictly inside `[lo, hi]`. At most `max_evals`
/// evaluations are made; when the budget runs out the best point so far is
/// returned with `converged == false`.
pub fn brent_minimize<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_evals: usize) -> BrentResult
where
    F: FnMut(f64) -> f64,
{
    assert!(lo < hi, "brent_minimize needs lo < hi");
    let sqrt_eps = f64::EPSILON.sqrt();
    let golden = 0.5 * (3.0 - 5f64.sqrt());

    let (mut a, mut b) = (lo, hi);
    // xf: best point, nfc: second best, fulc: previous second best
    let mut fulc = a + golden * (b - a);
    let mut nfc = fulc;
    let mut xf = fulc;
    let mut rat: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut fx = sanitize(f(xf));
    let mut evals = 1;
    let mut ffulc = fx;
    let mut fnfc = fx;
    let mut xm = 0.5 * (a + b);
    let mut tol1 = sqrt_eps * xf.abs() + xtol / 3.0;
    let mut tol2 = 2.0 * tol1;
    let mut converged = true;

    while (xf - xm).abs() > tol2 - 0.5 * (b - a) {
        if evals >= max_evals {
            converged = false;
            break;
        }
        let mut take_golden = true;
        if e.abs() > tol1 {
            let mut r = (xf - nfc) * (fx - ffulc);
            let mut q = (xf - fulc) * (fx - fnfc);
            let mut p = (xf - fulc) * q - (xf - nfc) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = rat;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - xf) && p < q * (b - xf) {
                rat = p / q;
                let x = xf + rat;
                take_golden = false;
                if x - a < tol2 || b - x < tol2 {
                    rat = tol1 * sign_or_one(xm - xf);
                }
            }
        }
        if take_golden {
            e = if xf >= xm { a - xf } else { b - xf };
            rat = golden * e;
        }

        let x = xf + sign_or_one(rat) * rat.abs().max(tol1);
        let fu = sanitize(f(x));
        evals += 1;

        if fu <= fx {
            if x >= xf {
                a = xf;
            } else {
                b = xf;
            }
            fulc = nfc;
            ffulc = fnfc;
            nfc = xf;
            fnfc = fx;
            xf = x;
            fx = fu;
        } else {
            if x < xf {
                a = x;
            } else {
                b = x;
            }
            if fu <= fnfc || nfc == xf {
                fulc = nfc;
                ffulc = fnfc;
                nfc = x;
                fnfc = fu;
            } else if fu <= ffulc || fulc == xf || fulc == nfc {
                fulc = x;
                ffulc = fu;
            }
        }

        xm = 0.5 * (a + b);
        tol1 = sqrt_eps * xf.abs() + xtol / 3.0;
        tol2 = 2.0 * tol1;
    }

    BrentResult {
        x_min: xf,
        f_min: fx,
        evals,
        converged,
    }
}

fn sign_or_one(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

// NaN compares false everywhere and would stall the bracket updates.
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}
