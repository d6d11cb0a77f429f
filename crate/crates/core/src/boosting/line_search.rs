use super::loss::Loss;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const TOLERANCE: f64 = 1e-8;
const MAX_ITER: usize = 100;
const MAX_STEP: f64 = 1e6;

/// Per-output step lengths `rho_j = argmin_r sum_i l(y_ij, f_ij + r g_ij)`.
///
/// `weak` is either `n x d` (one weak output per target) or `n x 1`, in which
/// case the single weak output is shared by every target. Square losses use
/// the least-squares closed form, the others a bracketed Brent minimization.
/// A step that does not decrease the loss is replaced by 0.
pub fn line_search_rho(loss: Loss, y: &DenseMatrix, f_prev: &DenseMatrix, weak: &DenseMatrix) -> Result<Vec<f64>> {
    loss.check_targets(y)?;
    let (n, d) = y.shape();
    if f_prev.shape() != (n, d) || weak.n_rows() != n || (weak.n_cols() != d && weak.n_cols() != 1) {
        return Err(Error::Shape("line search inputs disagree in shape".into()));
    }
    let g = |i: usize, j: usize| if weak.n_cols() == 1 { weak.get(i, 0) } else { weak.get(i, j) };
    Ok((0..d)
        .map(|j| {
            if loss.is_square() {
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..n {
                    let gi = g(i, j);
                    num += (y.get(i, j) - f_prev.get(i, j)) * gi;
                    den += gi * gi;
                }
                if den > 0.0 {
                    num / den
                } else {
                    1.0
                }
            } else {
                let objective = |r: f64| -> f64 { (0..n).map(|i| loss.point(y.get(i, j), f_prev.get(i, j) + r * g(i, j))).sum() };
                let r = minimize_scalar(objective);
                if objective(r) < objective(0.0) {
                    r
                } else {
                    0.0
                }
            }
        })
        .collect())
}

/// Minimizes a unimodal function: the bracket `[-1, 1]` is widened
/// geometrically until it holds an interior minimum, then refined with Brent's
/// method (golden section with parabolic steps).
pub fn minimize_scalar(f: impl Fn(f64) -> f64) -> f64 {
    let (a, c) = bracket(&f);
    brent(&f, a, c)
}

fn bracket(f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut a, mut b, mut c) = (-1.0, 0.0, 1.0);
    let (mut fa, mut fb, mut fc) = (f(a), f(b), f(c));
    while fa < fb && a.abs() < MAX_STEP {
        (c, b, fc, fb) = (b, a, fb, fa);
        a = (2.0 * a).max(-MAX_STEP);
        fa = f(a);
    }
    while fc < fb && c.abs() < MAX_STEP {
        (a, b, fa, fb) = (b, c, fb, fc);
        c = (2.0 * c).min(MAX_STEP);
        fc = f(c);
    }
    let _ = (fa, fc);
    (a, c)
}

fn brent(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..MAX_ITER {
        let m = 0.5 * (a + b);
        let tol = TOLERANCE * x.abs() + 1e-12;
        let tol2 = 2.0 * tol;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol {
            // parabola through (v, fv), (w, fw), (x, fx)
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol { x + d } else if d > 0.0 { x + tol } else { x - tol };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    x
}
