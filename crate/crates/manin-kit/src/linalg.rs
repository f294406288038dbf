//! Shared dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Numerical rank via SVD with relative threshold `rel`.
pub fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * max).count()
}

/// Orthonormal basis of the column space (relative threshold `rel`).
pub fn column_space(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u");
    let max = svd.singular_values.max();
    let k = svd
        .singular_values
        .iter()
        .filter(|&&s| max > 0.0 && s > rel * max)
        .count();
    u.columns(0, k).into_owned()
}

/// Orthonormal basis of the (right) null space.
pub fn null_space(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad with zero rows so the thin SVD returns a full n x n V^T
    let work = if m.nrows() < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.rows_mut(0, m.nrows()).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let max = svd.singular_values.max();
    let r = svd
        .singular_values
        .iter()
        .filter(|&&s| max > 0.0 && s > rel * max)
        .count();
    // rows r..min(nrows,ncols) of V^T, plus any columns beyond nrows
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in r..vt.nrows() {
        cols.push(vt.row(i).transpose());
    }
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Least-squares solution of `a x = b` via SVD pseudo-inverse.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, rel * svd.singular_values.max().max(f64::MIN_POSITIVE))
        .expect("svd solve")
}

/// Least-squares residual `|a x - b|` of the lstsq solution.
pub fn lstsq_with_residual(a: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> (DVector<f64>, f64) {
    let x = lstsq(a, b, rel);
    let r = (a * &x - b).norm();
    (x, r)
}

/// Largest principal angle (in radians, via smallest singular value of Q1^T Q2)
/// between the column spans of two matrices. Inputs need not be orthonormal.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) -> f64 {
    let qa = column_space(a, rel);
    let qb = column_space(b, rel);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    let prod = qa.transpose() * qb;
    let sv = prod.singular_values();
    let smin = sv.min().clamp(-1.0, 1.0);
    smin.acos()
}

/// Damped Newton iteration for `f(x) = 0` with finite-difference Jacobian.
pub fn newton_solve<F>(f: F, x0: &DVector<f64>, tol: &Tolerances) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut x = x0.clone();
    let mut r = f(&x);
    let mut rnorm = r.norm();
    for it in 0..tol.newton_max_iter {
        if rnorm < tol.newton {
            return Ok(x);
        }
        let n = x.len();
        let m = r.len();
        let h = 1e-7 * (1.0 + x.norm());
        let mut jac = DMatrix::zeros(m, n);
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (f(&xp) - f(&xm)) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = lstsq(&jac, &r, 1e-12);
        // backtracking if the residual grows
        let mut lambda = 1.0;
        loop {
            let xn = &x - lambda * &step;
            let rn = f(&xn);
            if rn.norm() <= rnorm * (1.0 - 0.25 * lambda) || lambda < 1e-4 {
                x = xn;
                r = rn;
                rnorm = r.norm();
                break;
            }
            lambda *= 0.5;
        }
        if it == tol.newton_max_iter - 1 && rnorm >= tol.newton {
            return Err(Error::NewtonDivergence(tol.newton_max_iter, rnorm));
        }
    }
    if rnorm < tol.newton {
        Ok(x)
    } else {
        Err(Error::NewtonDivergence(tol.newton_max_iter, rnorm))
    }
}

/// Frobenius norm of a matrix difference.
pub fn mat_dist(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_projection() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.ncols(), 1);
        assert!((ns.column(0)[2].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn newton_sqrt() {
        let tol = Tolerances::default();
        let f = |x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0] - 2.0]);
        let x = newton_solve(f, &DVector::from_vec(vec![1.0]), &tol).unwrap();
        assert!((x[0] - 2.0_f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn principal_angle_detects_equal_spans() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, -1.0, 0.0, 0.0]);
        assert!(max_principal_angle(&a, &b, 1e-9) < 1e-10);
    }
}
