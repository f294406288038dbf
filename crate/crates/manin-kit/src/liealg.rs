//! Metrized Lie algebras, Manin pairs, and Lagrangian subspace linear algebra.
//!
//! Everything here lives at the vector-space level: a Lie algebra is a set of
//! structure constants together with a nondegenerate invariant bilinear form.
//! The catalog at the bottom provides the concrete algebras used throughout
//! the verification suites; their structure constants are written down by
//! hand and cross-checked elsewhere against matrix commutators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg;

/// A finite-dimensional Lie algebra with a nondegenerate invariant metric.
///
/// Brackets are encoded as `[e_a, e_b] = sum_k c[a][(b,k)] e_k`.
#[derive(Debug, Clone)]
pub struct MetrizedLieAlgebra {
    pub dim: usize,
    /// `structure_constants[a]` is the dim x dim matrix with entry (b, k).
    pub structure_constants: Vec<DMatrix<f64>>,
    /// Symmetric nondegenerate bilinear form `B[a][b] = <e_a, e_b>`.
    pub metric: DMatrix<f64>,
    pub label: String,
}

impl MetrizedLieAlgebra {
    /// Bracket of two coordinate vectors.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(self.dim);
        for a in 0..self.dim {
            if x[a] == 0.0 {
                continue;
            }
            // z += x_a * c[a]^T y
            z += x[a] * (self.structure_constants[a].transpose() * y);
        }
        z
    }

    /// Metric pairing of two coordinate vectors.
    pub fn pair(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.metric * y)[0]
    }

    /// Basis bracket `[e_a, e_b]` as a coordinate vector.
    pub fn basis_bracket(&self, a: usize, b: usize) -> DVector<f64> {
        self.structure_constants[a].row(b).transpose()
    }

    /// Matrix of `ad_x` in the chosen basis.
    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for b in 0..self.dim {
            let eb = DVector::from_fn(self.dim, |i, _| if i == b { 1.0 } else { 0.0 });
            m.set_column(b, &self.bracket(x, &eb));
        }
        m
    }
}

/// A linear subspace of an ambient space, stored as an orthonormal
/// column-span matrix (orthonormal for the standard inner product, not the
/// indefinite metric).
#[derive(Debug, Clone)]
pub struct Subspace {
    pub ambient_dim: usize,
    pub basis: DMatrix<f64>,
}

impl Subspace {
    /// Build from a raw spanning matrix; columns are re-orthonormalized by
    /// QR (which keeps already-orthogonal inputs aligned) and rank-checked.
    pub fn new(span: DMatrix<f64>, tol: &Tolerances) -> Result<Subspace> {
        let expected = span.ncols();
        if linalg::rank(&span, tol.rank_rel) != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: linalg::rank(&span, tol.rank_rel),
            });
        }
        let qr = span.clone().qr();
        Ok(Subspace {
            ambient_dim: span.nrows(),
            basis: qr.q(),
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Does the subspace contain `v` (residual below `eps`)?
    pub fn contains(&self, v: &DVector<f64>, eps: f64) -> bool {
        let proj = &self.basis * (self.basis.transpose() * v);
        (v - proj).norm() <= eps * (1.0 + v.norm())
    }

    /// Orthogonal-projection residual of `v` off the subspace.
    pub fn off_residual(&self, v: &DVector<f64>) -> f64 {
        let proj = &self.basis * (self.basis.transpose() * v);
        (v - proj).norm()
    }
}

/// A Manin pair: metrized Lie algebra with a Lagrangian Lie subalgebra.
#[derive(Debug, Clone)]
pub struct ManinPair {
    pub d: MetrizedLieAlgebra,
    pub g: Subspace,
}

/// Diagnostics reported by [`is_lagrangian_subalgebra`].
#[derive(Debug, Clone)]
pub struct LagrangianDiagnostics {
    pub isotropy_residual: f64,
    pub dim_defect: isize,
    pub closure_residual: f64,
}

/// Validate and construct a metrized Lie algebra.
///
/// Checks antisymmetry, the Jacobi identity, metric symmetry and
/// nondegeneracy, and ad-invariance of the metric, each on all basis triples.
pub fn make_metrized_algebra(
    dim: usize,
    structure_constants: Vec<DMatrix<f64>>,
    metric: DMatrix<f64>,
    label: &str,
    tol: &Tolerances,
) -> Result<MetrizedLieAlgebra> {
    if structure_constants.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: structure_constants.len(),
        });
    }
    for c in &structure_constants {
        if c.nrows() != dim || c.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.nrows(),
            });
        }
    }
    if metric.nrows() != dim || metric.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: metric.nrows(),
        });
    }
    let alg = MetrizedLieAlgebra {
        dim,
        structure_constants,
        metric,
        label: label.to_string(),
    };

    // antisymmetry
    for a in 0..dim {
        for b in 0..dim {
            for k in 0..dim {
                let r = alg.structure_constants[a][(b, k)] + alg.structure_constants[b][(a, k)];
                if r.abs() > tol.exact {
                    return Err(Error::AntisymmetryViolation(a, b, k, r.abs()));
                }
            }
        }
    }
    // Jacobi
    let mut worst = (0usize, 0usize, 0usize, 0.0f64);
    for a in 0..dim {
        let ea = basis_vec(dim, a);
        for b in 0..dim {
            let eb = basis_vec(dim, b);
            for k in 0..dim {
                let ek = basis_vec(dim, k);
                let j = alg.bracket(&ea, &alg.bracket(&eb, &ek))
                    + alg.bracket(&eb, &alg.bracket(&ek, &ea))
                    + alg.bracket(&ek, &alg.bracket(&ea, &eb));
                let r = j.norm();
                if r > worst.3 {
                    worst = (a, b, k, r);
                }
            }
        }
    }
    if worst.3 > tol.exact {
        return Err(Error::JacobiViolation(worst.0, worst.1, worst.2, worst.3));
    }
    // metric symmetry folded into nondegeneracy check
    let sym_res = (&alg.metric - alg.metric.transpose()).norm();
    if sym_res > tol.exact {
        return Err(Error::MetricDegenerate(sym_res));
    }
    let sv = alg.metric.clone().singular_values();
    let ratio = sv.min() / sv.max();
    if ratio <= tol.rank_rel {
        return Err(Error::MetricDegenerate(ratio));
    }
    // ad-invariance: <[x,y],z> + <y,[x,z]> = 0
    let mut worst = (0usize, 0usize, 0usize, 0.0f64);
    for a in 0..dim {
        let ea = basis_vec(dim, a);
        for b in 0..dim {
            let eb = basis_vec(dim, b);
            for k in 0..dim {
                let ek = basis_vec(dim, k);
                let r = alg.pair(&alg.bracket(&ea, &eb), &ek) + alg.pair(&eb, &alg.bracket(&ea, &ek));
                if r.abs() > worst.3 {
                    worst = (a, b, k, r.abs());
                }
            }
        }
    }
    if worst.3 > tol.exact {
        return Err(Error::AdInvarianceViolation(worst.0, worst.1, worst.2, worst.3));
    }
    Ok(alg)
}

pub fn basis_vec(dim: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(dim, |j, _| if j == i { 1.0 } else { 0.0 })
}

/// Check whether `s` is a Lagrangian Lie subalgebra of `d`.
pub fn is_lagrangian_subalgebra(
    d: &MetrizedLieAlgebra,
    s: &Subspace,
    tol: &Tolerances,
) -> Result<(bool, LagrangianDiagnostics)> {
    if s.ambient_dim != d.dim {
        return Err(Error::DimensionMismatch {
            expected: d.dim,
            got: s.ambient_dim,
        });
    }
    let gram = s.basis.transpose() * &d.metric * &s.basis;
    let isotropy_residual = gram.norm();
    let dim_defect = s.dim() as isize - (d.dim / 2) as isize;
    let mut closure_residual = 0.0f64;
    for i in 0..s.dim() {
        for j in 0..s.dim() {
            let br = d.bracket(&s.basis.column(i).into_owned(), &s.basis.column(j).into_owned());
            closure_residual = closure_residual.max(s.off_residual(&br));
        }
    }
    let ok = isotropy_residual < 1e-9 && dim_defect == 0 && closure_residual < 1e-10;
    let _ = tol;
    Ok((
        ok,
        LagrangianDiagnostics {
            isotropy_residual,
            dim_defect,
            closure_residual,
        },
    ))
}

/// Given a Manin pair and a Lagrangian complement `m`, return bases `e_a` of
/// g and `f^a` of m with `<e_a, f^b> = delta_a^b`.
pub fn dual_pair_basis(
    pair: &ManinPair,
    m: &Subspace,
    tol: &Tolerances,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = &pair.d;
    let k = pair.g.dim();
    if m.ambient_dim != d.dim {
        return Err(Error::DimensionMismatch {
            expected: d.dim,
            got: m.ambient_dim,
        });
    }
    // complementarity: [g | m] must have full rank
    let mut stacked = DMatrix::zeros(d.dim, k + m.dim());
    stacked.columns_mut(0, k).copy_from(&pair.g.basis);
    stacked.columns_mut(k, m.dim()).copy_from(&m.basis);
    let r = linalg::rank(&stacked, tol.rank_rel);
    if r < d.dim {
        return Err(Error::NotComplementary(d.dim - r));
    }
    let gram_mm = m.basis.transpose() * &d.metric * &m.basis;
    if gram_mm.norm() > 1e-8 {
        return Err(Error::NotLagrangian(format!(
            "complement not isotropic, residual {:.3e}",
            gram_mm.norm()
        )));
    }
    // f^b = m * x_b with <e_a, m x_b> = delta_ab  =>  (G^T B M) X = I
    let pairing = pair.g.basis.transpose() * &d.metric * &m.basis;
    let x = pairing
        .lu()
        .solve(&DMatrix::identity(k, k))
        .ok_or(Error::NotComplementary(0))?;
    let f = &m.basis * x;
    Ok((pair.g.basis.clone(), f))
}

/// Double construction: from a metrized `g`, build the Manin pair
/// `(gbar + g, g_diag)` with metric `blockdiag(-B, B)`.
pub fn double_of(g_alg: &MetrizedLieAlgebra, tol: &Tolerances) -> Result<ManinPair> {
    let n = g_alg.dim;
    let dim = 2 * n;
    let mut c = vec![DMatrix::zeros(dim, dim); dim];
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                let v = g_alg.structure_constants[a][(b, k)];
                c[a][(b, k)] = v; // first copy
                c[a + n][(b + n, k + n)] = v; // second copy
            }
        }
    }
    let mut metric = DMatrix::zeros(dim, dim);
    metric.view_mut((0, 0), (n, n)).copy_from(&(-&g_alg.metric));
    metric.view_mut((n, n), (n, n)).copy_from(&g_alg.metric);
    let d = make_metrized_algebra(dim, c, metric, &format!("double-{}", g_alg.label), tol)?;
    let mut diag = DMatrix::zeros(dim, n);
    for a in 0..n {
        diag[(a, a)] = 1.0;
        diag[(a + n, a)] = 1.0;
    }
    let g = Subspace::new(diag, tol)?;
    let (ok, diags) = is_lagrangian_subalgebra(&d, &g, tol)?;
    if !ok {
        return Err(Error::NotLagrangian(format!("{diags:?}")));
    }
    Ok(ManinPair { d, g })
}

/// Antidiagonal Lagrangian complement `{(xi, -xi)}` in a double.
pub fn antidiagonal(n: usize, tol: &Tolerances) -> Subspace {
    let mut m = DMatrix::zeros(2 * n, n);
    for a in 0..n {
        m[(a, a)] = 1.0;
        m[(a + n, a)] = -1.0;
    }
    Subspace::new(m, tol).expect("antidiagonal has full rank")
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

/// so(3): [e_a, e_b] = eps_{abk} e_k, B = I.
pub fn so3(tol: &Tolerances) -> MetrizedLieAlgebra {
    let mut c = vec![DMatrix::zeros(3, 3); 3];
    for a in 0..3 {
        for b in 0..3 {
            for k in 0..3 {
                c[a][(b, k)] = levi_civita(a, b, k);
            }
        }
    }
    make_metrized_algebra(3, c, DMatrix::identity(3, 3), "so3", tol).expect("so3 is valid")
}

/// su(2) with basis e_a = -i sigma_a / 2; same structure constants as so(3),
/// metric normalized to the identity (equals -2 Re tr).
pub fn su2(tol: &Tolerances) -> MetrizedLieAlgebra {
    let mut alg = so3(tol);
    alg.label = "su2".into();
    alg
}

/// sl(2, R) with basis (h, e, f) and the trace form.
pub fn sl2r(tol: &Tolerances) -> MetrizedLieAlgebra {
    // [h,e] = 2e, [h,f] = -2f, [e,f] = h
    let mut c = vec![DMatrix::zeros(3, 3); 3];
    c[0][(1, 1)] = 2.0;
    c[1][(0, 1)] = -2.0;
    c[0][(2, 2)] = -2.0;
    c[2][(0, 2)] = 2.0;
    c[1][(2, 0)] = 1.0;
    c[2][(1, 0)] = -1.0;
    let metric = DMatrix::from_row_slice(
        3,
        3,
        &[
            2.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, //
            0.0, 1.0, 0.0,
        ],
    );
    make_metrized_algebra(3, c, metric, "sl2r", tol).expect("sl2r is valid")
}

/// sl(2, C) as a real 6-dimensional algebra with basis (e_a, f_a = i e_a),
/// metric the (scaled) imaginary part of the complex trace form, which pairs
/// the two blocks: B = [[0, I], [I, 0]].
pub fn sl2c(tol: &Tolerances) -> MetrizedLieAlgebra {
    let mut c = vec![DMatrix::zeros(6, 6); 6];
    for a in 0..3 {
        for b in 0..3 {
            for k in 0..3 {
                let eps = levi_civita(a, b, k);
                if eps == 0.0 {
                    continue;
                }
                c[a][(b, k)] = eps; // [e,e] = e
                c[a][(b + 3, k + 3)] = eps; // [e,f] = f
                c[a + 3][(b, k + 3)] = eps; // [f,e] = f
                c[a + 3][(b + 3, k)] = -eps; // [f,f] = -e
            }
        }
    }
    let mut metric = DMatrix::zeros(6, 6);
    for a in 0..3 {
        metric[(a, a + 3)] = 1.0;
        metric[(a + 3, a)] = 1.0;
    }
    make_metrized_algebra(6, c, metric, "sl2c", tol).expect("sl2c is valid")
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Algebra catalog addressable by string key.
pub fn algebra_catalog(key: &str, tol: &Tolerances) -> Result<MetrizedLieAlgebra> {
    match key {
        "so3" => Ok(so3(tol)),
        "su2" => Ok(su2(tol)),
        "sl2r" => Ok(sl2r(tol)),
        "sl2c" => Ok(sl2c(tol)),
        "double-so3" => Ok(double_of(&so3(tol), tol)?.d),
        "double-su2" => Ok(double_of(&su2(tol), tol)?.d),
        "double-sl2r" => Ok(double_of(&sl2r(tol), tol)?.d),
        _ => Err(Error::UnknownModel(key.to_string())),
    }
}

pub const ALGEBRA_KEYS: &[&str] = &[
    "so3",
    "su2",
    "sl2r",
    "sl2c",
    "double-so3",
    "double-su2",
    "double-sl2r",
];

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

/// Serializable form of a metrized Lie algebra:
/// `{dim, c (flattened row-major over [a][b][k]), B (row-major), label}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim: usize,
    pub c: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub label: String,
}

impl From<&MetrizedLieAlgebra> for AlgebraJson {
    fn from(alg: &MetrizedLieAlgebra) -> Self {
        let n = alg.dim;
        let mut c = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    c.push(alg.structure_constants[a][(b, k)]);
                }
            }
        }
        let mut bm = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                bm.push(alg.metric[(i, j)]);
            }
        }
        AlgebraJson {
            dim: n,
            c,
            b: bm,
            label: alg.label.clone(),
        }
    }
}

impl AlgebraJson {
    pub fn into_algebra(self, tol: &Tolerances) -> Result<MetrizedLieAlgebra> {
        let n = self.dim;
        let mut sc = vec![DMatrix::zeros(n, n); n];
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    sc[a][(b, k)] = self.c[a * n * n + b * n + k];
                }
            }
        }
        let metric = DMatrix::from_row_slice(n, n, &self.b);
        make_metrized_algebra(n, sc, metric, &self.label, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn abelian_r2_is_valid() {
        let c = vec![DMatrix::zeros(2, 2); 2];
        let alg = make_metrized_algebra(2, c, DMatrix::identity(2, 2), "r2", &tol()).unwrap();
        assert_eq!(alg.dim, 2);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let y = DVector::from_vec(vec![-1.0, 3.0]);
        assert_eq!(alg.bracket(&x, &y).norm(), 0.0);
    }

    #[test]
    fn so3_jacobi_brute_force() {
        // independent oracle: evaluate all 27 Jacobi triples directly from
        // the Levi-Civita definition
        let alg = so3(&tol());
        for a in 0..3 {
            for b in 0..3 {
                for k in 0..3 {
                    let ea = basis_vec(3, a);
                    let eb = basis_vec(3, b);
                    let ek = basis_vec(3, k);
                    let j = alg.bracket(&ea, &alg.bracket(&eb, &ek))
                        + alg.bracket(&eb, &alg.bracket(&ek, &ea))
                        + alg.bracket(&ek, &alg.bracket(&ea, &eb));
                    assert!(j.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn so3_with_indefinite_identity_fails_invariance() {
        // <[e1,e2],e3> + <e2,[e1,e3]> != 0 for B = diag(1,1,-1)
        let good = so3(&tol());
        let bad_metric = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let err = make_metrized_algebra(
            3,
            good.structure_constants.clone(),
            bad_metric,
            "so3-bad",
            &tol(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::AdInvarianceViolation(..)));
    }

    #[test]
    fn diagonal_is_lagrangian_in_double() {
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let (ok, d) = is_lagrangian_subalgebra(&pair.d, &pair.g, &tol()).unwrap();
        assert!(ok, "{d:?}");
    }

    #[test]
    fn antidiagonal_is_isotropic_but_not_closed() {
        // [(x,-x),(y,-y)] = ([x,y],[x,y]) lands in the diagonal, so the
        // antidiagonal is a Lagrangian complement, not a subalgebra
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let m = antidiagonal(3, &tol());
        let (ok, d) = is_lagrangian_subalgebra(&pair.d, &m, &tol()).unwrap();
        assert!(!ok);
        assert!(d.isotropy_residual < 1e-12, "{d:?}");
        assert_eq!(d.dim_defect, 0);
        assert!(d.closure_residual > 0.1, "{d:?}");
    }

    #[test]
    fn su2_inside_sl2c_is_lagrangian() {
        let d = sl2c(&tol());
        let mut g = DMatrix::zeros(6, 3);
        for a in 0..3 {
            g[(a, a)] = 1.0;
        }
        let g = Subspace::new(g, &tol()).unwrap();
        let (ok, diag) = is_lagrangian_subalgebra(&d, &g, &tol()).unwrap();
        assert!(ok, "{diag:?}");
    }

    #[test]
    fn dual_pair_basis_double_so3() {
        // oracle: with the normalized diagonal basis (e_a, e_a)/sqrt(2),
        // the closed-form dual basis is f^a = (-e_a, e_a)/sqrt(2)
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let m = antidiagonal(3, &tol());
        let (e, f) = dual_pair_basis(&pair, &m, &tol()).unwrap();
        let pairing = e.transpose() * &pair.d.metric * &f;
        assert!((pairing - DMatrix::identity(3, 3)).norm() < 1e-10);
        let s = 1.0 / 2.0_f64.sqrt();
        for a in 0..3 {
            let fa = f.column(a).into_owned();
            let sign = fa[a + 3].signum();
            assert!((fa[a] + sign * s).abs() < 1e-10, "f^a = (-e_a, e_a)/sqrt(2)");
            assert!((fa[a + 3] - sign * s).abs() < 1e-10);
        }
        // m isotropy
        let gram = f.transpose() * &pair.d.metric * &f;
        assert!(gram.norm() < 1e-10);
    }

    #[test]
    fn dual_pair_rejects_non_complement() {
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let g_again = pair.g.clone();
        let err = dual_pair_basis(&pair, &g_again, &tol()).unwrap_err();
        assert!(matches!(err, Error::NotComplementary(_)));
    }

    #[test]
    fn dual_pair_trivial_hyperbolic_plane() {
        // d = span(p, q) with <p,q> = 1: f^1 = q already
        let c = vec![DMatrix::zeros(2, 2); 2];
        let metric = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let d = make_metrized_algebra(2, c, metric, "hyp", &tol()).unwrap();
        let g = Subspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), &tol()).unwrap();
        let m = Subspace::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]), &tol()).unwrap();
        let pair = ManinPair { d, g };
        let (_, f) = dual_pair_basis(&pair, &m, &tol()).unwrap();
        assert!((f[(0, 0)]).abs() < 1e-12 && (f[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_metric_signature_is_split() {
        for key in ["so3", "su2", "sl2r"] {
            let g = algebra_catalog(key, &tol()).unwrap();
            let pair = double_of(&g, &tol()).unwrap();
            let eig = pair.d.metric.clone().symmetric_eigen().eigenvalues;
            let pos = eig.iter().filter(|&&x| x > 0.0).count();
            let neg = eig.iter().filter(|&&x| x < 0.0).count();
            assert_eq!(pos, g.dim);
            assert_eq!(neg, g.dim);
        }
    }

    #[test]
    fn abelian_double() {
        let c = vec![DMatrix::zeros(1, 1)];
        let g = make_metrized_algebra(1, c, DMatrix::identity(1, 1), "r1", &tol()).unwrap();
        let pair = double_of(&g, &tol()).unwrap();
        assert_eq!(pair.d.dim, 2);
        assert_eq!(pair.d.metric[(0, 0)], -1.0);
        assert_eq!(pair.d.metric[(1, 1)], 1.0);
    }

    #[test]
    fn sl2r_double_valid() {
        let pair = double_of(&sl2r(&tol()), &tol()).unwrap();
        let (ok, _) = is_lagrangian_subalgebra(&pair.d, &pair.g, &tol()).unwrap();
        assert!(ok);
    }

    #[test]
    fn json_round_trip() {
        let alg = sl2c(&tol());
        let json: AlgebraJson = (&alg).into();
        let text = serde_json::to_string(&json).unwrap();
        let back: AlgebraJson = serde_json::from_str(&text).unwrap();
        let alg2 = back.into_algebra(&tol()).unwrap();
        assert_eq!(alg2.dim, alg.dim);
        assert!((alg2.metric - &alg.metric).norm() < 1e-15);
    }
}
