//! Lagrangian relations between metrized vector spaces, pointwise
//! Dirac-morphism checks, and bivector extraction from splittings.
//!
//! A relation V1 -> V2 is stored as a subspace of V2 (+) V1 carrying the
//! difference metric blockdiag(B2, -B1); it is Lagrangian when isotropic of
//! half dimension. Composition eliminates the middle factor with one big
//! SVD null-space computation and reports a cleanness residual.

use nalgebra::{DMatrix, DVector};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::liealg::{ManinPair, Subspace};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct MetrizedSpace {
    pub dim: usize,
    pub metric: DMatrix<f64>,
}

impl MetrizedSpace {
    pub fn new(metric: DMatrix<f64>, tol: &Tolerances) -> Result<MetrizedSpace> {
        let sym = (&metric - metric.transpose()).norm();
        if sym > tol.exact {
            return Err(Error::MetricDegenerate(sym));
        }
        let sv = metric.clone().singular_values();
        if sv.min() / sv.max() <= tol.rank_rel {
            return Err(Error::MetricDegenerate(sv.min() / sv.max()));
        }
        Ok(MetrizedSpace {
            dim: metric.nrows(),
            metric,
        })
    }
}

/// Linear relation from `source` to `target`, spanned inside
/// target (+) source with the metric blockdiag(B_target, -B_source).
#[derive(Debug, Clone)]
pub struct LagrangianRelation {
    pub source: MetrizedSpace,
    pub target: MetrizedSpace,
    /// Columns span the relation; first `target.dim` rows are the target
    /// component.
    pub span: Subspace,
}

impl LagrangianRelation {
    pub fn new(
        source: MetrizedSpace,
        target: MetrizedSpace,
        span: Subspace,
    ) -> Result<LagrangianRelation> {
        if span.ambient_dim != source.dim + target.dim {
            return Err(Error::DimensionMismatch {
                expected: source.dim + target.dim,
                got: span.ambient_dim,
            });
        }
        Ok(LagrangianRelation {
            source,
            target,
            span,
        })
    }

    /// Graph of a linear map `a: source -> target`.
    pub fn graph(
        a: &DMatrix<f64>,
        source: MetrizedSpace,
        target: MetrizedSpace,
        tol: &Tolerances,
    ) -> Result<LagrangianRelation> {
        let n1 = source.dim;
        let n2 = target.dim;
        let mut span = DMatrix::zeros(n1 + n2, n1);
        span.view_mut((0, 0), (n2, n1)).copy_from(a);
        span.view_mut((n2, 0), (n1, n1))
            .copy_from(&DMatrix::identity(n1, n1));
        LagrangianRelation::new(source, target, Subspace::new(span, tol)?)
    }

    /// Identity relation on a metrized space.
    pub fn identity(v: MetrizedSpace, tol: &Tolerances) -> Result<LagrangianRelation> {
        let id = DMatrix::identity(v.dim, v.dim);
        LagrangianRelation::graph(&id, v.clone(), v, tol)
    }

    /// The difference metric blockdiag(B2, -B1) on target (+) source.
    pub fn big_metric(&self) -> DMatrix<f64> {
        let n1 = self.source.dim;
        let n2 = self.target.dim;
        let mut b = DMatrix::zeros(n1 + n2, n1 + n2);
        b.view_mut((0, 0), (n2, n2)).copy_from(&self.target.metric);
        b.view_mut((n2, n2), (n1, n1))
            .copy_from(&(-&self.source.metric));
        b
    }
}

/// Diagnostics from [`check_lagrangian_relation`].
#[derive(Debug, Clone)]
pub struct RelationDiagnostics {
    pub isotropy_residual: f64,
    pub dim_defect: isize,
}

pub fn check_lagrangian_relation(
    rel: &LagrangianRelation,
) -> Result<(bool, RelationDiagnostics)> {
    let total = rel.source.dim + rel.target.dim;
    if total % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: total + 1,
            got: total,
        });
    }
    let gram = rel.span.basis.transpose() * rel.big_metric() * &rel.span.basis;
    let isotropy_residual = gram.norm();
    let dim_defect = rel.span.dim() as isize - (total / 2) as isize;
    Ok((
        isotropy_residual < 1e-9 && dim_defect == 0,
        RelationDiagnostics {
            isotropy_residual,
            dim_defect,
        },
    ))
}

/// Composition `rel2 o rel1 : V1 -> V3`, eliminating the middle factor V2.
pub fn compose(
    rel2: &LagrangianRelation,
    rel1: &LagrangianRelation,
    tol: &Tolerances,
) -> Result<LagrangianRelation> {
    let n1 = rel1.source.dim;
    let n2 = rel1.target.dim;
    if rel2.source.dim != n2 {
        return Err(Error::DimensionMismatch {
            expected: n2,
            got: rel2.source.dim,
        });
    }
    let n3 = rel2.target.dim;
    let k2 = rel2.span.dim();
    let k1 = rel1.span.dim();
    // match middle components: bottom n2 rows of span2 = top n2 rows of span1
    let mut m = DMatrix::zeros(n2, k2 + k1);
    m.view_mut((0, 0), (n2, k2))
        .copy_from(&rel2.span.basis.rows(n3, n2));
    m.view_mut((0, k2), (n2, k1))
        .copy_from(&(-rel1.span.basis.rows(0, n2)));
    let ns = linalg::null_space(&m, tol.rank_rel);
    // assemble (V3, V1) components of the matched pairs
    let mut comp = DMatrix::zeros(n3 + n1, ns.ncols());
    for c in 0..ns.ncols() {
        let a = ns.view((0, c), (k2, 1)).into_owned();
        let b = ns.view((k2, c), (k1, 1)).into_owned();
        comp.view_mut((0, c), (n3, 1))
            .copy_from(&(rel2.span.basis.rows(0, n3) * &a));
        comp.view_mut((n3, c), (n1, 1))
            .copy_from(&(rel1.span.basis.rows(n2, n1) * &b));
    }
    let expected = (n1 + n3) / 2;
    let got = linalg::rank(&comp, tol.rank_rel);
    if got != expected {
        return Err(Error::NonCleanComposition(expected.abs_diff(got)));
    }
    let basis = linalg::column_space(&comp, tol.rank_rel);
    LagrangianRelation::new(
        rel1.source.clone(),
        rel2.target.clone(),
        Subspace {
            ambient_dim: n3 + n1,
            basis,
        },
    )
}

/// Backward image `{x in source : exists y in L, (y, x) in rel}` of a
/// subspace of the target.
pub fn backward_image(
    rel: &LagrangianRelation,
    l: &Subspace,
    tol: &Tolerances,
) -> Result<Subspace> {
    let n1 = rel.source.dim;
    let n2 = rel.target.dim;
    if l.ambient_dim != n2 {
        return Err(Error::DimensionMismatch {
            expected: n2,
            got: l.ambient_dim,
        });
    }
    let k = rel.span.dim();
    // span target component must land in L: [span_top | -L] c = 0
    let mut m = DMatrix::zeros(n2, k + l.dim());
    m.view_mut((0, 0), (n2, k)).copy_from(&rel.span.basis.rows(0, n2));
    m.view_mut((0, k), (n2, l.dim())).copy_from(&(-&l.basis));
    let ns = linalg::null_space(&m, tol.rank_rel);
    let mut img = DMatrix::zeros(n1, ns.ncols());
    for c in 0..ns.ncols() {
        let a = ns.view((0, c), (k, 1)).into_owned();
        img.view_mut((0, c), (n1, 1))
            .copy_from(&(rel.span.basis.rows(n2, n1) * &a));
    }
    let basis = linalg::column_space(&img, tol.rank_rel);
    Ok(Subspace {
        ambient_dim: n1,
        basis,
    })
}

/// Check that `rel ∩ (E2 x E1)` is the graph of a linear map E2 -> E1:
/// projection onto E2 is onto (existence) and `(0, e1) in rel with e1 in E1`
/// forces `e1 = 0` (uniqueness). Returns the induced map in the bases of
/// `E2`/`E1`.
pub fn check_dirac_morphism(
    rel: &LagrangianRelation,
    e1: &Subspace,
    e2: &Subspace,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let n1 = rel.source.dim;
    let n2 = rel.target.dim;
    let k = rel.span.dim();
    // intersection of span with E2 (+) E1:
    // span c = [E2 a; E1 b]  <=>  [span | -blockdiag(E2, E1)] (c,a,b) = 0
    let cols = k + e2.dim() + e1.dim();
    let mut m = DMatrix::zeros(n1 + n2, cols);
    m.view_mut((0, 0), (n1 + n2, k)).copy_from(&rel.span.basis);
    m.view_mut((0, k), (n2, e2.dim())).copy_from(&(-&e2.basis));
    m.view_mut((n2, k + e2.dim()), (n1, e1.dim()))
        .copy_from(&(-&e1.basis));
    let ns = linalg::null_space(&m, tol.rank_rel);
    // (a, b) pairs of the intersection, in E2/E1 coordinates
    let mut a_part = DMatrix::zeros(e2.dim(), ns.ncols());
    let mut b_part = DMatrix::zeros(e1.dim(), ns.ncols());
    for c in 0..ns.ncols() {
        a_part.set_column(c, &ns.view((k, c), (e2.dim(), 1)).column(0).into_owned());
        b_part.set_column(
            c,
            &ns.view((k + e2.dim(), c), (e1.dim(), 1)).column(0).into_owned(),
        );
    }
    // existence: a_part must have full row rank
    if linalg::rank(&a_part, tol.rank_rel) < e2.dim() {
        // find a direction of E2 missed by the relation
        let witness = linalg::null_space(&a_part.transpose(), tol.rank_rel);
        let w: Vec<f64> = if witness.ncols() > 0 {
            witness.column(0).iter().cloned().collect()
        } else {
            vec![]
        };
        return Err(Error::ExistenceFailure(w));
    }
    // uniqueness: a = 0 must force b = 0
    let ker_a = linalg::null_space(&a_part, tol.rank_rel);
    if ker_a.ncols() > 0 {
        let bad = &b_part * &ker_a;
        if bad.norm() > 1e-8 * (1.0 + b_part.norm()) {
            let col = bad.column(0).into_owned();
            return Err(Error::UniquenessFailure(col.iter().cloned().collect()));
        }
    }
    // induced map: for each basis vector of E2, solve a_part x = delta and
    // read off b_part x
    let mut induced = DMatrix::zeros(e1.dim(), e2.dim());
    for j in 0..e2.dim() {
        let rhs = DVector::from_fn(e2.dim(), |i, _| if i == j { 1.0 } else { 0.0 });
        let x = linalg::lstsq(&a_part, &rhs, tol.rank_rel);
        induced.set_column(j, &(&b_part * x));
    }
    Ok(induced)
}

/// Bivector of a split coisotropic picture: `pi# = -a o p o a*`, where
/// `a: d -> T_qQ` is the action matrix, `p` projects d onto g along `m`,
/// and `a* : T_q*Q -> d` is the metric adjoint. Requires the action to be
/// onto (moment-target transitivity).
pub fn bivector_from_splitting(
    pair: &ManinPair,
    m: &Subspace,
    action_matrix: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let dim_q = action_matrix.nrows();
    let r = linalg::rank(action_matrix, tol.rank_rel);
    if r < dim_q {
        return Err(Error::ActionNotTransitive {
            rank: r,
            dim: dim_q,
        });
    }
    let (e, f) = crate::liealg::dual_pair_basis(pair, m, tol)?;
    // p = e (f^T B): projection onto g along m
    let p = &e * (f.transpose() * &pair.d.metric);
    // a* = B^{-1} a^T
    let b_inv = pair
        .d
        .metric
        .clone()
        .try_inverse()
        .ok_or(Error::MetricDegenerate(0.0))?;
    let a_star = b_inv * action_matrix.transpose();
    let pi = -(action_matrix * p * a_star);
    let skew = (&pi + pi.transpose()).norm();
    if skew > 1e-10 * (1.0 + pi.norm()) {
        return Err(Error::AntisymmetryViolation(0, 0, 0, skew));
    }
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{antidiagonal, double_of, so3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn euclid(n: usize) -> MetrizedSpace {
        MetrizedSpace::new(DMatrix::identity(n, n), &tol()).unwrap()
    }

    fn hyperbolic(n: usize) -> MetrizedSpace {
        // split metric blockdiag(I_{n}, -I_{n}) on R^{2n}
        let mut b = DMatrix::identity(2 * n, 2 * n);
        for i in n..2 * n {
            b[(i, i)] = -1.0;
        }
        MetrizedSpace::new(b, &tol()).unwrap()
    }

    fn random_isometry(v: &MetrizedSpace, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        // exp of a B-antisymmetric matrix: X with B X + X^T B = 0
        let n = v.dim;
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.4..0.4));
        let binv = v.metric.clone().try_inverse().unwrap();
        let x = &raw - &binv * raw.transpose() * &v.metric;
        (0.5 * x).exp()
    }

    #[test]
    fn graph_of_isometry_is_lagrangian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = hyperbolic(2);
        let a = random_isometry(&v, &mut rng);
        let rel = LagrangianRelation::graph(&a, v.clone(), v, &tol()).unwrap();
        let (ok, d) = check_lagrangian_relation(&rel).unwrap();
        assert!(ok, "{d:?}");
    }

    #[test]
    fn graph_of_scaling_is_not_lagrangian() {
        let v = euclid(2);
        let a = 2.0 * DMatrix::identity(2, 2);
        let rel = LagrangianRelation::graph(&a, v.clone(), v, &tol()).unwrap();
        let (ok, d) = check_lagrangian_relation(&rel).unwrap();
        assert!(!ok);
        assert!(d.isotropy_residual > 0.1);
    }

    #[test]
    fn adjoint_graph_is_lagrangian() {
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let v = MetrizedSpace::new(pair.d.metric.clone(), &tol()).unwrap();
        // Ad of exp(x) = exp(ad_x) preserves the metric
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1, 0.4, -0.6]);
        let ad = pair.d.ad(&x).exp();
        let rel = LagrangianRelation::graph(&ad, v.clone(), v, &tol()).unwrap();
        let (ok, d) = check_lagrangian_relation(&rel).unwrap();
        assert!(ok, "{d:?}");
    }

    #[test]
    fn compose_graphs_is_graph_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = hyperbolic(2);
        let a = random_isometry(&v, &mut rng);
        let b = random_isometry(&v, &mut rng);
        let ra = LagrangianRelation::graph(&a, v.clone(), v.clone(), &tol()).unwrap();
        let rb = LagrangianRelation::graph(&b, v.clone(), v.clone(), &tol()).unwrap();
        let rab = compose(&ra, &rb, &tol()).unwrap(); // a o b
        let direct = LagrangianRelation::graph(&(&a * &b), v.clone(), v, &tol()).unwrap();
        let angle = linalg::max_principal_angle(&rab.span.basis, &direct.span.basis, 1e-10);
        assert!(angle < 1e-9, "angle {angle}");
    }

    #[test]
    fn compose_with_identity_is_identity_on_spans() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = hyperbolic(1);
        let a = random_isometry(&v, &mut rng);
        let ra = LagrangianRelation::graph(&a, v.clone(), v.clone(), &tol()).unwrap();
        let id = LagrangianRelation::identity(v, &tol()).unwrap();
        let left = compose(&id, &ra, &tol()).unwrap();
        let right = compose(&ra, &id, &tol()).unwrap();
        for r in [&left, &right] {
            let angle = linalg::max_principal_angle(&r.span.basis, &ra.span.basis, 1e-10);
            assert!(angle < 1e-9);
        }
    }

    #[test]
    fn compose_associative_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = hyperbolic(2);
        for _ in 0..5 {
            let a = random_isometry(&v, &mut rng);
            let b = random_isometry(&v, &mut rng);
            let c = random_isometry(&v, &mut rng);
            let ra = LagrangianRelation::graph(&a, v.clone(), v.clone(), &tol()).unwrap();
            let rb = LagrangianRelation::graph(&b, v.clone(), v.clone(), &tol()).unwrap();
            let rc = LagrangianRelation::graph(&c, v.clone(), v.clone(), &tol()).unwrap();
            let l = compose(&compose(&ra, &rb, &tol()).unwrap(), &rc, &tol()).unwrap();
            let r = compose(&ra, &compose(&rb, &rc, &tol()).unwrap(), &tol()).unwrap();
            let angle = linalg::max_principal_angle(&l.span.basis, &r.span.basis, 1e-10);
            assert!(angle < 1e-8);
        }
    }

    #[test]
    fn backward_image_under_identity() {
        let v = hyperbolic(1);
        let id = LagrangianRelation::identity(v, &tol()).unwrap();
        let l = Subspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), &tol()).unwrap();
        let img = backward_image(&id, &l, &tol()).unwrap();
        let angle = linalg::max_principal_angle(&img.basis, &l.basis, 1e-10);
        assert!(angle < 1e-10);
    }

    #[test]
    fn backward_image_preserves_lagrangian() {
        // elimination oracle: relation = graph of isometry; backward image
        // of Lagrangian L is A^{-1} L
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = hyperbolic(2);
        let a = random_isometry(&v, &mut rng);
        let rel = LagrangianRelation::graph(&a, v.clone(), v.clone(), &tol()).unwrap();
        // L = span of (e1 + e3, e2 + e4) is Lagrangian for blockdiag(I,-I)
        let l = Subspace::new(
            DMatrix::from_column_slice(4, 2, &[1., 0., 1., 0., 0., 1., 0., 1.]),
            &tol(),
        )
        .unwrap();
        let gram = l.basis.transpose() * &v.metric * &l.basis;
        assert!(gram.norm() < 1e-12);
        let img = backward_image(&rel, &l, &tol()).unwrap();
        let expect = a.clone().try_inverse().unwrap() * &l.basis;
        let angle = linalg::max_principal_angle(&img.basis, &expect, 1e-10);
        assert!(angle < 1e-9);
        let gram = img.basis.transpose() * &v.metric * &img.basis;
        assert!(gram.norm() < 1e-9);
    }

    #[test]
    fn dirac_morphism_identity_case() {
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let v = MetrizedSpace::new(pair.d.metric.clone(), &tol()).unwrap();
        let id = LagrangianRelation::identity(v, &tol()).unwrap();
        let induced = check_dirac_morphism(&id, &pair.g, &pair.g, &tol()).unwrap();
        assert!((induced - DMatrix::identity(3, 3)).norm() < 1e-9);
    }

    #[test]
    fn dirac_morphism_existence_failure() {
        // relation = graph of projection onto the antidiagonal-killing map
        // composed so that g2 directions are missed: use the zero span
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let v = MetrizedSpace::new(pair.d.metric.clone(), &tol()).unwrap();
        // relation spanned by m (+) m: intersects g2 x g1 only at 0
        let m = antidiagonal(3, &tol());
        let mut span = DMatrix::zeros(12, 6);
        span.view_mut((0, 0), (6, 3)).copy_from(&m.basis);
        span.view_mut((6, 3), (6, 3)).copy_from(&m.basis);
        let rel = LagrangianRelation::new(
            v.clone(),
            v,
            Subspace::new(span, &tol()).unwrap(),
        )
        .unwrap();
        let err = check_dirac_morphism(&rel, &pair.g, &pair.g, &tol()).unwrap_err();
        assert!(matches!(err, Error::ExistenceFailure(_)));
    }

    #[test]
    fn dirac_morphism_uniqueness_failure() {
        // relation containing 0 x g directions
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let v = MetrizedSpace::new(pair.d.metric.clone(), &tol()).unwrap();
        // relation = graph of identity on g, enlarged by the kernel 0 x g:
        // existence holds but uniqueness fails
        let mut span = DMatrix::zeros(12, 6);
        span.view_mut((0, 0), (6, 3)).copy_from(&pair.g.basis);
        span.view_mut((6, 0), (6, 3)).copy_from(&pair.g.basis);
        span.view_mut((6, 3), (6, 3)).copy_from(&(2.0 * &pair.g.basis));
        let rel = LagrangianRelation::new(
            v.clone(),
            v,
            Subspace::new(span, &tol()).unwrap(),
        )
        .unwrap();
        let err = check_dirac_morphism(&rel, &pair.g, &pair.g, &tol()).unwrap_err();
        assert!(matches!(err, Error::UniquenessFailure(_)));
    }

    #[test]
    fn bivector_vanishes_for_abelian() {
        let c = vec![DMatrix::zeros(2, 2); 2];
        let metric = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let d = crate::liealg::make_metrized_algebra(2, c, metric, "ab", &tol()).unwrap();
        let g = Subspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), &tol()).unwrap();
        let m = Subspace::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]), &tol()).unwrap();
        let pair = ManinPair { d, g };
        // surjective action of d on a 1-dim space with Lagrangian kernel
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let pi = bivector_from_splitting(&pair, &m, &a, &tol()).unwrap();
        assert!(pi.norm() < 1e-12);
    }

    #[test]
    fn bivector_rejects_nontransitive_action() {
        let pair = double_of(&so3(&tol()), &tol()).unwrap();
        let m = antidiagonal(3, &tol());
        let a = DMatrix::zeros(2, 6);
        let err = bivector_from_splitting(&pair, &m, &a, &tol()).unwrap_err();
        assert!(matches!(err, Error::ActionNotTransitive { .. }));
    }
}
