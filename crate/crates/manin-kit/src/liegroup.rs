//! Matrix Lie group models.
//!
//! A [`GroupModel`] packages a metrized Lie algebra together with a faithful
//! matrix representation of a group integrating it. Group elements are plain
//! `DMatrix<f64>` values in that representation; algebra elements travel as
//! coordinate vectors in the chosen basis. Complex groups are encoded as
//! real matrices (each complex entry becomes a 2x2 rotation-scaling block).



use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::liealg::{
    self, ManinPair, Subspace, double_of, sl2c, sl2r, so3, su2,
};
use crate::linalg;

/// A matrix model of the pair (D, G): the double group with its Lagrangian
/// subgroup, plus a distinguished isotropic complement of g in d.
#[derive(Clone)]
pub struct GroupModel {
    pub pair: ManinPair,
    /// Isotropic complement of g in d (not necessarily a subalgebra).
    pub complement: Subspace,
    /// Matrix representation of each algebra basis vector.
    pub basis_mats: Vec<DMatrix<f64>>,
    pub mat_dim: usize,
    /// Projector onto the representation of g, used for membership tests.
    pub g_basis: DMatrix<f64>,
    pub label: String,
    /// For D = G x G block models, the block size of one factor (0 if the
    /// model is not a block double).
    pub block: usize,
}

impl GroupModel {
    pub fn dim(&self) -> usize {
        self.pair.d.dim
    }

    pub fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.mat_dim, self.mat_dim)
    }

    /// Algebra coordinates -> representation matrix.
    pub fn mat_of(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.mat_dim, self.mat_dim);
        for (a, e) in self.basis_mats.iter().enumerate() {
            if x[a] != 0.0 {
                m += x[a] * e;
            }
        }
        m
    }

    /// Representation matrix -> algebra coordinates (least squares over the
    /// basis matrices; errors if the residual shows `m` is off the algebra).
    pub fn vec_of(&self, m: &DMatrix<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        let rows = self.mat_dim * self.mat_dim;
        let mut a = DMatrix::zeros(rows, n);
        for (j, e) in self.basis_mats.iter().enumerate() {
            for (i, v) in e.iter().enumerate() {
                a[(i, j)] = *v;
            }
        }
        let b = DVector::from_iterator(rows, m.iter().cloned());
        let (x, res) = linalg::lstsq_with_residual(&a, &b, 1e-13);
        if res > 1e-7 * (1.0 + b.norm()) {
            return Err(Error::BasisExpansionFailure(res));
        }
        Ok(x)
    }

    pub fn mul(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b
    }

    pub fn inv(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        a.clone().try_inverse().ok_or(Error::SolveSingular(0.0))
    }

    /// Group exponential of algebra coordinates.
    pub fn exp(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.mat_of(x).exp()
    }

    /// Principal matrix logarithm, returned in algebra coordinates.
    pub fn log(&self, g: &DMatrix<f64>) -> Result<DVector<f64>> {
        let m = matrix_log(g)?;
        self.vec_of(&m)
    }

    /// Adjoint action of a group element, as a matrix on algebra coordinates.
    pub fn adjoint(&self, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let gi = self.inv(g)?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            let col = self.vec_of(&(g * &self.basis_mats[a] * &gi))?;
            m.set_column(a, &col);
        }
        Ok(m)
    }

    /// Left Maurer-Cartan form: theta_L(g)(gdot) = g^{-1} gdot, in algebra
    /// coordinates. `gdot` is a matrix tangent vector at `g`.
    pub fn theta_l(&self, g: &DMatrix<f64>, gdot: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.vec_of(&(self.inv(g)? * gdot))
    }

    /// Right Maurer-Cartan form: theta_R(g)(gdot) = gdot g^{-1}.
    pub fn theta_r(&self, g: &DMatrix<f64>, gdot: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.vec_of(&(gdot * self.inv(g)?))
    }

    /// Cartan 3-form eta = (1/12)<theta_L, [theta_L, theta_L]> evaluated on
    /// left-trivialized tangent coordinates; by total antisymmetry of
    /// <.,[.,.]> this is (1/2)<a, [b, c]>.
    pub fn cartan_eta(&self, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> f64 {
        0.5 * self.pair.d.pair(a, &self.pair.d.bracket(b, c))
    }

    /// Random group element: exp of a random algebra vector with entries in
    /// `[-radius, radius]`.
    pub fn random_element<R: Rng>(&self, rng: &mut R, radius: f64) -> DMatrix<f64> {
        let x = DVector::from_fn(self.dim(), |_, _| rng.gen_range(-radius..radius));
        self.exp(&x)
    }

    /// Random element of the subgroup G.
    pub fn random_g_element<R: Rng>(&self, rng: &mut R, radius: f64) -> DMatrix<f64> {
        let k = self.g_basis.ncols();
        let xi = DVector::from_fn(k, |_, _| rng.gen_range(-radius..radius));
        self.exp_g(&xi)
    }

    /// Exponential of a g-coordinate vector (coordinates in the columns of
    /// `g_basis`).
    pub fn exp_g(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        self.exp(&(&self.g_basis * xi))
    }

    /// Residual of membership of `g` in the subgroup G (distance of log(g)
    /// from the subalgebra g). Only meaningful near the identity component.
    pub fn g_membership_residual(&self, g: &DMatrix<f64>) -> Result<f64> {
        let x = self.log(g)?;
        Ok(self.pair.g.off_residual(&x))
    }
}

/// Principal matrix logarithm by inverse scaling-squaring: take repeated
/// Denman-Beavers square roots until close to the identity, then sum the
/// Mercator series.
pub fn matrix_log(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let id = DMatrix::identity(n, n);
    let mut a = g.clone();
    let mut k = 0u32;
    while (&a - &id).norm() > 0.3 {
        a = matrix_sqrt(&a)?;
        k += 1;
        if k > 40 {
            return Err(Error::LogDomain((g - &id).norm()));
        }
    }
    let x = &a - &id;
    let mut term = x.clone();
    let mut sum = DMatrix::zeros(n, n);
    for i in 1..200 {
        sum += &term / (i as f64) * if i % 2 == 1 { 1.0 } else { -1.0 };
        term = &term * &x;
        if term.norm() < 1e-17 {
            break;
        }
    }
    Ok(sum * 2.0_f64.powi(k as i32))
}

/// Denman-Beavers iteration for the principal square root.
pub fn matrix_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..60 {
        let yi = y.clone().try_inverse().ok_or(Error::SolveSingular(0.0))?;
        let zi = z.clone().try_inverse().ok_or(Error::SolveSingular(0.0))?;
        let yn = 0.5 * (&y + zi);
        let zn = 0.5 * (&z + yi);
        let delta = (&yn - &y).norm();
        y = yn;
        z = zn;
        if delta < 1e-15 {
            break;
        }
    }
    let res = (&y * &y - a).norm();
    if res > 1e-9 * (1.0 + a.norm()) {
        return Err(Error::LogDomain(res));
    }
    Ok(y)
}

// ---------------------------------------------------------------------------
// concrete representations
// ---------------------------------------------------------------------------

/// Hat map: so(3) basis as 3x3 antisymmetric matrices.
fn so3_basis_mats() -> Vec<DMatrix<f64>> {
    let e1 = DMatrix::from_row_slice(3, 3, &[0., 0., 0., 0., 0., -1., 0., 1., 0.]);
    let e2 = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 0., 0., 0., -1., 0., 0.]);
    let e3 = DMatrix::from_row_slice(3, 3, &[0., -1., 0., 1., 0., 0., 0., 0., 0.]);
    vec![e1, e2, e3]
}

/// Real 4x4 encoding of a 2x2 complex matrix: entry a+bi -> [[a,-b],[b,a]].
fn complexify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(2 * i, 2 * j)] = re[(i, j)];
            m[(2 * i + 1, 2 * j + 1)] = re[(i, j)];
            m[(2 * i, 2 * j + 1)] = -im[(i, j)];
            m[(2 * i + 1, 2 * j)] = im[(i, j)];
        }
    }
    m
}

/// su(2) basis e_a = -i sigma_a / 2, real-encoded.
fn su2_basis_mats() -> Vec<DMatrix<f64>> {
    let z = DMatrix::zeros(2, 2);
    // sigma_1 = [[0,1],[1,0]], sigma_2 = [[0,-i],[i,0]], sigma_3 = [[1,0],[0,-1]]
    let s1 = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
    let s2_im = DMatrix::from_row_slice(2, 2, &[0., -1., 1., 0.]);
    let s3 = DMatrix::from_row_slice(2, 2, &[1., 0., 0., -1.]);
    // -i sigma_a / 2: for real sigma, that's re = 0, im = -sigma/2;
    // for sigma_2 = i * s2_im, -i sigma_2 / 2 = s2_im / 2 (real).
    vec![
        complexify(&z, &(-0.5 * s1)),
        complexify(&(0.5 * s2_im), &z),
        complexify(&z, &(-0.5 * s3)),
    ]
}

/// sl(2,R) basis (h, e, f) as 2x2 real matrices.
fn sl2r_basis_mats() -> Vec<DMatrix<f64>> {
    vec![
        DMatrix::from_row_slice(2, 2, &[1., 0., 0., -1.]),
        DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.]),
        DMatrix::from_row_slice(2, 2, &[0., 0., 1., 0.]),
    ]
}

/// sl(2,C) basis (e_a, f_a = i e_a), real-encoded 4x4.
fn sl2c_basis_mats() -> Vec<DMatrix<f64>> {
    let e = su2_basis_mats();
    // multiplication by i in the real encoding: J = blockdiag([[0,-1],[1,0]])
    let mut jm = DMatrix::zeros(4, 4);
    for b in 0..2 {
        jm[(2 * b, 2 * b + 1)] = -1.0;
        jm[(2 * b + 1, 2 * b)] = 1.0;
    }
    let mut out = e.clone();
    for ea in &e {
        out.push(&jm * ea);
    }
    out
}

fn block_double(mats: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let m = mats[0].nrows();
    let mut out = Vec::with_capacity(2 * mats.len());
    for half in 0..2 {
        for e in mats {
            let mut bm = DMatrix::zeros(2 * m, 2 * m);
            bm.view_mut((half * m, half * m), (m, m)).copy_from(e);
            out.push(bm);
        }
    }
    out
}

/// Build a model, validating that matrix commutators reproduce the structure
/// constants of the algebra.
pub fn make_group_model(
    pair: ManinPair,
    complement: Subspace,
    basis_mats: Vec<DMatrix<f64>>,
    label: &str,
    block: usize,
    tol: &Tolerances,
) -> Result<GroupModel> {
    let mat_dim = basis_mats[0].nrows();
    if basis_mats.len() != pair.d.dim {
        return Err(Error::DimensionMismatch {
            expected: pair.d.dim,
            got: basis_mats.len(),
        });
    }
    let g_basis = pair.g.basis.clone();
    let model = GroupModel {
        pair,
        complement,
        basis_mats,
        mat_dim,
        g_basis,
        label: label.to_string(),
        block,
    };
    // structure-constant cross-check: [rep(e_a), rep(e_b)] = rep([e_a, e_b])
    let n = model.dim();
    for a in 0..n {
        for b in 0..n {
            let comm = &model.basis_mats[a] * &model.basis_mats[b]
                - &model.basis_mats[b] * &model.basis_mats[a];
            let expect = model.mat_of(&model.pair.d.basis_bracket(a, b));
            let r = (&comm - &expect).norm();
            if r > tol.exact * 100.0 {
                return Err(Error::AntisymmetryViolation(a, b, 0, r));
            }
        }
    }
    // faithfulness: basis matrices linearly independent
    let rows = mat_dim * mat_dim;
    let mut flat = DMatrix::zeros(rows, n);
    for (j, e) in model.basis_mats.iter().enumerate() {
        for (i, v) in e.iter().enumerate() {
            flat[(i, j)] = *v;
        }
    }
    if linalg::rank(&flat, tol.rank_rel) != n {
        return Err(Error::BasisExpansionFailure(0.0));
    }
    Ok(model)
}

/// Model catalog. Keys: `double-so3`, `double-su2`, `double-sl2r`, `sl2c-su2`.
pub fn model_catalog(key: &str, tol: &Tolerances) -> Result<GroupModel> {
    match key {
        "double-so3" => {
            let pair = double_of(&so3(tol), tol)?;
            make_group_model(
                pair,
                liealg::antidiagonal(3, tol),
                block_double(&so3_basis_mats()),
                key,
                3,
                tol,
            )
        }
        "double-su2" => {
            let pair = double_of(&su2(tol), tol)?;
            make_group_model(
                pair,
                liealg::antidiagonal(3, tol),
                block_double(&su2_basis_mats()),
                key,
                4,
                tol,
            )
        }
        "double-sl2r" => {
            let pair = double_of(&sl2r(tol), tol)?;
            make_group_model(
                pair,
                liealg::antidiagonal(3, tol),
                block_double(&sl2r_basis_mats()),
                key,
                2,
                tol,
            )
        }
        "sl2c-su2" => {
            let d = sl2c(tol);
            let mut gb = DMatrix::zeros(6, 3);
            let mut mb = DMatrix::zeros(6, 3);
            for a in 0..3 {
                gb[(a, a)] = 1.0;
                mb[(a + 3, a)] = 1.0;
            }
            let g = Subspace::new(gb, tol)?;
            let m = Subspace::new(mb, tol)?;
            let (ok, diag) = liealg::is_lagrangian_subalgebra(&d, &g, tol)?;
            if !ok {
                return Err(Error::NotLagrangian(format!("{diag:?}")));
            }
            make_group_model(ManinPair { d, g }, m, sl2c_basis_mats(), key, 0, tol)
        }
        _ => Err(Error::UnknownModel(key.to_string())),
    }
}

pub const MODEL_KEYS: &[&str] = &["double-so3", "double-su2", "double-sl2r", "sl2c-su2"];

/// For block-double models D = G x G, split a group element into its two
/// factor blocks.
pub fn split_blocks(model: &GroupModel, d: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if model.block == 0 {
        return Err(Error::ModelMismatch(
            model.label.clone(),
            "block double".into(),
        ));
    }
    let m = model.block;
    Ok((
        d.view((0, 0), (m, m)).into_owned(),
        d.view((m, m), (m, m)).into_owned(),
    ))
}

/// Inverse of [`split_blocks`].
pub fn join_blocks(model: &GroupModel, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = model.block;
    let mut d = DMatrix::zeros(2 * m, 2 * m);
    d.view_mut((0, 0), (m, m)).copy_from(a);
    d.view_mut((m, m), (m, m)).copy_from(b);
    d
}

/// The generating vector field convention used throughout: for a left action
/// `A`, the field of `xi` at `m` is the derivative at t = 0 of
/// `A(exp(-t xi), m)`. For matrices we return exact derivatives where the
/// action is multiplication; this helper gives the matrix tangent of the
/// dressing-type action d(t) = exp(-t z1) d exp(t z2) at t = 0 for the
/// two-sided action of D x D on D.
pub fn two_sided_tangent(
    model: &GroupModel,
    d: &DMatrix<f64>,
    z1: &DVector<f64>,
    z2: &DVector<f64>,
) -> DMatrix<f64> {
    -model.mat_of(z1) * d + d * model.mat_of(z2)
}
