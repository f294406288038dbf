//! Finite-difference exterior calculus on charted spaces.
//!
//! Manifolds are handled through a single explicit chart: a point is a
//! coordinate vector, and a map to matrix-group data is provided by an
//! `embed` closure. Differential forms are closures taking a point and
//! constant coordinate tangent vectors. Because the test vector fields are
//! constant in the chart, exterior derivatives need no Lie-bracket terms:
//!
//!   d mu (u, v)    = D_u[mu(v)] - D_v[mu(u)]
//!   d om (u, v, w) = D_u[om(v,w)] - D_v[om(u,w)] + D_w[om(u,v)]
//!
//! Wedge convention: (mu ^ nu)(u, v) = mu(u) nu(v) - mu(v) nu(u), with no
//! factorial normalization.

use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::config::Tolerances;
use crate::linalg;

/// A coordinate chart with an embedding into tuples of group matrices.
#[derive(Clone)]
pub struct ChartedSpace {
    pub param_dim: usize,
    /// Chart coordinates -> tuple of matrices (one per group factor).
    pub embed: Rc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>>>,
    /// Radius of the coordinate ball on which the chart is trusted.
    pub chart_radius: f64,
    pub label: String,
}

impl ChartedSpace {
    /// Uniform random point in the trusted coordinate ball (scaled down to
    /// stay clear of the boundary under finite-difference probing).
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let r = 0.6 * self.chart_radius;
        DVector::from_fn(self.param_dim, |_, _| rng.gen_range(-r..r))
    }

    /// Finite-difference matrix tangents of the embedding along `u`.
    pub fn tangent_mats(&self, x: &DVector<f64>, u: &DVector<f64>, tol: &Tolerances) -> Vec<DMatrix<f64>> {
        let h = tol.step_at(x.norm());
        let plus = (self.embed)(&(x + h * u));
        let minus = (self.embed)(&(x - h * u));
        plus.iter()
            .zip(minus.iter())
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect()
    }
}

/// Scalar function on the chart.
pub type ScalarField = Rc<dyn Fn(&DVector<f64>) -> f64>;
/// Vector field in chart coordinates.
pub type VectorField = Rc<dyn Fn(&DVector<f64>) -> DVector<f64>>;

#[derive(Clone)]
pub struct OneForm {
    pub eval: Rc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64>,
    pub label: String,
}

#[derive(Clone)]
pub struct TwoForm {
    pub eval: Rc<dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64>,
    pub label: String,
}

#[derive(Clone)]
pub struct ThreeForm {
    pub eval: Rc<dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64>,
    pub label: String,
}

impl OneForm {
    pub fn at(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.eval)(x, u)
    }
}

impl TwoForm {
    pub fn at(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (self.eval)(x, u, v)
    }

    /// Gram matrix `[omega(e_i, e_j)]` in the coordinate basis at `x`.
    pub fn gram(&self, x: &DVector<f64>, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let ei = unit(dim, i);
            for j in (i + 1)..dim {
                let v = self.at(x, &ei, &unit(dim, j));
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        m
    }
}

impl ThreeForm {
    pub fn at(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (self.eval)(x, u, v, w)
    }
}

pub fn unit(dim: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(dim, |j, _| if j == i { 1.0 } else { 0.0 })
}

/// Differential of a scalar field as a 1-form.
pub fn d_scalar(f: ScalarField, tol: &Tolerances) -> OneForm {
    let h0 = tol.fd_step;
    OneForm {
        eval: Rc::new(move |x, u| {
            let h = h0 * (1.0 + x.norm());
            (f(&(x + h * u)) - f(&(x - h * u))) / (2.0 * h)
        }),
        label: "d(scalar)".into(),
    }
}

/// Exterior derivative of a 1-form (constant test fields in the chart).
pub fn d_one_form(mu: &OneForm, tol: &Tolerances) -> TwoForm {
    let label = format!("d({})", mu.label);
    let mu = mu.clone();
    let h0 = tol.fd_step;
    TwoForm {
        eval: Rc::new(move |x, u, v| {
            let h = h0 * (1.0 + x.norm());
            let du = (mu.at(&(x + h * u), v) - mu.at(&(x - h * u), v)) / (2.0 * h);
            let dv = (mu.at(&(x + h * v), u) - mu.at(&(x - h * v), u)) / (2.0 * h);
            du - dv
        }),
        label,
    }
}

/// Exterior derivative of a 2-form.
pub fn d_two_form(om: &TwoForm, tol: &Tolerances) -> ThreeForm {
    let label = format!("d({})", om.label);
    let om = om.clone();
    let h0 = tol.fd_step;
    ThreeForm {
        eval: Rc::new(move |x, u, v, w| {
            let h = h0 * (1.0 + x.norm());
            let du = (om.at(&(x + h * u), v, w) - om.at(&(x - h * u), v, w)) / (2.0 * h);
            let dv = (om.at(&(x + h * v), u, w) - om.at(&(x - h * v), u, w)) / (2.0 * h);
            let dw = (om.at(&(x + h * w), u, v) - om.at(&(x - h * w), u, v)) / (2.0 * h);
            du - dv + dw
        }),
        label,
    }
}

/// Wedge of two 1-forms: (mu ^ nu)(u,v) = mu(u) nu(v) - mu(v) nu(u).
pub fn wedge_11(mu: &OneForm, nu: &OneForm) -> TwoForm {
    let label = format!("{}^{}", mu.label, nu.label);
    let mu = mu.clone();
    let nu = nu.clone();
    TwoForm {
        eval: Rc::new(move |x, u, v| mu.at(x, u) * nu.at(x, v) - mu.at(x, v) * nu.at(x, u)),
        label,
    }
}

/// Smooth chart-to-chart map with a finite-difference pushforward.
#[derive(Clone)]
pub struct ChartMap {
    pub map: Rc<dyn Fn(&DVector<f64>) -> DVector<f64>>,
    pub label: String,
}

impl ChartMap {
    pub fn at(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.map)(x)
    }

    /// Directional derivative Df(x) u by central differences.
    pub fn push(&self, x: &DVector<f64>, u: &DVector<f64>, tol: &Tolerances) -> DVector<f64> {
        let h = tol.step_at(x.norm());
        ((self.map)(&(x + h * u)) - (self.map)(&(x - h * u))) / (2.0 * h)
    }

    /// Full Jacobian at `x`, given the source dimension.
    pub fn jacobian(&self, x: &DVector<f64>, dim: usize, tol: &Tolerances) -> DMatrix<f64> {
        let probe = (self.map)(x);
        let mut j = DMatrix::zeros(probe.len(), dim);
        for i in 0..dim {
            j.set_column(i, &self.push(x, &unit(dim, i), tol));
        }
        j
    }
}

pub fn pullback_one(f: &ChartMap, mu: &OneForm, tol: &Tolerances) -> OneForm {
    let f = f.clone();
    let mu = mu.clone();
    let tol = tol.clone();
    OneForm {
        label: format!("{}*({})", f.label, mu.label),
        eval: Rc::new(move |x, u| mu.at(&f.at(x), &f.push(x, u, &tol))),
    }
}

pub fn pullback_two(f: &ChartMap, om: &TwoForm, tol: &Tolerances) -> TwoForm {
    let f = f.clone();
    let om = om.clone();
    let tol = tol.clone();
    TwoForm {
        label: format!("{}*({})", f.label, om.label),
        eval: Rc::new(move |x, u, v| {
            om.at(&f.at(x), &f.push(x, u, &tol), &f.push(x, v, &tol))
        }),
    }
}

pub fn pullback_three(f: &ChartMap, et: &ThreeForm, tol: &Tolerances) -> ThreeForm {
    let f = f.clone();
    let et = et.clone();
    let tol = tol.clone();
    ThreeForm {
        label: format!("{}*({})", f.label, et.label),
        eval: Rc::new(move |x, u, v, w| {
            et.at(
                &f.at(x),
                &f.push(x, u, &tol),
                &f.push(x, v, &tol),
                &f.push(x, w, &tol),
            )
        }),
    }
}

/// Interior product of a vector field with a 2-form.
pub fn interior_two(xi: &VectorField, om: &TwoForm) -> OneForm {
    let xi = xi.clone();
    let om = om.clone();
    OneForm {
        label: format!("iota({})", om.label),
        eval: Rc::new(move |x, u| om.at(x, &xi(x), u)),
    }
}

/// Interior product of a vector field with a 3-form.
pub fn interior_three(xi: &VectorField, et: &ThreeForm) -> TwoForm {
    let xi = xi.clone();
    let et = et.clone();
    TwoForm {
        label: format!("iota({})", et.label),
        eval: Rc::new(move |x, u, v| et.at(x, &xi(x), u, v)),
    }
}

/// Generating vector field of a left group action, in the convention
/// `xi_M(x) = d/dt|_0 act(exp(-t xi), x)`.
pub fn generating_vector_field<A, E>(act: A, exp: E, xi: &DVector<f64>, tol: &Tolerances) -> VectorField
where
    A: Fn(&DMatrix<f64>, &DVector<f64>) -> DVector<f64> + 'static,
    E: Fn(&DVector<f64>) -> DMatrix<f64> + 'static,
{
    let xi = xi.clone();
    let h0 = tol.fd_step;
    Rc::new(move |x| {
        let h = h0;
        let gp = exp(&(-h * &xi));
        let gm = exp(&(h * &xi));
        (act(&gp, x) - act(&gm, x)) / (2.0 * h)
    })
}

/// Dimension of `ker(omega) ∩ ker(J_1) ∩ ... ∩ ker(J_k)` at a point: the
/// nullity of the stacked matrix `[Omega; J_1; ...; J_k]`.
pub fn kernel_intersection_dim(
    omega_gram: &DMatrix<f64>,
    jacobians: &[DMatrix<f64>],
    rel: f64,
) -> usize {
    let n = omega_gram.ncols();
    let extra: usize = jacobians.iter().map(|j| j.nrows()).sum();
    let mut stacked = DMatrix::zeros(n + extra, n);
    stacked.rows_mut(0, n).copy_from(omega_gram);
    let mut row = n;
    for j in jacobians {
        stacked.rows_mut(row, j.nrows()).copy_from(j);
        row += j.nrows();
    }
    n - linalg::rank(&stacked, rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn d_of_polynomial_one_form_matches_hand_expansion() {
        // mu = x0^2 x1 dx0 + x0 x2 dx2 on R^3;
        // dmu = -x0^2 dx0^dx1 ... compute by hand:
        // d(x0^2 x1) ^ dx0 = (2 x0 x1 dx0 + x0^2 dx1) ^ dx0 = -x0^2 dx0^dx1
        // d(x0 x2) ^ dx2 = (x2 dx0 + x0 dx2)^dx2 = x2 dx0^dx2
        let mu = OneForm {
            eval: Rc::new(|x, u| x[0] * x[0] * x[1] * u[0] + x[0] * x[2] * u[2]),
            label: "mu".into(),
        };
        let dmu = d_one_form(&mu, &tol());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = rand_vec(&mut rng, 3);
            let u = rand_vec(&mut rng, 3);
            let v = rand_vec(&mut rng, 3);
            let expect = -x[0] * x[0] * (u[0] * v[1] - u[1] * v[0])
                + x[2] * (u[0] * v[2] - u[2] * v[0]);
            assert!((dmu.at(&x, &u, &v) - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn d_f_dg_equals_df_wedge_dg() {
        // oracle: d(f dg) = df ^ dg for f = sin(x0) x1, g = x0 x2^2
        let f: ScalarField = Rc::new(|x: &DVector<f64>| x[0].sin() * x[1]);
        let g: ScalarField = Rc::new(|x: &DVector<f64>| x[0] * x[2] * x[2]);
        let dg = d_scalar(g.clone(), &tol());
        let df = d_scalar(f.clone(), &tol());
        let f2 = f.clone();
        let dg2 = dg.clone();
        let f_dg = OneForm {
            eval: Rc::new(move |x, u| f2(x) * dg2.at(x, u)),
            label: "f dg".into(),
        };
        let lhs = d_one_form(&f_dg, &tol());
        let rhs = wedge_11(&df, &dg);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = rand_vec(&mut rng, 3);
            let u = rand_vec(&mut rng, 3);
            let v = rand_vec(&mut rng, 3);
            assert!((lhs.at(&x, &u, &v) - rhs.at(&x, &u, &v)).abs() < 1e-6);
        }
    }

    #[test]
    fn d_squared_vanishes() {
        let mu = OneForm {
            eval: Rc::new(|x, u| {
                (x[0] * x[1]).cos() * u[0] + x[2].exp() * u[1] + x[0] * x[1] * x[2] * u[2]
            }),
            label: "mu".into(),
        };
        let ddmu = d_two_form(&d_one_form(&mu, &tol()), &tol());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let x = 0.5 * rand_vec(&mut rng, 3);
            let u = rand_vec(&mut rng, 3);
            let v = rand_vec(&mut rng, 3);
            let w = rand_vec(&mut rng, 3);
            // second-order FD of a smooth form: expect ~h^(2/3)-ish noise only
            assert!(ddmu.at(&x, &u, &v, &w).abs() < 2e-4);
        }
    }

    #[test]
    fn pullback_commutes_with_d() {
        // f*(d mu) = d(f* mu) for a quadratic map f
        let f = ChartMap {
            map: Rc::new(|x: &DVector<f64>| {
                DVector::from_vec(vec![x[0] * x[1], x[1] + x[2] * x[2], x[0] - x[2]])
            }),
            label: "f".into(),
        };
        let mu = OneForm {
            eval: Rc::new(|x, u| x[1] * u[0] + x[0] * x[2] * u[1]),
            label: "mu".into(),
        };
        let lhs = pullback_two(&f, &d_one_form(&mu, &tol()), &tol());
        let rhs = d_one_form(&pullback_one(&f, &mu, &tol()), &tol());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..8 {
            let x = 0.7 * rand_vec(&mut rng, 3);
            let u = rand_vec(&mut rng, 3);
            let v = rand_vec(&mut rng, 3);
            assert!((lhs.at(&x, &u, &v) - rhs.at(&x, &u, &v)).abs() < 1e-5);
        }
    }

    #[test]
    fn generating_field_of_rotation_action() {
        // SO(2) acting on R^2 by rotation: convention gives xi_M = -d/dt of
        // the +t flow, i.e. clockwise for xi > 0
        let act = |g: &DMatrix<f64>, x: &DVector<f64>| g * x;
        let expmap = |xi: &DVector<f64>| {
            let t = xi[0];
            DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
        };
        let xi = DVector::from_vec(vec![1.0]);
        let field = generating_vector_field(act, expmap, &xi, &tol());
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let v = field(&x);
        // d/dt|0 R(-t) (1,0) = (0,-1)
        assert!((v[0]).abs() < 1e-9 && (v[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_form_gram_and_kernel() {
        // omega = dx0 ^ dx1 on R^3: kernel is e2; intersect with ker of the
        // projection J = [0,0,1] kills it
        let om = TwoForm {
            eval: Rc::new(|_x, u: &DVector<f64>, v: &DVector<f64>| u[0] * v[1] - u[1] * v[0]),
            label: "dx0^dx1".into(),
        };
        let x = DVector::zeros(3);
        let gram = om.gram(&x, 3);
        assert_eq!(gram[(0, 1)], 1.0);
        assert_eq!(gram[(1, 0)], -1.0);
        assert_eq!(kernel_intersection_dim(&gram, &[], 1e-10), 1);
        let j = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        assert_eq!(kernel_intersection_dim(&gram, &[j], 1e-10), 0);
    }

    #[test]
    fn charted_space_tangents() {
        // embed R -> SO(2) matrices; tangent at x along 1 is the rotation
        // generator times the rotation
        let sp = ChartedSpace {
            param_dim: 1,
            embed: Rc::new(|x: &DVector<f64>| {
                let t = x[0];
                vec![DMatrix::from_row_slice(
                    2,
                    2,
                    &[t.cos(), -t.sin(), t.sin(), t.cos()],
                )]
            }),
            chart_radius: 1.0,
            label: "circle".into(),
        };
        let x = DVector::from_vec(vec![0.3]);
        let t = sp.tangent_mats(&x, &DVector::from_vec(vec![1.0]), &tol());
        let gen = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let expect = &gen * &(sp.embed)(&x)[0];
        assert!((&t[0] - expect).norm() < 1e-9);
    }
}
