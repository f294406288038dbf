//! Moment-map targets and their splittings.
//!
//! A moment target is a homogeneous space Q for the big symmetry algebra
//! (either d-bar (+) d acting on Q = D, or d acting on Q = D/G), carried by
//! an explicit chart. A splitting is a d-valued 1-form alpha on Q with the
//! section property (alpha(v))_Q = v and isotropic values, together with its
//! background 3-form eta. From these we build the chi tensor, the beta
//! cocycle of a group element, and the quasi-symplectic groupoid 2-form on
//! G x Q.

use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geomcalc::{ChartMap, ChartedSpace, ThreeForm, TwoForm, unit};
use crate::liealg::{ManinPair, Subspace};
use crate::liegroup::GroupModel;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    DoubleD,
    HomogeneousDG,
}

/// Group elements of the big symmetry group, one matrix per factor.
pub type GroupTuple = Vec<DMatrix<f64>>;

#[derive(Clone)]
pub struct MomentTarget {
    pub model: GroupModel,
    pub kind: TargetKind,
    /// The big Manin pair: (d-bar (+) d, g (+) g) for `DoubleD`, (d, g) for
    /// `HomogeneousDG`.
    pub pair: ManinPair,
    pub space: ChartedSpace,
    /// Number of factors of the big group (2 for `DoubleD`, 1 for the rest).
    pub factors: usize,
    /// Left action of a big-group tuple on chart coordinates.
    pub action: Rc<dyn Fn(&GroupTuple, &DVector<f64>) -> DVector<f64>>,
    pub label: String,
}

impl MomentTarget {
    pub fn big_dim(&self) -> usize {
        self.pair.d.dim
    }

    pub fn q_dim(&self) -> usize {
        self.space.param_dim
    }

    pub fn sub_dim(&self) -> usize {
        self.pair.g.dim()
    }

    /// Exponential of a big-algebra coordinate vector, factor by factor.
    pub fn exp_big(&self, zeta: &DVector<f64>) -> GroupTuple {
        let n = self.model.dim();
        (0..self.factors)
            .map(|f| self.model.exp(&zeta.rows(f * n, n).into_owned()))
            .collect()
    }

    /// Exponential of subgroup coordinates (in the columns of the g-basis).
    pub fn exp_sub(&self, xi: &DVector<f64>) -> GroupTuple {
        self.exp_big(&(&self.pair.g.basis * xi))
    }

    pub fn identity_tuple(&self) -> GroupTuple {
        (0..self.factors).map(|_| self.model.identity()).collect()
    }

    pub fn mul_tuple(&self, a: &GroupTuple, b: &GroupTuple) -> GroupTuple {
        a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
    }

    pub fn inv_tuple(&self, a: &GroupTuple) -> Result<GroupTuple> {
        a.iter().map(|x| self.model.inv(x)).collect()
    }

    /// Block-diagonal adjoint of a tuple on big-algebra coordinates.
    pub fn big_adjoint(&self, a: &GroupTuple) -> Result<DMatrix<f64>> {
        let n = self.model.dim();
        let mut m = DMatrix::zeros(self.big_dim(), self.big_dim());
        for (f, g) in a.iter().enumerate() {
            m.view_mut((f * n, f * n), (n, n))
                .copy_from(&self.model.adjoint(g)?);
        }
        Ok(m)
    }

    /// Generating vector field of a big-algebra element at chart coords `x`,
    /// in the convention `zeta_Q(x) = d/dt|_0 exp(-t zeta) . x`.
    pub fn d_field(&self, zeta: &DVector<f64>, x: &DVector<f64>, tol: &Tolerances) -> DVector<f64> {
        let h = tol.fd_step;
        let gp = self.exp_big(&(-h * zeta));
        let gm = self.exp_big(&(h * zeta));
        ((self.action)(&gp, x) - (self.action)(&gm, x)) / (2.0 * h)
    }

    /// Matrix of the infinitesimal action at `x`: columns are the fields of
    /// the big-algebra basis vectors.
    pub fn action_matrix(&self, x: &DVector<f64>, tol: &Tolerances) -> DMatrix<f64> {
        let nb = self.big_dim();
        let mut m = DMatrix::zeros(self.q_dim(), nb);
        for a in 0..nb {
            m.set_column(a, &self.d_field(&unit(nb, a), x, tol));
        }
        m
    }

    /// Stabilizer subalgebra at `x` (null space of the action matrix).
    pub fn stabilizer(&self, x: &DVector<f64>, tol: &Tolerances) -> Subspace {
        let basis = linalg::null_space(&self.action_matrix(x, tol), 1e-7);
        Subspace {
            ambient_dim: self.big_dim(),
            basis,
        }
    }

    /// Validate transitivity and Lagrangian stabilizers at sampled points.
    pub fn check_invariants<R: Rng>(
        &self,
        rng: &mut R,
        points: usize,
        tol: &Tolerances,
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..points {
            let x = self.space.random_point(rng);
            let am = self.action_matrix(&x, tol);
            let r = linalg::rank(&am, 1e-7);
            if r < self.q_dim() {
                return Err(Error::ActionNotTransitive {
                    rank: r,
                    dim: self.q_dim(),
                });
            }
            let stab = self.stabilizer(&x, tol);
            if stab.dim() != self.big_dim() / 2 {
                return Err(Error::NotLagrangian(format!(
                    "stabilizer dim {} at {:?}",
                    stab.dim(),
                    x.as_slice()
                )));
            }
            let gram = stab.basis.transpose() * &self.pair.d.metric * &stab.basis;
            worst = worst.max(gram.norm());
        }
        if worst > 1e-6 {
            return Err(Error::NotLagrangian(format!(
                "stabilizer isotropy residual {worst:.3e}"
            )));
        }
        Ok(worst)
    }

    /// The action of a fixed tuple as a chart map.
    pub fn translation(&self, a: &GroupTuple) -> ChartMap {
        let act = self.action.clone();
        let a = a.clone();
        ChartMap {
            map: Rc::new(move |x| act(&a, x)),
            label: "A_g".into(),
        }
    }
}

/// Splitting alpha in Omega^1(Q, d) with its background 3-form.
#[derive(Clone)]
pub struct Splitting {
    /// (chart point, tangent coords) -> big-algebra vector.
    pub alpha: Rc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>>,
    pub eta: ThreeForm,
    pub label: String,
}

impl Splitting {
    pub fn alpha_at(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        (self.alpha)(x, v)
    }

    /// The scalar 1-form <alpha, zeta> for fixed zeta.
    pub fn pair_form(&self, target: &MomentTarget, zeta: &DVector<f64>) -> crate::geomcalc::OneForm {
        let alpha = self.alpha.clone();
        let metric = target.pair.d.metric.clone();
        let zeta = zeta.clone();
        crate::geomcalc::OneForm {
            eval: Rc::new(move |x, u| (alpha(x, u).transpose() * &metric * &zeta)[0]),
            label: "<alpha,zeta>".into(),
        }
    }

    /// Check the section and isotropy invariants at sampled points; returns
    /// (worst section residual, worst isotropy residual).
    pub fn check_invariants<R: Rng>(
        &self,
        target: &MomentTarget,
        rng: &mut R,
        points: usize,
        tol: &Tolerances,
    ) -> (f64, f64) {
        let mut sec = 0.0f64;
        let mut iso = 0.0f64;
        let nq = target.q_dim();
        for _ in 0..points {
            let x = target.space.random_point(rng);
            let v = DVector::from_fn(nq, |_, _| rng.gen_range(-1.0..1.0));
            let a = self.alpha_at(&x, &v);
            let back = target.d_field(&a, &x, tol);
            sec = sec.max((back - &v).norm() / (1.0 + v.norm()));
            iso = iso.max((a.transpose() * &target.pair.d.metric * &a)[0].abs());
        }
        (sec, iso)
    }
}

// ---------------------------------------------------------------------------
// target constructors
// ---------------------------------------------------------------------------

/// Q = D with the two-sided action of D x D: (a1, a2) . d = a1 d a2^{-1}.
/// Big pair: (d-bar (+) d, g (+) g).
pub fn target_d(model: &GroupModel, tol: &Tolerances) -> Result<MomentTarget> {
    let n = model.dim();
    let d_alg = &model.pair.d;
    // big algebra d-bar (+) d: duplicated structure constants, metric
    // blockdiag(-B, B)
    let mut c = vec![DMatrix::zeros(2 * n, 2 * n); 2 * n];
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                let v = d_alg.structure_constants[a][(b, k)];
                c[a][(b, k)] = v;
                c[a + n][(b + n, k + n)] = v;
            }
        }
    }
    let mut metric = DMatrix::zeros(2 * n, 2 * n);
    metric.view_mut((0, 0), (n, n)).copy_from(&(-&d_alg.metric));
    metric.view_mut((n, n), (n, n)).copy_from(&d_alg.metric);
    let big = crate::liealg::make_metrized_algebra(
        2 * n,
        c,
        metric,
        &format!("bar({0})+{0}", d_alg.label),
        tol,
    )?;
    // subalgebra g (+) g
    let k = model.pair.g.dim();
    let mut gb = DMatrix::zeros(2 * n, 2 * k);
    gb.view_mut((0, 0), (n, k)).copy_from(&model.pair.g.basis);
    gb.view_mut((n, k), (n, k)).copy_from(&model.pair.g.basis);
    let g_sub = Subspace::new(gb, tol)?;
    let (ok, diag) = crate::liealg::is_lagrangian_subalgebra(&big, &g_sub, tol)?;
    if !ok {
        return Err(Error::NotLagrangian(format!("{diag:?}")));
    }
    let m = model.clone();
    let embed_model = model.clone();
    let space = ChartedSpace {
        param_dim: n,
        embed: Rc::new(move |x| vec![embed_model.exp(x)]),
        chart_radius: 0.8,
        label: format!("{}:D", model.label),
    };
    let act_model = model.clone();
    let action = Rc::new(move |a: &GroupTuple, x: &DVector<f64>| {
        let d = act_model.exp(x);
        let moved = &a[0] * d * act_model.inv(&a[1]).expect("group element invertible");
        act_model
            .log(&moved)
            .expect("action result within the log chart")
    });
    Ok(MomentTarget {
        model: m,
        kind: TargetKind::DoubleD,
        pair: ManinPair { d: big, g: g_sub },
        space,
        factors: 2,
        action,
        label: format!("{}:D", model.label),
    })
}

/// Q = D/G via the local section x -> exp(sum x_a m_a) G built from the
/// invariant complement, with D acting by left multiplication.
pub fn target_dg(model: &GroupModel, tol: &Tolerances) -> Result<MomentTarget> {
    // the complement must be Ad_G-invariant for the section formulas
    check_complement_invariant(model, tol)?;
    let n = model.dim();
    let mb = model.complement.basis.clone();
    let k = mb.ncols();
    let gb = model.pair.g.basis.clone();
    let embed_model = model.clone();
    let mb_embed = mb.clone();
    let space = ChartedSpace {
        param_dim: k,
        embed: Rc::new(move |x| vec![embed_model.exp(&(&mb_embed * x))]),
        chart_radius: 0.8,
        label: format!("{}:DG", model.label),
    };
    let act_model = model.clone();
    let mb_act = mb.clone();
    let gb_act = gb.clone();
    let tol_act = *tol;
    let action = Rc::new(move |a: &GroupTuple, x: &DVector<f64>| {
        // solve exp(m x') exp(g xi) = a exp(m x) for (x', xi)
        let rhs = &a[0] * act_model.exp(&(&mb_act * x));
        let model = act_model.clone();
        let mbc = mb_act.clone();
        let gbc = gb_act.clone();
        let f = move |y: &DVector<f64>| {
            let xp = y.rows(0, k).into_owned();
            let xi = y.rows(k, gbc.ncols()).into_owned();
            let lhs = model.exp(&(&mbc * xp)) * model.exp(&(&gbc * xi));
            let diff = &lhs - &rhs;
            DVector::from_iterator(diff.len(), diff.iter().cloned())
        };
        let mut y0 = DVector::zeros(n);
        y0.rows_mut(0, k).copy_from(x);
        let y = linalg::newton_solve(f, &y0, &tol_act)
            .expect("section projection converges near the chart");
        y.rows(0, k).into_owned()
    });
    Ok(MomentTarget {
        model: model.clone(),
        kind: TargetKind::HomogeneousDG,
        pair: model.pair.clone(),
        space,
        factors: 1,
        action,
        label: format!("{}:DG", model.label),
    })
}

/// Check Ad_G-invariance of the model's distinguished complement.
pub fn check_complement_invariant(model: &GroupModel, tol: &Tolerances) -> Result<()> {
    check_subspace_invariant(model, &model.complement, tol)
}

fn check_subspace_invariant(model: &GroupModel, m: &Subspace, tol: &Tolerances) -> Result<()> {
    // check on the g-generators ([g, m] subset m) and a few group elements
    for i in 0..model.pair.g.dim() {
        let xi = model.pair.g.basis.column(i).into_owned();
        for j in 0..m.dim() {
            let br = model.pair.d.bracket(&xi, &m.basis.column(j).into_owned());
            let r = m.off_residual(&br);
            if r > 1e-9 {
                return Err(Error::ComplementNotInvariant(r));
            }
        }
    }
    let mut rng = rand::rngs::mock::StepRng::new(42, 0x9e3779b97f4a7c15);
    for _ in 0..3 {
        let g = model.random_g_element(&mut rng, 0.7);
        let ad = model.adjoint(&g)?;
        for j in 0..m.dim() {
            let v = &ad * m.basis.column(j).into_owned();
            let r = m.off_residual(&v);
            if r > 1e-8 {
                return Err(Error::ComplementNotInvariant(r));
            }
        }
    }
    let _ = tol;
    Ok(())
}

// ---------------------------------------------------------------------------
// splittings
// ---------------------------------------------------------------------------

/// Canonical splitting on Q = D: alpha(v) = 1/2 (-theta_R(v), theta_L(v)),
/// eta = Cartan 3-form.
pub fn canonical_splitting_d(target: &MomentTarget, tol: &Tolerances) -> Result<Splitting> {
    if target.kind != TargetKind::DoubleD {
        return Err(Error::ModelMismatch(target.label.clone(), "Q=D".into()));
    }
    let model = target.model.clone();
    let space = target.space.clone();
    let tol_a = *tol;
    let n = model.dim();
    let alpha = Rc::new(move |x: &DVector<f64>, v: &DVector<f64>| {
        let d = (space.embed)(x)[0].clone();
        let ddot = space.tangent_mats(x, v, &tol_a)[0].clone();
        let tl = model.theta_l(&d, &ddot).expect("tangent in the algebra");
        let tr = model.theta_r(&d, &ddot).expect("tangent in the algebra");
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&(-0.5 * tr));
        out.rows_mut(n, n).copy_from(&(0.5 * tl));
        out
    });
    let model_e = target.model.clone();
    let space_e = target.space.clone();
    let tol_e = *tol;
    let eta = ThreeForm {
        eval: Rc::new(move |x, u, v, w| {
            let d = (space_e.embed)(x)[0].clone();
            let mats: Vec<DVector<f64>> = [u, v, w]
                .iter()
                .map(|t| {
                    let m = space_e.tangent_mats(x, t, &tol_e)[0].clone();
                    model_e.theta_l(&d, &m).expect("tangent in the algebra")
                })
                .collect();
            model_e.cartan_eta(&mats[0], &mats[1], &mats[2])
        }),
        label: "cartan".into(),
    };
    Ok(Splitting {
        alpha,
        eta,
        label: "canonical-D".into(),
    })
}

/// Invariant splitting on Q = D/G from the Ad_G-invariant complement:
/// on the section d(x), alpha(v) = -Ad_{d(x)} pr_m theta_L(v).
pub fn invariant_splitting_dg(target: &MomentTarget, tol: &Tolerances) -> Result<Splitting> {
    if target.kind != TargetKind::HomogeneousDG {
        return Err(Error::ModelMismatch(target.label.clone(), "Q=D/G".into()));
    }
    let model = target.model.clone();
    let space = target.space.clone();
    let tol_a = *tol;
    // pr_m: projection onto m along g, assembled from the dual pair basis
    let (e, f) = crate::liealg::dual_pair_basis(&model.pair, &model.complement, tol)?;
    // x = sum e_a <f^a, x> + sum f^a <e_a, x>; m-part is the second sum
    let pr_m = &f * (e.transpose() * &model.pair.d.metric);
    let alpha = Rc::new(move |x: &DVector<f64>, v: &DVector<f64>| {
        let d = (space.embed)(x)[0].clone();
        let ddot = space.tangent_mats(x, v, &tol_a)[0].clone();
        let tl = model.theta_l(&d, &ddot).expect("tangent in the algebra");
        let ad = model.adjoint(&d).expect("group element invertible");
        -(ad * (&pr_m * tl))
    });
    let splitting = Splitting {
        alpha: alpha.clone(),
        eta: ThreeForm {
            eval: Rc::new(|_, _, _, _| 0.0),
            label: "pending".into(),
        },
        label: "invariant-DG".into(),
    };
    let eta = eta_from_alpha(target, &splitting, tol);
    Ok(Splitting {
        alpha,
        eta,
        label: "invariant-DG".into(),
    })
}

/// The generic 3-form of a splitting:
/// eta = -1/2 <d alpha ^ alpha> - <[alpha, alpha] ^ alpha>/6 expanded in the
/// factorial-free wedge convention:
/// eta(u,v,w) = -1/2 Sum_cyc <d alpha(u,v), alpha(w)> - <[alpha(u),alpha(v)], alpha(w)>.
pub fn eta_from_alpha(target: &MomentTarget, splitting: &Splitting, tol: &Tolerances) -> ThreeForm {
    let alpha = splitting.alpha.clone();
    let metric = target.pair.d.metric.clone();
    let alg = target.pair.d.clone();
    let h0 = tol.fd_step;
    ThreeForm {
        eval: Rc::new(move |x, u, v, w| {
            let h = h0 * (1.0 + x.norm());
            let dal = |a: &DVector<f64>, b: &DVector<f64>| -> DVector<f64> {
                // d alpha (a, b) for constant coordinate fields
                let da = (alpha(&(x + h * a), b) - alpha(&(x - h * a), b)) / (2.0 * h);
                let db = (alpha(&(x + h * b), a) - alpha(&(x - h * b), a)) / (2.0 * h);
                da - db
            };
            let au = alpha(x, u);
            let av = alpha(x, v);
            let aw = alpha(x, w);
            let p = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &metric * b)[0];
            let t1 = p(&dal(u, v), &aw) + p(&dal(v, w), &au) + p(&dal(w, u), &av);
            let t2 = p(&alg.bracket(&au, &av), &aw);
            -0.5 * t1 - t2
        }),
        label: format!("eta[{}]", splitting.label),
    }
}

/// chi tensor: chi(z1, z2) = <alpha((z1)_Q), z2> at the point q.
pub fn chi_tensor(
    target: &MomentTarget,
    splitting: &Splitting,
    q: &DVector<f64>,
    z1: &DVector<f64>,
    z2: &DVector<f64>,
    tol: &Tolerances,
) -> f64 {
    let v = target.d_field(z1, q, tol);
    let a = splitting.alpha_at(q, &v);
    (a.transpose() * &target.pair.d.metric * z2)[0]
}

/// Pointwise Gram matrix of the beta cocycle of a big-group tuple `g`:
/// solve `beta(zeta_Q, v) = <alpha(v), zeta> - <(A_g^* alpha)(v), Ad_g zeta>`
/// over the full big-algebra basis. Returns (gram, consistency residual).
pub fn beta_gram(
    target: &MomentTarget,
    splitting: &Splitting,
    g: &GroupTuple,
    x: &DVector<f64>,
    tol: &Tolerances,
) -> Result<(DMatrix<f64>, f64)> {
    let nb = target.big_dim();
    let nq = target.q_dim();
    let metric = &target.pair.d.metric;
    let ad_g = target.big_adjoint(g)?;
    let trans = target.translation(g);
    let gx = trans.at(x);
    // rows: generating fields of the basis; rhs matrix R
    let mut m = DMatrix::zeros(nb, nq);
    let mut r = DMatrix::zeros(nb, nq);
    let mut pushed = Vec::with_capacity(nq);
    let mut alphas = Vec::with_capacity(nq);
    for j in 0..nq {
        let ej = unit(nq, j);
        let p = trans.push(x, &ej, tol);
        alphas.push(splitting.alpha_at(x, &ej));
        pushed.push(splitting.alpha_at(&gx, &p));
    }
    for a in 0..nb {
        let za = unit(nb, a);
        let field = target.d_field(&za, x, tol);
        m.set_row(a, &field.transpose());
        let ad_za = &ad_g * &za;
        for j in 0..nq {
            r[(a, j)] = (alphas[j].transpose() * metric * &za)[0]
                - (pushed[j].transpose() * metric * &ad_za)[0];
        }
    }
    // solve M G = R column by column
    let mut gram = DMatrix::zeros(nq, nq);
    let mut worst = 0.0f64;
    for j in 0..nq {
        let (col, res) = linalg::lstsq_with_residual(&m, &r.column(j).into_owned(), 1e-10);
        if res > 1e-5 * (1.0 + r.norm()) {
            return Err(Error::SolveSingular(res));
        }
        worst = worst.max(res);
        gram.set_column(j, &col);
    }
    // enforce/verify antisymmetry
    let skew = (&gram + gram.transpose()).norm();
    worst = worst.max(skew);
    gram = 0.5 * (&gram - gram.transpose());
    Ok((gram, worst))
}

/// The beta cocycle of `g` as a 2-form on Q.
pub fn beta_cocycle(
    target: &MomentTarget,
    splitting: &Splitting,
    g: &GroupTuple,
    tol: &Tolerances,
) -> TwoForm {
    let target = target.clone();
    let splitting = splitting.clone();
    let g = g.clone();
    let tol = *tol;
    TwoForm {
        eval: Rc::new(move |x, u, v| {
            let (gram, _) = beta_gram(&target, &splitting, &g, x, &tol)
                .expect("beta system consistent at a valid target");
            (u.transpose() * gram * v)[0]
        }),
        label: "beta(g)".into(),
    }
}

/// Residual of the infinitesimal cocycle formula
/// d/dt|_0 beta(exp(t xi))(u, v) = (d<alpha, xi> + iota_{xi_Q} eta)(u, v)
/// at the point q; `xi` is given in big-algebra coordinates (should lie in
/// the subalgebra).
pub fn infinitesimal_cocycle_check(
    target: &MomentTarget,
    splitting: &Splitting,
    xi: &DVector<f64>,
    q: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<f64> {
    let t = 1e-4;
    let gp = target.exp_big(&(t * xi));
    let gm = target.exp_big(&(-t * xi));
    let (bp, _) = beta_gram(target, splitting, &gp, q, tol)?;
    let (bm, _) = beta_gram(target, splitting, &gm, q, tol)?;
    let lhs = ((u.transpose() * (bp - bm) * v) / (2.0 * t))[0];
    let pairing = splitting.pair_form(target, xi);
    let d_pairing = crate::geomcalc::d_one_form(&pairing, tol);
    let xi_q = target.d_field(xi, q, tol);
    let rhs = d_pairing.at(q, u, v) + splitting.eta.at(q, &xi_q, u, v);
    Ok((lhs - rhs).abs())
}

// ---------------------------------------------------------------------------
// groupoid 2-form
// ---------------------------------------------------------------------------

/// The groupoid G x Q with its 2-form, target map t(g,q) = g.q and source
/// map s(g,q) = q. Chart coordinates: (xi, x) with g = exp_sub(xi).
#[derive(Clone)]
pub struct GroupoidSpace {
    pub target: MomentTarget,
    pub splitting: Splitting,
    pub g_dim: usize,
    pub q_dim: usize,
    pub omega: TwoForm,
    pub t_map: ChartMap,
    pub s_map: ChartMap,
}

impl GroupoidSpace {
    pub fn dim(&self) -> usize {
        self.g_dim + self.q_dim
    }

    /// Random chart point (group coordinates kept small).
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let mut p = DVector::zeros(self.dim());
        for i in 0..self.g_dim {
            p[i] = rng.gen_range(-0.35..0.35);
        }
        let q = self.target.space.random_point(rng);
        p.rows_mut(self.g_dim, self.q_dim).copy_from(&q);
        p
    }

    /// Right-trivialized Maurer-Cartan form of the group factor at group
    /// coordinates `xi` along `u_g`, in big-algebra coordinates.
    pub fn theta_r_sub(&self, xi: &DVector<f64>, ug: &DVector<f64>, tol: &Tolerances) -> DVector<f64> {
        let h = tol.fd_step;
        let gp = self.target.exp_sub(&(xi + h * ug));
        let gm = self.target.exp_sub(&(xi - h * ug));
        let g = self.target.exp_sub(xi);
        let n = self.target.model.dim();
        let mut out = DVector::zeros(self.target.big_dim());
        for f in 0..self.target.factors {
            let dot = (&gp[f] - &gm[f]) / (2.0 * h);
            let tr = self
                .target
                .model
                .theta_r(&g[f], &dot)
                .expect("tangent in the algebra");
            out.rows_mut(f * n, n).copy_from(&tr);
        }
        out
    }

    /// Left-trivialized Maurer-Cartan form, analogous to `theta_r_sub`.
    pub fn theta_l_sub(&self, xi: &DVector<f64>, ug: &DVector<f64>, tol: &Tolerances) -> DVector<f64> {
        let h = tol.fd_step;
        let gp = self.target.exp_sub(&(xi + h * ug));
        let gm = self.target.exp_sub(&(xi - h * ug));
        let g = self.target.exp_sub(xi);
        let n = self.target.model.dim();
        let mut out = DVector::zeros(self.target.big_dim());
        for f in 0..self.target.factors {
            let dot = (&gp[f] - &gm[f]) / (2.0 * h);
            let tl = self
                .target
                .model
                .theta_l(&g[f], &dot)
                .expect("tangent in the algebra");
            out.rows_mut(f * n, n).copy_from(&tl);
        }
        out
    }

    /// Chart tangent coordinates of the group-factor field whose matrix
    /// tangent is d/dt|0 exp_sub(-t xi_vec) g (a right-invariant field).
    pub fn right_field_coords(
        &self,
        xi: &DVector<f64>,
        xi_vec: &DVector<f64>,
        tol: &Tolerances,
    ) -> DVector<f64> {
        // chart coords of t -> log(exp(-t xi_vec) exp(xi)) per factor
        let h = tol.fd_step;
        let n = self.target.model.dim();
        let g = self.target.exp_sub(xi);
        let mut plus = DVector::zeros(self.target.big_dim());
        let mut minus = DVector::zeros(self.target.big_dim());
        let gp = self.target.exp_big(&(-h * (&self.target.pair.g.basis * xi_vec)));
        let gm = self.target.exp_big(&(h * (&self.target.pair.g.basis * xi_vec)));
        for f in 0..self.target.factors {
            plus.rows_mut(f * n, n)
                .copy_from(&self.target.model.log(&(&gp[f] * &g[f])).expect("near identity"));
            minus
                .rows_mut(f * n, n)
                .copy_from(&self.target.model.log(&(&gm[f] * &g[f])).expect("near identity"));
        }
        // convert big-algebra chart derivative back to subgroup coordinates
        let big = (plus - minus) / (2.0 * h);
        let gb = &self.target.pair.g.basis;
        linalg::lstsq(gb, &big, 1e-12)
    }

    /// Same for the left-invariant field d/dt|0 g exp_sub(t xi_vec).
    pub fn left_field_coords(
        &self,
        xi: &DVector<f64>,
        xi_vec: &DVector<f64>,
        tol: &Tolerances,
    ) -> DVector<f64> {
        let h = tol.fd_step;
        let n = self.target.model.dim();
        let g = self.target.exp_sub(xi);
        let mut plus = DVector::zeros(self.target.big_dim());
        let mut minus = DVector::zeros(self.target.big_dim());
        let gp = self.target.exp_big(&(h * (&self.target.pair.g.basis * xi_vec)));
        let gm = self.target.exp_big(&(-h * (&self.target.pair.g.basis * xi_vec)));
        for f in 0..self.target.factors {
            plus.rows_mut(f * n, n)
                .copy_from(&self.target.model.log(&(&g[f] * &gp[f])).expect("near identity"));
            minus
                .rows_mut(f * n, n)
                .copy_from(&self.target.model.log(&(&g[f] * &gm[f])).expect("near identity"));
        }
        let big = (plus - minus) / (2.0 * h);
        let gb = &self.target.pair.g.basis;
        linalg::lstsq(gb, &big, 1e-12)
    }
}

/// Build the groupoid 2-form
/// `omega = A^*(-<alpha, theta_R> + 1/2 chi(theta_R, theta_R)) + beta` on
/// G x Q in the chart (xi, x).
pub fn groupoid_two_form(
    target: &MomentTarget,
    splitting: &Splitting,
    tol: &Tolerances,
) -> GroupoidSpace {
    let g_dim = target.sub_dim();
    let q_dim = target.q_dim();
    let t_target = target.clone();
    let t_map = ChartMap {
        map: Rc::new(move |p: &DVector<f64>| {
            let xi = p.rows(0, g_dim).into_owned();
            let x = p.rows(g_dim, q_dim).into_owned();
            (t_target.action)(&t_target.exp_sub(&xi), &x)
        }),
        label: "t".into(),
    };
    let s_map = ChartMap {
        map: Rc::new(move |p: &DVector<f64>| p.rows(g_dim, q_dim).into_owned()),
        label: "s".into(),
    };
    let om_target = target.clone();
    let om_split = splitting.clone();
    let om_t = t_map.clone();
    let tol_o = *tol;
    let omega = TwoForm {
        eval: Rc::new(move |p, uu, vv| {
            let xi = p.rows(0, g_dim).into_owned();
            let x = p.rows(g_dim, q_dim).into_owned();
            let g = om_target.exp_sub(&xi);
            let space = GroupoidSpace {
                target: om_target.clone(),
                splitting: om_split.clone(),
                g_dim,
                q_dim,
                omega: TwoForm {
                    eval: Rc::new(|_, _, _| 0.0),
                    label: String::new(),
                },
                t_map: om_t.clone(),
                s_map: ChartMap {
                    map: Rc::new(move |p: &DVector<f64>| p.rows(g_dim, q_dim).into_owned()),
                    label: "s".into(),
                },
            };
            let qt = om_t.at(p);
            let metric = &om_target.pair.d.metric;
            // pushed Q-tangents under the full action map (g, q) -> g.q
            let pu = om_t.push(p, uu, &tol_o);
            let pv = om_t.push(p, vv, &tol_o);
            let au = om_split.alpha_at(&qt, &pu);
            let av = om_split.alpha_at(&qt, &pv);
            let ru = space.theta_r_sub(&xi, &uu.rows(0, g_dim).into_owned(), &tol_o);
            let rv = space.theta_r_sub(&xi, &vv.rows(0, g_dim).into_owned(), &tol_o);
            let pairing = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * metric * b)[0];
            // -<theta_R ^ alpha> in the factorial-free wedge convention,
            // i.e. +(<alpha(u), theta_R(v)> - <alpha(v), theta_R(u)>)
            let term1 = pairing(&au, &rv) - pairing(&av, &ru);
            let chi_uv = chi_tensor(&om_target, &om_split, &qt, &ru, &rv, &tol_o);
            let chi_vu = chi_tensor(&om_target, &om_split, &qt, &rv, &ru, &tol_o);
            let term2 = 0.5 * (chi_uv - chi_vu);
            let (bg, _) = beta_gram(&om_target, &om_split, &g, &x, &tol_o)
                .expect("beta system consistent at a valid target");
            let uq = uu.rows(g_dim, q_dim).into_owned();
            let vq = vv.rows(g_dim, q_dim).into_owned();
            let term3 = (uq.transpose() * bg * vq)[0];
            term1 + term2 + term3
        }),
        label: "omega[groupoid]".into(),
    };
    GroupoidSpace {
        target: target.clone(),
        splitting: splitting.clone(),
        g_dim,
        q_dim,
        omega,
        t_map,
        s_map,
    }
}

/// Results of the groupoid axiom suite at one point.
#[derive(Debug, Clone)]
pub struct GroupoidReport {
    pub moment_first: f64,
    pub moment_second: f64,
    pub kernel_dim: usize,
    pub d_omega: f64,
    pub multiplicativity: f64,
}

/// Verify the quasi-symplectic groupoid axioms at a sampled point.
pub fn verify_groupoid<R: Rng>(
    space: &GroupoidSpace,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<GroupoidReport> {
    let gd = space.g_dim;
    let qd = space.q_dim;
    let dim = gd + qd;
    let target = &space.target;
    let p = space.random_point(rng);
    let xi_p = p.rows(0, gd).into_owned();
    let x_p = p.rows(gd, qd).into_owned();
    let gb = &target.pair.g.basis;

    // (a) moment conditions for a random xi in g
    let xi = DVector::from_fn(gd, |_, _| rng.gen_range(-1.0..1.0));
    let xi_big = gb * &xi;
    // first-factor field (-xi^R, 0)
    let mut v1 = DVector::zeros(dim);
    v1.rows_mut(0, gd)
        .copy_from(&space.right_field_coords(&xi_p, &xi, tol));
    // second-factor field (xi^L, xi_Q)
    let mut v2 = DVector::zeros(dim);
    v2.rows_mut(0, gd)
        .copy_from(&space.left_field_coords(&xi_p, &xi, tol));
    v2.rows_mut(gd, qd)
        .copy_from(&target.d_field(&xi_big, &x_p, tol));
    let pairing = space.splitting.pair_form(target, &xi_big);
    let t_pair = crate::geomcalc::pullback_one(&space.t_map, &pairing, tol);
    let s_pair = crate::geomcalc::pullback_one(&space.s_map, &pairing, tol);
    // In the factorial-free wedge convention used throughout, the moment
    // conditions read iota_{(-xi^R,0)} omega = t*<alpha,xi> and
    // iota_{(xi^L,xi_Q)} omega = -s*<alpha,xi> (the overall orientation of
    // omega is fixed by the explicit double-model formula).
    let mut moment_first = 0.0f64;
    let mut moment_second = 0.0f64;
    for _ in 0..4 {
        let u = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        moment_first =
            moment_first.max((space.omega.at(&p, &v1, &u) - t_pair.at(&p, &u)).abs());
        moment_second =
            moment_second.max((space.omega.at(&p, &v2, &u) + s_pair.at(&p, &u)).abs());
    }

    // (b) minimal degeneracy: ker omega ∩ ker Tt ∩ ker Ts = 0
    let gram = space.omega.gram(&p, dim);
    let jt = space.t_map.jacobian(&p, dim, tol);
    let js = space.s_map.jacobian(&p, dim, tol);
    let kernel_dim = crate::geomcalc::kernel_intersection_dim(&gram, &[jt, js], 1e-6);

    // (c) d omega = t* eta - s* eta (same orientation as above)
    let outer = Tolerances {
        fd_step: tol.fd_second,
        ..*tol
    };
    let dom = crate::geomcalc::d_two_form(&space.omega, &outer);
    let t_eta = crate::geomcalc::pullback_three(&space.t_map, &space.splitting.eta, tol);
    let s_eta = crate::geomcalc::pullback_three(&space.s_map, &space.splitting.eta, tol);
    let mut d_omega = 0.0f64;
    for _ in 0..2 {
        let u = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let w = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = dom.at(&p, &u, &v, &w);
        let rhs = t_eta.at(&p, &u, &v, &w) - s_eta.at(&p, &u, &v, &w);
        d_omega = d_omega.max((lhs - rhs).abs());
    }

    // (d) multiplicativity on G x G x Q: d0*omega - d1*omega + d2*omega = 0
    // with d0(h,g,q) = (g,q), d1 = (hg, q), d2 = (h, g.q)
    let target2 = target.clone();
    let d0 = ChartMap {
        map: Rc::new(move |y: &DVector<f64>| y.rows(gd, gd + qd).into_owned()),
        label: "d0".into(),
    };
    let t1 = target.clone();
    let d1 = ChartMap {
        map: Rc::new(move |y: &DVector<f64>| {
            let h = t1.exp_sub(&y.rows(0, gd).into_owned());
            let g = t1.exp_sub(&y.rows(gd, gd).into_owned());
            let hg = t1.mul_tuple(&h, &g);
            // back to subgroup chart coordinates
            let n = t1.model.dim();
            let mut big = DVector::zeros(t1.big_dim());
            for f in 0..t1.factors {
                big.rows_mut(f * n, n)
                    .copy_from(&t1.model.log(&hg[f]).expect("near identity"));
            }
            let xi = linalg::lstsq(&t1.pair.g.basis, &big, 1e-12);
            let mut out = DVector::zeros(gd + qd);
            out.rows_mut(0, gd).copy_from(&xi);
            out.rows_mut(gd, qd).copy_from(&y.rows(2 * gd, qd));
            out
        }),
        label: "d1".into(),
    };
    let d2 = ChartMap {
        map: Rc::new(move |y: &DVector<f64>| {
            let g = target2.exp_sub(&y.rows(gd, gd).into_owned());
            let q = y.rows(2 * gd, qd).into_owned();
            let gq = (target2.action)(&g, &q);
            let mut out = DVector::zeros(gd + qd);
            out.rows_mut(0, gd).copy_from(&y.rows(0, gd));
            out.rows_mut(gd, qd).copy_from(&gq);
            out
        }),
        label: "d2".into(),
    };
    let p0 = crate::geomcalc::pullback_two(&d0, &space.omega, tol);
    let p1 = crate::geomcalc::pullback_two(&d1, &space.omega, tol);
    let p2 = crate::geomcalc::pullback_two(&d2, &space.omega, tol);
    let mut y = DVector::zeros(2 * gd + qd);
    for i in 0..2 * gd {
        y[i] = rng.gen_range(-0.3..0.3);
    }
    let q0 = target.space.random_point(rng);
    y.rows_mut(2 * gd, qd).copy_from(&q0);
    let mut multiplicativity = 0.0f64;
    for _ in 0..2 {
        let u = DVector::from_fn(2 * gd + qd, |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(2 * gd + qd, |_, _| rng.gen_range(-1.0..1.0));
        let val = p0.at(&y, &u, &v) - p1.at(&y, &u, &v) + p2.at(&y, &u, &v);
        multiplicativity = multiplicativity.max(val.abs());
    }

    Ok(GroupoidReport {
        moment_first,
        moment_second,
        kernel_dim,
        d_omega,
        multiplicativity,
    })
}

// ---------------------------------------------------------------------------
// descent
// ---------------------------------------------------------------------------

/// Twist a splitting by a 2-form: the new alpha differs by the stabilizer
/// element delta(u) with <delta(u), zeta> = varpi(u, zeta_Q) for all zeta.
pub fn twist_splitting(
    target: &MomentTarget,
    splitting: &Splitting,
    varpi: &TwoForm,
    tol: &Tolerances,
) -> Splitting {
    let t = target.clone();
    let s = splitting.clone();
    let w = varpi.clone();
    let tol_c = *tol;
    let alpha = Rc::new(move |x: &DVector<f64>, u: &DVector<f64>| {
        let base = s.alpha_at(x, u);
        let stab = t.stabilizer(x, &tol_c);
        let k = stab.dim();
        let nb = t.big_dim();
        // constraints <N c, zeta_a> = varpi(u, (zeta_a)_Q)
        let mut a = DMatrix::zeros(nb, k);
        let mut b = DVector::zeros(nb);
        for row in 0..nb {
            let za = unit(nb, row);
            let lhs = za.transpose() * &t.pair.d.metric * &stab.basis;
            a.row_mut(row).copy_from(&lhs);
            let field = t.d_field(&za, x, &tol_c);
            b[row] = w.at(x, u, &field);
        }
        let c = linalg::lstsq(&a, &b, 1e-10);
        base + &stab.basis * c
    });
    let pre = Splitting {
        alpha: alpha.clone(),
        eta: splitting.eta.clone(),
        label: format!("{}+twist", splitting.label),
    };
    let eta = eta_from_alpha(target, &pre, tol);
    Splitting {
        alpha,
        eta,
        label: pre.label,
    }
}

/// Connection data for descending a splitting along a subgroup K of the big
/// group.
#[derive(Clone)]
pub struct DescentData {
    /// Basis of the subalgebra k inside the big algebra.
    pub k_basis: DMatrix<f64>,
    /// Principal connection: (q, tangent) -> k-coordinates.
    pub theta: Rc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>>,
}

/// The standard descent data for Q = D -> Q' = D/G: K = {e} x G inside
/// D x D with the connection theta = pr_g theta_L in the second slot, and
/// the projection chart map D -> D/G.
pub fn standard_dg_descent(
    t_d: &MomentTarget,
    t_q: &MomentTarget,
    tol: &Tolerances,
) -> Result<(DescentData, ChartMap)> {
    if t_d.kind != TargetKind::DoubleD || t_q.kind != TargetKind::HomogeneousDG {
        return Err(Error::ModelMismatch(t_d.label.clone(), t_q.label.clone()));
    }
    let model = t_d.model.clone();
    let n = model.dim();
    let gk = model.pair.g.dim();
    let mut k_basis = DMatrix::zeros(2 * n, gk);
    k_basis
        .view_mut((n, 0), (n, gk))
        .copy_from(&model.pair.g.basis);
    let (e, f) = crate::liealg::dual_pair_basis(&model.pair, &model.complement, tol)?;
    let pr_g = &e * (f.transpose() * &model.pair.d.metric);
    let space = t_d.space.clone();
    let model_c = model.clone();
    let tol_c = *tol;
    let theta = Rc::new(move |x: &DVector<f64>, u: &DVector<f64>| {
        let d = (space.embed)(x)[0].clone();
        let ddot = space.tangent_mats(x, u, &tol_c)[0].clone();
        let tl = model_c.theta_l(&d, &ddot).expect("tangent in the algebra");
        linalg::lstsq(&model_c.pair.g.basis, &(&pr_g * tl), 1e-12)
    });
    let model_p = model.clone();
    let t_q_p = t_q.clone();
    let project = ChartMap {
        map: Rc::new(move |x: &DVector<f64>| {
            let d = model_p.exp(x);
            (t_q_p.action)(&vec![d], &DVector::zeros(t_q_p.q_dim()))
        }),
        label: "pi(D -> D/G)".into(),
    };
    Ok((DescentData { k_basis, theta }, project))
}

/// The twist 2-form varpi = -<alpha, theta> + 1/2 chi(theta, theta) of a
/// descent along K.
pub fn descent_varpi(
    target: &MomentTarget,
    splitting: &Splitting,
    descent: &DescentData,
    tol: &Tolerances,
) -> TwoForm {
    let s = splitting.clone();
    let th = descent.theta.clone();
    let kb = descent.k_basis.clone();
    let metric = target.pair.d.metric.clone();
    let t_chi = target.clone();
    let s_chi = splitting.clone();
    let tol_c = *tol;
    TwoForm {
        eval: Rc::new(move |x, u, v| {
            let tu = &kb * th(x, u);
            let tv = &kb * th(x, v);
            let au = s.alpha_at(x, u);
            let av = s.alpha_at(x, v);
            let p = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &metric * b)[0];
            let t1 = -(p(&au, &tv) - p(&av, &tu));
            let c_uv = chi_tensor(&t_chi, &s_chi, x, &tu, &tv, &tol_c);
            let c_vu = chi_tensor(&t_chi, &s_chi, x, &tv, &tu, &tol_c);
            t1 + 0.5 * (c_uv - c_vu)
        }),
        label: "varpi".into(),
    }
}

/// Descend a splitting on Q to one on Q' = Q/K along the quotient
/// identification `project` (chart of Q -> chart of Q'); returns the twisted
/// splitting's projection together with the twist 2-form
/// varpi = -<alpha, theta> + 1/2 chi(theta, theta).
pub fn descend_splitting<R: Rng>(
    target: &MomentTarget,
    splitting: &Splitting,
    descent: &DescentData,
    quotient: &MomentTarget,
    project: &ChartMap,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<(Splitting, TwoForm)> {
    let nb = target.big_dim();
    let kd = descent.k_basis.ncols();
    // connection check: theta(xi_Q) = xi for xi in k
    let mut conn = 0.0f64;
    for _ in 0..4 {
        let x = target.space.random_point(rng);
        let cx = DVector::from_fn(kd, |_, _| rng.gen_range(-1.0..1.0));
        let xi_big = &descent.k_basis * &cx;
        let f = target.d_field(&xi_big, &x, tol);
        let back = (descent.theta)(&x, &f);
        conn = conn.max((back - &cx).norm());
    }
    if conn > 1e-6 {
        return Err(Error::NotConnection(conn));
    }
    // invariance check: beta(k) = 0 for sampled k in K
    for _ in 0..2 {
        let x = target.space.random_point(rng);
        let cx = DVector::from_fn(kd, |_, _| rng.gen_range(-0.4..0.4));
        let k_el = target.exp_big(&(&descent.k_basis * &cx));
        let (bg, _) = beta_gram(target, splitting, &k_el, &x, tol)?;
        if bg.norm() > 1e-6 {
            return Err(Error::NotInvariant(bg.norm()));
        }
    }
    // twist form varpi
    let varpi = descent_varpi(target, splitting, descent, tol);
    let twisted = twist_splitting(target, splitting, &varpi, tol);
    // basic/value checks: twisted alpha lands in c = k-perp and kills
    // vertical tangents
    let kperp_check = {
        let mut worst = 0.0f64;
        for _ in 0..4 {
            let x = target.space.random_point(rng);
            let u = DVector::from_fn(target.q_dim(), |_, _| rng.gen_range(-1.0..1.0));
            let a = twisted.alpha_at(&x, &u);
            let pairings = descent.k_basis.transpose() * &target.pair.d.metric * &a;
            worst = worst.max(pairings.norm());
        }
        worst
    };
    if kperp_check > 1e-7 {
        return Err(Error::NotBasic(kperp_check));
    }
    let _ = nb;
    // project: alpha'(v') at x' uses any chart lift; we lift through the
    // quotient target's section chart and require project o lift = id
    let tw = twisted.clone();
    let proj_map = project.clone();
    let q_space = quotient.space.clone();
    let t_space = target.space.clone();
    let tol_p = *tol;
    let q_big = quotient.big_dim();
    let lift = build_section_lift(target, quotient, project, tol)?;
    let alpha_q = Rc::new(move |xq: &DVector<f64>, vq: &DVector<f64>| {
        // lift the point and tangent to Q
        let x = lift.at(xq);
        let v = lift.push(xq, vq, &tol_p);
        let a = tw.alpha_at(&x, &v);
        // project the algebra value to the quotient big algebra (first
        // component for the D -> D/G case)
        let _ = (&proj_map, &q_space, &t_space);
        a.rows(0, q_big).into_owned()
    });
    let pre = Splitting {
        alpha: alpha_q.clone(),
        eta: twisted.eta.clone(),
        label: format!("descended[{}]", splitting.label),
    };
    let eta = eta_from_alpha(quotient, &pre, tol);
    Ok((
        Splitting {
            alpha: alpha_q,
            eta,
            label: pre.label,
        },
        varpi,
    ))
}

/// A lift Q' -> Q right-inverse to `project`, found by Newton on the
/// quotient chart (used to evaluate descended splittings).
fn build_section_lift(
    target: &MomentTarget,
    quotient: &MomentTarget,
    project: &ChartMap,
    tol: &Tolerances,
) -> Result<ChartMap> {
    let qd = target.q_dim();
    let qd_small = quotient.q_dim();
    let proj = project.clone();
    let tol_n = *tol;
    Ok(ChartMap {
        map: Rc::new(move |xq: &DVector<f64>| {
            let p = proj.clone();
            let want = xq.clone();
            // underdetermined: solve project(x) = xq with minimal-norm Newton
            let f = move |x: &DVector<f64>| p.at(x) - &want;
            linalg::newton_solve(f, &DVector::zeros(qd), &tol_n)
                .expect("quotient lift converges on the chart")
        }),
        label: format!("lift({} -> {})", qd_small, qd),
    })
}
