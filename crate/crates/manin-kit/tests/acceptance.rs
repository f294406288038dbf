//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The criteria sweep the whole stack: algebra/group foundations, splittings
//! and their cocycles, the groupoid 2-form, moduli spaces of flat bundles,
//! fusion/conjugation, lifting/quotient, symplectic reduction, the bivector
//! cross-check, and negative-control discipline for every verifier.

use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use manin_kit::config::Tolerances;
use manin_kit::dirac::{
    bivector_from_splitting, check_lagrangian_relation, LagrangianRelation, MetrizedSpace,
};
use manin_kit::error::Error;
use manin_kit::geomcalc::{d_two_form, pullback_three, ChartMap, TwoForm};
use manin_kit::hamspace::{
    check_locally_free, conjugate, ensure_quasi_symplectic, fuse, fuse_components,
    lift_quotient_round_trip, lift_to_d, outer_product, orbit_space, product_d_target,
    quotient_to_dg, symplectic_reduce, two_gon, verify_quasi_symplectic, HamiltonianSpace,
};
use manin_kit::liealg::{dual_pair_basis, Subspace};
use manin_kit::liegroup::{model_catalog, GroupModel, MODEL_KEYS};
use manin_kit::moduli::{
    build_colored_space, build_polygon_space, cutting_invariance, fusion_equivalence,
    verify_moduli, SurfaceData,
};
use manin_kit::targets::{
    beta_cocycle, beta_gram, canonical_splitting_d, groupoid_two_form,
    infinitesimal_cocycle_check, invariant_splitting_dg, standard_dg_descent, target_d,
    target_dg, twist_splitting, verify_groupoid, MomentTarget, Splitting,
};

macro_rules! req {
    ($cond:expr, $($msg:tt)*) => {
        if !($cond) {
            return Err(format!($($msg)*));
        }
    };
}

fn report(n: usize, desc: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("criterion {n} ({desc}): pass"),
        Err(msg) => {
            println!("criterion {n} ({desc}): FAIL - {msg}");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn randv(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn so3() -> GroupModel {
    model_catalog("double-so3", &tol()).unwrap()
}

fn so3_orbit(rng: &mut ChaCha8Rng) -> HamiltonianSpace {
    let model = so3();
    let (t, s) = product_d_target(&model, 1, &tol()).unwrap();
    let q0 = t.space.random_point(rng);
    orbit_space(&t, &s, &q0, &tol()).unwrap()
}

/// Test twist: a mildly position-dependent 2-form making splittings
/// non-invariant while keeping the section property.
fn twisted(t: &MomentTarget, s: &Splitting) -> Splitting {
    let varpi = TwoForm {
        eval: Rc::new(|x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| {
            (0.3 + 0.2 * x[0]) * (u[0] * v[1] - u[1] * v[0])
                + 0.1 * x[1] * (u[2] * v[0] - u[0] * v[2])
        }),
        label: "test-twist".into(),
    };
    twist_splitting(t, s, &varpi, &tol())
}

#[test]
fn criterion_1_foundations() {
    report(1, "algebra and group foundations over the catalog", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for key in MODEL_KEYS {
            let model = model_catalog(key, &tol()).map_err(|e| e.to_string())?;
            let alg = &model.pair.d;
            let n = model.dim();
            for _ in 0..20 {
                let (x, y, z) = (randv(n, &mut rng), randv(n, &mut rng), randv(n, &mut rng));
                let jac = alg.bracket(&alg.bracket(&x, &y), &z)
                    + alg.bracket(&alg.bracket(&y, &z), &x)
                    + alg.bracket(&alg.bracket(&z, &x), &y);
                req!(jac.norm() < 1e-9, "{key}: Jacobi residual {:.3e}", jac.norm());
                let adinv =
                    alg.pair(&alg.bracket(&x, &y), &z) + alg.pair(&y, &alg.bracket(&x, &z));
                req!(adinv.abs() < 1e-9, "{key}: ad-invariance residual {adinv:.3e}");
                // structure constants against the matrix commutator
                let xm = model.mat_of(&x);
                let ym = model.mat_of(&y);
                let comm = &xm * &ym - &ym * &xm;
                let delta = (model.mat_of(&alg.bracket(&x, &y)) - comm).norm();
                req!(delta < 1e-9, "{key}: bracket/matrix cross-check {delta:.3e}");
                // Ad preserves the metric
                let g = model.random_element(&mut rng, 0.5);
                let ad = model.adjoint(&g).map_err(|e| e.to_string())?;
                let pres = (ad.transpose() * &alg.metric * &ad - &alg.metric).norm();
                req!(pres < 1e-9, "{key}: Ad-metric residual {pres:.3e}");
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_2_splitting_suite() {
    report(2, "splittings: section, isotropy, beta cocycle", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        for key in ["double-so3", "sl2c-su2"] {
            let model = model_catalog(key, &tol()).map_err(|e| e.to_string())?;
            let t = target_d(&model, &tol()).map_err(|e| e.to_string())?;
            let s = canonical_splitting_d(&t, &tol()).map_err(|e| e.to_string())?;
            let (sec, iso) = s.check_invariants(&t, &mut rng, 6, &tol());
            req!(sec < 1e-6 && iso < 1e-6, "{key} D: section {sec:.3e} isotropy {iso:.3e}");
            let tq = target_dg(&model, &tol()).map_err(|e| e.to_string())?;
            let sq = invariant_splitting_dg(&tq, &tol()).map_err(|e| e.to_string())?;
            let (sec, iso) = sq.check_invariants(&tq, &mut rng, 6, &tol());
            req!(sec < 1e-6 && iso < 1e-6, "{key} DG: section {sec:.3e} isotropy {iso:.3e}");
            // beta(g) = 0 for the invariant splittings
            let xi = 0.4 * randv(t.sub_dim(), &mut rng);
            let g = t.exp_sub(&xi);
            let x = t.space.random_point(&mut rng);
            let (bg, _) = beta_gram(&t, &s, &g, &x, &tol()).map_err(|e| e.to_string())?;
            req!(bg.norm() < 1e-7, "{key} D: beta {:.3e}", bg.norm());
            let a = vec![tq.model.random_element(&mut rng, 0.4)];
            let xq = tq.space.random_point(&mut rng);
            let (bg, _) = beta_gram(&tq, &sq, &a, &xq, &tol()).map_err(|e| e.to_string())?;
            req!(bg.norm() < 1e-7, "{key} DG: beta {:.3e}", bg.norm());
        }
        // the cocycle identities need a non-invariant splitting: twist one
        let model = so3();
        let t = target_d(&model, &tol()).map_err(|e| e.to_string())?;
        let s = canonical_splitting_d(&t, &tol()).map_err(|e| e.to_string())?;
        let tw = twisted(&t, &s);
        let xi1 = 0.3 * randv(t.sub_dim(), &mut rng);
        let xi2 = 0.3 * randv(t.sub_dim(), &mut rng);
        let h = t.exp_sub(&xi1);
        let g = t.exp_sub(&xi2);
        let x = t.space.random_point(&mut rng);
        // cocycle law beta(hg) = beta(g) + A_g* beta(h)
        let hg = t.mul_tuple(&h, &g);
        let (b_hg, _) = beta_gram(&t, &tw, &hg, &x, &tol()).map_err(|e| e.to_string())?;
        let (b_g, _) = beta_gram(&t, &tw, &g, &x, &tol()).map_err(|e| e.to_string())?;
        let trans = t.translation(&g);
        let gx = trans.at(&x);
        let (b_h, _) = beta_gram(&t, &tw, &h, &gx, &tol()).map_err(|e| e.to_string())?;
        let jac = trans.jacobian(&x, t.q_dim(), &tol());
        let resid = (&b_hg - (&b_g + jac.transpose() * &b_h * &jac)).norm();
        req!(resid < 1e-5, "cocycle law residual {resid:.3e}");
        // d beta(g) = -A_g* eta + eta
        let beta = beta_cocycle(&t, &tw, &g, &tol());
        let outer = Tolerances { fd_step: tol().fd_second, ..tol() };
        let dbeta = d_two_form(&beta, &outer);
        let pulled = pullback_three(&trans, &tw.eta, &tol());
        for _ in 0..3 {
            let (u, v, w) = (randv(6, &mut rng), randv(6, &mut rng), randv(6, &mut rng));
            let lhs = dbeta.at(&x, &u, &v, &w);
            let rhs = -pulled.at(&x, &u, &v, &w) + tw.eta.at(&x, &u, &v, &w);
            req!((lhs - rhs).abs() < 1e-5, "d-beta residual {:.3e}", (lhs - rhs).abs());
        }
        // infinitesimal cocycle for the twisted splitting
        for _ in 0..3 {
            let q = t.space.random_point(&mut rng);
            let (u, v) = (randv(6, &mut rng), randv(6, &mut rng));
            let xi = &t.pair.g.basis * randv(t.sub_dim(), &mut rng);
            let r = infinitesimal_cocycle_check(&t, &tw, &xi, &q, &u, &v, &tol())
                .map_err(|e| e.to_string())?;
            req!(r < 1e-4, "infinitesimal cocycle residual {r:.3e}");
        }
        Ok(())
    })());
}

#[test]
fn criterion_3_groupoid_theorem() {
    report(3, "groupoid 2-form on both targets", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let model = so3();
        let t = target_d(&model, &tol()).map_err(|e| e.to_string())?;
        let s = canonical_splitting_d(&t, &tol()).map_err(|e| e.to_string())?;
        let tq = target_dg(&model, &tol()).map_err(|e| e.to_string())?;
        let sq = invariant_splitting_dg(&tq, &tol()).map_err(|e| e.to_string())?;
        for (label, gsp) in [
            ("Q=D", groupoid_two_form(&t, &s, &tol())),
            ("Q=D/G", groupoid_two_form(&tq, &sq, &tol())),
        ] {
            for _ in 0..4 {
                let rep = verify_groupoid(&gsp, &mut rng, &tol()).map_err(|e| e.to_string())?;
                req!(rep.moment_first < 1e-6, "{label} moment 1: {:.3e}", rep.moment_first);
                req!(rep.moment_second < 1e-6, "{label} moment 2: {:.3e}", rep.moment_second);
                req!(rep.kernel_dim == 0, "{label} nullity {}", rep.kernel_dim);
                req!(rep.d_omega < 1e-4, "{label} d-omega: {:.3e}", rep.d_omega);
                req!(
                    rep.multiplicativity < 1e-6,
                    "{label} multiplicativity: {:.3e}",
                    rep.multiplicativity
                );
            }
        }
        // explicit product formula on Q = D
        let gsp = groupoid_two_form(&t, &s, &tol());
        let (gd, qd) = (gsp.g_dim, gsp.q_dim);
        let metric = &model.pair.d.metric;
        for _ in 0..4 {
            let p = gsp.random_point(&mut rng);
            let u = randv(gd + qd, &mut rng);
            let v = randv(gd + qd, &mut rng);
            let lhs = gsp.omega.at(&p, &u, &v);
            let xi = p.rows(0, gd).into_owned();
            let x = p.rows(gd, qd).into_owned();
            let d_mat = model.exp(&x);
            let theta = |w: &DVector<f64>| {
                let wq = w.rows(gd, qd).into_owned();
                let wg = w.rows(0, gd).into_owned();
                let h = tol().fd_step;
                let ddot = (model.exp(&(&x + h * &wq)) - model.exp(&(&x - h * &wq))) / (2.0 * h);
                (
                    model.theta_l(&d_mat, &ddot).unwrap(),
                    model.theta_r(&d_mat, &ddot).unwrap(),
                    gsp.theta_l_sub(&xi, &wg, &tol()),
                )
            };
            let (tl_a, tr_a, sub_a) = theta(&u);
            let (tl_b, tr_b, sub_b) = theta(&v);
            let n = model.dim();
            let h1_a = sub_a.rows(0, n).into_owned();
            let h2_a = sub_a.rows(n, n).into_owned();
            let h1_b = sub_b.rows(0, n).into_owned();
            let h2_b = sub_b.rows(n, n).into_owned();
            let ad_d = model.adjoint(&d_mat).unwrap();
            let pr = |y: &DVector<f64>, z: &DVector<f64>| (y.transpose() * metric * z)[0];
            let wedge = |f: &dyn Fn(&DVector<f64>, &DVector<f64>) -> f64,
                         ya: &DVector<f64>,
                         yb: &DVector<f64>,
                         za: &DVector<f64>,
                         zb: &DVector<f64>| f(ya, zb) - f(yb, za);
            let rhs = 0.5
                * (wedge(&pr, &tl_a, &tl_b, &h2_a, &h2_b)
                    + wedge(&pr, &tr_a, &tr_b, &h1_a, &h1_b)
                    + wedge(
                        &|y, z| (y.transpose() * metric * (&ad_d * z))[0],
                        &h1_a,
                        &h1_b,
                        &h2_a,
                        &h2_b,
                    ));
            req!((lhs - rhs).abs() < 1e-8, "explicit formula: {:.3e}", (lhs - rhs).abs());
        }
        Ok(())
    })());
}

#[test]
fn criterion_4_moduli_suite() {
    report(4, "moduli axioms and cutting invariance", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let model = so3();
        // uncolored presentations: disks and the one-holed torus
        let mut surfaces = vec![SurfaceData::torus_one_hole()];
        for r in [2usize, 3, 5] {
            surfaces.push(SurfaceData::disk(r));
        }
        for surface in &surfaces {
            let ms = build_polygon_space(&model, surface, &tol()).map_err(|e| e.to_string())?;
            let rep = verify_moduli(&ms, 2, &mut rng, &tol());
            req!(rep.d_omega < 1e-4, "{}: d-omega {:.3e}", surface.label, rep.d_omega);
            req!(
                rep.contraction < 1e-6,
                "{}: contraction {:.3e}",
                surface.label,
                rep.contraction
            );
            req!(rep.kernel_defect == 0, "{}: kernel defect {}", surface.label, rep.kernel_defect);
        }
        // colored polygons carry the D-valued axiom suite
        for n in [1usize, 2, 3] {
            let (_, ham) = build_colored_space(&model, &SurfaceData::colored_2ngon(n), &tol())
                .map_err(|e| e.to_string())?;
            let rep = verify_quasi_symplectic(&ham, 2, &mut rng, &tol());
            req!(rep.axiom_i < 1e-4, "2ngon:{n}: axiom i {:.3e}", rep.axiom_i);
            req!(rep.axiom_ii < 1e-5, "2ngon:{n}: axiom ii {:.3e}", rep.axiom_ii);
            req!(rep.axiom_iii_defect == 0, "2ngon:{n}: kernel defect");
        }
        // cutting invariance: rotated torus word
        let p1 = SurfaceData::torus_one_hole();
        let mut pairing = vec![None; 5];
        pairing[1] = Some(3);
        pairing[3] = Some(1);
        pairing[2] = Some(4);
        pairing[4] = Some(2);
        let p2 = SurfaceData {
            num_edges: 5,
            pairing,
            coloring: None,
            label: "torus1-rot".into(),
        };
        let identity = ChartMap {
            map: Rc::new(|z: &DVector<f64>| z.clone()),
            label: "id".into(),
        };
        let d = cutting_invariance(&model, &p1, &p2, &identity, &[0], 3, &mut rng, &tol())
            .map_err(|e| e.to_string())?;
        req!(d < 1e-7, "torus rotation discrepancy {d:.3e}");
        // elementary move on the hexagon with paired edges (0,3)
        let mut pairing = vec![None; 6];
        pairing[0] = Some(3);
        pairing[3] = Some(0);
        let h1 = SurfaceData {
            num_edges: 6,
            pairing,
            coloring: None,
            label: "hex-cut1".into(),
        };
        let mut pairing2 = vec![None; 6];
        pairing2[2] = Some(5);
        pairing2[5] = Some(2);
        let h2 = SurfaceData {
            num_edges: 6,
            pairing: pairing2,
            coloring: None,
            label: "hex-cut2".into(),
        };
        let ms1 = build_polygon_space(&model, &h1, &tol()).map_err(|e| e.to_string())?;
        let hol = ms1.holonomy.clone();
        let m = model.clone();
        let identify = ChartMap {
            map: Rc::new(move |z: &DVector<f64>| {
                let mats = hol(z);
                let y = &mats[2] * &mats[3] * &mats[4]; // d2 x^{-1} d4
                let mut out = DVector::zeros(24);
                out.rows_mut(0, 6).copy_from(&m.log(&mats[2]).unwrap());
                out.rows_mut(6, 6).copy_from(&m.log(&mats[1]).unwrap());
                out.rows_mut(12, 6).copy_from(&m.log(&y).unwrap());
                out.rows_mut(18, 6).copy_from(&m.log(&mats[5]).unwrap());
                out
            }),
            label: "elementary-move".into(),
        };
        let d = cutting_invariance(&model, &h1, &h2, &identify, &[1, 0, 3, 2], 2, &mut rng, &tol())
            .map_err(|e| e.to_string())?;
        req!(d < 1e-7, "elementary move discrepancy {d:.3e}");
        Ok(())
    })());
}

#[test]
fn criterion_5_fusion_and_conjugation() {
    report(5, "fusion and conjugation laws", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        let model = so3();
        // fused spaces re-pass the axiom suite
        let o1 = so3_orbit(&mut rng);
        let o2 = so3_orbit(&mut rng);
        let f = fuse(&o1, &o2, &tol()).map_err(|e| e.to_string())?;
        ensure_quasi_symplectic(&f, 2, &mut rng, &tol()).map_err(|e| e.to_string())?;
        let c = conjugate(&f).map_err(|e| e.to_string())?;
        ensure_quasi_symplectic(&c, 2, &mut rng, &tol()).map_err(|e| e.to_string())?;
        // 2-gon identity law: G * G = G with vanishing form, G-valued moment
        let g1 = two_gon(&model, &tol()).map_err(|e| e.to_string())?;
        let fid = fuse(&g1, &g1, &tol()).map_err(|e| e.to_string())?;
        for _ in 0..4 {
            let z = fid.space.random_point(&mut rng);
            let u = randv(fid.dim(), &mut rng);
            let v = randv(fid.dim(), &mut rng);
            req!(
                fid.omega.at(&z, &u, &v).abs() < 1e-8,
                "identity law form {:.3e}",
                fid.omega.at(&z, &u, &v).abs()
            );
            let d = model.exp(&fid.moment.at(&z));
            let gm = model.g_membership_residual(&d).map_err(|e| e.to_string())?;
            req!(gm < 1e-8, "identity law moment {gm:.3e}");
        }
        // associativity on the shared ambient chart
        let o3 = so3_orbit(&mut rng);
        let p12 = outer_product(&o1, &o2, &tol()).map_err(|e| e.to_string())?;
        let p123 = outer_product(&p12, &o3, &tol()).map_err(|e| e.to_string())?;
        let left_mid = fuse_components(&p123, 0, 1, &tol()).map_err(|e| e.to_string())?;
        let right_mid = fuse_components(&p123, 1, 2, &tol()).map_err(|e| e.to_string())?;
        let left = fuse_components(&left_mid, 0, 1, &tol()).map_err(|e| e.to_string())?;
        let right = fuse_components(&right_mid, 0, 1, &tol()).map_err(|e| e.to_string())?;
        let n = p123.dim();
        let chain = |outer: &HamiltonianSpace, inner: &HamiltonianSpace| {
            let pi = inner.from_parent.as_ref().unwrap().clone();
            let po = outer.from_parent.as_ref().unwrap().clone();
            ChartMap {
                map: Rc::new(move |y: &DVector<f64>| po(&pi(y))),
                label: "proj".into(),
            }
        };
        let proj_l = chain(&left, &left_mid);
        let proj_r = chain(&right, &right_mid);
        for _ in 0..3 {
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-0.12..0.12));
            let u = randv(n, &mut rng);
            let v = randv(n, &mut rng);
            let a = left.omega.at(
                &proj_l.at(&x),
                &proj_l.push(&x, &u, &tol()),
                &proj_l.push(&x, &v, &tol()),
            );
            let b = right.omega.at(
                &proj_r.at(&x),
                &proj_r.push(&x, &u, &tol()),
                &proj_r.push(&x, &v, &tol()),
            );
            req!((a - b).abs() < 1e-8, "associator {:.3e}", (a - b).abs());
        }
        // (M1 * M2)^* = M2^* * M1^* on the swapped ambient chart
        let lhs = conjugate(&f).map_err(|e| e.to_string())?;
        let rhs = fuse(
            &conjugate(&o2).map_err(|e| e.to_string())?,
            &conjugate(&o1).map_err(|e| e.to_string())?,
            &tol(),
        )
        .map_err(|e| e.to_string())?;
        let (n1, n2) = (o1.dim(), o2.dim());
        let pl = lhs.from_parent.as_ref().unwrap().clone();
        let pr = rhs.from_parent.as_ref().unwrap().clone();
        let proj_l = ChartMap {
            map: Rc::new(move |y: &DVector<f64>| pl(y)),
            label: "lhs".into(),
        };
        let proj_r = ChartMap {
            map: Rc::new(move |y: &DVector<f64>| {
                let mut sw = DVector::zeros(n1 + n2);
                sw.rows_mut(0, n2).copy_from(&y.rows(n1, n2));
                sw.rows_mut(n2, n1).copy_from(&y.rows(0, n1));
                pr(&sw)
            }),
            label: "rhs".into(),
        };
        for _ in 0..3 {
            let x = DVector::from_fn(n1 + n2, |_, _| rng.gen_range(-0.12..0.12));
            let u = randv(n1 + n2, &mut rng);
            let v = randv(n1 + n2, &mut rng);
            let a = lhs.omega.at(
                &proj_l.at(&x),
                &proj_l.push(&x, &u, &tol()),
                &proj_l.push(&x, &v, &tol()),
            );
            let b = rhs.omega.at(
                &proj_r.at(&x),
                &proj_r.push(&x, &u, &tol()),
                &proj_r.push(&x, &v, &tol()),
            );
            req!((a - b).abs() < 1e-8, "conjugation-of-fusion {:.3e}", (a - b).abs());
            let dm = (lhs.moment.at(&proj_l.at(&x)) - rhs.moment.at(&proj_r.at(&x))).norm();
            req!(dm < 1e-8, "conjugation-of-fusion moment {dm:.3e}");
        }
        // (M^*)^* = M
        let cc = conjugate(&conjugate(&o1).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let z = o1.space.random_point(&mut rng);
            let u = randv(o1.dim(), &mut rng);
            let v = randv(o1.dim(), &mut rng);
            req!(
                (cc.omega.at(&z, &u, &v) - o1.omega.at(&z, &u, &v)).abs() < 1e-12,
                "involution form"
            );
            req!((cc.moment.at(&z) - o1.moment.at(&z)).norm() < 1e-12, "involution moment");
        }
        // 4-gon * 4-gon = 6-gon
        let s4 = SurfaceData::colored_2ngon(2);
        let d = fusion_equivalence(&model, &s4, &s4, 2, &mut rng, &tol())
            .map_err(|e| e.to_string())?;
        req!(d < 1e-7, "4-gon fusion vs 6-gon {d:.3e}");
        Ok(())
    })());
}

#[test]
fn criterion_6_lifting_theorem() {
    report(6, "lifting/quotient round trips", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        let model = so3();
        for n in [1usize, 2, 3] {
            let (_, ham) = build_colored_space(&model, &SurfaceData::colored_2ngon(n), &tol())
                .map_err(|e| e.to_string())?;
            let (res_lift, res_quo) =
                lift_quotient_round_trip(&ham, 2, &mut rng, &tol()).map_err(|e| e.to_string())?;
            req!(res_lift < 1e-7, "2ngon:{n} lift o quotient {res_lift:.3e}");
            req!(res_quo < 1e-7, "2ngon:{n} quotient o lift {res_quo:.3e}");
        }
        // quotiented and lifted spaces pass their axiom suites
        let (_, ham4) = build_colored_space(&model, &SurfaceData::colored_2ngon(2), &tol())
            .map_err(|e| e.to_string())?;
        let quo = quotient_to_dg(&ham4, &tol()).map_err(|e| e.to_string())?;
        ensure_quasi_symplectic(&quo, 2, &mut rng, &tol()).map_err(|e| e.to_string())?;
        let lifted = lift_to_d(&quo, &tol()).map_err(|e| e.to_string())?;
        ensure_quasi_symplectic(&lifted, 2, &mut rng, &tol()).map_err(|e| e.to_string())?;
        Ok(())
    })());
}

#[test]
fn criterion_7_symplectic_reduction() {
    report(7, "symplectic reduction at regular levels", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        // four fused orbits: the reduced space is big enough (dim 4) for the
        // closedness diagnostic to be non-vacuous
        let mut f = so3_orbit(&mut rng);
        for _ in 0..3 {
            let o = so3_orbit(&mut rng);
            f = fuse(&f, &o, &tol()).map_err(|e| e.to_string())?;
        }
        let z0 = DVector::from_fn(f.dim(), |i, _| 0.03 * (i as f64 + 1.0));
        let lambda = f.moment.at(&z0);
        let red = symplectic_reduce(&f, &lambda, &mut rng, &tol()).map_err(|e| e.to_string())?;
        req!(red.closed_residual < 1e-4, "closedness {:.3e}", red.closed_residual);
        req!(
            red.min_singular_value > 1e-6,
            "nondegeneracy {:.3e}",
            red.min_singular_value
        );
        req!(red.kernel_match, "kernel of the fiber form is not the orbit directions");
        req!(
            red.fiber_dim - red.reduced_dim == red.stabilizer_dim,
            "dimension bookkeeping: fiber {} reduced {} stabilizer {}",
            red.fiber_dim,
            red.reduced_dim,
            red.stabilizer_dim
        );
        // local freeness at regular sampled points
        let lf = check_locally_free(&f, 3, &mut rng, &tol());
        req!(lf.checked > 0, "no surjective points sampled");
        req!(lf.violations.is_empty(), "local freeness violations: {:?}", lf.violations);
        // negative controls: a singular level and a corrupted form
        let model = so3();
        let g = two_gon(&model, &tol()).map_err(|e| e.to_string())?;
        match symplectic_reduce(&g, &DVector::zeros(6), &mut rng, &tol()) {
            Err(Error::NotRegularValue(_)) => {}
            other => req!(false, "singular level accepted: {:?}", other.map(|_| ()).err()),
        }
        let mut bad = f.clone();
        let base = bad.omega.clone();
        bad.omega = TwoForm {
            eval: Rc::new(move |x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| {
                // x2 dx0 ^ dx1 is not closed
                base.at(x, u, v) + x[2] * (u[0] * v[1] - u[1] * v[0])
            }),
            label: "corrupt".into(),
        };
        let red_bad = symplectic_reduce(&bad, &lambda, &mut rng, &tol());
        let detected = match red_bad {
            Err(_) => true,
            Ok(r) => r.closed_residual > 1e-4 || !r.kernel_match,
        };
        req!(detected, "corrupted form not detected by reduction");
        Ok(())
    })());
}

/// Bivector matrix 1/2 sum_a (e_a)_Q wedge (f^a)_Q from the generating
/// fields of a dual pair basis.
fn wedge_bivector(
    target: &MomentTarget,
    m: &Subspace,
    x: &DVector<f64>,
) -> Result<DMatrix<f64>, String> {
    let (e, fb) = dual_pair_basis(&target.pair, m, &tol()).map_err(|e| e.to_string())?;
    let qd = target.q_dim();
    let k = e.ncols();
    let mut pi = DMatrix::zeros(qd, qd);
    for a in 0..k {
        let ea = target.d_field(&e.column(a).into_owned(), x, &tol());
        let fa = target.d_field(&fb.column(a).into_owned(), x, &tol());
        // d_field generates through exp(-t zeta), which reverses the wedge
        // order relative to the left-action convention of the dual basis.
        pi += 0.5 * (&fa * ea.transpose() - &ea * fa.transpose());
    }
    Ok(pi)
}

#[test]
fn criterion_8_bivector_cross_check() {
    report(8, "bivector against the dual-basis formula", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(108);
        let model = so3();
        let n = model.dim();
        // Q = D/G with the invariant complement
        let tq = target_dg(&model, &tol()).map_err(|e| e.to_string())?;
        // Q = D with the block-diagonal complement
        let t = target_d(&model, &tol()).map_err(|e| e.to_string())?;
        let mut mb = DMatrix::zeros(2 * n, 2 * model.complement.dim());
        mb.view_mut((0, 0), (n, model.complement.dim()))
            .copy_from(&model.complement.basis);
        mb.view_mut((n, model.complement.dim()), (n, model.complement.dim()))
            .copy_from(&model.complement.basis);
        let m_d = Subspace::new(mb, &tol()).map_err(|e| e.to_string())?;
        for (label, target, m) in [
            ("Q=D/G", &tq, &model.complement),
            ("Q=D", &t, &m_d),
        ] {
            for _ in 0..3 {
                let x = target.space.random_point(&mut rng);
                let am = target.action_matrix(&x, &tol());
                let pi = bivector_from_splitting(&target.pair, m, &am, &tol())
                    .map_err(|e| e.to_string())?;
                let pi_alt = wedge_bivector(target, m, &x)?;
                let d = (&pi - &pi_alt).norm();
                req!(d < 1e-9, "{label}: bivector mismatch {d:.3e}");
            }
        }
        // the quotient map D -> D/G relates the two bivectors
        let (_, project) = standard_dg_descent(&t, &tq, &tol()).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let x = t.space.random_point(&mut rng);
            let am = t.action_matrix(&x, &tol());
            let pi_d = bivector_from_splitting(&t.pair, &m_d, &am, &tol())
                .map_err(|e| e.to_string())?;
            let z = project.at(&x);
            let amq = tq.action_matrix(&z, &tol());
            let pi_q = bivector_from_splitting(&tq.pair, &model.complement, &amq, &tol())
                .map_err(|e| e.to_string())?;
            let jac = project.jacobian(&x, t.q_dim(), &tol());
            let pushed = &jac * &pi_d * jac.transpose();
            // the descent chart reverses the splitting orientation (see
            // quotient_to_dg), so the bivector descends with a sign
            let d = (&pushed + &pi_q).norm();
            req!(d < 1e-7, "quotient does not relate the bivectors: {d:.3e}");
        }
        Ok(())
    })());
}

#[test]
fn criterion_9_negative_controls() {
    report(9, "every verifier fails on a corrupted input", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let model = so3();
        // quasi-symplectic suite: corrupted 2-form fails axiom (i)
        let mut g = two_gon(&model, &tol()).map_err(|e| e.to_string())?;
        let base = g.omega.clone();
        g.omega = TwoForm {
            eval: Rc::new(move |x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| {
                base.at(x, u, v) + x[0] * (u[1] * v[2] - u[2] * v[1])
            }),
            label: "corrupt".into(),
        };
        match ensure_quasi_symplectic(&g, 2, &mut rng, &tol()) {
            Err(Error::AxiomFailure { .. }) => {}
            other => req!(false, "corrupted form passed: {:?}", other.map(|_| ()).err()),
        }
        // moduli suite: scaled 2-form breaks the contraction formula
        let mut ms = build_polygon_space(&model, &SurfaceData::disk(3), &tol())
            .map_err(|e| e.to_string())?;
        let base = ms.omega.clone();
        ms.omega = TwoForm {
            eval: Rc::new(move |x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| {
                1.3 * base.at(x, u, v)
            }),
            label: "scaled".into(),
        };
        let rep = verify_moduli(&ms, 2, &mut rng, &tol());
        req!(
            rep.d_omega > 1e-3 || rep.contraction > 1e-3,
            "scaled moduli form passed: {rep:?}"
        );
        // groupoid suite: scaled 2-form breaks the moment conditions
        let t = target_d(&model, &tol()).map_err(|e| e.to_string())?;
        let s = canonical_splitting_d(&t, &tol()).map_err(|e| e.to_string())?;
        let mut gsp = groupoid_two_form(&t, &s, &tol());
        let base = gsp.omega.clone();
        gsp.omega = TwoForm {
            eval: Rc::new(move |x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| {
                1.3 * base.at(x, u, v)
            }),
            label: "scaled".into(),
        };
        let rep = verify_groupoid(&gsp, &mut rng, &tol()).map_err(|e| e.to_string())?;
        req!(
            rep.moment_first > 1e-3 || rep.moment_second > 1e-3,
            "scaled groupoid form passed: {rep:?}"
        );
        // splitting invariants: a scaled alpha is no longer a section
        let bad = Splitting {
            alpha: {
                let a = s.alpha.clone();
                Rc::new(move |x: &DVector<f64>, v: &DVector<f64>| 2.0 * a(x, v))
            },
            eta: s.eta.clone(),
            label: "scaled".into(),
        };
        let (sec, _) = bad.check_invariants(&t, &mut rng, 2, &tol());
        req!(sec > 1e-2, "scaled alpha still a section: {sec:.3e}");
        // Lagrangian relation check rejects a non-isometric graph
        let v2 = MetrizedSpace::new(DMatrix::identity(2, 2), &tol()).map_err(|e| e.to_string())?;
        let rel = LagrangianRelation::graph(
            &(2.0 * DMatrix::identity(2, 2)),
            v2.clone(),
            v2,
            &tol(),
        )
        .map_err(|e| e.to_string())?;
        let (ok, diag) = check_lagrangian_relation(&rel).map_err(|e| e.to_string())?;
        req!(
            !ok && diag.isotropy_residual > 1e-3,
            "scaling graph accepted as Lagrangian"
        );
        // bivector construction rejects a non-transitive action
        let err = bivector_from_splitting(
            &model.pair,
            &model.complement,
            &DMatrix::zeros(2, model.dim()),
            &tol(),
        );
        req!(err.is_err(), "zero action accepted by the bivector construction");
        // local freeness flags a trivial action
        let o = so3_orbit(&mut rng);
        let f = fuse(&o, &conjugate(&o).map_err(|e| e.to_string())?, &tol())
            .map_err(|e| e.to_string())?;
        let mut frozen = f.clone();
        frozen.action = Rc::new(|_, x: &DVector<f64>| x.clone());
        let lf = check_locally_free(&frozen, 3, &mut rng, &tol());
        req!(!lf.violations.is_empty(), "trivial action passed local freeness");
        Ok(())
    })());
}
