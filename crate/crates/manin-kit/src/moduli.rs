//! Moduli spaces of flat D-bundles over surfaces with marked boundary.
//!
//! Surfaces are always presented in cut form: a polygon with edges listed in
//! word order (the product of the edge holonomies around the polygon is e),
//! together with an orientation-reversing pairing of glued edges and an
//! optional free/colored labeling of the boundary edges. The 2-form comes
//! from the Ševera product (e, omega) = (Phi_1, 0) * ... * (Phi_r, 0).

use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geomcalc::{d_two_form, kernel_intersection_dim, ChartMap, ChartedSpace, TwoForm, unit};
use crate::hamspace::{product_d_target, slice_quotient, HamiltonianSpace};
use crate::liegroup::GroupModel;
use crate::linalg;
use crate::targets::GroupTuple;

// Sign conventions (generating fields use exp(-t zeta), factorial-free
// wedge): the moduli axioms verify as
//   (1) d omega = + sum_e Phi_e* eta
//   (2) iota(zeta_M) omega = + 1/2 sum_e (<Phi_e* theta^L, zeta_right> +
//                                          <Phi_e* theta^R, zeta_left>)
// where "left"/"right" are the vertices before/after the edge in word
// order. These match the Hamiltonian-space axiom orientation.
const MODULI_D_SIGN: f64 = 1.0;
const MODULI_CONTRACTION_SIGN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeColor {
    Free,
    Colored,
}

#[derive(Debug, Clone)]
pub struct SurfaceData {
    pub num_edges: usize,
    /// Partner of each edge (orientation-reversing gluing), if any.
    pub pairing: Vec<Option<usize>>,
    /// Labels for unpaired edges; paired edges must be Free.
    pub coloring: Option<Vec<EdgeColor>>,
    pub label: String,
}

impl SurfaceData {
    /// Disk with r boundary edges, no pairings, no coloring.
    pub fn disk(r: usize) -> Self {
        SurfaceData {
            num_edges: r,
            pairing: vec![None; r],
            coloring: None,
            label: format!("disk:{r}"),
        }
    }

    /// Bi-colored 2n-gon: edges in word order f c f c ..., odd slots colored.
    pub fn colored_2ngon(n: usize) -> Self {
        let colors = (0..2 * n)
            .map(|i| if i % 2 == 0 { EdgeColor::Free } else { EdgeColor::Colored })
            .collect();
        SurfaceData {
            num_edges: 2 * n,
            pairing: vec![None; 2 * n],
            coloring: Some(colors),
            label: format!("{}gon", 2 * n),
        }
    }

    /// One-holed torus: word a b a^{-1} b^{-1} c with c unpaired.
    pub fn torus_one_hole() -> Self {
        let mut pairing = vec![None; 5];
        pairing[0] = Some(2);
        pairing[2] = Some(0);
        pairing[1] = Some(3);
        pairing[3] = Some(1);
        SurfaceData {
            num_edges: 5,
            pairing,
            coloring: None,
            label: "torus1".into(),
        }
    }

    /// Colored annulus with n1 and n2 free edges on the two boundary
    /// circles: word F C ... F C P F' C' ... F' C' P^{-1}.
    pub fn colored_annulus(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::ColoringInvalid(
                "annulus boundary circles need at least one free edge each".into(),
            ));
        }
        let r = 2 * n1 + 2 * n2 + 2;
        let mut pairing = vec![None; r];
        pairing[2 * n1] = Some(r - 1);
        pairing[r - 1] = Some(2 * n1);
        let mut colors = vec![EdgeColor::Free; r];
        for (i, c) in colors.iter_mut().enumerate() {
            if i == 2 * n1 || i == r - 1 {
                continue;
            }
            // boundary-2 parity shifts by the connecting paired edge
            let odd = if i < 2 * n1 { i % 2 == 1 } else { (i - 2 * n1 - 1) % 2 == 1 };
            if odd {
                *c = EdgeColor::Colored;
            }
        }
        Ok(SurfaceData {
            num_edges: r,
            pairing,
            coloring: Some(colors),
            label: format!("annulus:{n1},{n2}"),
        })
    }

    pub fn is_colored(&self, edge: usize) -> bool {
        self.coloring
            .as_ref()
            .map(|c| c[edge] == EdgeColor::Colored)
            .unwrap_or(false)
    }

    /// Vertex classes of the glued surface: corner v_i sits after edge i in
    /// word order; pairing (a,b) identifies v_{a-1} ~ v_b and v_a ~ v_{b-1}.
    pub fn vertex_classes(&self) -> (Vec<usize>, usize) {
        let r = self.num_edges;
        let mut parent: Vec<usize> = (0..r).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let prev = |i: usize| (i + r - 1) % r;
        for a in 0..r {
            if let Some(b) = self.pairing[a] {
                let (x, y) = (find(&mut parent, prev(a)), find(&mut parent, b));
                parent[x.max(y)] = x.min(y);
                let (x, y) = (find(&mut parent, a), find(&mut parent, prev(b)));
                parent[x.max(y)] = x.min(y);
            }
        }
        let mut label = vec![usize::MAX; r];
        let mut next = 0;
        let mut class = vec![0usize; r];
        for i in 0..r {
            let root = find(&mut parent, i);
            if label[root] == usize::MAX {
                label[root] = next;
                next += 1;
            }
            class[i] = label[root];
        }
        (class, next)
    }

    /// Boundary cycles of unpaired edges (walking the glued boundary).
    pub fn boundary_cycles(&self) -> Vec<Vec<usize>> {
        let r = self.num_edges;
        let next = |i: usize| {
            let mut j = (i + 1) % r;
            while let Some(p) = self.pairing[j] {
                j = (p + 1) % r;
            }
            j
        };
        let mut seen = vec![false; r];
        let mut cycles = vec![];
        for start in 0..r {
            if self.pairing[start].is_some() || seen[start] {
                continue;
            }
            let mut cycle = vec![];
            let mut e = start;
            loop {
                seen[e] = true;
                cycle.push(e);
                e = next(e);
                if e == start {
                    break;
                }
            }
            cycles.push(cycle);
        }
        cycles
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.num_edges;
        if self.pairing.len() != r {
            return Err(Error::PresentationMismatch("pairing length".into()));
        }
        for i in 0..r {
            if let Some(j) = self.pairing[i] {
                if j >= r || j == i || self.pairing[j] != Some(i) {
                    return Err(Error::PresentationMismatch(format!(
                        "pairing is not a fixed-point-free involution at edge {i}"
                    )));
                }
            }
        }
        if let Some(colors) = &self.coloring {
            if colors.len() != r {
                return Err(Error::ColoringInvalid("coloring length".into()));
            }
            for i in 0..r {
                if self.pairing[i].is_some() && colors[i] == EdgeColor::Colored {
                    return Err(Error::ColoringInvalid(format!("paired edge {i} colored")));
                }
            }
            for cycle in self.boundary_cycles() {
                if cycle.len() % 2 != 0 {
                    return Err(Error::ColoringInvalid(format!(
                        "boundary cycle {cycle:?} has odd length"
                    )));
                }
                for w in 0..cycle.len() {
                    let a = colors[cycle[w]];
                    let b = colors[cycle[(w + 1) % cycle.len()]];
                    if a == b {
                        return Err(Error::ColoringInvalid(format!(
                            "boundary cycle {cycle:?} does not alternate"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Ševera form pairs
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct FormPair {
    pub dim: usize,
    /// Map into the exponential chart of D.
    pub phi: ChartMap,
    pub omega: TwoForm,
}

/// The wedge pairing 1/2 <d1* theta^L, d2* theta^R> for two D-valued maps.
fn beta_pairing(
    model: &GroupModel,
    phi1: &ChartMap,
    phi2: &ChartMap,
    z: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> f64 {
    let h = tol.fd_step;
    let leg = |t: &DVector<f64>| {
        let x1 = phi1.at(z);
        let x2 = phi2.at(z);
        let d1 = model.exp(&x1);
        let d2 = model.exp(&x2);
        let d1dot = (model.exp(&phi1.at(&(z + h * t))) - model.exp(&phi1.at(&(z - h * t))))
            / (2.0 * h);
        let d2dot = (model.exp(&phi2.at(&(z + h * t))) - model.exp(&phi2.at(&(z - h * t))))
            / (2.0 * h);
        (
            model.theta_l(&d1, &d1dot).expect("tangent"),
            model.theta_r(&d2, &d2dot).expect("tangent"),
        )
    };
    let (l_u, r_u) = leg(u);
    let (l_v, r_v) = leg(v);
    let b = &model.pair.d.metric;
    0.5 * ((l_u.transpose() * b * &r_v)[0] - (l_v.transpose() * b * &r_u)[0])
}

/// Ševera product (Phi1, w1) * (Phi2, w2) = (Phi1 Phi2, w1 + w2 - beta).
pub fn severa_product(
    model: &GroupModel,
    a: &FormPair,
    b: &FormPair,
    tol: &Tolerances,
) -> FormPair {
    assert_eq!(a.dim, b.dim, "common domain required");
    let (m1, p1, p2) = (model.clone(), a.phi.clone(), b.phi.clone());
    let phi = ChartMap {
        map: Rc::new(move |z: &DVector<f64>| {
            m1.log(&(m1.exp(&p1.at(z)) * m1.exp(&p2.at(z))))
                .expect("product within the log chart")
        }),
        label: format!("{}*{}", a.phi.label, b.phi.label),
    };
    let (m2, p1b, p2b) = (model.clone(), a.phi.clone(), b.phi.clone());
    let (w1, w2) = (a.omega.clone(), b.omega.clone());
    let tol_c = *tol;
    let omega = TwoForm {
        eval: Rc::new(move |z, u, v| {
            w1.at(z, u, v) + w2.at(z, u, v) - beta_pairing(&m2, &p1b, &p2b, z, u, v, &tol_c)
        }),
        label: "severa".into(),
    };
    FormPair { dim: a.dim, phi, omega }
}

pub fn severa_identity(dim: usize, ambient: usize) -> FormPair {
    FormPair {
        dim,
        phi: ChartMap {
            map: Rc::new(move |_: &DVector<f64>| DVector::zeros(ambient)),
            label: "e".into(),
        },
        omega: TwoForm {
            eval: Rc::new(|_, _, _| 0.0),
            label: "0".into(),
        },
    }
}

pub fn severa_inverse(fp: &FormPair) -> FormPair {
    let p = fp.phi.clone();
    let w = fp.omega.clone();
    FormPair {
        dim: fp.dim,
        phi: ChartMap {
            map: Rc::new(move |z: &DVector<f64>| -p.at(z)),
            label: format!("{}^-1", fp.phi.label),
        },
        omega: TwoForm {
            eval: Rc::new(move |z, u, v| -w.at(z, u, v)),
            label: format!("-{}", fp.omega.label),
        },
    }
}

// ---------------------------------------------------------------------------
// moduli space builder
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct ModuliSpace {
    pub surface: SurfaceData,
    pub model: GroupModel,
    pub space: ChartedSpace,
    /// Chart variables: (edge, colored, offset, dim) in edge order.
    pub vars: Vec<(usize, bool, usize, usize)>,
    pub solved_edge: usize,
    /// Moment edges (unpaired free edges) in edge order.
    pub free_edges: Vec<usize>,
    pub vertex_class: Vec<usize>,
    pub num_classes: usize,
    /// All r edge holonomies from chart coordinates.
    pub holonomy: Rc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>>>,
    /// Concatenated log-coordinates of the moment edges.
    pub moment: ChartMap,
    pub omega: TwoForm,
    /// Action of one group element per vertex class.
    pub action: Rc<dyn Fn(&[DMatrix<f64>], &DVector<f64>) -> DVector<f64>>,
    pub label: String,
}

fn g_chart_coords(model: &GroupModel, mat: &DMatrix<f64>) -> DVector<f64> {
    let v = model.log(mat).expect("within the log chart");
    let (c, res) = linalg::lstsq_with_residual(&model.pair.g.basis, &v, 1e-12);
    assert!(
        res < 1e-6 * (1.0 + v.norm()),
        "holonomy left the subgroup (residual {res:.3e})"
    );
    c
}

/// Build the moduli space of a cut surface. Colored edges (if a coloring is
/// present) are constrained to G and parametrized by subgroup coordinates.
pub fn build_moduli(
    model: &GroupModel,
    surface: &SurfaceData,
    tol: &Tolerances,
) -> Result<ModuliSpace> {
    surface.validate()?;
    let r = surface.num_edges;
    let n = model.dim();
    let k = model.pair.g.dim();
    let free_edges: Vec<usize> = (0..r)
        .filter(|&i| surface.pairing[i].is_none() && !surface.is_colored(i))
        .collect();
    let solved_edge = *free_edges
        .last()
        .ok_or_else(|| Error::UnsolvableRelation(r))?;
    let mut vars = vec![];
    let mut offset = 0;
    for i in 0..r {
        if i == solved_edge {
            continue;
        }
        match surface.pairing[i] {
            Some(j) if j < i => continue, // partner holds the variable
            Some(_) => {
                vars.push((i, false, offset, n));
                offset += n;
            }
            None => {
                let colored = surface.is_colored(i);
                let dim = if colored { k } else { n };
                vars.push((i, colored, offset, dim));
                offset += dim;
            }
        }
    }
    let chart_dim = offset;
    let (vertex_class, num_classes) = surface.vertex_classes();

    let hol_model = model.clone();
    let hol_vars = vars.clone();
    let pairing = surface.pairing.clone();
    let holonomy: Rc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>>> = Rc::new(move |z: &DVector<f64>| {
        let mut mats: Vec<Option<DMatrix<f64>>> = vec![None; r];
        for &(edge, colored, off, dim) in &hol_vars {
            let coords = z.rows(off, dim).into_owned();
            mats[edge] = Some(if colored {
                hol_model.exp_g(&coords)
            } else {
                hol_model.exp(&coords)
            });
        }
        for i in 0..r {
            if mats[i].is_none() && i != solved_edge {
                let j = pairing[i].expect("non-variable edge is paired");
                let partner = mats[j].clone().expect("partner variable");
                mats[i] = Some(hol_model.inv(&partner).expect("invertible"));
            }
        }
        // solved edge from the word relation: d_s = (d_{s+1} ... d_{s-1})^{-1}
        let mut prod = hol_model.identity();
        for step in 1..r {
            let idx = (solved_edge + step) % r;
            prod = prod * mats[idx].as_ref().expect("computed");
        }
        mats[solved_edge] = Some(hol_model.inv(&prod).expect("invertible"));
        mats.into_iter().map(|m| m.expect("all edges")).collect()
    });

    let space = ChartedSpace {
        param_dim: chart_dim,
        embed: {
            let h = holonomy.clone();
            Rc::new(move |z| h(z))
        },
        chart_radius: 0.4,
        label: format!("M_D({})", surface.label),
    };

    let mom_model = model.clone();
    let hol_m = holonomy.clone();
    let free_m = free_edges.clone();
    let moment = ChartMap {
        map: Rc::new(move |z: &DVector<f64>| {
            let mats = hol_m(z);
            let mut out = DVector::zeros(free_m.len() * n);
            for (c, &e) in free_m.iter().enumerate() {
                out.rows_mut(c * n, n)
                    .copy_from(&mom_model.log(&mats[e]).expect("within the log chart"));
            }
            out
        }),
        label: "Phi".into(),
    };

    // omega from the expanded Ševera product, in the orientation used by the
    // groupoid and Hamiltonian-space modules (the opposite of the raw
    // product form, which satisfies d omega = -sum Phi_e* eta):
    // omega(u,v) = +sum_{j=1}^{r-1} 1/2 <(d_0..d_{j-1})* theta^L, d_j* theta^R>
    let om_model = model.clone();
    let hol_o = holonomy.clone();
    let tol_o = *tol;
    let omega = TwoForm {
        eval: Rc::new(move |z, u, v| {
            let h = tol_o.fd_step;
            let base = hol_o(z);
            let pu = hol_o(&(z + h * u));
            let mu = hol_o(&(z - h * u));
            let pv = hol_o(&(z + h * v));
            let mv = hol_o(&(z - h * v));
            let prefix = |mats: &[DMatrix<f64>], j: usize| {
                let mut p = om_model.identity();
                for m in mats.iter().take(j) {
                    p = p * m;
                }
                p
            };
            let b = &om_model.pair.d.metric;
            let mut total = 0.0;
            for j in 1..r {
                let p = prefix(&base, j);
                let pdot_u = (prefix(&pu, j) - prefix(&mu, j)) / (2.0 * h);
                let pdot_v = (prefix(&pv, j) - prefix(&mv, j)) / (2.0 * h);
                let ddot_u = (&pu[j] - &mu[j]) / (2.0 * h);
                let ddot_v = (&pv[j] - &mv[j]) / (2.0 * h);
                let tl_u = om_model.theta_l(&p, &pdot_u).expect("tangent");
                let tl_v = om_model.theta_l(&p, &pdot_v).expect("tangent");
                let tr_u = om_model.theta_r(&base[j], &ddot_u).expect("tangent");
                let tr_v = om_model.theta_r(&base[j], &ddot_v).expect("tangent");
                total += 0.5
                    * ((tl_u.transpose() * b * &tr_v)[0] - (tl_v.transpose() * b * &tr_u)[0]);
            }
            total
        }),
        label: format!("omega[{}]", surface.label),
    };

    // action of one group element per vertex class, in word order:
    // d_i -> a_{v_{i-1}} d_i a_{v_i}^{-1}
    let act_model = model.clone();
    let hol_a = holonomy.clone();
    let vars_a = vars.clone();
    let class_a = vertex_class.clone();
    let action: Rc<dyn Fn(&[DMatrix<f64>], &DVector<f64>) -> DVector<f64>> =
        Rc::new(move |a: &[DMatrix<f64>], z: &DVector<f64>| {
            let mats = hol_a(z);
            let mut out = DVector::zeros(z.len());
            for &(edge, colored, off, dim) in &vars_a {
                let left = &a[class_a[(edge + r - 1) % r]];
                let right = &a[class_a[edge]];
                let moved = left * &mats[edge] * act_model.inv(right).expect("invertible");
                if colored {
                    out.rows_mut(off, dim)
                        .copy_from(&g_chart_coords(&act_model, &moved));
                } else {
                    out.rows_mut(off, dim)
                        .copy_from(&act_model.log(&moved).expect("within the log chart"));
                }
            }
            out
        });

    Ok(ModuliSpace {
        surface: surface.clone(),
        model: model.clone(),
        space,
        vars,
        solved_edge,
        free_edges,
        vertex_class,
        num_classes,
        holonomy,
        moment,
        omega,
        action,
        label: format!("M_D({})", surface.label),
    })
}

/// Uncolored moduli space of a cut surface.
pub fn build_polygon_space(
    model: &GroupModel,
    surface: &SurfaceData,
    tol: &Tolerances,
) -> Result<ModuliSpace> {
    let mut s = surface.clone();
    s.coloring = None;
    build_moduli(model, &s, tol)
}

/// Colored moduli space, wrapped as a Hamiltonian space for the product
/// target D^{E_free} with the (G x G)^{E_free} action.
pub fn build_colored_space(
    model: &GroupModel,
    surface: &SurfaceData,
    tol: &Tolerances,
) -> Result<(ModuliSpace, HamiltonianSpace)> {
    if surface.coloring.is_none() {
        return Err(Error::ColoringInvalid("surface has no coloring".into()));
    }
    let ms = build_moduli(model, surface, tol)?;
    let n_free = ms.free_edges.len();
    let (target, splitting) = product_d_target(model, n_free, tol)?;
    // vertex classes -> tuple slots: each class must touch exactly one free
    // edge, as its left (tuple slot 2c) or right (slot 2c+1) vertex
    let r = surface.num_edges;
    let mut slot_of_class = vec![usize::MAX; ms.num_classes];
    for (c, &e) in ms.free_edges.iter().enumerate() {
        let left = ms.vertex_class[(e + r - 1) % r];
        let right = ms.vertex_class[e];
        for (class, slot) in [(left, 2 * c), (right, 2 * c + 1)] {
            if slot_of_class[class] != usize::MAX {
                return Err(Error::ColoringInvalid(format!(
                    "vertex class {class} touches more than one free edge"
                )));
            }
            slot_of_class[class] = slot;
        }
    }
    if slot_of_class.iter().any(|&s| s == usize::MAX) {
        return Err(Error::ColoringInvalid(
            "vertex class without a free edge".into(),
        ));
    }
    let ms_action = ms.action.clone();
    let slots = slot_of_class.clone();
    let action = Rc::new(move |tuple: &GroupTuple, z: &DVector<f64>| {
        let per_class: Vec<DMatrix<f64>> = slots.iter().map(|&s| tuple[s].clone()).collect();
        ms_action(&per_class, z)
    });
    let ham = HamiltonianSpace {
        space: ms.space.clone(),
        target,
        splitting,
        components: n_free,
        moment: ms.moment.clone(),
        omega: ms.omega.clone(),
        action,
        from_parent: None,
        label: format!("M_D^col({})", surface.label),
    };
    Ok((ms, ham))
}

// ---------------------------------------------------------------------------
// axiom verification (Theorem th:basic)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ModuliReport {
    pub d_omega: f64,
    pub contraction: f64,
    pub kernel_defect: usize,
    pub points: usize,
}

pub fn verify_moduli<R: Rng>(
    ms: &ModuliSpace,
    points: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> ModuliReport {
    let dim = ms.space.param_dim;
    let n = ms.model.dim();
    let h = tol.fd_step;
    let mut rep = ModuliReport {
        d_omega: 0.0,
        contraction: 0.0,
        kernel_defect: 0,
        points,
    };
    let outer = Tolerances {
        fd_step: tol.fd_second,
        ..*tol
    };
    let dom = d_two_form(&ms.omega, &outer);
    for _ in 0..points {
        let z = ms.space.random_point(rng);
        // (1) d omega = sum_e Phi_e* eta
        if dim >= 3 {
            let u = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let w = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let lhs = dom.at(&z, &u, &v, &w);
            let mut rhs = 0.0;
            let base = (ms.holonomy)(&z);
            let legs = |t: &DVector<f64>| {
                let p = (ms.holonomy)(&(&z + h * t));
                let m = (ms.holonomy)(&(&z - h * t));
                ms.free_edges
                    .iter()
                    .map(|&e| {
                        let dot = (&p[e] - &m[e]) / (2.0 * h);
                        ms.model.theta_l(&base[e], &dot).expect("tangent")
                    })
                    .collect::<Vec<_>>()
            };
            let (tu, tv, tw) = (legs(&u), legs(&v), legs(&w));
            for c in 0..ms.free_edges.len() {
                rhs += ms.model.cartan_eta(&tu[c], &tv[c], &tw[c]);
            }
            rep.d_omega = rep.d_omega.max((lhs - MODULI_D_SIGN * rhs).abs());
        }
        // (2) contraction formula for a random zeta in d^V
        let zeta: Vec<DVector<f64>> = (0..ms.num_classes)
            .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let tuple_at = |t: f64| -> Vec<DMatrix<f64>> {
            zeta.iter().map(|zt| ms.model.exp(&(-t * zt))).collect()
        };
        let field = ((ms.action)(&tuple_at(h), &z) - (ms.action)(&tuple_at(-h), &z)) / (2.0 * h);
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = ms.omega.at(&z, &field, &v);
        let base = (ms.holonomy)(&z);
        let p = (ms.holonomy)(&(&z + h * &v));
        let m = (ms.holonomy)(&(&z - h * &v));
        let b = &ms.model.pair.d.metric;
        let r = ms.surface.num_edges;
        let mut rhs = 0.0;
        for &e in &ms.free_edges {
            let dot = (&p[e] - &m[e]) / (2.0 * h);
            let tl = ms.model.theta_l(&base[e], &dot).expect("tangent");
            let tr = ms.model.theta_r(&base[e], &dot).expect("tangent");
            let z_left = &zeta[ms.vertex_class[(e + r - 1) % r]];
            let z_right = &zeta[ms.vertex_class[e]];
            rhs += MODULI_CONTRACTION_SIGN
                * ((tl.transpose() * b * z_right)[0] + (tr.transpose() * b * z_left)[0]);
        }
        rep.contraction = rep.contraction.max((lhs - rhs).abs());
        // (3) ker omega ∩ ker TPhi = 0
        let gram = ms.omega.gram(&z, dim);
        let jac = ms.moment.jacobian(&z, dim, tol);
        let defect = kernel_intersection_dim(&gram, &[jac], 1e-6);
        rep.kernel_defect = rep.kernel_defect.max(defect);
    }
    rep
}

// ---------------------------------------------------------------------------
// surface fusion
// ---------------------------------------------------------------------------

fn colored_disk_sides(s: &SurfaceData) -> Result<usize> {
    let colors = s
        .coloring
        .as_ref()
        .ok_or_else(|| Error::InvalidAttachment("fusion needs colored surfaces".into()))?;
    if s.pairing.iter().any(|p| p.is_some()) || s.num_edges % 2 != 0 || s.num_edges == 0 {
        return Err(Error::InvalidAttachment(
            "fusion implemented for colored disks".into(),
        ));
    }
    for (i, c) in colors.iter().enumerate() {
        let want = if i % 2 == 0 { EdgeColor::Free } else { EdgeColor::Colored };
        if *c != want {
            return Err(Error::InvalidAttachment(
                "colored disk must alternate starting with a free edge".into(),
            ));
        }
    }
    Ok(s.num_edges / 2)
}

/// Fusion of two colored 2k- and 2l-gons: attach a bi-colored strip between
/// the vertex after the last free edge of s1 and the vertex before the first
/// free edge of s2, giving a 2(k+l)-2-gon.
pub fn surface_fusion(s1: &SurfaceData, s2: &SurfaceData) -> Result<SurfaceData> {
    let k = colored_disk_sides(s1)?;
    let l = colored_disk_sides(s2)?;
    Ok(SurfaceData::colored_2ngon(k + l - 1))
}

/// Numerical equivalence of surface fusion with Hamiltonian-space fusion:
/// max discrepancy of the omega and moment evaluators under the canonical
/// chart identification.
pub fn fusion_equivalence<R: Rng>(
    model: &GroupModel,
    s1: &SurfaceData,
    s2: &SurfaceData,
    points: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<f64> {
    let k = colored_disk_sides(s1)?;
    let l = colored_disk_sides(s2)?;
    let glued = surface_fusion(s1, s2)?;
    let (gm, gham) = build_colored_space(model, &glued, tol)?;
    let (_, ham1) = build_colored_space(model, s1, tol)?;
    let (_, ham2) = build_colored_space(model, s2, tol)?;
    let fused = crate::hamspace::fuse(&ham1, &ham2, tol)?;
    let proj = fused.from_parent.as_ref().expect("fusion slice").clone();
    let n = model.dim();
    let kg = model.pair.g.dim();
    let dim1 = ham1.dim();
    let dim2 = ham2.dim();
    // representative in M1 x M2 with the gauge h_k = e:
    //   u_i = F_i, h_i = C_i (i < k); h_k = e; u'_1 = (F_1 C_1 .. C_{k-1}) F_k;
    //   h'_j = C_{k+j-1}; u'_j = F_{k+j-1} (j >= 2); h'_l = C_{k+l-1}.
    let reconstruct = {
        let gm_hol = gm.holonomy.clone();
        let model_c = model.clone();
        move |z: &DVector<f64>| -> DVector<f64> {
            let mats = gm_hol(z);
            let f = |t: usize| &mats[2 * t]; // F_{t+1}
            let c = |t: usize| &mats[2 * t + 1]; // C_{t+1}
            let mut w = model_c.identity();
            for t in 0..k - 1 {
                w = w * f(t) * c(t);
            }
            let mut out = DVector::zeros(dim1 + dim2);
            let mut off = 0;
            for t in 0..k - 1 {
                out.rows_mut(off, n)
                    .copy_from(&model_c.log(f(t)).expect("chart"));
                off += n;
                out.rows_mut(off, kg)
                    .copy_from(&g_chart_coords(&model_c, c(t)));
                off += kg;
            }
            off += kg; // h_k = e -> zero coordinates
            // M2 variables [u'_1, h'_1, u'_2, ..., h'_{l-1}, h'_l]
            if l >= 2 {
                out.rows_mut(off, n)
                    .copy_from(&model_c.log(&(w.clone() * f(k - 1))).expect("chart"));
                off += n;
            }
            for j in 1..l {
                out.rows_mut(off, kg)
                    .copy_from(&g_chart_coords(&model_c, c(k + j - 2)));
                off += kg;
                if j + 1 < l {
                    out.rows_mut(off, n)
                        .copy_from(&model_c.log(f(k + j - 1)).expect("chart"));
                    off += n;
                }
            }
            out.rows_mut(off, kg)
                .copy_from(&g_chart_coords(&model_c, c(k + l - 2)));
            off += kg;
            assert_eq!(off, dim1 + dim2);
            out
        }
    };
    let ident = move |z: &DVector<f64>| proj(&reconstruct(z));
    let mut worst = 0.0f64;
    let hfd = 2e-6;
    for _ in 0..points {
        let z = DVector::from_fn(gham.dim(), |_, _| rng.gen_range(-0.12..0.12));
        let u = DVector::from_fn(gham.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(gham.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let z2 = ident(&z);
        let pu = (ident(&(&z + hfd * &u)) - ident(&(&z - hfd * &u))) / (2.0 * hfd);
        let pv = (ident(&(&z + hfd * &v)) - ident(&(&z - hfd * &v))) / (2.0 * hfd);
        worst = worst.max((gham.omega.at(&z, &u, &v) - fused.omega.at(&z2, &pu, &pv)).abs());
        let dm = (gham.moment.at(&z) - fused.moment.at(&z2)).norm();
        if dm > 1e-6 {
            return Err(Error::PresentationMismatch(format!(
                "moment mismatch {dm:.3e} under the fusion identification"
            )));
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// cutting invariance
// ---------------------------------------------------------------------------

/// Compare the 2-forms of two cut presentations of the same surface through
/// an identification of charts. `edge_map[c]` gives, for the c-th moment
/// edge of the first presentation, the moment component index in the second.
pub fn cutting_invariance<R: Rng>(
    model: &GroupModel,
    s1: &SurfaceData,
    s2: &SurfaceData,
    identify: &ChartMap,
    edge_map: &[usize],
    points: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<f64> {
    let m1 = build_polygon_space(model, s1, tol)?;
    let m2 = build_polygon_space(model, s2, tol)?;
    let n = model.dim();
    let mut worst = 0.0f64;
    for _ in 0..points {
        let z = m1.space.random_point(rng);
        let z2 = identify.at(&z);
        let q1 = m1.moment.at(&z);
        let q2 = m2.moment.at(&z2);
        for (c1, &c2) in edge_map.iter().enumerate() {
            let delta = (q1.rows(c1 * n, n) - q2.rows(c2 * n, n)).norm();
            if delta > 1e-8 * (1.0 + q1.norm()) {
                return Err(Error::PresentationMismatch(format!(
                    "holonomy mismatch {delta:.3e} for moment edge {c1}"
                )));
            }
        }
        let u = DVector::from_fn(m1.space.param_dim, |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(m1.space.param_dim, |_, _| rng.gen_range(-1.0..1.0));
        let pu = identify.push(&z, &u, tol);
        let pv = identify.push(&z, &v, tol);
        worst = worst.max((m1.omega.at(&z, &u, &v) - m2.omega.at(&z2, &pu, &pv)).abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// reduction at a free edge
// ---------------------------------------------------------------------------

/// Reduce a colored moduli space at one free edge: (Phi^e)^{-1}(G) / (G x G).
pub fn reduce_free_edge(
    ms: &ModuliSpace,
    ham: &HamiltonianSpace,
    comp: usize,
    tol: &Tolerances,
) -> Result<HamiltonianSpace> {
    let model = ms.model.clone();
    let n = model.dim();
    let k = model.pair.g.dim();
    let dim = ham.dim();
    let (e_basis, _f) = crate::liealg::dual_pair_basis(&model.pair, &model.complement, tol)?;
    // constraint: transverse (m-)coordinates of log(d_e) vanish
    let moment = ham.moment.clone();
    let eb = e_basis.clone();
    let metric = model.pair.d.metric.clone();
    let constraint = Rc::new(move |z: &DVector<f64>| -> DVector<f64> {
        let q = moment.at(z);
        eb.transpose() * &metric * q.rows(comp * n, n).into_owned()
    });
    // generic basepoint on the level set
    let c0 = constraint.clone();
    let mut seed = DVector::zeros(dim);
    for i in 0..dim {
        seed[i] = 0.05 * ((i % 7) as f64 - 3.0) / 3.0;
    }
    let z0 = linalg::newton_solve(move |z| c0(z), &seed, tol)
        .map_err(|_| Error::NotRegular("level-set projection diverged".into()))?;
    // regularity of the constraint
    let h = tol.fd_step;
    let mut jac = DMatrix::zeros(k, dim);
    for j in 0..dim {
        let e = unit(dim, j);
        jac.set_column(j, &((constraint(&(&z0 + h * &e)) - constraint(&(&z0 - h * &e))) / (2.0 * h)));
    }
    let sv = jac.clone().singular_values();
    if sv.len() < k || sv[k - 1] < 1e-6 * sv[0].max(1.0) {
        return Err(Error::NotRegular(format!(
            "level set of edge component {comp} is singular (min sv {:.3e})",
            sv[sv.len() - 1]
        )));
    }
    let null = linalg::null_space(&jac, 1e-8); // dim x (dim-k)
    let fiber_dim = null.ncols();
    let row = linalg::null_space(&null.transpose(), 1e-10);
    let c_f = constraint.clone();
    let z0_f = z0.clone();
    let null_f = null.clone();
    let row_f = row.clone();
    let tol_f = *tol;
    let fiber_chart = ChartMap {
        map: Rc::new(move |y: &DVector<f64>| {
            let base = &z0_f + &null_f * y;
            let cc = c_f.clone();
            let basec = base.clone();
            let rowc = row_f.clone();
            let w = linalg::newton_solve(
                move |w: &DVector<f64>| cc(&(&basec + &rowc * w)),
                &DVector::zeros(row_f.ncols()),
                &tol_f,
            )
            .expect("fiber projection converges");
            base + &row_f * w
        }),
        label: "fiber".into(),
    };
    // quotient by the (G x G) factor of the chosen component
    let ham_act = ham.action.clone();
    let fc = fiber_chart.clone();
    let null_a = null.clone();
    let z0_a = z0.clone();
    let model_a = model.clone();
    let nf = ham.target.factors;
    let orbit_act: Rc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>> =
        Rc::new(move |kappa: &DVector<f64>, y: &DVector<f64>| {
            let mut tuple: GroupTuple = (0..nf).map(|_| model_a.identity()).collect();
            tuple[2 * comp] = model_a.exp_g(&kappa.rows(0, k).into_owned());
            tuple[2 * comp + 1] = model_a.exp_g(&kappa.rows(k, k).into_owned());
            let moved = ham_act(&tuple, &fc.at(y));
            null_a.transpose() * (moved - &z0_a)
        });
    let slice = slice_quotient(fiber_dim, &DVector::zeros(fiber_dim), 2 * k, orbit_act, tol)?;
    let reduced_dim = slice.dim;
    // remaining components
    let comp_map: Vec<usize> = (0..ham.components).filter(|&c| c != comp).collect();
    let (target, splitting) = product_d_target(&model, comp_map.len(), tol)?;
    let fc_m = fiber_chart.clone();
    let incl_m = slice.incl.clone();
    let pm = ham.moment.clone();
    let comp_m = comp_map.clone();
    let moment = ChartMap {
        map: Rc::new(move |z: &DVector<f64>| {
            let q = pm.at(&fc_m.at(&incl_m.at(z)));
            let mut out = DVector::zeros(comp_m.len() * n);
            for (new_c, &old_c) in comp_m.iter().enumerate() {
                out.rows_mut(new_c * n, n).copy_from(&q.rows(old_c * n, n));
            }
            out
        }),
        label: "Phi[reduced]".into(),
    };
    let fc_o = fiber_chart.clone();
    let incl_o = slice.incl.clone();
    let base_omega = ham.omega.clone();
    let tol_o = *tol;
    let omega = TwoForm {
        eval: Rc::new(move |z, u, v| {
            let y = incl_o.at(z);
            let x = fc_o.at(&y);
            let pu = fc_o.push(&y, &incl_o.push(z, u, &tol_o), &tol_o);
            let pv = fc_o.push(&y, &incl_o.push(z, v, &tol_o), &tol_o);
            base_omega.at(&x, &pu, &pv)
        }),
        label: "omega[reduced]".into(),
    };
    let ham_act2 = ham.action.clone();
    let fc_a = fiber_chart.clone();
    let incl_a = slice.incl.clone();
    let proj_a = slice.project.clone();
    let null_b = null.clone();
    let z0_b = z0.clone();
    let model_b = model.clone();
    let comp_a = comp_map.clone();
    let action = Rc::new(move |a: &GroupTuple, z: &DVector<f64>| {
        let mut tuple: GroupTuple = (0..nf).map(|_| model_b.identity()).collect();
        for (new_c, &old_c) in comp_a.iter().enumerate() {
            tuple[2 * old_c] = a[2 * new_c].clone();
            tuple[2 * old_c + 1] = a[2 * new_c + 1].clone();
        }
        let moved = ham_act2(&tuple, &fc_a.at(&incl_a.at(z)));
        proj_a(&(null_b.transpose() * (moved - &z0_b)))
    });
    let space = crate::hamspace::coordinate_space(reduced_dim, 0.25, "reduced");
    Ok(HamiltonianSpace {
        space,
        target,
        splitting,
        components: comp_map.len(),
        moment,
        omega,
        action,
        from_parent: Some(slice.project.clone()),
        label: format!("reduce({}, comp {comp})", ham.label),
    })
}
