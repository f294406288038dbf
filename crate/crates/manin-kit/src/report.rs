//! Verification runs and deterministic reports.
//!
//! A run builds the space a recipe describes, sweeps the verification suite
//! bound to it, and collects one record per check: an id, the anchor of the
//! statement being tested, the maximal residual with the chart point that
//! attained it, the tolerance, and a pass flag. Reports serialize to a
//! versioned JSON schema or a fixed-width text table; both are byte-identical
//! across runs with equal configuration.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::hamspace::{verify_quasi_symplectic, HamiltonianSpace};
use crate::liegroup::{model_catalog, GroupModel};
use crate::moduli::{self, ModuliSpace};
use crate::recipe::{build_recipe, parse_recipe, BuiltSpace, Recipe};

pub const REPORT_SCHEMA: &str = "manin-kit/report-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: String,
    pub recipe: String,
    pub points: usize,
    pub seed: u64,
    /// Tolerance field overrides, applied to [`Tolerances`] by field name.
    pub tol_overrides: Vec<(String, f64)>,
    pub out: Option<String>,
    pub format: ReportFormat,
}

impl RunConfig {
    pub fn tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        for (key, value) in &self.tol_overrides {
            match key.as_str() {
                "exact" => tol.exact = *value,
                "rank_rel" => tol.rank_rel = *value,
                "evaluator" => tol.evaluator = *value,
                "fd_first" => tol.fd_first = *value,
                "fd_second" => tol.fd_second = *value,
                "fd_step" => tol.fd_step = *value,
                "manifold" => tol.manifold = *value,
                "newton" => tol.newton = *value,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown tolerance field '{other}'"
                    )))
                }
            }
        }
        Ok(tol)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// Statement the check exercises, by its mathematical name.
    pub anchor: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Chart point of the sweep that attained the maximal residual.
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: String,
}

impl Report {
    pub fn new(config: RunConfig, checks: Vec<CheckRecord>) -> Report {
        let passed = checks.iter().filter(|c| c.pass).count();
        let summary = format!(
            "{} checks, {} passed, {} failed",
            checks.len(),
            passed,
            checks.len() - passed
        );
        Report {
            version: REPORT_SCHEMA.to_string(),
            config,
            checks,
            summary,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Accumulates (residual, point) pairs per check and keeps the worst.
struct Sweep {
    id: &'static str,
    anchor: &'static str,
    tolerance: f64,
    max_residual: f64,
    worst_point: Vec<f64>,
}

impl Sweep {
    fn new(id: &'static str, anchor: &'static str, tolerance: f64) -> Sweep {
        Sweep {
            id,
            anchor,
            tolerance,
            max_residual: 0.0,
            worst_point: vec![],
        }
    }

    fn update(&mut self, residual: f64, point: &DVector<f64>) {
        if residual >= self.max_residual {
            self.max_residual = residual;
            self.worst_point = point.iter().cloned().collect();
        }
    }

    fn record(self) -> CheckRecord {
        CheckRecord {
            id: self.id.to_string(),
            anchor: self.anchor.to_string(),
            max_residual: self.max_residual,
            tolerance: self.tolerance,
            pass: self.max_residual <= self.tolerance,
            worst_point: self.worst_point,
        }
    }
}

fn model_checks(
    model: &GroupModel,
    points: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Vec<CheckRecord> {
    let n = model.dim();
    let alg = &model.pair.d;
    let mut algebra = Sweep::new(
        "algebra-laws",
        "metrized Lie algebra: Jacobi + ad-invariant pairing",
        1e-9,
    );
    let mut group = Sweep::new(
        "group-laws",
        "matrix model: exp/log, Maurer-Cartan frames, adjoint",
        1e-9,
    );
    for _ in 0..points {
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let z = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let jac = alg.bracket(&alg.bracket(&x, &y), &z)
            + alg.bracket(&alg.bracket(&y, &z), &x)
            + alg.bracket(&alg.bracket(&z, &x), &y);
        let adinv = alg.pair(&alg.bracket(&x, &y), &z) + alg.pair(&y, &alg.bracket(&x, &z));
        algebra.update(jac.norm().max(adinv.abs()), &x);

        let v = 0.4 * DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let g = model.exp(&v);
        let back = (model.log(&g).expect("within the log chart") - &v).norm();
        // theta_R = Ad_g theta_L on left-translated tangents
        let w = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let gdot = &g * model.mat_of(&w);
        let tl = model.theta_l(&g, &gdot).expect("tangent");
        let tr = model.theta_r(&g, &gdot).expect("tangent");
        let frames = (&tr - model.adjoint(&g).expect("invertible") * &tl).norm();
        group.update(back.max(frames), &v);
    }
    let _ = tol;
    vec![algebra.record(), group.record()]
}

fn moduli_checks(
    ms: &ModuliSpace,
    points: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Vec<CheckRecord> {
    let mut d_omega = Sweep::new(
        "moduli-d-omega",
        "moduli 2-form: d omega matches the pullback 3-forms",
        tol.fd_second,
    );
    let mut contraction = Sweep::new(
        "moduli-contraction",
        "moduli 2-form: vertex-action contraction formula",
        10.0 * tol.fd_first,
    );
    let mut kernel = Sweep::new(
        "moduli-kernel",
        "moduli 2-form: ker omega meets ker T-holonomy trivially",
        0.5,
    );
    for _ in 0..points {
        let z = ms.space.random_point(&mut rng.clone());
        let rep = moduli::verify_moduli(ms, 1, rng, tol);
        d_omega.update(rep.d_omega, &z);
        contraction.update(rep.contraction, &z);
        kernel.update(rep.kernel_defect as f64, &z);
    }
    vec![d_omega.record(), contraction.record(), kernel.record()]
}

fn ham_checks(
    space: &HamiltonianSpace,
    points: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Vec<CheckRecord> {
    let mut ax1 = Sweep::new(
        "qs-axiom-i",
        "moment axioms: d omega equals the moment pullback of eta",
        tol.fd_second,
    );
    let mut ax2 = Sweep::new(
        "qs-axiom-ii",
        "moment axioms: contraction with generating fields",
        10.0 * tol.fd_first,
    );
    let mut ax3 = Sweep::new(
        "qs-axiom-iii",
        "moment axioms: ker omega meets ker T-Phi trivially",
        0.5,
    );
    let mut kernel = Sweep::new(
        "qs-kernel-description",
        "kernel lemma: ker omega spanned by annihilator fields",
        0.5,
    );
    let mut equiv = Sweep::new(
        "qs-equivariance",
        "moment map equivariance under the subgroup",
        1e-6,
    );
    let mut compat = Sweep::new(
        "qs-group-compat",
        "group compatibility: translation defect equals the beta cocycle",
        10.0 * tol.fd_first,
    );
    for _ in 0..points {
        let x = space.space.random_point(&mut rng.clone());
        let rep = verify_quasi_symplectic(space, 1, rng, tol);
        ax1.update(rep.axiom_i, &x);
        ax2.update(rep.axiom_ii, &x);
        ax3.update(rep.axiom_iii_defect as f64, &x);
        kernel.update(rep.kernel_description_defect as f64, &x);
        equiv.update(rep.equivariance, &x);
        compat.update(rep.group_compat, &x);
    }
    vec![
        ax1.record(),
        ax2.record(),
        ax3.record(),
        kernel.record(),
        equiv.record(),
        compat.record(),
    ]
}

/// Recipe-specific cross-checks beyond the axiom sweeps.
fn cross_checks(
    model: &GroupModel,
    recipe: &Recipe,
    points: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    if let Recipe::Fuse(a, b) = recipe {
        if let (Recipe::Polygon2n(k), Recipe::Polygon2n(l)) = (a.as_ref(), b.as_ref()) {
            let s1 = crate::moduli::SurfaceData::colored_2ngon(*k);
            let s2 = crate::moduli::SurfaceData::colored_2ngon(*l);
            let residual = moduli::fusion_equivalence(model, &s1, &s2, points, rng, tol)?;
            let anchor = if *k == 1 || *l == 1 {
                "fusion with the 2-gon acts as the identity"
            } else {
                "fusion of polygon spaces equals the glued polygon"
            };
            out.push(CheckRecord {
                id: "fusion-gluing".into(),
                anchor: anchor.into(),
                max_residual: residual,
                tolerance: 1e-7,
                pass: residual <= 1e-7,
                worst_point: vec![],
            });
        }
    }
    Ok(out)
}

/// Build the recipe's space over the model and run its verification suite.
pub fn run(config: &RunConfig) -> Result<Report> {
    if config.points == 0 {
        return Err(Error::InvalidConfig("points must be >= 1".into()));
    }
    let recipe = parse_recipe(&config.recipe)?;
    let tol = config.tolerances()?;
    let model = model_catalog(&config.model, &tol)?;
    let built = build_recipe(&model, &recipe, &tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = model_checks(&model, config.points, &mut rng, &tol);
    // uncolored presentations get the moduli axiom sweep; colored and derived
    // spaces carry Hamiltonian data and get the full quasi-symplectic suite
    match &built {
        BuiltSpace::Polygon(ms) => {
            checks.extend(moduli_checks(ms, config.points, &mut rng, &tol));
        }
        _ => {
            let h = built.hamiltonian().expect("non-polygon spaces are Hamiltonian");
            checks.extend(ham_checks(h, config.points, &mut rng, &tol));
        }
    }
    checks.extend(cross_checks(&model, &recipe, config.points, &mut rng, &tol)?);
    Ok(Report::new(config.clone(), checks))
}

/// Serialize a report; both formats are deterministic functions of the
/// report contents.
pub fn emit_report(report: &Report, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Text => render_text(report).into_bytes(),
    }
}

fn render_text(report: &Report) -> String {
    let mut s = String::new();
    s.push_str(&format!("{}\n", report.version));
    s.push_str(&format!(
        "model {}  recipe {}  points {}  seed {}\n\n",
        report.config.model, report.config.recipe, report.config.points, report.config.seed
    ));
    s.push_str(&format!(
        "{:<24} {:<58} {:>10} {:>10}  {}\n",
        "check", "anchor", "residual", "tolerance", "status"
    ));
    for c in &report.checks {
        s.push_str(&format!(
            "{:<24} {:<58} {:>10} {:>10}  {}\n",
            c.id,
            c.anchor,
            format!("{:.2e}", c.max_residual),
            format!("{:.2e}", c.tolerance),
            if c.pass { "pass" } else { "FAIL" }
        ));
    }
    s.push_str(&format!("\nsummary: {}\n", report.summary));
    s
}
