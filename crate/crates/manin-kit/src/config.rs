//! Centralized numerical tolerances.
//!
//! Every validation and acceptance threshold used by the library lives here,
//! so a verification run has a single tuning point. Defaults follow the
//! categories below:
//!
//! * exact-arithmetic identities (Jacobi, ad-invariance): 1e-12
//! * linear-algebra rank decisions (SVD): relative 1e-9
//! * closed-form evaluator agreements: 1e-8 .. 1e-10
//! * finite-difference residuals (first derivatives, h = 1e-5): 1e-5 .. 1e-4

/// Tolerance bundle threaded through validators and verification sweeps.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Exact algebraic identities evaluated in f64 (Jacobi, ad-invariance).
    pub exact: f64,
    /// Relative SVD threshold for rank / nullity decisions.
    pub rank_rel: f64,
    /// Agreement between two closed-form evaluation routes.
    pub evaluator: f64,
    /// Residuals limited by one finite-difference derivative.
    pub fd_first: f64,
    /// Residuals involving a second (nested) finite difference.
    pub fd_second: f64,
    /// Finite-difference step scale (multiplied by `1 + |point|`).
    pub fd_step: f64,
    /// On-manifold / tangency residuals for group points.
    pub manifold: f64,
    /// Newton solver convergence threshold.
    pub newton: f64,
    /// Maximum Newton iterations.
    pub newton_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-12,
            rank_rel: 1e-9,
            evaluator: 1e-8,
            fd_first: 1e-5,
            fd_second: 1e-4,
            fd_step: 1e-5,
            manifold: 1e-9,
            newton: 1e-12,
            newton_max_iter: 50,
        }
    }
}

impl Tolerances {
    /// Finite-difference step at a chart point with coordinate norm `scale`.
    pub fn step_at(&self, scale: f64) -> f64 {
        self.fd_step * (1.0 + scale)
    }
}
