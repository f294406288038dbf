//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // --- algebra construction ---
    #[error("Jacobi identity violated at basis triple ({0},{1},{2}), residual {3:.3e}")]
    JacobiViolation(usize, usize, usize, f64),
    #[error("metric degenerate: min/max singular value ratio {0:.3e}")]
    MetricDegenerate(f64),
    #[error("ad-invariance violated at basis triple ({0},{1},{2}), residual {3:.3e}")]
    AdInvarianceViolation(usize, usize, usize, f64),
    #[error("antisymmetry of structure constants violated at ({0},{1},{2}), residual {3:.3e}")]
    AntisymmetryViolation(usize, usize, usize, f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subspace is not complementary (rank defect {0})")]
    NotComplementary(usize),
    #[error("subspace is not Lagrangian: {0}")]
    NotLagrangian(String),

    // --- group models ---
    #[error("matrix outside the logarithm chart: |g - I| = {0:.3e}")]
    LogDomain(f64),
    #[error("matrix off the group manifold, residual {0:.3e}")]
    OffManifold(f64),
    #[error("basis expansion failed, residual {0:.3e}")]
    BasisExpansionFailure(f64),
    #[error("vector is not tangent at the given point, residual {0:.3e}")]
    NotTangent(f64),

    // --- exterior calculus ---
    #[error("finite-difference step underflow: h = {0:.3e}")]
    StepUnderflow(f64),
    #[error("point left the chart domain: {0}")]
    OutOfChart(String),
    #[error("ill-conditioned nullity decision: singular value gap {0:.3e}")]
    IllConditioned(f64),

    // --- Lagrangian relations ---
    #[error("relation composition is not clean (rank drop {0})")]
    NonCleanComposition(usize),
    #[error("Dirac morphism existence fails for target element {0:?}")]
    ExistenceFailure(Vec<f64>),
    #[error("Dirac morphism uniqueness fails, kernel witness {0:?}")]
    UniquenessFailure(Vec<f64>),
    #[error("action is not transitive at the point (rank {rank} < dim {dim})")]
    ActionNotTransitive { rank: usize, dim: usize },

    // --- targets ---
    #[error("Lagrangian complement is not Ad-invariant, residual {0:.3e}")]
    ComplementNotInvariant(f64),
    #[error("cocycle solve is singular, residual {0:.3e}")]
    SolveSingular(f64),
    #[error("splitting is not K-invariant, residual {0:.3e}")]
    NotInvariant(f64),
    #[error("one-form is not a principal connection, residual {0:.3e}")]
    NotConnection(f64),
    #[error("form fails to be basic for the quotient, residual {0:.3e}")]
    NotBasic(f64),

    // --- hamiltonian spaces ---
    #[error("spaces live over different group models: {0} vs {1}")]
    ModelMismatch(String, String),
    #[error("action factor structure mismatch: {0}")]
    FactorStructureMismatch(String),
    #[error("group action is not (locally) free at the basepoint, rank gap {0}")]
    NotFree(usize),
    #[error("section left the chart during lifting: {0}")]
    SectionOutOfChart(String),
    #[error("level is not a regular value: min singular value {0:.3e}")]
    NotRegularValue(f64),
    #[error("Newton iteration diverged after {0} steps, residual {1:.3e}")]
    NewtonDivergence(usize, f64),
    #[error("quasi-symplectic axiom {axiom} failed: residual {residual:.3e} at point {point:?}")]
    AxiomFailure {
        axiom: String,
        residual: f64,
        point: Vec<f64>,
    },

    // --- moduli ---
    #[error("polygon relation cannot be solved: designated edge {0} is paired")]
    UnsolvableRelation(usize),
    #[error("invalid coloring: {0}")]
    ColoringInvalid(String),
    #[error("invalid strip attachment: {0}")]
    InvalidAttachment(String),
    #[error("surface presentations do not match: {0}")]
    PresentationMismatch(String),
    #[error("level set is singular on the chart: {0}")]
    NotRegular(String),

    // --- cli ---
    #[error("recipe parse error at position {pos}: {msg}")]
    RecipeParseError { pos: usize, msg: String },
    #[error("unknown model key '{0}' (try `list-models`)")]
    UnknownModel(String),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}
