use thiserror::Error;

/// Errors shared across the pointwise algebra, the lattice calculus and the flow.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree overflow: wedge of degrees {p} and {q} exceeds dimension 6")]
    DegreeOverflow { p: usize, q: usize },
    #[error("degree mismatch: expected a {expected}-form, got a {got}-form")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("3-form is not positive (Hitchin invariant {lambda:.3e})")]
    NotPositive { lambda: f64 },
    #[error("metric is not positive definite (pivot {pivot:.3e})")]
    IndefiniteMetric { pivot: f64 },
    #[error("pair is not primitive: max |phi ^ omega| component = {residual:.3e}")]
    NonPrimitive { residual: f64 },
    #[error("orientation mismatch: omega^3/3! coefficient = {coeff:.3e}")]
    Orientation { coeff: f64 },
    #[error("degenerate 2-form: the wedge system is singular")]
    Degenerate,
    #[error("form has a nonzero harmonic part ({harmonic:.3e}); not exact")]
    NotExact { harmonic: f64 },
    #[error("grid of {points} points exceeds the memory cap of {cap} points")]
    GridTooLarge { points: usize, cap: usize },
    #[error("grid axis of {n} points is not a supported power of two")]
    BadGridAxis { n: usize },
    #[error("grids differ between operands")]
    GridMismatch,
    #[error("positivity lost at t = {time:.6e}, grid point {point}: {detail}")]
    DegenerateState {
        time: f64,
        point: usize,
        detail: String,
    },
    #[error("time step underflow: dt = {dt:.3e}")]
    StepUnderflow { dt: f64 },
    #[error("input leaves the perturbative basin at stage `{stage}`: {detail}")]
    TooFar { stage: &'static str, detail: String },
    #[error("flow did not converge: {detail}")]
    NonConvergence { detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    BadSnapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
