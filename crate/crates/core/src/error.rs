use alloc::string::String;

/// Every failure the numerical core can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid boundary manifold: {0}")]
    InvalidGamma(String),
    #[error("degenerate boundary polyline: {0}")]
    DegenerateGamma(String),
    #[error("loop edge {edge} touches the seam (perturb the loop)")]
    LoopTouchesSeamEdgeCase { edge: usize },
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("seam boundary does not match the boundary manifold: {0}")]
    SeamBoundaryMismatch(String),
    #[error("lift disk overlaps another boundary component or leaves the box")]
    RegionTouchesOtherComponent,
    #[error("section gauge does not match the seam gauge")]
    GaugeMismatch,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("conjugate gradient failed after {iterations} iterations (relative residual {residual:e})")]
    LinearSolveFailure { iterations: usize, residual: f64 },
    #[error("vector field normal part |g·∇ρ| = {normal:e} exceeds {bound:e} near the boundary")]
    GNotTangent { normal: f64, bound: f64 },
    #[error("sublevel set {{|u| <= {level}}} is empty")]
    EmptySublevel { level: f64 },
    #[error("fit window too thin: eps = {eps}, h = {h} (need eps >= 8h)")]
    WindowTooThin { eps: f64, h: f64 },
    #[error("boundary scaling fit needs a boundary component")]
    NoBoundary,
    #[error("eigensolver stalled; best residual {residual:e}")]
    EigSolverStall { residual: f64 },
    #[error("no catenary joins the two rings")]
    NoCatenary,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;
