use thiserror::Error;

/// Errors raised by the toolkit. Point-valued variants carry the flat grid index.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("fields live on different charts")]
    ChartMismatch,
    #[error("axis {axis} out of range for a chart of dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("bump radius {radius} is not below half the smallest period ({limit})")]
    RadiusTooLarge { radius: f64, limit: f64 },
    #[error("field expected real-valued, imaginary part reaches {0:e}")]
    NotReal(f64),
    #[error("degree overflow: {0}")]
    DegreeOverflow(String),
    #[error("basis mismatch between operands")]
    BasisMismatch,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("frame degenerate at grid point {point}: smallest singular value {singular_value:e}")]
    FrameDegenerate { point: usize, singular_value: f64 },
    #[error("commutator decomposition infeasible at grid point {point} (residual {residual:e})")]
    InfeasibleDecomposition { point: usize, residual: f64 },
    #[error("structure equation residual {0:e} exceeds tolerance; frame not integrable")]
    NotIntegrable(f64),
    #[error("twist is not closed modulo the conormal ideal (residual {0:e})")]
    InvalidTwist(f64),
    #[error("input is not closed (residual {0:e})")]
    NotClosed(f64),
    #[error("conjugate gradient stalled (condition estimate {0:e})")]
    IllConditioned(f64),
    #[error("no real direction of V with nonzero derivative at grid point {0}")]
    NoRealDirection(usize),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("malformed expansion: {0}")]
    MalformedExpansion(String),
    #[error("unbounded supremum at t = {t}: {what}")]
    UnboundedSup { t: f64, what: String },
    #[error("support touches the box boundary at grid point {0}")]
    SupportOnBoundary(usize),
    #[error("structure not classified: {0}")]
    Unclassified(String),
    #[error("not divisible: witness monomial {0}")]
    NotDivisible(String),
    #[error("logarithmic membership fails: {0}")]
    NotLogarithmic(String),
    #[error("line bundle discrepancy {0:e} exceeds tolerance")]
    Discrepancy(f64),
    #[error("bundle cocycle violated: {0}")]
    Cocycle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
