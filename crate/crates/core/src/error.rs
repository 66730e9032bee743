use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix field is not symmetric at {point:?} (asymmetry {asymmetry:.3e})")]
    NonSymmetric { point: Vec<f64>, asymmetry: f64 },
    #[error("level-set gradient vanishes at boundary sample {point:?}")]
    DegenerateNormal { point: Vec<f64> },
    #[error("sample point at the origin where x/|x| is undefined")]
    OriginSample,
    #[error("evaluation at the origin")]
    OriginPoint,
    #[error("trapped: K0 = {k0:.6} <= 0 (ratio N/nu = {ratio:.6})")]
    Trapped { k0: f64, ratio: f64 },
    #[error("point at |x| = {r:.6} is within the surface margin of R = {radius:.6}")]
    SurfaceProximity { r: f64, radius: f64 },
    #[error("field provides derivatives up to order {available}, {needed} required")]
    MissingDerivative { needed: usize, available: usize },
    #[error("outermost dyadic shell carries a fraction {fraction:.3e} of the sum")]
    TruncatedTail { fraction: f64 },
    #[error("quadrature unresolved: {quantity} changed by {change:.3e} under refinement")]
    QuadratureUnresolved { quantity: String, change: f64 },
    #[error("singular assembly: {0}")]
    SingularAssembly(String),
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("conditions failed: {0}")]
    ConditionsFailed(String),
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
