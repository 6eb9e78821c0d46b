use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ratio {0}: contraction ratios must be odd integers >= 3")]
    InvalidRatio(u64),

    #[error("invalid exponent {0}: p must be a finite number > 1")]
    InvalidExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("level {requested} is beyond the available depth {available}")]
    Depth { requested: usize, available: usize },

    #[error("level {level} needs #W_{level} = {cells} cells, over the budget of {budget}")]
    Budget {
        level: usize,
        cells: String,
        budget: u64,
    },

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("points live at scales {left} and {right}; a common scale is required")]
    ScaleMismatch { left: usize, right: usize },

    #[error("scale index {coarse} exceeds vertex level {fine}")]
    ScaleOrder { fine: usize, coarse: usize },

    #[error("radius must be positive")]
    InvalidRadius,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("descent did not converge: residual {residual:e} after {iterations} iterations")]
    Convergence { residual: f64, iterations: usize },

    #[error("region error: {0}")]
    Region(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
