use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("region is not tileable")]
    NotTileable,
    #[error("invalid tiling: {0}")]
    InvalidTiling(String),
    #[error("vertex {0} is not an inner vertex of the region")]
    NotInner(String),
    #[error("no flip is possible at vertex {0}")]
    NotFlippable(String),
    #[error("tilings or height fields belong to different regions")]
    RegionMismatch,
    #[error("height integration is inconsistent at vertex {0}")]
    HeightInconsistency(String),
    #[error("node cap of {cap} exceeded")]
    CapExceeded { cap: usize },
    #[error("step budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("pointwise order violated at time {time}, vertex {vertex}: lower {lower} > upper {upper}")]
    OrderViolation { time: i64, vertex: String, lower: i32, upper: i32 },
    #[error("contour peeling failed: {0}")]
    PeelFailure(String),
    #[error("kernel is not ergodic: {0}")]
    NotErgodic(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used for structured CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidRegion(_) => "invalid_region",
            Error::NotTileable => "not_tileable",
            Error::InvalidTiling(_) => "invalid_tiling",
            Error::NotInner(_) => "not_inner",
            Error::NotFlippable(_) => "not_flippable",
            Error::RegionMismatch => "region_mismatch",
            Error::HeightInconsistency(_) => "height_inconsistency",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::OrderViolation { .. } => "order_violation",
            Error::PeelFailure(_) => "peel_failure",
            Error::NotErgodic(_) => "not_ergodic",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
