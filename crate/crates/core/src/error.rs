use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("band limit L = {0} is below the minimum of 4")]
    BandLimitTooSmall(usize),
    #[error("oversample ratio {0} is below the minimum of 2")]
    OversampleTooSmall(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("coefficient (l = {l}, m = {m}) is outside the band limit L = {band_limit}")]
    CoefficientOutOfRange { l: i64, m: i64, band_limit: usize },
    #[error("invalid random-field parameters: {0}")]
    InvalidRandomField(String),
    #[error("rank error: {0}")]
    Rank(String),
    #[error("invalid slot pair ({0}, {1}) for a rank-{2} tensor")]
    InvalidSlots(usize, usize, usize),
    #[error("precondition failed: {what} (defect {defect:.3e} exceeds {bound:.3e})")]
    Precondition { what: String, defect: f64, bound: f64 },
    #[error("pressure is not positive: min v = {min} at grid point ({i}, {j})")]
    NonPositive { min: f64, i: usize, j: usize },
    #[error("scalar curvature is not positive: R = {value} at grid point ({i}, {j})")]
    NonPositiveCurvature { value: f64, i: usize, j: usize },
    #[error("positivity lost during the flow at t = {t}")]
    BlowUp { t: f64 },
    #[error("invalid time step {0}")]
    InvalidStep(f64),
    #[error("King–Rosenau parameters left the valid region: a = {a}, b = {b}")]
    InvalidKr { a: f64, b: f64 },
    #[error("need at least 3 flow states, got {0}")]
    TooFewStates(usize),
    #[error("coefficient file: {0}")]
    CoefficientFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
