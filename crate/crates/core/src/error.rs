use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("band limit K = {band_limit} is insufficient: {detail}")]
    BandLimit { band_limit: usize, detail: String },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error(
        "tolerance {tol:e} is unattainable: the frame defect c~(h) - 1 = {defect:e} is an irreducible floor"
    )]
    UnattainableTolerance { tol: f64, defect: f64 },

    #[error("operator is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("symbol: {0}")]
    Symbol(String),

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("state count below E changed under band-limit refinement: {coarse} at K, {fine} at 2K")]
    RefinementUnstable { coarse: usize, fine: usize },

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line harness and the C ABI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::SizeMismatch { .. }
            | Error::GridMismatch
            | Error::NonFinite(_)
            | Error::BandLimit { .. }
            | Error::Json(_) => 2,
            Error::ResourceCap(_) => 3,
            Error::UnattainableTolerance { .. } => 4,
            Error::NotHermitian(_) | Error::Symbol(_) => 5,
            Error::Solver(_) | Error::RefinementUnstable { .. } => 6,
            Error::Cache(_) | Error::Io(_) => 1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
