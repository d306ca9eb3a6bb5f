use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected a square matrix of even side, found {rows}x{cols}")]
    OddSide { rows: usize, cols: usize },

    #[error("matrix does not square to -I (residual {0:.3e})")]
    NotAlmostComplex(f64),

    #[error("matrix is not antisymmetric (residual {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("matrix is singular")]
    Singular,

    #[error("not a generalized almost complex structure (|J^2+I| = {square:.3e}, |J^tQJ-Q| = {pairing:.3e})")]
    NotGeneralizedStructure { square: f64, pairing: f64 },

    #[error("matrix is not symmetric positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("structures do not commute (residual {0:.3e})")]
    NotCommuting(f64),

    #[error("decomposition does not reconstruct its input (residual {0:.3e})")]
    DecompositionMismatch(f64),

    #[error("point lies outside the domain of chart {chart}")]
    OutOfChart { chart: usize },

    #[error("eigenspace frame degenerates near the point (min singular value {0:.3e})")]
    GaugeFailure(f64),

    #[error("point is not critical (|xi_M| = {norm:.3e}, threshold {threshold:.3e})")]
    NotCritical { norm: f64, threshold: f64 },

    #[error("not a regular value: rank {rank} < {expected} at sample {sample}")]
    NotRegularValue {
        rank: usize,
        expected: usize,
        sample: usize,
    },

    #[error("matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("moment dimension {0} is not supported here")]
    UnsupportedDimension(usize),

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("manifold dimension {0} is odd")]
    OddDimension(usize),

    #[error("example `{0}` has no torus action")]
    NoAction(String),

    #[error("evaluation failed at sample {sample}: {reason}")]
    Evaluation { sample: usize, reason: String },
}
