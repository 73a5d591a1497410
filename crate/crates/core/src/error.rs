use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("image has zero size")]
    EmptyImage,
    #[error("{width}x{height} image needs {expected} samples, got {actual}")]
    SampleCount {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("{width}x{height} image is smaller than 4x4")]
    TooSmall { width: usize, height: usize },
    #[error("image must be square with side divisible by 4, got {width}x{height}")]
    NotNormalized { width: usize, height: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix has non-finite entries")]
    NonFiniteMatrix,
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    #[error("non-finite coefficient in block")]
    NonFiniteCoefficient,
    #[error("at least one coefficient block is required")]
    NoBlocks,
    #[error("too many blocks: {k} blocks need a side of at least {}, image side is {side}", 4 * k)]
    TooManyBlocks { k: usize, side: usize },
    #[error(
        "coefficient block {index} violates the ordering delta4 >= delta3 >= delta2 >= delta1"
    )]
    BlockOrdering { index: usize },
    #[error("coefficient block {index} has a zero detection signature (delta3 = 0)")]
    DegenerateBlock { index: usize },
    #[error("coefficient block {index} duplicates an earlier block")]
    DuplicateBlock { index: usize },
    #[error("scaling factor must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("signature strength must be positive and finite, got {0}")]
    InvalidStrength(f64),
    #[error("invalid key: {0}")]
    InvalidKey(&'static str),
    #[error("zero-energy input: normalized correlation undefined (raw correlation {nc_raw})")]
    ZeroEnergy { nc_raw: f64 },
    #[error("invalid attack: {0}")]
    InvalidAttack(String),
    #[error("malformed PGM: {0}")]
    Pgm(&'static str),
    #[error("codec failure: {0}")]
    Codec(String),
}
