use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("operator is not Hermitian (max |A - A^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("operator is not skew-Hermitian (max |A + A^dag| = {0:e})")]
    NotSkewHermitian(f64),

    #[error("fixed gate is not unitary (max |U^dag U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("Hilbert-Schmidt inner product is not real (imaginary part {0:e})")]
    NonReal(f64),

    #[error("invalid tolerance {0}: must be positive")]
    InvalidTolerance(f64),

    #[error("invalid relative tolerance {0}: must lie in (0, 1)")]
    InvalidRelTol(f64),

    #[error("parameter vector has length {got}, circuit has {expected} parameters")]
    LengthMismatch { expected: usize, got: usize },

    #[error("initial state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("circuit has no parameterized slots")]
    NoParameters,

    #[error("unknown ansatz family `{0}`")]
    UnknownFamily(String),

    #[error("invalid ansatz size: n_qubits = {n_qubits}, depth = {depth}")]
    InvalidAnsatz { n_qubits: usize, depth: usize },

    #[error("circuit has {params} parameters, above the depth policy limit {limit}")]
    DepthPolicy { params: usize, limit: f64 },

    #[error("empty generator list")]
    EmptyGenerators,

    #[error("empty basis")]
    EmptyBasis,

    #[error("dimension budget {budget} is below the generator span dimension {span}")]
    BudgetBelowSpan { budget: usize, span: usize },

    #[error("generator {0} is not contained in the closure span")]
    GeneratorOutsideClosure(usize),

    #[error("keep = {keep} outside 1..={available}")]
    KeepOutOfRange { keep: usize, available: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("metric rank is zero")]
    RankZero,

    #[error("scaling fit needs at least 3 usable records, got {0}")]
    TooFewRecords(usize),

    #[error("time parameter must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("noise scale must be non-negative, got {0}")]
    NegativeNoise(f64),

    #[error("too many qubits: {0} (max {max})", max = crate::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
