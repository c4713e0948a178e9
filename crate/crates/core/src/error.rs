use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation radius must be at least 1 (got {0})")]
    InvalidTruncation(usize),

    #[error("fields live on different lattices (K={left} vs K={right})")]
    LatticeMismatch { left: usize, right: usize },

    #[error("coefficient data is not Hermitian-symmetric: defect {defect:.3e} exceeds {tolerance:.3e}")]
    HermitianViolation { defect: f64, tolerance: f64 },

    #[error("{op}: degree {got} is not admissible (expected {expected})")]
    Degree {
        op: &'static str,
        got: usize,
        expected: &'static str,
    },

    #[error("{op}: degree mismatch ({left} vs {right})")]
    DegreeMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("pressure solve requires P^2 F = 0: |P^2 F| = {norm:.3e} exceeds {bound:.3e}")]
    PressurePrecondition { norm: f64, bound: f64 },

    #[error("Galerkin basis of size {requested} requested, {available} available")]
    BasisSize { requested: usize, available: usize },

    #[error("coefficient vector has length {got}, basis has {expected}")]
    CoefficientLength { got: usize, expected: usize },

    #[error("internal consistency check `{check}` failed: defect {defect:.3e} > {tolerance:.3e}")]
    Consistency {
        check: &'static str,
        defect: f64,
        tolerance: f64,
    },

    #[error("trajectory has {have} snapshots, {need} needed for time derivative order {order}")]
    SnapshotDensity {
        have: usize,
        need: usize,
        order: usize,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed field data: {0}")]
    MalformedField(String),

    #[error("zero-norm input to {0}")]
    ZeroNorm(&'static str),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
