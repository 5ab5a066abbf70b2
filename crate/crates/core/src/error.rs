use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error(
        "matrix is not Hermitian: entry ({row},{col}) = {value} but conj of ({col},{row}) = {mirror} \
         (deviation {deviation:.3e})"
    )]
    NotHermitian {
        row: usize,
        col: usize,
        value: String,
        mirror: String,
        deviation: f64,
    },

    #[error("matrix is not unitary: max |U†U - 1| = {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("state is not normalized: sum |a|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside protocol range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("non-finite Hamiltonian at t = {t}")]
    NonFiniteHamiltonian { t: f64 },

    #[error("divergent splitting ratio: c1 + c2 = 0 (cycle encloses the degeneracy)")]
    DivergentSplitting,

    #[error(
        "time stepping did not converge: {steps} steps reached the cap, last estimate {estimate:.3e} \
         (tolerance {tolerance:.1e})"
    )]
    NotConverged {
        steps: usize,
        estimate: f64,
        tolerance: f64,
    },

    #[error("trajectory does not match the protocol: {0}")]
    GridMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
