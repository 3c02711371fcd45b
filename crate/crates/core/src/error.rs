/// Errors shared by the matrix, gradient, structure, and solver layers.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The deflated norm of column `column` fell below the rank tolerance
    /// during orthonormalization: the columns of `B` are numerically
    /// dependent.
    #[error("column {column} of B is numerically rank deficient")]
    RankDeficient { column: usize },

    /// The objective is (numerically) zero, where the square-root form of the
    /// objective has a singular gradient.
    #[error("objective value is near zero; the gradient is singular at an exact fit")]
    ObjectiveNearZero,

    /// The explicit block-system route materializes the full linearization and
    /// is capped to tiny problems.
    #[error("dimensions exceed the block-system cap (m <= {max_m}, r <= {max_r})")]
    SizeCap { max_m: usize, max_r: usize },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
