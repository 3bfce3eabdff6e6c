use thiserror::Error;

/// Which invertibility condition of `M(a, b)` failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    /// `a == b`: the matrix is a multiple of the all-ones matrix.
    DiagonalEqualsOffDiagonal,
    /// `a == -(n - 1) b`: the all-ones vector is in the kernel.
    OnesInKernel,
}

impl std::fmt::Display for Singularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Singularity::DiagonalEqualsOffDiagonal => write!(f, "a == b"),
            Singularity::OnesInKernel => write!(f, "a == -(n - 1) * b"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("structured matrix is singular ({0})")]
    Singular(Singularity),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
