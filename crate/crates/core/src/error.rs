use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is numerically singular")]
    Singular,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("letter {letter} out of range for d = {d}")]
    LetterOutOfRange { letter: usize, d: usize },
    #[error("not a row contraction (row norm {0})")]
    NotContraction(f64),
    #[error("not a row partial isometry (defect {0:e})")]
    NotPartialIsometry(f64),
    #[error("alpha is not a strict contraction (norm {0})")]
    AlphaNotStrict(f64),
    #[error("I - beta alpha^* is numerically singular")]
    SingularDenominator,
    #[error("span still growing after {0} samples")]
    SamplerExhausted(usize),
    #[error("I - b(z) is singular at a requested point")]
    Unital,
    #[error("grid span collapsed to rank {0}")]
    RankDeficientGrid(usize),
    #[error("not an extension (residual {0:e})")]
    NotExtension(f64),
    #[error("row contraction is not CCNC")]
    NotCcnc,
    #[error("degenerate model triple: (ran V)^perp is zero")]
    DegenerateTriple,
    #[error("ill-conditioned inversion (condition number {0:e})")]
    IllConditioned(f64),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
