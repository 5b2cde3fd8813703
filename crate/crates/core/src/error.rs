use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("tail tolerance {0:e} exceeds the 1e-14 cap")]
    TailToleranceTooLoose(f64),

    #[error("analyticity radius {0} of the increment pgf must exceed 1")]
    RadiusTooSmall(f64),

    #[error("truncation defect {0:e} exceeds the 1e-14 cap")]
    TruncationDefect(f64),

    #[error("walk support of length {len} exceeds cap {cap}; reduce l or the pmf length")]
    SupportTooLarge { len: usize, cap: usize },

    #[error("degree caps differ ({0} vs {1})")]
    DegreeMismatch(usize, usize),

    #[error("series constant term must be {expected}, found a polynomial with max deviation {deviation:e}")]
    ConstantTerm {
        expected: &'static str,
        deviation: f64,
    },

    #[error("|u| = {0} must be < 1")]
    UOutOfRange(f64),

    #[error("expected {expected} kernel roots inside the unit disk, found {found}; all roots: {roots:?}")]
    RootCount {
        expected: usize,
        found: usize,
        roots: Vec<(Complex64, f64)>,
    },

    #[error("eigenvalue iteration did not converge for a companion matrix of size {0}")]
    EigenNoConvergence(usize),

    #[error("evaluation point {0} is a kernel root")]
    AtKernelRoot(Complex64),

    #[error("radius ordering violated: {0}")]
    RadiusOrdering(String),

    #[error("kernel modulus {0:e} on the contour is below 1e-12")]
    KernelVanishesOnContour(f64),

    #[error("no admissible outer radius for v = {v}; best ratio v*A(b)/b^s seen was {best_ratio} at b = {best_b}")]
    NoAdmissibleRadius {
        v: f64,
        best_ratio: f64,
        best_b: f64,
    },

    #[error("quadrature did not converge after {doublings} doublings; last estimates {previous} and {last}")]
    NoConvergence {
        doublings: u32,
        previous: Complex64,
        last: Complex64,
    },

    #[error("logarithm argument {0} left the right half-plane")]
    BranchViolation(Complex64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("row {0} of the distribution table is incomplete")]
    IncompleteRow(usize),

    #[error("table has {have} complete rows but the tail bound needs {need}")]
    InsufficientRows { have: usize, need: usize },
}
