use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument or input structure violates its documented invariant.
    InvalidInput(String),
    /// Examination function evaluated below rank 1.
    Domain { x: f64 },
    /// The equilibrium kernel `exp((p_cj + p_jc) / 2β)` is not finite.
    KernelOverflow { beta: f64 },
    /// A ranking was requested from an equilibrium that did not converge.
    NotConverged { iterations: usize, residual: f64 },
    /// An outside-option mass is zero, so transfers are undefined.
    DegenerateEquilibrium,
    /// The examination function has no derivative (table kind).
    Unsupported(&'static str),
    /// The support of a supposedly doubly stochastic matrix has no perfect
    /// matching while mass remains.
    Infeasible { residual_mass: f64 },
    /// The exact oracle was asked to handle a market above its size guard.
    TooLarge { cells: usize, limit: usize },
    /// Dimension mismatch between two inputs.
    Shape { expected: (usize, usize), found: (usize, usize) },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Domain { x } => {
                write!(f, "examination function is defined for x >= 1, got {x}")
            }
            Error::KernelOverflow { beta } => {
                write!(f, "equilibrium kernel overflows at beta = {beta}; increase beta or rescale the scores")
            }
            Error::NotConverged { iterations, residual } => {
                write!(f, "equilibrium did not converge after {iterations} sweeps (residual {residual:e})")
            }
            Error::DegenerateEquilibrium => write!(f, "outside-option mass is zero"),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::Infeasible { residual_mass } => write!(
                f,
                "no perfect matching on the support with residual mass {residual_mass:e}; \
                 the matrix is not doubly stochastic"
            ),
            Error::TooLarge { cells, limit } => write!(
                f,
                "market has {cells} cells, above the exact-oracle limit of {limit}; use Monte-Carlo estimation"
            ),
            Error::Shape { expected, found } => {
                write!(f, "shape mismatch: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)
            }
        }
    }
}

impl core::error::Error for Error {}
