//! Crate-wide error type.

use core::fmt;

/// Errors produced by the numerical layers.
///
/// Outcomes that are legitimate answers rather than faults (an unresolved
/// ω-limit, a budget-exhausted separatrix) are encoded as values in their
/// respective result types, not here.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Root polishing failed to reach the requested residual.
    NonConvergence { residual: f64, tolerance: f64 },
    /// Deflated polynomial vanishes at a root beyond its declared multiplicity.
    DegenerateDenominator,
    /// Integration budget exhausted before any requested event fired.
    BudgetExhausted,
    /// Adaptive step size fell below `min_step` near a singular approach.
    StepUnderflow { t: f64, step: f64 },
    /// A quadrature path passes closer to a pole than the declared clearance.
    PoleTooClose { distance: f64, clearance: f64 },
    /// Winding numbers of a closed curve are not all 0 or ±1 consistently.
    WindingAmbiguous,
    /// Enclosure test of a homoclinic candidate produced inconsistent windings.
    InconsistentEnclosure,
    /// Subset enumeration over singularities would exceed 2^12 cases.
    SubsetExplosion { count: usize },
    /// The fixed set has a branch that is not a graph `y = γ(x)`; the input
    /// must be pre-ramified `x ↦ x^k` before splitting.
    NotTransversal { ramification: usize },
    /// Branch continuation became ambiguous (grid too coarse).
    BranchCollision,
    /// Dynamical splitting exceeded the blow-up depth limit.
    DepthExceeded { depth: usize },
    /// Level-set corrector diverged while tracing a β-curve.
    LevelSetLost,
    /// Trim step would push the base point out of its petal.
    PetalExit,
    /// A discrete orbit left the working polydisk.
    OrbitEscaped { iterate: usize },
    /// Point too close to the fixed curve `y² = x` for the path-method field.
    NearFixedCurve { distance: f64 },
    /// The s-flow of the path-method field left the working disk.
    PathBlowup,
    /// `{1, 2πia}` is not an ℝ-basis of ℂ, so `𝔥` is not determined.
    DegenerateBasis,
    /// A denominator vanishes (or nearly vanishes) on the working polydisk.
    DenominatorVanishes { min_modulus: f64 },
    /// Invalid argument outside any more specific category.
    InvalidInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonConvergence { residual, tolerance } => write!(
                f,
                "root polish did not converge: residual {residual:.3e} > tolerance {tolerance:.3e}"
            ),
            Error::DegenerateDenominator => {
                write!(f, "polynomial vanishes beyond the declared multiplicity")
            }
            Error::BudgetExhausted => write!(f, "integration budget exhausted"),
            Error::StepUnderflow { t, step } => {
                write!(f, "step underflow at t = {t:.6e} (step {step:.3e})")
            }
            Error::PoleTooClose { distance, clearance } => write!(
                f,
                "path passes {distance:.3e} from a pole (clearance {clearance:.3e})"
            ),
            Error::WindingAmbiguous => write!(f, "winding numbers are not 0/1"),
            Error::InconsistentEnclosure => write!(f, "inconsistent homoclinic enclosure"),
            Error::SubsetExplosion { count } => {
                write!(f, "{count} singularities exceed the subset enumeration limit")
            }
            Error::NotTransversal { ramification } => write!(
                f,
                "fixed curves are not graphs over x; pre-ramify x ↦ x^{ramification}"
            ),
            Error::BranchCollision => write!(f, "branch continuation ambiguous"),
            Error::DepthExceeded { depth } => {
                write!(f, "dynamical splitting exceeded depth {depth}")
            }
            Error::LevelSetLost => write!(f, "level-set corrector diverged"),
            Error::PetalExit => write!(f, "trimmed base point left its petal"),
            Error::OrbitEscaped { iterate } => {
                write!(f, "orbit left the polydisk at iterate {iterate}")
            }
            Error::NearFixedCurve { distance } => {
                write!(f, "point within {distance:.3e} of the fixed curve")
            }
            Error::PathBlowup => write!(f, "path-method flow left the working disk"),
            Error::DegenerateBasis => {
                write!(f, "{{1, 2πia}} degenerate over ℝ; supply ς₀, ς₁ explicitly")
            }
            Error::DenominatorVanishes { min_modulus } => {
                write!(f, "denominator modulus {min_modulus:.3e} on the polydisk")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
