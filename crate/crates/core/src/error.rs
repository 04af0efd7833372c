use alloc::string::String;
use alloc::vec::Vec;

use crate::lattice::{GIndex, Vector};

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("lattice dimension must be 1, 2 or 3 (got {0})")]
    InvalidDimension(usize),
    #[error("expected {expected} components, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("primitive vectors are (numerically) linearly dependent: |det| = {det:e}")]
    SingularLattice { det: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no plane wave satisfies the cutoff Ec = {ec}")]
    EmptyBasis { ec: f64 },

    #[error("coefficients violate V(-G) = conj V(G) for {} G-vector(s), first {:?}", .offending.len(), .offending.first())]
    BrokenHermitianSymmetry { offending: Vec<GIndex> },
    #[error("non-finite Fourier coefficient at {0:?}")]
    NonFiniteCoefficient(GIndex),
    #[error("potential is not real-valued; the fiber would not be Hermitian")]
    ComplexPotential,
    #[error("potential and band computation use different lattices")]
    LatticeMismatch,

    #[error("ill-posed blow-up spec: {0}")]
    IllPosedSpec(String),
    #[error("blow-up function dips below x² at x = {x} (deficit {deficit:e}); raise C or move a")]
    DominationViolated { x: f64, deficit: f64 },
    #[error("blow-up function is singular at |x| = 1")]
    SingularArgument,
    #[error("derivative order {order} exceeds the smoothness order {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("Hermitian eigensolver did not converge after {sweeps} sweeps")]
    SolverFailure { sweeps: usize },
    #[error("requested {requested} bands but the basis at k[{index}] = {k:?} has only {available}")]
    BandCountExceedsBasis {
        index: usize,
        k: Vector,
        requested: usize,
        available: usize,
    },

    #[error("operation needs a uniform k-grid")]
    NotUniformGrid,
    #[error("operation needs a uniformly spaced k-path")]
    NonUniformPath,
    #[error("filling N = {requested} cannot be reached with {available} bands")]
    UnreachableFilling { requested: f64, available: usize },
    #[error("band structures are sampled on different k-sets")]
    GridMismatch,
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("the probe path never crosses a change of basis size")]
    NoBasisChangeOnPath,
}

impl Error {
    /// Numerical failures (as opposed to invalid input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::SolverFailure { .. })
    }
}
