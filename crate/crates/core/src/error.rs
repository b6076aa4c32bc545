use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:e} exceeds tolerance {tolerance:e}")]
    NonHermitianInput { defect: f64, tolerance: f64 },
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("cannot phase-fix a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unknown Hamiltonian family `{0}`")]
    UnknownFamily(String),
    #[error("non-finite parameter or time value")]
    NonFiniteInput,
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("axis {axis} has {len} points; at least {min} are required")]
    AxisTooShort { axis: usize, len: usize, min: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("surface does not lie on the grid: {0}")]
    SurfaceOffGrid(String),
    #[error("surface touches a masked point at node {0}")]
    MaskedSurfacePoint(usize),
    #[error("loop points {index} and {next} are not grid neighbours")]
    NonAdjacentLoopPoints { index: usize, next: usize },
    #[error("loop point {0} is masked")]
    MaskedLoopPoint(usize),

    #[error("band {band} out of range for dimension {dim}")]
    BandOutOfRange { band: usize, dim: usize },
    #[error("every grid point is degenerate")]
    AllPointsDegenerate,
    #[error("gap {gap:e} below tolerance at unmasked node {node}")]
    GapTooSmall { node: usize, gap: f64 },
    #[error("loop visits a degenerate point (loop index {0})")]
    DegeneratePointOnLoop(usize),
    #[error("surface touches a degeneracy-masked point at node {0}")]
    SurfaceTouchesDegeneracy(usize),
    #[error("operation requires a time axis")]
    MissingTimeAxis,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
