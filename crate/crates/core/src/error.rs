use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid is not symmetric under z -> conj(z) (center {0})")]
    NotConjugationSymmetric(Complex64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("|mu| = {modulus} >= 1 at sample ({i}, {j})")]
    NotContracting { i: usize, j: usize, modulus: f64 },

    #[error("invalid ellipse field: {0}")]
    InvalidEllipse(String),

    #[error("field is not a circle field on the upper half-plane (max eccentricity {0})")]
    NotCircularAbove(f64),

    #[error("solver did not converge in {iterations} iterations (last increment {increment:e})")]
    NoConvergence { iterations: usize, increment: f64 },

    #[error("solver residual {residual:e} exceeds acceptance {limit:e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("map is not orientation preserving at sample ({i}, {j})")]
    OrientationLost { i: usize, j: usize },

    #[error("map sends 0 and 1 to the same point")]
    DegenerateNormalization,

    #[error("vanishing derivative at sample ({i}, {j})")]
    VanishingDerivative { i: usize, j: usize },

    #[error("could not invert map at {0}")]
    InversionFailed(Complex64),

    #[error("point {0} lies outside the grid")]
    OutsideGrid(Complex64),

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("lambda {0} is not among the motion samples")]
    UnknownLambda(Complex64),

    #[error("solve failed at lambda = {lambda}: {source}")]
    AtLambda {
        lambda: Complex64,
        #[source]
        source: Box<Error>,
    },

    #[error("zero radius {radius:e} at interval {index}")]
    ZeroRadius { index: usize, radius: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("undersampled curve: gap {gap:e} exceeds eps/2 = {limit:e}")]
    Undersampled { gap: f64, limit: f64 },

    #[error("non-monotone covering data: {0}")]
    NonMonotone(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("degenerate generator: {0}")]
    DegenerateSpec(String),

    #[error("bad grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
