use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants are grouped by the exit code the CLI maps them to: input
/// validation, numeric-contract violations and resource exhaustion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // -- validation --------------------------------------------------------
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("phase {theta} lies outside the certified strip of radius {strip}")]
    OutsideStrip { theta: f64, strip: f64 },
    #[error("not enough convergents: need {needed}, have {have}")]
    InsufficientDepth { needed: usize, have: usize },
    #[error("frequency is rational: continued fraction terminates after {depth} quotients")]
    RationalInput { depth: usize },
    #[error("phase lies on the orbit of a singular phase (distance {distance:e})")]
    ThetaInSingularOrbit { distance: f64 },
    #[error("parameters are not in region I")]
    NotRegionOne,
    #[error("peak site {peak} is too close to the window boundary")]
    PeakNearBoundary { peak: i64 },
    #[error("mean of the right-hand side is not zero ({mean:e})")]
    MeanNotZero { mean: f64 },
    #[error("conjugacy candidate residual {residual:e} is above the admissible bound")]
    ResidualTooLarge { residual: f64 },
    #[error("field occupies the aliasing guard band of the grid")]
    AliasingBudgetExceeded,

    // -- numeric-contract violations -------------------------------------
    #[error("remaining precision cannot certify quotient {depth}")]
    PrecisionExhausted { depth: usize },
    #[error("hopping vanishes (|c| = {modulus:e}) at orbit index {index}")]
    SingularHopping { index: i64, modulus: f64 },
    #[error("symbol vanishes on the torus (min |s| = {min_modulus:e})")]
    VanishesOnTorus { min_modulus: f64 },
    #[error("winding by argument increments ({argument}) disagrees with root count ({roots})")]
    WindingMismatch { argument: i64, roots: i64 },
    #[error("conjugacy is singular on the grid (min singular value {min_sv:e})")]
    SingularOnGrid { min_sv: f64 },
    #[error("square-root branch of c/c~ does not close on the torus (winding {winding})")]
    BranchObstruction { winding: i64 },
    #[error("smallest singular values are degenerate ({s0:e}, {s1:e})")]
    IllConditioned { s0: f64, s1: f64 },
    #[error("small divisor blow-up at mode {mode}: |g_k| = {magnitude:e}")]
    SmallDivisorBlowup { mode: i64, magnitude: f64 },
    #[error("eigensolver failed to converge at index {index}")]
    ConvergenceFailure { index: usize },
    #[error("declared strip {declared} is not supported by coefficient decay (fitted {fitted})")]
    StripNotCertified { declared: f64, fitted: f64 },
    #[error("numeric contract violated: {0}")]
    Contract(String),

    // -- resources ---------------------------------------------------------
    #[error("integer budget exceeded: {bits} bits")]
    Overflow { bits: u64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            InvalidParameters(_)
            | OutsideStrip { .. }
            | InsufficientDepth { .. }
            | RationalInput { .. }
            | ThetaInSingularOrbit { .. }
            | NotRegionOne
            | PeakNearBoundary { .. }
            | MeanNotZero { .. }
            | ResidualTooLarge { .. }
            | AliasingBudgetExceeded => 2,
            Overflow { .. } | Io(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
