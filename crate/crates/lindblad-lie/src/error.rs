use crate::C64;

/// Crate-wide error type. Variants split into configuration problems
/// (rejected inputs) and numerical failures (the computation itself
/// refused or broke down); the CLI maps the two classes to exit codes
/// 1 and 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeIndexOutOfRange { index: usize, n_modes: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("not a valid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("schedules must be constant in time for this solver")]
    NonConstantParams,

    #[error("unsupported: {reason}")]
    Unsupported { reason: String },

    #[error(
        "mode matrix is within condition {condition:.3e} of an exceptional point; \
         eigenvectors are too ill-conditioned to use, fall back to the direct \
         integrator or the Wei-Norman route"
    )]
    NearExceptionalPoint { condition: f64 },

    #[error("exponential-product factorization singular near t = {t:.9e}")]
    FactorizationSingular { t: f64 },

    #[error("integration failed at t = {t:.9e}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("matrix numerically singular in {context}")]
    SingularMatrix { context: &'static str },

    #[error("{context} did not converge")]
    NoConvergence { context: &'static str },

    #[error("observable value {value} has a non-real part beyond tolerance; state is corrupted")]
    NonRealObservable { value: C64 },

    #[error("postselection on a fully decayed state (success probability {prob:.3e})")]
    FullyDecayed { prob: f64 },

    #[error("superoperator algebra does not close: residual {residual:.3e}")]
    NotClosed { residual: f64 },

    #[error(
        "rank decision ambiguous: singular value {sigma:.3e} lies in the guard band \
         around the cut {cut:.3e}"
    )]
    RankAmbiguous { sigma: f64, cut: f64 },

    #[error(
        "killing form degenerate on the {ideal} ideal: relative smallest singular \
         value {ratio:.3e}"
    )]
    DegenerateKilling { ideal: &'static str, ratio: f64 },

    #[error(
        "solvers disagree: max pairwise trace distance {distance:.3e} exceeds {threshold:.1e}"
    )]
    SolverDisagreement { distance: f64, threshold: f64 },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::ModeIndexOutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidState { .. }
                | Error::InvalidParams { .. }
                | Error::InvalidConfig { .. }
                | Error::Unsupported { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
