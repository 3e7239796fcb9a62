use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by all modules.
///
/// The CLI maps these onto exit codes: configuration/usage problems are
/// distinct from numerical-domain failures, which are distinct from
/// invariant-suite failures.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("surface miss: no root of the surface function in [{0}, {1}]")]
    SurfaceMiss(f64, f64),

    #[error("degenerate surface: |df/dtau| = {0:.3e} below threshold at root")]
    DegenerateSurface(f64),

    #[error("degenerate observer: u.p = 0")]
    DegenerateObserver,

    #[error("incompatible states: {0}")]
    IncompatibleState(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("singular domain: {0}")]
    SingularDomain(String),

    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("invalid chart: operator expects {expected}, state is {found}")]
    InvalidChart { expected: String, found: String },

    #[error("completeness failure: defect {0:.3e} exceeds {1:.3e}")]
    CompletenessFailure(f64, f64),

    #[error("map validation failure: completeness defect {0:.3e}")]
    MapValidation(f64),

    #[error("localization failure: {0}")]
    LocalizationFailure(String),

    #[error("pole of Gamma at z = {0}")]
    GammaPole(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit-code class used by the CLI: 2 = usage/config, 3 = numerical domain.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
