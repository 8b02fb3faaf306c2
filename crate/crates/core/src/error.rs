use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate inertia: effective passive inertia {0:e} is not positive")]
    DegenerateInertia(f64),

    #[error("coupling singularity: |K2| = {k2:e} is below the threshold {threshold:e}")]
    CouplingSingular { k2: f64, threshold: f64 },

    #[error(
        "strong inertial coupling violated: rank(M21) < {passive} \
         (sigma_min = {sigma_min:.3e}, mass scale = {scale:.3e})"
    )]
    RankDeficient { passive: usize, sigma_min: f64, scale: f64 },

    #[error("actuated mass block M11 is singular")]
    SingularMass,

    #[error("state became non-finite")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("at t = {t:.6}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn at(self, t: f64) -> Error {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime { t, source: Box::new(e) },
        }
    }

    /// Innermost error, skipping any time annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_model_error(&self) -> bool {
        matches!(
            self.root(),
            Error::DegenerateInertia(_)
                | Error::CouplingSingular { .. }
                | Error::RankDeficient { .. }
                | Error::SingularMass
        )
    }

    /// Process exit code used by the command line front end.
    ///
    /// 1: unknown scenario or bad input, 2: model singularity,
    /// 3: non-finite state, 4: output failure.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::UnknownScenario(_)
            | Error::Config { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidRotation(_) => 1,
            Error::NonFinite => 3,
            Error::Io(_) | Error::Csv(_) => 4,
            e if e.is_model_error() => 2,
            _ => 1,
        }
    }
}
