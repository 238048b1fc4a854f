use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A physical or numerical parameter violates its constraint.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Observation or focal geometry that the model cannot handle.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The Fisher information is singular; `null_direction` spans its
    /// (numerical) kernel.
    #[error("Fisher information is rank deficient (rank {rank} of {dim}); null direction {null_direction:?}")]
    RankDeficient {
        rank: usize,
        dim: usize,
        null_direction: Vec<f64>,
    },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Domain(_) => "domain",
            Self::InvalidParameter { .. } => "invalid_parameter",
            Self::Geometry(_) => "geometry",
            Self::IndexOutOfRange { .. } => "index_out_of_range",
            Self::Empty(_) => "empty",
            Self::Dimension(_) => "dimension",
            Self::RankDeficient { .. } => "rank_deficient",
            Self::Config { .. } => "config",
            Self::Io(_) => "io",
            Self::Json(_) => "json",
        }
    }
}
