use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range; `path` is the dotted key path.
    #[error("invalid config at `{path}`: {reason}")]
    InvalidConfig { path: String, reason: String },

    #[error("{what} is not normalized (norm² = {norm_sqr})")]
    NotNormalized { what: &'static str, norm_sqr: f64 },

    #[error("state is not physical: smallest eigenvalue {min_eigenvalue:e}")]
    NotPhysical { min_eigenvalue: f64 },

    #[error("undefined result: {0}")]
    Undefined(&'static str),

    #[error("instrument matrix is singular (condition number {condition:e})")]
    SingularInstrument { condition: f64 },

    #[error("channel bit {0} is not declared in the channel layout")]
    UnknownChannel(u32),

    #[error("empty channel set")]
    EmptyChannelSet,

    #[error("scan has no baseline points at least {min_offset_fs} fs from the dip")]
    NoBaseline { min_offset_fs: f64 },

    #[error("dip fit did not converge")]
    FitFailed,
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
