use thiserror::Error;

/// Errors raised by the simulator and its analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad topology parameters, rates, or run settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// Rate expression did not match the grammar.
    #[error("rate expression error at position {position} in {input:?}: {message}")]
    RateExpr {
        input: String,
        position: usize,
        message: String,
    },

    /// CTMC analysis failed (reducible chain, singular sub-generator).
    #[error("analysis error: {0}")]
    Analysis(String),

    /// A runtime guard tripped during simulation.
    #[error("runtime guard: {0}")]
    Guard(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
