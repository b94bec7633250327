use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    /// A leapfrog or Langevin update produced a non-finite coordinate.
    #[error("divergent trajectory at outer step {outer:?}, inner step {inner}")]
    Divergence { outer: Option<usize>, inner: usize },

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    Convergence {
        iterations: usize,
        grad_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error("formula domain error: {0}")]
    FormulaDomain(String),

    #[error("degenerate series: zero sample variance")]
    DegenerateSeries,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Attach the outer (Markov chain) step index to a divergence error.
    pub(crate) fn at_outer_step(self, outer: usize) -> Self {
        match self {
            Error::Divergence { inner, .. } => Error::Divergence {
                outer: Some(outer),
                inner,
            },
            other => other,
        }
    }
}
