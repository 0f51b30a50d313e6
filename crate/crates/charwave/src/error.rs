use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("integration failure at node ({i}, {j}): {reason}")]
    Integration { i: usize, j: usize, reason: String },

    #[error("fixed point did not converge at node ({i}, {j}) after {iters} iterations")]
    NoConvergence { i: usize, j: usize, iters: usize },

    #[error("level curve t = {tau}: {reason}")]
    Curve { tau: f64, reason: String },

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("at theta = {theta}")]
    AtTheta {
        theta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_theta(theta: f64, e: Error) -> Error {
        Error::AtTheta {
            theta,
            source: Box::new(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
