use thiserror::Error;

/// Errors produced by the kernels, models, solvers, generators and oracles.
#[derive(Debug, Error)]
pub enum PipgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite numeric input: {0}")]
    NumericInput(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("oracle failed: {0}")]
    OracleFailure(String),

    /// A failure inside a solver run, tagged with where it happened.
    #[error("pass {pass}, iteration {iteration}: {source}")]
    AtIteration {
        pass: usize,
        iteration: usize,
        #[source]
        source: Box<PipgError>,
    },

    #[error("dataset parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipgError {
    pub(crate) fn at(self, pass: usize, iteration: usize) -> Self {
        PipgError::AtIteration {
            pass,
            iteration,
            source: Box::new(self),
        }
    }

    /// Strips iteration tags and returns the underlying error.
    pub fn root(&self) -> &PipgError {
        match self {
            PipgError::AtIteration { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipgError>;

pub(crate) fn ensure_finite_vec(v: &nalgebra::DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PipgError::NumericInput(format!(
            "{what} contains non-finite entries"
        )))
    }
}

pub(crate) fn ensure_finite_mat(m: &nalgebra::DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PipgError::NumericInput(format!(
            "{what} contains non-finite entries"
        )))
    }
}

pub(crate) fn ensure_square(m: &nalgebra::DMatrix<f64>, dim: usize, what: &str) -> Result<()> {
    if m.nrows() == dim && m.ncols() == dim {
        Ok(())
    } else {
        Err(PipgError::InvalidArgument(format!(
            "{what} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )))
    }
}
