use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: no data rows")]
    EmptyInput,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("target h unreachable (inf F = {inf_f})")]
    Unreachable { inf_f: f64 },

    #[error("degenerate spectrum: lambda_p / lambda_1 = {ratio}; use a larger beta or a smaller p")]
    DegenerateSpectrum { ratio: f64 },

    #[error("vanishing self-affinity at index {index}: (M^m)_ii = {value:e}")]
    VanishingSelfAffinity { index: usize, value: f64 },

    #[error("matrix is not symmetric: max |M_ij - M_ji| = {0:e}")]
    NotSymmetric(f64),

    #[error("power iteration did not converge after {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, with any stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 usage/validation, 3 numerical or degenerate input, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::EmptyInput | Error::Parse(_) | Error::Param(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
