use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {0}")]
    Range(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// A leading principal minor vanished; for the Toda flow this marks a blow-up time.
    #[error("Gauss factorization broke down at pivot {pivot} (|pivot| = {magnitude:e})")]
    FactorizationBlowUp { pivot: usize, magnitude: f64 },

    /// A trajectory reached a singularity (vanishing minor or diverging entry).
    #[error("solution blows up near t = {time} ({detail})")]
    BlowUp { time: f64, detail: String },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("spectrum mismatch: residual {0:e}")]
    Spectrum(f64),

    #[error("repeated interpolation nodes: {0}")]
    DegenerateNodes(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("sampler efficiency too low: acceptance rate {0:e}")]
    Efficiency(f64),

    #[error("io: {0}")]
    Io(String),

    /// The reader of the output went away (for example a pipe into `head`).
    #[error("output closed")]
    OutputClosed,
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        match e.kind() {
            std::io::ErrorKind::BrokenPipe => Error::OutputClosed,
            _ => Error::Io(e.to_string()),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe => Error::OutputClosed,
            _ => Error::Io(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        match e.io_error_kind() {
            Some(std::io::ErrorKind::BrokenPipe) => Error::OutputClosed,
            _ => Error::Io(e.to_string()),
        }
    }
}
