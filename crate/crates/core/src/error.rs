use thiserror::Error;

/// Errors raised by the encoding, training and finance routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid qubit count {0} (allowed 1..={1})")]
    QubitCount(usize, usize),
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },
    #[error("control and target qubit are both {0}")]
    ControlIsTarget(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("invalid probability distribution: {0}")]
    Distribution(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sign extension requested for a vector that needs no ancilla")]
    NotCase2,
    #[error("post-selected branch has zero probability")]
    ZeroBranch,
    #[error("Schmidt extraction kept mass {0:.4} < 0.5; the SVD stage did not converge")]
    SpectrumMass(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("matrix is not symmetric (deviation {0:e})")]
    Asymmetric(f64),
    #[error("matrix has a negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("price data: {0}")]
    Prices(String),
    #[error("window {window}: stock {symbol} has zero return variance")]
    ZeroVariance { window: String, symbol: String },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Prices(e.to_string())
    }
}

impl Error {
    /// Stable snake_case tag for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::QubitCount(..) => "qubit_count",
            Error::QubitIndex { .. } => "qubit_index",
            Error::ControlIsTarget(_) => "control_is_target",
            Error::Dimension { .. } => "dimension",
            Error::NotPowerOfTwo(_) => "not_power_of_two",
            Error::ZeroVector => "zero_vector",
            Error::Distribution(_) => "distribution",
            Error::Empty(_) => "empty",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::NotCase2 => "not_case2",
            Error::ZeroBranch => "zero_branch",
            Error::SpectrumMass(_) => "spectrum_mass",
            Error::Config(_) => "config",
            Error::Asymmetric(_) => "asymmetric",
            Error::NegativeEigenvalue(_) => "negative_eigenvalue",
            Error::Prices(_) => "prices",
            Error::ZeroVariance { .. } => "zero_variance",
            Error::Io(_) => "io",
        }
    }
}
