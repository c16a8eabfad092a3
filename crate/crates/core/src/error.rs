use thiserror::Error;

/// Errors reported by the covert-signalling toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument lies outside the domain of the formula it feeds.
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The construction needs ε > n^(-1/6); below that no zero codewords can be added.
    #[error("blocklength {n} is not in regime: epsilon {epsilon} <= n^(-1/6) = {epsilon_prime}")]
    NotInRegime { n: u64, epsilon: f64, epsilon_prime: f64 },

    /// The target ln M of the base code is not positive at this blocklength.
    #[error("blocklength {n} too small for the construction: ln M target = {log_m_target}")]
    DegenerateSize { n: u64, log_m_target: f64 },

    /// The base code would contain more messages than the simulation allows.
    #[error("base code needs exp({log_m_target}) messages, above the simulation cap of {cap}")]
    InfeasibleSize { log_m_target: f64, cap: u64 },

    #[error("codebook dimensions overflow: {0}")]
    Capacity(String),

    #[error("codebook already carries {0} zero codewords; augmentation applies once")]
    AlreadyAugmented(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("key {key} out of range for a codebook with {keys} keys")]
    KeyOutOfRange { key: usize, keys: usize },

    #[error("exact mixture needs {components} components, above the cap of {cap}")]
    MixtureTooLarge { components: u64, cap: u64 },

    #[error("{0} must be at least 1")]
    NoSamples(&'static str),

    /// The moment generating function diverges at this argument.
    #[error("moment generating function is infinite at lambda = {lambda}")]
    InfiniteMgf { lambda: f64 },

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("malformed codebook header: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain { name, value, expected }
}
