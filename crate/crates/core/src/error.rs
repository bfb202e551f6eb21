use thiserror::Error;

/// Everything that can go wrong while computing intersection numbers, bounds or
/// cache files. All variants map to CLI exit code 2 (domain/precondition).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unstable moduli point (g={g}, n={n}): requires 2g-2+n > 0")]
    Unstable { g: u32, n: u32 },

    #[error("(g,n)=({g},{n}) is excluded from the one-step recursion bound (g,n) != (0,4),(1,1); pass --override-exclusions to evaluate anyway")]
    ExcludedPair { g: u32, n: u32 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("volume table has no usable {need} value for V_{{{g},{n}}}")]
    MissingEntry { g: u32, n: u32, need: &'static str },

    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error("cache error at line {line}: {msg}")]
    CacheFormat { line: usize, msg: String },

    #[error("cache version {found} is not supported (expected {expected})")]
    CacheVersion { found: u64, expected: u64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
