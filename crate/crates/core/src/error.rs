use thiserror::Error;

/// Errors produced by every layer of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A symbol name that is not part of the alphabet in use.
    #[error("unknown symbol `{symbol}`{}", position.map(|p| format!(" at token {p}")).unwrap_or_default())]
    UnknownSymbol {
        symbol: String,
        position: Option<usize>,
    },

    /// Malformed input that is not tied to a file line.
    #[error("invalid input: {0}")]
    Input(String),

    /// A syntax or semantic error in a line-oriented file.
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    /// Two values that must share an alphabet do not.
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    /// The target function is not subset-closed, so no self-stabilizing
    /// protocol exists for it.
    #[error("function is not subset-closed: {smaller} ⊆ {larger} but f({smaller}) = {smaller_output} ≠ {larger_output} = f({larger})")]
    NotSubsetClosed {
        smaller: String,
        larger: String,
        smaller_output: String,
        larger_output: String,
    },

    /// A configured size limit would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
