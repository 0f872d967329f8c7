use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// An O(n^2) recurrence was asked for an `n` beyond the configured cap.
    #[error("n = {n} exceeds the exact-recurrence cap {cap}; use the closed form")]
    Capacity { n: u64, cap: u64 },

    #[error("cannot build a tree from an empty element set")]
    EmptyInput,

    /// Two element streams agree on every bit up to the depth guard.
    #[error("duplicate element: digests {0:#018x} and {1:#018x} agree on the first {2} bits")]
    DuplicateElement(u64, u64, u32),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("bad encoded tree: {0}")]
    Format(String),

    #[error("payload truncated")]
    Truncated,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
