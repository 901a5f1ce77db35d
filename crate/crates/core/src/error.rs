use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("feature count {n} outside 1..=64")]
    FeatureCountOutOfRange { n: usize },
    #[error("full lattice requested for n = {n}, limit is {max}; use a truncated support")]
    FullLatticeTooLarge { n: usize, max: usize },
    #[error("support would hold {size} subsets, limit is {max}")]
    SupportTooLarge { size: u128, max: usize },
    #[error("invalid truncation order {k} for n = {n}")]
    InvalidOrder { k: usize, n: usize },
    #[error("shape mismatch: expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("feature index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("feature count mismatch: expected {expected}, found {found}")]
    FeatureCountMismatch { expected: usize, found: usize },

    #[error("table has no entry for subset {{{subset}}}")]
    MissingTableEntry { subset: String },
    #[error("oracle protocol error: {0}")]
    OracleProtocol(String),
    #[error("oracle did not answer within {millis} ms")]
    OracleTimeout { millis: u64 },
    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("walk feature {index} out of range for n = {n}")]
    WalkIndexOutOfRange { index: usize, n: usize },
    #[error("walk covers {order} features but the support stops at order {k}")]
    WalkOrderExceedsSupport { order: usize, k: usize },
    #[error("empty walk")]
    EmptyWalk,
    #[error("equivalence check limited to n <= {max}, got {n}")]
    CheckTooLarge { n: usize, max: usize },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown token `{token}` at position {position}")]
    UnknownToken { token: String, position: usize },
    #[error("token `{token}` at position {position} occurs more than once in the vocabulary")]
    AmbiguousToken { token: String, position: usize },

    #[error("subset {{{subset}}} carries mass but no query covers it")]
    UncoveredSubset { subset: String },
    #[error("all weights are zero")]
    AllWeightsZero,

    #[error("query space is empty")]
    EmptyQuerySpace,
    #[error("query space exceeds the cap of {cap} queries")]
    SpaceTooLarge { cap: usize },
    #[error("atom {{{atom}}} is not a contiguous index range")]
    NonConsecutiveAtom { atom: String },

    #[error("order is not a permutation of 0..{n}")]
    NotAPermutation { n: usize },
}
