use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Parse-level variants carry 1-based source coordinates; the remaining
/// variants signal violated preconditions or exhausted budgets.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("arity error at {line}:{column}: `{symbol}` expects {expected} argument(s), got {found}")]
    Arity {
        line: usize,
        column: usize,
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("undeclared symbol `{symbol}` at {line}:{column}")]
    UndeclaredSymbol {
        line: usize,
        column: usize,
        symbol: String,
    },
    #[error("duplicate parameter `{var}` in rule for `{head}`")]
    DuplicateParameter { head: String, var: String },
    #[error("duplicate declaration of `{0}`")]
    DuplicateDeclaration(String),
    #[error("variable `{var}` is neither a parameter nor existential in rule for `{head}`")]
    UnboundVariable { head: String, var: String },
    #[error("arity mismatch: `{symbol}` expects {expected}, got {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("structures are not locally disjoint: {relation}{tuple:?} occurs in both")]
    NotLocallyDisjoint { relation: String, tuple: Vec<u32> },
    #[error("element {0} is not in the support")]
    ElementNotInSupport(u32),
    #[error("structure too large for exact treewidth ({0} elements, limit 16)")]
    TooLarge(usize),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("the root predicate has no models")]
    EmptySemantics,
    #[error("no reset exists for state `{0}`")]
    NoReset(String),
    #[error("relation atom with only persistent arguments in transition from `{0}`")]
    AllPersistentAtom(String),
    #[error("cannot read {0}")]
    Io(String),
    #[error("colors clash on `{0}`")]
    ColorClash(String),
    #[error("arithmetic overflow while computing the bound")]
    Overflow,
    #[error("{0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
