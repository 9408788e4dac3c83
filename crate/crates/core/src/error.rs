use thiserror::Error;

/// Position-annotated failure from one of the text parsers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(text: &str, offset: usize, message: impl Into<String>) -> Self {
        let offset = offset.min(text.len());
        let before = &text[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown connective `{0}`")]
    UnknownConnective(String),
    #[error("duplicate connective `{0}`")]
    DuplicateConnective(String),
    #[error("connective `{name}` expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{0}` is not a one-place look-ahead connective")]
    NotLookahead(String),
    #[error("formula `{0}` is not a simple axiom: {1}")]
    NotSimple(String, String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("table of `{0}` is not deterministic")]
    NotDeterministic(String),
    #[error("invalid expansion: {0}")]
    InvalidExpansion(String),
    #[error("refinement violation: {0}")]
    Refinement(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invalid discriminator: {0}")]
    Discriminator(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("invalid rule instance: {0}")]
    Instance(String),
    #[error("invalid proof: {0}")]
    InvalidProof(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
