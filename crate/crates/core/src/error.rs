use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed network document: {0}")]
    MalformedNetwork(String),

    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),

    #[error("variable `{var}` has duplicate value label `{value}`")]
    DuplicateValue { var: String, value: String },

    #[error("variable `{0}` needs at least two values")]
    TooFewValues(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{var}` has no value `{value}`")]
    UnknownValue { var: String, value: String },

    #[error("variable `{0}` has more than one CPT")]
    DuplicateFamily(String),

    #[error("variable `{0}` has no CPT")]
    MissingFamily(String),

    #[error("variable `{0}` is listed twice among its parents")]
    RepeatedParent(String),

    #[error("parent relation has a cycle through `{0}`")]
    Cycle(String),

    #[error("CPT for `{child}` has {found} entries, expected {expected}")]
    TableSize {
        child: String,
        expected: usize,
        found: usize,
    },

    #[error("CPT for `{child}` has entry {value} outside [0, 1]")]
    EntryOutOfRange { child: String, value: f64 },

    #[error("CPT for `{child}` does not sum to 1 under {parents} (sum = {sum})")]
    NotNormalized {
        child: String,
        parents: String,
        sum: f64,
    },

    #[error("malformed evidence `{0}`")]
    MalformedEvidence(String),

    #[error("malformed parameter `{0}`, expected `Child=x|Parent=u,...`")]
    MalformedParam(String),

    #[error("network has no variables")]
    EmptyNetwork,

    #[error("conflicting evidence for `{0}`")]
    ConflictingEvidence(String),

    #[error("elimination order is not a permutation of the network variables: {0}")]
    BadOrder(String),

    #[error("circuit line {line}: {msg}")]
    CircuitSyntax { line: usize, msg: String },

    #[error("circuit does not match network: {0}")]
    CircuitMismatch(String),

    #[error("leaf assignment is missing a value for {0}")]
    MissingLeaf(String),

    #[error("variable `{0}` is not in the table scope")]
    NotInScope(String),

    #[error("evidence has zero probability")]
    ZeroProbability,

    #[error("retracted evidence has zero probability")]
    ZeroRetraction,

    #[error("query needs two distinct variables, got `{0}` twice")]
    SameVariable(String),

    #[error("query needs two distinct families, got `{0}` twice")]
    SameFamily(String),

    #[error("target variable `{0}` is observed in the evidence")]
    TargetObserved(String),

    #[error("variable `{0}` is not binary")]
    NotBinary(String),

    #[error("oracle limited to {limit} variables, network has {found}")]
    OracleTooLarge { limit: usize, found: usize },

    #[error("invalid meta parameter: {0}")]
    BadMetaParameter(String),
}
