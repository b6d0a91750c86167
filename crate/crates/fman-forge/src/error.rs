use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can produce. Expression-level variants carry byte
/// offsets into the source string; engine-level variants carry the quantities
/// a caller needs to decide between "bad input" and "bad domain".
#[derive(Error, Debug)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { offset: usize, name: String },

    #[error("conj() is only available on complex charts (byte {offset})")]
    ConjInRealFlavor { offset: usize },

    #[error("domain error in `{what}` at bytes {start}..{end}")]
    Domain {
        start: usize,
        end: usize,
        what: String,
    },

    #[error("singular linear system: |det| = {det_mag:.3e} below threshold {threshold:.3e}")]
    SingularSystem { det_mag: f64, threshold: f64 },

    #[error("jet order {requested} requested from a view that supplies order <= {available}")]
    OrderExhausted { requested: usize, available: usize },

    #[error("domain mostly singular: {rejected} of {attempts} sample draws rejected")]
    DomainMostlySingular { rejected: usize, attempts: usize },

    #[error("pencil metric degenerate at lambda = {lambda}")]
    PencilDegenerate { lambda: f64 },

    #[error("coincident characteristic speeds (components {i} and {j}) at a sample point")]
    CoincidentSpeeds { i: usize, j: usize },

    #[error("CFL violation at step {step}: {cfl:.4} exceeds limit {limit}")]
    CflViolation { step: usize, cfl: f64, limit: f64 },

    #[error("solution lost finiteness at step {step}; aborting with last stable state")]
    BlowUp { step: usize },

    #[error("principal square root hits the branch cut at {count} sample point(s), first at {first}")]
    BranchCut { count: usize, first: String },

    #[error("decomposition defect {defect:.3e} exceeds tolerance {tol:.3e}: {what}")]
    DecompositionDefect {
        defect: f64,
        tol: f64,
        what: String,
    },

    #[error("manifest schema error at {pointer}: {what}")]
    Schema { pointer: String, what: String },

    #[error("missing {kind} named `{name}`")]
    MissingObject { kind: String, name: String },

    #[error("{0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn schema(pointer: impl Into<String>, what: impl Into<String>) -> Self {
        Error::Schema {
            pointer: pointer.into(),
            what: what.into(),
        }
    }

    pub fn missing(kind: impl Into<String>, name: impl Into<String>) -> Self {
        Error::MissingObject {
            kind: kind.into(),
            name: name.into(),
        }
    }
}
