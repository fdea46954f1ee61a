use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet order {order} out of range (0..={max})")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("coordinate index {index} out of range for dimension {dim}")]
    CoordinateOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("multi-index of degree {degree} exceeds stored jet order {order}")]
    PartialOrderExceeded { degree: usize, order: usize },

    #[error("domain violation in {op}: operand value {value}{}", context.as_ref().map(|c| format!(" (in `{c}`)")).unwrap_or_default())]
    Domain {
        op: &'static str,
        value: f64,
        context: Option<String>,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("metric signature check failed at {point:?}: eigenvalue signs {signs:?}, expected {expected:?} (negative, positive)")]
    SignatureCheck {
        point: Vec<f64>,
        signs: Vec<i8>,
        expected: (usize, usize),
    },

    #[error("vielbein pivot {pivot} has sign {found}, flat metric expects {expected}")]
    SignatureMismatch { pivot: usize, found: i8, expected: i8 },

    #[error("singular {0}")]
    Singular(&'static str),

    #[error("matrix is not in the conformal algebra (Σ-antisymmetry residual {residual:e})")]
    NotInAlgebra { residual: f64 },

    #[error("invalid group element: {0}")]
    InvalidGroupElement(String),

    #[error("missing jets: operation needs order >= {needed}, operand has order {have}")]
    MissingJets { needed: usize, have: usize },

    #[error("convention calibration: {0}")]
    Calibration(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("metric file line {line}: {msg}")]
    MetricFile { line: usize, msg: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, value: f64) -> Self {
        Error::Domain {
            op,
            value,
            context: None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{name}` takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
}
