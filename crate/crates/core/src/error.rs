use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("height increments must be +-1 (sites {0} and {1})")]
    BadIncrement(i64, i64),
    #[error("parity violation: h({site}) = {value} has the wrong parity")]
    Parity { site: i64, value: i64 },
    #[error("site {0} lies outside the window")]
    OutsideWindow(i64),
    #[error("empty window")]
    EmptyWindow,
    #[error("no finite support")]
    NoFiniteSupport,
    #[error("invalid scale {0}")]
    BadScale(f64),
    #[error("empty middle grid")]
    EmptyMiddleGrid,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("coupling (a, b) = (0, 0) is not allowed")]
    ZeroCoupling,
    #[error("negative rate {0}")]
    NegativeRate(f64),
    #[error("invalid interval: {0} > {1}")]
    BadInterval(f64, f64),
    #[error("non-nearest-neighbour jump {0}: use evolve_aep_basic")]
    NotNearestNeighbour(i64),
    #[error("invalid jump distribution: {0}")]
    BadJumpDistribution(String),
    #[error("clock scheme mismatch: {0}")]
    SchemeMismatch(String),
    #[error("time {requested} is beyond the clock horizon {horizon}")]
    BeyondHorizon { requested: f64, horizon: f64 },
    #[error("cannot evolve backwards from {from} to {to}")]
    Backwards { from: f64, to: f64 },
    #[error("copies must share one window")]
    WindowMismatch,
    #[error("point ({x}, {t}) is not certified")]
    NotCertified { x: i64, t: f64 },
    #[error("parity-inadmissible shift m = {0}")]
    InadmissibleShift(i64),
    #[error("illegal move: {0}")]
    IllegalMove(String),
    #[error("invalid path: {0}")]
    BadPath(String),
    #[error("point ({0}, {1}) is off the even lattice")]
    OffLattice(i64, i64),
    #[error("walk leaves the box at ({0}, {1})")]
    LeavesBox(i64, i64),
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("eta must lie in (0, 1), got {0}")]
    BadEta(f64),
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("invalid walk ensemble: {0}")]
    BadEnsemble(String),
    #[error("expected k = 2, got {0}")]
    NeedTwoLines(usize),
    #[error("empty sample")]
    EmptySample,
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("empty table")]
    EmptyTable,
    #[error("malformed table: {0}")]
    BadTable(String),
    #[error("unknown axiom {0}")]
    UnknownAxiom(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
