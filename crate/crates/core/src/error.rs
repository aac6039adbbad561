use thiserror::Error;

/// Errors produced by mesh construction, assembly, solves and the control loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid refinement: {0}")]
    InvalidRefinement(String),

    #[error("unsupported quadrature degree {degree} for {entity}")]
    UnsupportedQuadrature { entity: &'static str, degree: usize },

    #[error("point {point:?} lies outside element {element}")]
    PointOutsideElement { element: usize, point: [f64; 2] },

    #[error("boundary edge {0} has no second adjacent element")]
    NoSecondSide(usize),

    #[error("invalid problem data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("triplet ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("singular system (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("linear solve did not reach tolerance: relative residual {residual:.3e}")]
    InaccurateSolve { residual: f64 },

    #[error("inconsistent active set: {0}")]
    InconsistentActiveSet(String),

    #[error(
        "active-set iteration did not converge in {iterations} steps \
         (last set changes: {last_changes:?})"
    )]
    NonConvergence {
        iterations: usize,
        last_changes: [usize; 2],
    },

    #[error("level with {elements} elements failed: {source}")]
    AtLevel {
        elements: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("nonpositive error value {0} in rate computation")]
    NonPositiveError(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure is an active-set iteration that hit its cap.
    pub fn is_nonconvergence(&self) -> bool {
        match self {
            Error::NonConvergence { .. } => true,
            Error::AtLevel { source, .. } => source.is_nonconvergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
