use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternionic dimension n = {n} is not supported (need 2 <= n <= 4; the 1/(n-1) factor in the candidate form is undefined for n = 1)")]
    UnsupportedDimension { n: usize },

    #[error("mismatched generator counts: {left} vs {right}")]
    MismatchedGenerators { left: usize, right: usize },

    #[error("exterior elements must have even degree, got a monomial of degree {degree}")]
    OddDegree { degree: usize },

    #[error("matrix is not antisymmetric (defect {defect:e})")]
    NotAntisymmetric { defect: f64 },

    #[error("reference form is degenerate (Pfaffian {pfaffian:e})")]
    DegenerateOmega { pfaffian: f64 },

    #[error("degree m = {m} out of range 0..={n}")]
    DegreeOutOfRange { m: usize, n: usize },

    #[error("form is not J-real: positivity matrix Hermiticity defect {defect:e}")]
    NotJReal { defect: f64 },

    #[error(
        "wavevector component {k} on active dimension {dim} is not resolvable on {size} points"
    )]
    Unresolvable { dim: usize, k: i64, size: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("positivity violated at grid point {point} (x = {coords:?}): minimum eigenvalue {min_eig:e}")]
    Positivity {
        point: usize,
        coords: Vec<f64>,
        min_eig: f64,
    },

    #[error("u* is too large for a positive candidate form (minimum eigenvalue {min_eig:e}); scale its amplitude by at most {max_scale:.6}")]
    AmplitudeTooLarge { min_eig: f64, max_scale: f64 },

    #[error("non-finite value at grid point {point}")]
    NonFinite { point: usize },

    #[error(
        "stiffness failure at t = {t}: {rejections} consecutive step rejections, last dt = {dt:e}"
    )]
    Stiffness { t: f64, dt: f64, rejections: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("snapshot shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
