use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition spec: {0}")]
    InvalidSpec(String),

    #[error("no chain from the first region to region {0}")]
    NoChain(usize),

    #[error("mesh size h = {h} is too coarse for strip thickness {thickness}")]
    TooCoarse { h: f64, thickness: f64 },

    #[error("mesh quality: {0}")]
    MeshQuality(String),

    #[error("mesh parse error on line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("evaluation at the singular point")]
    SingularPoint,

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("ellipticity violated for region {region}: {msg}")]
    Ellipticity { region: usize, msg: String },

    #[error("triangle {triangle} carries region tag {region}, admittivity has {available} regions")]
    Tagging {
        triangle: usize,
        region: usize,
        available: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("source placement: {0}")]
    Placement(String),

    #[error("radius out of range: {0}")]
    Range(String),

    #[error("meshes differ")]
    MismatchedMesh,

    #[error("empty boundary subset: {0}")]
    EmptySubset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank deficient sensitivity: {0}")]
    RankDeficient(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SolverBreakdown(_)
                | Error::NotPositiveDefinite(_)
                | Error::RankDeficient(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
