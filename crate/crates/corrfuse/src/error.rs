use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sidecar error on {path}: {message}")]
    Sidecar { path: PathBuf, message: String },

    #[error("payload size mismatch on {path}: sidecar dims {dims:?} need {expected} bytes, file has {actual}")]
    SizeMismatch {
        path: PathBuf,
        dims: [usize; 3],
        expected: u64,
        actual: u64,
    },

    #[error("volume contains non-finite values ({count} of {total})")]
    NonFinite { count: usize, total: usize },

    #[error("dims mismatch: {a:?} vs {b:?}")]
    DimsMismatch { a: [usize; 3], b: [usize; 3] },

    #[error("invalid dims {dims:?}: {message}")]
    InvalidDims { dims: [usize; 3], message: String },

    #[error("invalid voxel size {voxel_size:?}: must be strictly positive")]
    InvalidVoxelSize { voxel_size: [f64; 3] },

    #[error("pad target {target:?} smaller than source {source_dims:?}")]
    PadTargetTooSmall {
        target: [usize; 3],
        source_dims: [usize; 3],
    },

    #[error("crop target {target:?} larger than source {source_dims:?}")]
    CropTargetTooLarge {
        target: [usize; 3],
        source_dims: [usize; 3],
    },

    #[error("region origin {origin:?} extent {extent:?} not contained in dims {dims:?}")]
    RegionOutOfBounds {
        origin: [usize; 3],
        extent: [usize; 3],
        dims: [usize; 3],
    },

    #[error("empty region")]
    EmptyRegion,

    #[error("view already preprocessed (angle {angle_deg} deg)")]
    AlreadyPreprocessed { angle_deg: f64 },

    #[error("view not preprocessed (angle {angle_deg} deg)")]
    NotPreprocessed { angle_deg: f64 },

    #[error("empty view/angle list")]
    EmptyViewList,

    #[error("all-zero input: {context}")]
    ZeroInput { context: String },

    #[error("zero-variance input: {context}")]
    ZeroVariance { context: String },

    #[error("psf dims {dims:?} too small for sigma {sigma:?}: truncated mass {truncated:.3e} exceeds 1e-6")]
    PsfDimsTooSmall {
        dims: [usize; 3],
        sigma: [f64; 3],
        truncated: f64,
    },

    #[error("invalid psf sigma {sigma:?}: must be strictly positive")]
    InvalidSigma { sigma: [f64; 3] },

    #[error("invalid solver options: {message}")]
    InvalidSolverOptions { message: String },

    #[error("solver produced non-finite values at iteration {iteration}")]
    SolverDiverged { iteration: usize },

    #[error("anchor auto-correlation required for the AU method")]
    MissingAnchor,

    #[error("phantom geometry out of bounds: {message}")]
    PhantomOutOfBounds { message: String },

    #[error("invalid acquisition spec: {message}")]
    InvalidAcquisition { message: String },

    #[error("profile endpoint {point:?} outside volume extent {extent:?} um")]
    ProfileOutOfBounds { point: [f64; 3], extent: [f64; 3] },

    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
