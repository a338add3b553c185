use std::io;

use thiserror::Error;

use crate::cubical::Face;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {0:?}: every axis needs at least 3 voxels")]
    InvalidDims([usize; 3]),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("voxel {0:?} is outside the volume or on its outermost layer")]
    SeedOutside([usize; 3]),
    #[error("face {0:?} is not in the complex")]
    FaceNotInComplex(Face),
    #[error("({0:?}, {1:?}) is not a free pair")]
    NotFree(Face, Face),
    #[error("complex is not closed: {0}")]
    NotClosed(String),
    #[error("front is empty at distance {0}")]
    EmptyFront(f64),
    #[error("need at least 2 ridge curves, got {0}")]
    TooFewCurves(usize),
    #[error("degenerate cut: {0}")]
    DegenerateCut(String),
    #[error("boundary chaining failed: {0}")]
    Chaining(String),
    #[error("boundary face {0:?} lies outside the visited region")]
    BoundaryOutsideRegion(Face),
    #[error("complex contains 3-faces")]
    HasVolume,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("surface does not fit inside the volume with the required margin")]
    SurfaceExceedsMargin,
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
