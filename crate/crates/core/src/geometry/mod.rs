//! Dimension-generic computational geometry: low-discrepancy designs, convex
//! hulls, Delaunay simplices, Voronoi vertices, and distance helpers.
//!
//! Everything here is a pure function of its inputs.

mod delaunay;
mod distance;
mod hull;
mod point;
mod sequence;
mod simplex;

use thiserror::Error;

pub use delaunay::{delaunay, delaunay_seeded, voronoi_vertices, VoronoiVertex, MAX_DELAUNAY_DIM};
pub use distance::{mean_pairwise_distance_unit_cube, nearest_distance};
pub use hull::{convex_hull, ConvexHull, HullFacet};
pub use point::{centroid, distance, squared_distance, Point};
pub use sequence::{corner_and_face_points, dedup_exact, hammersley, radical_inverse};
pub use simplex::{circumcenter, Simplex};

/// Largest supported point dimension for hulls and designs.
pub const MAX_DIM: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension {dim} is outside the supported range 1..={max}")]
    Dimension { dim: usize, max: usize },
    #[error("point has a non-finite coordinate")]
    NonFinite,
    #[error("expected points of dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty point set")]
    Empty,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("singular configuration: {0}")]
    Singular(&'static str),
    #[error("degenerate hull: {0}")]
    DegenerateHull(String),
}
