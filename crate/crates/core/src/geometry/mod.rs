//! Meshes, crack sets on mesh edges, and their metric primitives.

mod crack;
pub mod grid;
mod mesh;
pub mod mesh_io;

pub use crack::{
    connected_components, default_hausdorff_resolution, dist_point_to_crack, h1_diff, h1_measure, hausdorff,
    CrackSet, HausdorffValue,
};
pub use mesh::{build_mesh, point_segment_distance, Edge, EdgeSelector, EdgeTag, Mesh, Point2};
