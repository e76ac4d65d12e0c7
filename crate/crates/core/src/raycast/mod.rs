//! Ray queries against the scaffold: BVH, point visibility and depth maps.

mod bvh;
mod depth;
mod triangle;
mod visibility;

pub use bvh::{Bvh, Hit, LEAF_SIZE, T_MIN_FRACTION};
pub use depth::{encode_pfm, load_depth, render_depth, save_depth, DepthMap, Interpolation};
pub use triangle::{closest_point_on_triangle, intersect_triangle};
pub use visibility::{shadow_blocked, visible, Occlusion, DEFAULT_EPS_OCC_FRACTION};

use crate::mesh_io::TriangleMesh;
use crate::scalar::Real;

pub fn build_bvh<T: Real>(mesh: &TriangleMesh<T>) -> Bvh<T> {
    Bvh::build(mesh)
}
