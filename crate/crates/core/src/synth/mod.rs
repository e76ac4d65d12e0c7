//! Synthetic indoor scenes and brute-force reference oracles.

mod geometry;
mod oracles;
mod scenes;

pub use geometry::box_mesh;
pub use oracles::{brute_force_first_hit, brute_force_visibility, exhaustive_placement};
pub use scenes::{make_scene, scene_mesh, Scene, SceneKind, SceneParams, DOOR_HEIGHT, DOOR_Y, EYE_HEIGHT, PARTITION_X};
