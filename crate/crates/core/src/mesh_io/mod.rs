//! Scaffold meshes, camera trajectories and surface sampling.

mod camera;
mod frame;
mod mesh;
pub mod ply;
mod sample;

pub use camera::{
    load_trajectory, save_trajectory, Camera, CameraRecord, Intrinsics, Projection, Split, Trajectory,
    TrajectoryRecord, ROTATION_EXACT_TOL, ROTATION_REPAIR_TOL,
};
pub use frame::SceneFrame;
pub use mesh::{load_mesh, mesh_from_ply, parse_obj, save_mesh, LoadedMesh, TriangleMesh, DEGENERATE_AREA_FRACTION};
pub(crate) use mesh::extension;
pub use sample::{sample_surface, SurfaceSamples, DEFAULT_SAMPLE_COUNT};
