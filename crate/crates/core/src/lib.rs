//! Geometry-adaptive pre-processing for local radiance-field representations.
//!
//! Given a triangle-mesh scaffold of an indoor scene and the posed cameras
//! that observed it, this crate
//!
//! * accumulates per-surface-point observation strength ([`coverage`]),
//! * places a fixed budget of representation bases by minimizing a
//!   coverage energy ([`placement`]),
//! * picks virtual viewpoints that reach under-observed space and renders
//!   scaffold depth for them ([`viewplan`], [`raycast`]),
//! * and evaluates depth agreement with a robust loss ([`losses`]).
//!
//! All numerics are generic over [`Real`]; the aliases below fix the
//! scalar to `f64`.

pub mod coverage;
pub mod error;
pub mod geom;
pub mod losses;
pub mod mesh_io;
pub mod placement;
pub mod raycast;
pub mod scalar;
pub mod synth;
pub mod viewplan;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

pub type Vec3 = geom::Vec3<f64>;
pub type Aabb = geom::Aabb<f64>;
pub type Rigid = geom::Rigid<f64>;
pub type Mat3 = geom::Mat3<f64>;
pub type TriangleMesh = mesh_io::TriangleMesh<f64>;
pub type SurfaceSamples = mesh_io::SurfaceSamples<f64>;
pub type Camera = mesh_io::Camera<f64>;
pub type Intrinsics = mesh_io::Intrinsics<f64>;
pub type Trajectory = mesh_io::Trajectory<f64>;
pub type SceneFrame = mesh_io::SceneFrame<f64>;
pub type Bvh = raycast::Bvh<f64>;
pub type DepthMap = raycast::DepthMap<f64>;
pub type CoverageField = coverage::CoverageField<f64>;
pub type BasisSet = placement::BasisSet<f64>;
pub type PlacementConfig = placement::PlacementConfig<f64>;
pub type FeatureCloud = viewplan::FeatureCloud<f64>;
pub type ViewPlan = viewplan::ViewPlan<f64>;
