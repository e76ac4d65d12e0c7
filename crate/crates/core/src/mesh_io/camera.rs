use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat3, Rigid, Vec3};
use crate::scalar::Real;

/// Rotation residual accepted as-is.
pub const ROTATION_EXACT_TOL: f64 = 1e-6;
/// Rotation residual that is still repaired by re-orthonormalization.
pub const ROTATION_REPAIR_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Pinhole intrinsics in pixels. Pixel `(i, j)` has its center at `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics<T> {
    pub width: u32,
    pub height: u32,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Real> Intrinsics<T> {
    /// Centered principal point and a horizontal field of view in radians.
    pub fn from_fov(width: u32, height: u32, hfov: T) -> Self {
        let f = T::from_u32(width).unwrap() * T::lit(0.5) / (hfov * T::lit(0.5)).tan();
        Self {
            width,
            height,
            fx: f,
            fy: f,
            cx: (T::from_u32(width).unwrap() - T::one()) * T::lit(0.5),
            cy: (T::from_u32(height).unwrap() - T::one()) * T::lit(0.5),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidTrajectory("image size must be at least 1×1".into()));
        }
        if !(self.fx > T::zero() && self.fy > T::zero()) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidTrajectory("focal lengths must be positive and intrinsics finite".into()));
        }
        Ok(())
    }
}

/// A point expressed in a camera's image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    /// Continuous pixel coordinates.
    pub px: T,
    pub py: T,
    /// Camera-frame depth along the optical axis.
    pub z: T,
}

/// Pinhole camera; the camera frame looks down +z with +x right and +y down.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera<T> {
    pub id: i64,
    pub intrinsics: Intrinsics<T>,
    cam_to_world: Rigid<T>,
    pub split: Option<Split>,
}

impl<T: Real> Camera<T> {
    /// Validates intrinsics and the pose. Rotations within
    /// [`ROTATION_REPAIR_TOL`] of orthonormal are repaired; reflections and
    /// anything further off are rejected.
    pub fn new(id: i64, intrinsics: Intrinsics<T>, cam_to_world: Rigid<T>) -> Result<Self> {
        intrinsics.validate().map_err(|e| tag(id, e))?;
        let rot = cam_to_world.rotation;
        let det = rot.determinant();
        if !(det > T::zero()) {
            return Err(Error::InvalidTrajectory(format!("camera {id}: rotation determinant {det} (reflection or singular)")));
        }
        if !cam_to_world.translation.is_finite() {
            return Err(Error::InvalidTrajectory(format!("camera {id}: non-finite center")));
        }
        let residual = rot.orthonormality_residual();
        let rotation = if residual < T::lit(ROTATION_EXACT_TOL) {
            rot
        } else if residual < T::lit(ROTATION_REPAIR_TOL) {
            rot.orthonormalized()
                .ok_or_else(|| Error::InvalidTrajectory(format!("camera {id}: rotation not invertible")))?
        } else {
            return Err(Error::InvalidTrajectory(format!("camera {id}: pose is not rigid (residual {residual})")));
        };
        Ok(Self { id, intrinsics, cam_to_world: Rigid::new(rotation, cam_to_world.translation), split: None })
    }

    /// Camera at `eye` looking at `target`, image "up" as close to `up` as possible.
    pub fn look_at(id: i64, intrinsics: Intrinsics<T>, eye: Vec3<T>, target: Vec3<T>, up: Vec3<T>) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize()
            .ok_or_else(|| Error::InvalidArgument("look_at target equals eye".into()))?;
        let right = forward
            .cross(up)
            .try_normalize()
            .ok_or_else(|| Error::InvalidArgument("look_at direction parallel to up".into()))?;
        let down = forward.cross(right);
        Self::new(id, intrinsics, Rigid::new(Mat3::from_columns([right, down, forward]), eye))
    }

    pub fn with_split(mut self, split: Option<Split>) -> Self {
        self.split = split;
        self
    }

    pub fn cam_to_world(&self) -> &Rigid<T> {
        &self.cam_to_world
    }

    #[inline]
    pub fn center(&self) -> Vec3<T> {
        self.cam_to_world.translation
    }

    pub fn forward(&self) -> Vec3<T> {
        self.cam_to_world.rotation.column(2)
    }

    #[inline]
    pub fn world_to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        self.cam_to_world.inverse_apply_point(p)
    }

    /// Pinhole projection. `z ≤ 0` points still project (through the
    /// center), so callers must check `z` themselves.
    #[inline]
    pub fn project(&self, p: Vec3<T>) -> Projection<T> {
        let c = self.world_to_camera(p);
        let k = &self.intrinsics;
        Projection { px: k.fx * c.x / c.z + k.cx, py: k.fy * c.y / c.z + k.cy, z: c.z }
    }

    /// Image coordinates mapped to `[-1, 1]` over the full image extent:
    /// `u = 2(px + 0.5)/width − 1`, likewise for `v`.
    #[inline]
    pub fn normalized(&self, proj: &Projection<T>) -> (T, T) {
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let w = T::from_u32(self.intrinsics.width).unwrap();
        let h = T::from_u32(self.intrinsics.height).unwrap();
        (two * (proj.px + half) / w - T::one(), two * (proj.py + half) / h - T::one())
    }

    /// Positive depth and inside the image on both axes.
    #[inline]
    pub fn in_frustum(&self, p: Vec3<T>) -> Option<Projection<T>> {
        let proj = self.project(p);
        if !(proj.z > T::zero()) {
            return None;
        }
        let (u, v) = self.normalized(&proj);
        (u.abs() <= T::one() && v.abs() <= T::one()).then_some(proj)
    }

    /// Unit world direction through the center of pixel `(i, j)` and the
    /// camera-frame z gained per unit of ray length.
    #[inline]
    pub fn pixel_ray(&self, i: u32, j: u32) -> (Vec3<T>, T) {
        let k = &self.intrinsics;
        let d = Vec3::new(
            (T::from_u32(i).unwrap() - k.cx) / k.fx,
            (T::from_u32(j).unwrap() - k.cy) / k.fy,
            T::one(),
        );
        let len = d.norm();
        (self.cam_to_world.apply_vector(d / len), T::one() / len)
    }

    pub fn transformed(&self, xf: &Rigid<T>) -> Self {
        Self { cam_to_world: xf.compose(&self.cam_to_world), ..self.clone() }
    }

    /// Center mapped by `x ↦ (x − center) · scale`; orientation and intrinsics kept.
    pub fn rescaled(&self, center: Vec3<T>, scale: T) -> Self {
        let mut out = self.clone();
        out.cam_to_world.translation = (self.center() - center) * scale;
        out
    }

    pub fn to_record(&self) -> CameraRecord {
        let k = &self.intrinsics;
        CameraRecord {
            id: self.id,
            width: k.width,
            height: k.height,
            fx: k.fx.as_f64(),
            fy: k.fy.as_f64(),
            cx: k.cx.as_f64(),
            cy: k.cy.as_f64(),
            cam_to_world: self.cam_to_world.to_row_major().map(Real::as_f64),
            split: self.split,
        }
    }

    pub fn from_record(r: &CameraRecord) -> Result<Self> {
        let intrinsics = Intrinsics {
            width: r.width,
            height: r.height,
            fx: T::lit(r.fx),
            fy: T::lit(r.fy),
            cx: T::lit(r.cx),
            cy: T::lit(r.cy),
        };
        let pose = Rigid::from_row_major(&r.cam_to_world.map(T::lit));
        Ok(Self::new(r.id, intrinsics, pose)?.with_split(r.split))
    }
}

fn tag(id: i64, e: Error) -> Error {
    match e {
        Error::InvalidTrajectory(m) => Error::InvalidTrajectory(format!("camera {id}: {m}")),
        other => other,
    }
}

/// One camera in the trajectory JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub id: i64,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major 3×4 `[R | t]`.
    pub cam_to_world: [f64; 12],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub cameras: Vec<CameraRecord>,
}

/// Ordered, non-empty camera list with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    cameras: Vec<Camera<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(cameras: Vec<Camera<T>>) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::InvalidTrajectory("trajectory has no cameras".into()));
        }
        let mut seen = HashSet::new();
        if let Some(c) = cameras.iter().find(|c| !seen.insert(c.id)) {
            return Err(Error::InvalidTrajectory(format!("duplicate camera id {}", c.id)));
        }
        Ok(Self { cameras })
    }

    pub fn cameras(&self) -> &[Camera<T>] {
        &self.cameras
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn centers(&self) -> Vec<Vec3<T>> {
        self.cameras.iter().map(Camera::center).collect()
    }

    pub fn max_id(&self) -> i64 {
        self.cameras.iter().map(|c| c.id).max().unwrap_or(-1)
    }

    pub fn transformed(&self, xf: &Rigid<T>) -> Self {
        Self { cameras: self.cameras.iter().map(|c| c.transformed(xf)).collect() }
    }

    pub fn rescaled(&self, center: Vec3<T>, scale: T) -> Self {
        Self { cameras: self.cameras.iter().map(|c| c.rescaled(center, scale)).collect() }
    }

    pub fn to_record(&self) -> TrajectoryRecord {
        TrajectoryRecord { cameras: self.cameras.iter().map(Camera::to_record).collect() }
    }

    pub fn from_record(r: &TrajectoryRecord) -> Result<Self> {
        Self::new(r.cameras.iter().map(Camera::from_record).collect::<Result<_>>()?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("trajectory serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let rec: TrajectoryRecord =
            serde_json::from_str(text).map_err(|e| Error::InvalidTrajectory(format!("{}: {e}", path.display())))?;
        Self::from_record(&rec)
    }
}

pub fn load_trajectory<T: Real>(path: impl AsRef<Path>) -> Result<Trajectory<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Trajectory::from_json(&text, path)
}

pub fn save_trajectory<T: Real>(traj: &Trajectory<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, traj.to_json()).map_err(|e| Error::io(path, e))
}
