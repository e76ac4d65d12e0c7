//! Synthetic indoor scenes: room shells with inward normals, clutter
//! boxes, a forward-looking walk-through trajectory and surface features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::Vec3;
use crate::mesh_io::{sample_surface, Camera, Intrinsics, Trajectory, TriangleMesh};
use crate::scalar::Real;
use crate::viewplan::FeatureCloud;

use super::geometry::MeshBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// 6 × 4 × 3 m room with two clutter boxes.
    SingleRoom,
    /// Two 6 × 4 × 3 m rooms joined by a door in a 0.2 m partition.
    TwoRoom,
    /// 2 m wide L-shaped corridor, 8 m per leg, 2.6 m high.
    LCorridor,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [SceneKind::SingleRoom, SceneKind::TwoRoom, SceneKind::LCorridor];

    pub fn name(self) -> &'static str {
        match self {
            Self::SingleRoom => "single_room",
            Self::TwoRoom => "two_room",
            Self::LCorridor => "l_corridor",
        }
    }
}

impl std::str::FromStr for SceneKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown scene '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    /// Every rectangle is split into `n × n` quads.
    pub subdivisions: u32,
    pub camera_count: usize,
    pub feature_count: usize,
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view in degrees.
    pub hfov_deg: f64,
    pub clutter: bool,
    /// Uniform position jitter of the cameras (m).
    pub jitter: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            subdivisions: 1,
            camera_count: 120,
            feature_count: 2000,
            width: 160,
            height: 120,
            hfov_deg: 90.0,
            clutter: true,
            jitter: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene<T> {
    pub kind: SceneKind,
    pub mesh: TriangleMesh<T>,
    pub trajectory: Trajectory<T>,
    pub features: FeatureCloud<T>,
}

pub const EYE_HEIGHT: f64 = 1.5;
/// Downward tilt of the viewing direction (rise over run).
const LOOK_DOWN: f64 = 0.15;

/// Door opening of the two-room partition: `y` range and height.
pub const DOOR_Y: [f64; 2] = [1.5, 2.5];
pub const DOOR_HEIGHT: f64 = 2.2;
pub const PARTITION_X: [f64; 2] = [6.0, 6.2];

fn single_room(b: &mut MeshBuilder<f64>, clutter: bool) -> Vec<[f64; 2]> {
    b.add_box([0.0, 0.0, 0.0], [6.0, 4.0, 3.0], true, true);
    if clutter {
        b.add_box([2.2, 1.6, 0.0], [3.2, 2.4, 0.8], false, false);
        b.add_box([5.3, 3.3, 0.0], [5.8, 3.8, 1.8], false, false);
    }
    vec![[1.0, 1.0], [5.0, 1.0], [5.0, 3.0], [1.0, 3.0], [1.0, 1.2]]
}

fn two_room(b: &mut MeshBuilder<f64>, clutter: bool) -> Vec<[f64; 2]> {
    let (h, w) = (3.0, 4.0);
    let [x0, x1] = PARTITION_X;
    let [d0, d1] = DOOR_Y;
    for (lo, hi) in [(0.0, x0), (x1, x1 + 6.0)] {
        b.axis_rect(2, 0.0, [lo, 0.0], [hi, w], 1.0);
        b.axis_rect(2, h, [lo, 0.0], [hi, w], -1.0);
        b.axis_rect(1, 0.0, [0.0, lo], [h, hi], 1.0);
        b.axis_rect(1, w, [0.0, lo], [h, hi], -1.0);
    }
    b.axis_rect(0, 0.0, [0.0, 0.0], [w, h], 1.0);
    b.axis_rect(0, x1 + 6.0, [0.0, 0.0], [w, h], -1.0);
    // Partition faces around the door, one per room.
    for (x, s) in [(x0, -1.0), (x1, 1.0)] {
        b.axis_rect(0, x, [0.0, 0.0], [d0, h], s);
        b.axis_rect(0, x, [d1, 0.0], [w, h], s);
        b.axis_rect(0, x, [d0, DOOR_HEIGHT], [d1, h], s);
    }
    // Door tunnel.
    b.axis_rect(2, 0.0, [x0, d0], [x1, d1], 1.0);
    b.axis_rect(2, DOOR_HEIGHT, [x0, d0], [x1, d1], -1.0);
    b.axis_rect(1, d0, [0.0, x0], [DOOR_HEIGHT, x1], 1.0);
    b.axis_rect(1, d1, [0.0, x0], [DOOR_HEIGHT, x1], -1.0);
    if clutter {
        b.add_box([2.5, 3.35, 0.0], [3.5, 3.85, 0.9], false, false);
        b.add_box([10.5, 0.4, 0.0], [11.5, 1.2, 1.0], false, false);
    }
    vec![[1.0, 1.0], [5.0, 1.0], [5.0, 3.0], [1.0, 3.0], [1.0, 2.0], [5.0, 2.0], [7.2, 2.0], [8.6, 2.0]]
}

fn l_corridor(b: &mut MeshBuilder<f64>, clutter: bool) -> Vec<[f64; 2]> {
    let h = 2.6;
    for z in [(0.0, 1.0), (h, -1.0)] {
        b.axis_rect(2, z.0, [0.0, 0.0], [8.0, 2.0], z.1);
        b.axis_rect(2, z.0, [6.0, 2.0], [8.0, 8.0], z.1);
    }
    b.axis_rect(1, 0.0, [0.0, 0.0], [h, 8.0], 1.0);
    b.axis_rect(0, 0.0, [0.0, 0.0], [2.0, h], 1.0);
    b.axis_rect(1, 2.0, [0.0, 0.0], [h, 6.0], -1.0);
    b.axis_rect(0, 6.0, [2.0, 0.0], [8.0, h], 1.0);
    b.axis_rect(1, 8.0, [0.0, 6.0], [h, 8.0], -1.0);
    b.axis_rect(0, 8.0, [0.0, 0.0], [8.0, h], -1.0);
    if clutter {
        b.add_box([3.0, 1.5, 0.0], [3.6, 1.85, 0.7], false, false);
    }
    vec![[0.8, 1.0], [7.0, 1.0], [7.0, 7.2]]
}

/// Scene mesh and the floor-plan polyline the trajectory follows.
pub fn scene_mesh<T: Real>(kind: SceneKind, params: &SceneParams) -> (TriangleMesh<T>, Vec<[f64; 2]>) {
    let mut b = MeshBuilder::<f64>::new(params.subdivisions);
    let path = match kind {
        SceneKind::SingleRoom => single_room(&mut b, params.clutter),
        SceneKind::TwoRoom => two_room(&mut b, params.clutter),
        SceneKind::LCorridor => l_corridor(&mut b, params.clutter),
    };
    let m = b.finish();
    let cast = TriangleMesh::from_parts(
        m.vertices().iter().map(|v| v.cast()).collect(),
        m.triangles().to_vec(),
        Some(m.normals().iter().map(|n| n.cast()).collect()),
    )
    .expect("cast mesh is valid")
    .mesh;
    (cast, path)
}

/// Point at arc-length fraction `s ∈ [0, 1]` along a polyline, with the
/// unit tangent there.
fn along(path: &[[f64; 2]], s: f64) -> ([f64; 2], [f64; 2]) {
    let seg: Vec<f64> = path.windows(2).map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt()).collect();
    let total: f64 = seg.iter().sum();
    let mut left = s.clamp(0.0, 1.0) * total;
    for (i, &len) in seg.iter().enumerate() {
        if left <= len || i + 1 == seg.len() {
            let t = (left / len).min(1.0);
            let (a, b) = (path[i], path[i + 1]);
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            return (p, [(b[0] - a[0]) / len, (b[1] - a[1]) / len]);
        }
        left -= len;
    }
    unreachable!("path has at least one segment")
}

/// Builds one of the synthetic scenes. Fully determined by its inputs.
pub fn make_scene<T: Real>(kind: SceneKind, params: &SceneParams, seed: u64) -> Result<Scene<T>> {
    let (mesh, path) = scene_mesh::<T>(kind, params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Intrinsics::from_fov(params.width, params.height, T::lit(params.hfov_deg.to_radians()));
    let n = params.camera_count.max(1);
    let mut cams = Vec::with_capacity(n);
    for i in 0..n {
        let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        let (p, t) = along(&path, s);
        let mut j = || params.jitter * (2.0 * rng.random::<f64>() - 1.0);
        let eye = [p[0] + j(), p[1] + j(), EYE_HEIGHT + j()];
        let target = [eye[0] + t[0], eye[1] + t[1], eye[2] - LOOK_DOWN];
        cams.push(Camera::look_at(
            i as i64,
            k,
            Vec3::from_f64(eye),
            Vec3::from_f64(target),
            Vec3::new(T::zero(), T::zero(), T::one()),
        )?);
    }
    let trajectory = Trajectory::new(cams)?;
    let features = if params.feature_count == 0 {
        FeatureCloud::new(Vec::new(), None)?
    } else {
        FeatureCloud::new(sample_surface(&mesh, params.feature_count, seed ^ 0x9e37_79b9_7f4a_7c15)?.points().to_vec(), None)?
    };
    Ok(Scene { kind, mesh, trajectory, features })
}
