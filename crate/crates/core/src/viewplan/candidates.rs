//! Random viewpoints in free space, each turned toward the most features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::{Camera, Intrinsics, Trajectory};
use crate::raycast::{shadow_blocked, Bvh, DEFAULT_EPS_OCC_FRACTION};
use crate::scalar::Real;

use super::FeatureCloud;

pub const DEFAULT_CANDIDATE_COUNT: usize = 5000;
pub const DEFAULT_CLEARANCE_FRACTION: f64 = 0.02;
pub const DEFAULT_YAW_COUNT: usize = 8;
/// Give up once fewer than one in this many positions is accepted.
pub const MAX_REJECTIONS_PER_ACCEPT: usize = 1000;

const ATTEMPT_BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateOptions<T> {
    /// Minimum distance to the surface, as a fraction of the bbox diagonal.
    pub clearance_fraction: T,
    pub yaw_count: usize,
    /// Intrinsics of every candidate; `None` copies the first training camera.
    pub intrinsics: Option<Intrinsics<T>>,
    /// Occlusion tolerance for feature visibility; `None` means 0.005 × diagonal.
    pub eps_occ: Option<T>,
    /// Also require an unobstructed segment to at least one training
    /// camera center, which rejects enclosed pockets the parity test accepts.
    pub require_line_of_sight: bool,
}

impl<T: Real> Default for CandidateOptions<T> {
    fn default() -> Self {
        Self {
            clearance_fraction: T::lit(DEFAULT_CLEARANCE_FRACTION),
            yaw_count: DEFAULT_YAW_COUNT,
            intrinsics: None,
            eps_occ: None,
            require_line_of_sight: false,
        }
    }
}

/// True if a `+x` ray from `p` crosses the surface an odd number of times,
/// i.e. `p` is enclosed by an inward-facing shell and outside any closed
/// object within it.
pub fn in_free_space<T: Real>(bvh: &Bvh<T>, p: Vec3<T>) -> bool {
    bvh.count_hits(p, Vec3::new(T::one(), T::zero(), T::zero())) % 2 == 1
}

/// Horizontal viewing direction for yaw index `k` of `count`.
fn yaw_direction<T: Real>(k: usize, count: usize) -> Vec3<T> {
    let a = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(count);
    Vec3::new(a.cos(), a.sin(), T::zero())
}

/// Camera at `eye` looking horizontally at yaw `k`, `+z` up.
pub fn yaw_camera<T: Real>(id: i64, k: Intrinsics<T>, eye: Vec3<T>, yaw: usize, yaw_count: usize) -> Result<Camera<T>> {
    Camera::look_at(id, k, eye, eye + yaw_direction(yaw, yaw_count), Vec3::new(T::zero(), T::zero(), T::one()))
}

/// Draws `n` candidate viewpoints uniformly in the scene box, keeping
/// positions in free space with the required clearance. Each keeps the yaw
/// (pitch 0) that sees the most features, ties to the lower yaw.
///
/// Candidate ids continue after the largest training id.
pub fn sample_candidates<T: Real>(
    bvh: &Bvh<T>,
    training: &Trajectory<T>,
    features: &FeatureCloud<T>,
    n: usize,
    seed: u64,
    opts: &CandidateOptions<T>,
) -> Result<Vec<Camera<T>>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if bvh.is_empty() {
        return Err(Error::InvalidMesh("cannot sample viewpoints in an empty scene".into()));
    }
    if opts.yaw_count == 0 {
        return Err(Error::InvalidArgument("yaw count must be at least 1".into()));
    }
    let bbox = bvh.bbox();
    let diag = bbox.diagonal();
    let clearance = opts.clearance_fraction * diag;
    let eps = opts.eps_occ.unwrap_or_else(|| T::lit(DEFAULT_EPS_OCC_FRACTION) * diag);
    let intr = opts.intrinsics.unwrap_or(training.cameras()[0].intrinsics);
    let centers = training.centers();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut attempts = 0usize;
    let limit = MAX_REJECTIONS_PER_ACCEPT.saturating_mul(n);
    while positions.len() < n {
        if attempts >= limit {
            return Err(Error::Degenerate(format!(
                "accepted {} of {attempts} candidate positions; free space is too small",
                positions.len()
            )));
        }
        let block: Vec<Vec3<T>> = (0..ATTEMPT_BLOCK)
            .map(|_| {
                let u = Vec3::new(T::lit(rng.random()), T::lit(rng.random()), T::lit(rng.random()));
                bbox.min + Vec3::new(u.x * bbox.extent().x, u.y * bbox.extent().y, u.z * bbox.extent().z)
            })
            .collect();
        let ok: Vec<bool> = block
            .par_iter()
            .map(|&p| {
                in_free_space(bvh, p)
                    && !bvh.within_distance(p, clearance)
                    && (!opts.require_line_of_sight || centers.iter().any(|&c| !shadow_blocked(bvh, p, c, T::zero())))
            })
            .collect();
        for (p, good) in block.into_iter().zip(ok) {
            attempts += 1;
            if good && positions.len() < n {
                positions.push(p);
            }
        }
    }

    let first_id = training.max_id() + 1;
    positions
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let seen: Vec<Vec3<T>> =
                features.points().iter().copied().filter(|&f| !shadow_blocked(bvh, p, f, eps)).collect();
            let mut best = (0usize, 0usize);
            for yaw in 0..opts.yaw_count {
                let cam = yaw_camera(0, intr, p, yaw, opts.yaw_count)?;
                let score = seen.iter().filter(|&&f| cam.in_frustum(f).is_some()).count();
                if score > best.1 {
                    best = (yaw, score);
                }
            }
            yaw_camera(first_id + i as i64, intr, p, best.0, opts.yaw_count)
        })
        .collect()
}
