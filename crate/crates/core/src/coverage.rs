//! Per-surface-point coverage weights: cosine-foreshortened, inverse-square
//! observation strength accumulated over every camera that sees the point.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rigid, Vec3};
use crate::mesh_io::ply::{Element, Encoding, Ply, ScalarType};
use crate::mesh_io::{Camera, SurfaceSamples, Trajectory};
use crate::raycast::{render_depth, visible, Bvh, Interpolation, Occlusion, DEFAULT_EPS_OCC_FRACTION};
use crate::scalar::Real;

/// Distance exponent of the per-camera term `n̂·(c − x) / ‖c − x‖^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageForm {
    /// `q = 3`: cosine times inverse-square distance.
    #[default]
    Cube,
    /// `q = 2`: unnormalized dot product over squared distance.
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilityBackend {
    /// Render each camera's depth map and compare projected depths.
    DepthMap(Interpolation),
    /// Exact segment test against the BVH.
    ShadowRay,
}

impl Default for VisibilityBackend {
    fn default() -> Self {
        Self::DepthMap(Interpolation::Bilinear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageOptions<T> {
    pub form: CoverageForm,
    pub backend: VisibilityBackend,
    /// Absolute occlusion tolerance; `None` means 0.005 × bbox diagonal.
    pub eps_occ: Option<T>,
}

impl<T: Real> Default for CoverageOptions<T> {
    fn default() -> Self {
        Self { form: CoverageForm::Cube, backend: VisibilityBackend::default(), eps_occ: None }
    }
}

impl<T: Real> CoverageOptions<T> {
    pub fn resolved_eps_occ(&self, bvh: &Bvh<T>) -> T {
        self.eps_occ.unwrap_or_else(|| T::lit(DEFAULT_EPS_OCC_FRACTION) * bvh.bbox().diagonal())
    }
}

/// Unnormalized coverage weights, one per surface sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageField<T> {
    samples: SurfaceSamples<T>,
    weights: Vec<T>,
    visible_counts: Vec<u32>,
    /// Visible terms dropped because the camera sat exactly on the sample.
    pub skipped_terms: usize,
}

impl<T: Real> CoverageField<T> {
    /// Pairs samples with precomputed weights (e.g. read back from disk).
    /// Visible-camera counts are unknown and set to 1 where `w > 0`.
    pub fn from_weights(samples: SurfaceSamples<T>, weights: Vec<T>) -> Result<Self> {
        if weights.len() != samples.len() {
            return Err(Error::InvalidArgument(format!("{} weights for {} samples", weights.len(), samples.len())));
        }
        if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument("coverage weights must be finite and non-negative".into()));
        }
        let visible_counts = weights.iter().map(|&w| u32::from(w > T::zero())).collect();
        Ok(Self { samples, weights, visible_counts, skipped_terms: 0 })
    }

    pub fn samples(&self) -> &SurfaceSamples<T> {
        &self.samples
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn visible_counts(&self) -> &[u32] {
        &self.visible_counts
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.weights.is_empty() {
            return 0.0;
        }
        self.weights.iter().filter(|&&w| w == T::zero()).count() as f64 / self.weights.len() as f64
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn transformed(&self, xf: &Rigid<T>) -> Self {
        Self { samples: self.samples.transformed(xf), ..self.clone() }
    }

    /// Maps sample positions into another frame; weights are kept as-is.
    pub fn rescaled(&self, center: Vec3<T>, scale: T) -> Self {
        Self { samples: self.samples.rescaled(center, scale), ..self.clone() }
    }

    pub fn to_record(&self) -> CoverageRecord {
        CoverageRecord {
            points: self.samples.points().iter().map(|p| p.to_f64()).collect(),
            normals: self.samples.normals().iter().map(|n| n.to_f64()).collect(),
            weights: self.weights.iter().map(|w| w.as_f64()).collect(),
        }
    }

    pub fn from_record(r: &CoverageRecord) -> Result<Self> {
        let samples = SurfaceSamples::from_points_normals(
            r.points.iter().copied().map(Vec3::from_f64).collect(),
            r.normals.iter().copied().map(Vec3::from_f64).collect(),
        )?;
        Self::from_weights(samples, r.weights.iter().map(|&w| T::lit(w)).collect())
    }

    /// Point cloud with `nx/ny/nz` and a `weight` property.
    pub fn to_ply(&self) -> Ply {
        let pts = self.samples.points();
        let nrm = self.samples.normals();
        let col = |f: &dyn Fn(usize) -> T| (0..self.len()).map(|i| f(i).as_f64()).collect::<Vec<_>>();
        let mut ply = Ply::new(Encoding::BinaryLittleEndian);
        ply.elements.push(
            Element::new("vertex", self.len())
                .with_scalar("x", ScalarType::F32, col(&|i| pts[i].x))
                .with_scalar("y", ScalarType::F32, col(&|i| pts[i].y))
                .with_scalar("z", ScalarType::F32, col(&|i| pts[i].z))
                .with_scalar("nx", ScalarType::F32, col(&|i| nrm[i].x))
                .with_scalar("ny", ScalarType::F32, col(&|i| nrm[i].y))
                .with_scalar("nz", ScalarType::F32, col(&|i| nrm[i].z))
                .with_scalar("weight", ScalarType::F32, col(&|i| self.weights[i])),
        );
        ply
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&self.to_record()).expect("coverage serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rec: CoverageRecord = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        Self::from_record(&rec)
    }

    pub fn save_ply(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_ply().to_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub points: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Contribution of one visible camera at `c` to the sample `(x, n)`, or
/// `None` when the camera coincides with the sample.
#[inline]
pub fn coverage_term<T: Real>(x: Vec3<T>, n: Vec3<T>, c: Vec3<T>, form: CoverageForm) -> Option<T> {
    let d = c - x;
    let r2 = d.norm_squared();
    if r2 == T::zero() {
        return None;
    }
    let denom = match form {
        CoverageForm::Cube => r2 * r2.sqrt(),
        CoverageForm::Square => r2,
    };
    Some(n.dot(d) / denom)
}

/// Cameras per depth-map batch; bounds memory in depth-map mode.
const CAMERA_BATCH: usize = 8;

/// Accumulates coverage weights over all cameras of `trajectory`.
///
/// Each sample's sum runs over cameras in ascending id order, so results
/// do not depend on trajectory order or thread count.
pub fn accumulate_coverage<T: Real>(
    samples: &SurfaceSamples<T>,
    trajectory: &Trajectory<T>,
    bvh: &Bvh<T>,
    opts: &CoverageOptions<T>,
) -> CoverageField<T> {
    let eps = opts.resolved_eps_occ(bvh);
    let mut cams: Vec<&Camera<T>> = trajectory.cameras().iter().collect();
    cams.sort_by_key(|c| c.id);

    let n = samples.len();
    let mut weights = vec![T::zero(); n];
    let mut counts = vec![0u32; n];
    let mut skipped = vec![0usize; n];

    for batch in cams.chunks(CAMERA_BATCH) {
        let maps: Vec<_> = match opts.backend {
            VisibilityBackend::DepthMap(_) => batch.iter().map(|c| Some(render_depth(bvh, c))).collect(),
            VisibilityBackend::ShadowRay => vec![None; batch.len()],
        };
        weights
            .par_iter_mut()
            .zip(counts.par_iter_mut())
            .zip(skipped.par_iter_mut())
            .enumerate()
            .for_each(|(i, ((w, cnt), skip))| {
                let x = samples.points()[i];
                let nrm = samples.normals()[i];
                for (cam, map) in batch.iter().zip(&maps) {
                    let occ = match (opts.backend, map) {
                        (VisibilityBackend::DepthMap(interp), Some(m)) => Occlusion::DepthMap(m, interp),
                        _ => Occlusion::ShadowRay,
                    };
                    if !visible(bvh, cam, x, Some(nrm), occ, eps) {
                        continue;
                    }
                    match coverage_term(x, nrm, cam.center(), opts.form) {
                        Some(term) => {
                            *w = *w + term;
                            *cnt += 1;
                        }
                        None => *skip += 1,
                    }
                }
            });
    }

    let skipped_terms = skipped.iter().sum();
    if skipped_terms > 0 {
        log::warn!("skipped {skipped_terms} coverage terms with a camera exactly on the surface");
    }
    CoverageField { samples: samples.clone(), weights, visible_counts: counts, skipped_terms }
}
