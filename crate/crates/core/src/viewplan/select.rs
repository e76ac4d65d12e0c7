use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::{Camera, CameraRecord, Trajectory};
use crate::scalar::Real;

use super::SimilarityMatrix;

pub const DEFAULT_SELECT_COUNT: usize = 100;
pub const DEFAULT_KAPPA: f64 = 0.1;

/// `‖c_v − c_s‖² + κ(1 − a / max_a)`; the similarity term is the constant
/// `κ` when no two views share a feature.
pub fn view_distance<T: Real>(cv: Vec3<T>, cs: Vec3<T>, a: u32, max_a: u32, kappa: T) -> T {
    let sim = if max_a == 0 { T::one() } else { T::one() - T::from_u32(a).unwrap() / T::from_u32(max_a).unwrap() };
    cv.distance_squared(cs) + kappa * sim
}

/// Virtual viewpoints in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPlan<T> {
    pub views: Vec<Camera<T>>,
    /// Min view distance to the selected set at the moment of selection.
    pub min_distances: Vec<T>,
    /// Position of each view in the candidate list.
    pub candidate_indices: Vec<usize>,
    pub kappa: T,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannedCameraRecord {
    #[serde(flatten)]
    pub camera: CameraRecord,
    pub selected_rank: usize,
    pub min_distance: f64,
    pub candidate_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewPlanRecord {
    pub cameras: Vec<PlannedCameraRecord>,
    pub kappa: f64,
    pub seed: u64,
}

impl<T: Real> ViewPlan<T> {
    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn to_record(&self) -> ViewPlanRecord {
        ViewPlanRecord {
            cameras: self
                .views
                .iter()
                .enumerate()
                .map(|(rank, c)| PlannedCameraRecord {
                    camera: c.to_record(),
                    selected_rank: rank,
                    min_distance: self.min_distances[rank].as_f64(),
                    candidate_index: self.candidate_indices[rank],
                })
                .collect(),
            kappa: self.kappa.as_f64(),
            seed: self.seed,
        }
    }

    pub fn from_record(r: &ViewPlanRecord) -> Result<Self> {
        let mut cams: Vec<&PlannedCameraRecord> = r.cameras.iter().collect();
        cams.sort_by_key(|c| c.selected_rank);
        Ok(Self {
            views: cams.iter().map(|c| Camera::from_record(&c.camera)).collect::<Result<_>>()?,
            min_distances: cams.iter().map(|c| T::lit(c.min_distance)).collect(),
            candidate_indices: cams.iter().map(|c| c.candidate_index).collect(),
            kappa: T::lit(r.kappa),
            seed: r.seed,
        })
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rec: ViewPlanRecord = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        Self::from_record(&rec)
    }
}

/// Greedy max-min selection: starting from the training cameras, repeatedly
/// add the candidate farthest (in view distance) from everything selected
/// so far. Ties go to the lower candidate index.
///
/// `sim` must index the training cameras first, in trajectory order, then
/// the candidates.
pub fn select_views<T: Real>(
    candidates: &[Camera<T>],
    training: &Trajectory<T>,
    sim: &SimilarityMatrix,
    kappa: T,
    count: usize,
    seed: u64,
) -> Result<ViewPlan<T>> {
    if count > candidates.len() {
        return Err(Error::InvalidArgument(format!("{count} views requested from {} candidates", candidates.len())));
    }
    let nt = training.len();
    if sim.len() != nt + candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "similarity matrix covers {} views, expected {}",
            sim.len(),
            nt + candidates.len()
        )));
    }
    let max_a = sim.max();
    let cc: Vec<Vec3<T>> = candidates.iter().map(|c| c.center()).collect();
    let tc = training.centers();
    let mut min_d: Vec<T> = (0..candidates.len())
        .map(|v| (0..nt).map(|s| view_distance(cc[v], tc[s], sim.get(nt + v, s), max_a, kappa)).fold(T::infinity(), T::min))
        .collect();
    let mut taken = vec![false; candidates.len()];
    let mut plan = ViewPlan { views: Vec::new(), min_distances: Vec::new(), candidate_indices: Vec::new(), kappa, seed };
    for _ in 0..count {
        let mut best: Option<usize> = None;
        for v in 0..candidates.len() {
            if !taken[v] && best.map_or(true, |b| min_d[v] > min_d[b]) {
                best = Some(v);
            }
        }
        let b = best.expect("count <= candidates");
        taken[b] = true;
        plan.views.push(candidates[b].clone());
        plan.min_distances.push(min_d[b]);
        plan.candidate_indices.push(b);
        for v in 0..candidates.len() {
            if !taken[v] {
                min_d[v] = min_d[v].min(view_distance(cc[v], cc[b], sim.get(nt + v, nt + b), max_a, kappa));
            }
        }
    }
    Ok(plan)
}
