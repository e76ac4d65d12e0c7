use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh_io::CameraRecord;
use crate::raycast::{encode_pfm, render_depth, Bvh, DepthMap};
use crate::scalar::Real;

use super::ViewPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthManifestEntry {
    pub rank: usize,
    pub file: String,
    pub camera: CameraRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthManifest {
    pub views: Vec<DepthManifestEntry>,
}

pub fn depth_file_name(rank: usize, id: i64) -> String {
    format!("view_{rank:04}_id{id}.pfm")
}

/// Renders scaffold depth for every planned view.
pub fn render_plan_depths<T: Real>(plan: &ViewPlan<T>, bvh: &Bvh<T>) -> Vec<DepthMap<T>> {
    plan.views.iter().map(|c| render_depth(bvh, c)).collect()
}

/// Writes one PFM per planned view into `dir` plus `manifest.json`, whose
/// paths are relative to `dir`.
pub fn export_virtual_depths<T: Real>(plan: &ViewPlan<T>, bvh: &Bvh<T>, dir: impl AsRef<Path>) -> Result<DepthManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut views = Vec::with_capacity(plan.len());
    for (rank, cam) in plan.views.iter().enumerate() {
        let file = depth_file_name(rank, cam.id);
        let path = dir.join(&file);
        std::fs::write(&path, encode_pfm(&render_depth(bvh, cam))).map_err(|e| Error::io(&path, e))?;
        views.push(DepthManifestEntry { rank, file, camera: cam.to_record() });
    }
    let manifest = DepthManifest { views };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
