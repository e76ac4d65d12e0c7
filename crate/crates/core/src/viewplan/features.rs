use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rigid, Vec3};
use crate::mesh_io::ply::{Element, Encoding, Ply, ScalarType};
use crate::mesh_io::{extension, Trajectory};
use crate::scalar::Real;

/// Triangulated feature points, optionally with the training cameras
/// that observed each one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCloud<T> {
    points: Vec<Vec3<T>>,
    observers: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observers: Option<Vec<Vec<i64>>>,
}

impl<T: Real> FeatureCloud<T> {
    pub fn new(points: Vec<Vec3<T>>, observers: Option<Vec<Vec<i64>>>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("feature {i} has a non-finite coordinate")));
        }
        if let Some(obs) = &observers {
            if obs.len() != points.len() {
                return Err(Error::InvalidArgument(format!("{} observer lists for {} features", obs.len(), points.len())));
            }
        }
        Ok(Self { points, observers })
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn observers(&self) -> Option<&[Vec<i64>]> {
        self.observers.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks that every observer id names a camera of `trajectory`.
    pub fn check_observers(&self, trajectory: &Trajectory<T>) -> Result<()> {
        let Some(obs) = &self.observers else { return Ok(()) };
        let ids: HashSet<i64> = trajectory.cameras().iter().map(|c| c.id).collect();
        for (i, list) in obs.iter().enumerate() {
            if let Some(bad) = list.iter().find(|id| !ids.contains(id)) {
                return Err(Error::InvalidArgument(format!("feature {i} lists unknown camera {bad}")));
            }
        }
        Ok(())
    }

    pub fn transformed(&self, xf: &Rigid<T>) -> Self {
        Self { points: self.points.iter().map(|&p| xf.apply_point(p)).collect(), observers: self.observers.clone() }
    }

    pub fn rescaled(&self, center: Vec3<T>, scale: T) -> Self {
        Self { points: self.points.iter().map(|&p| (p - center) * scale).collect(), observers: self.observers.clone() }
    }

    pub fn to_record(&self) -> FeatureRecord {
        FeatureRecord { points: self.points.iter().map(|p| p.to_f64()).collect(), observers: self.observers.clone() }
    }

    pub fn from_record(r: &FeatureRecord) -> Result<Self> {
        Self::new(r.points.iter().copied().map(Vec3::from_f64).collect(), r.observers.clone())
    }

    pub fn to_ply(&self) -> Ply {
        let col = |k: usize| self.points.iter().map(|p| p[k].as_f64()).collect();
        let mut ply = Ply::new(Encoding::BinaryLittleEndian);
        ply.elements.push(
            Element::new("vertex", self.len())
                .with_scalar("x", ScalarType::F64, col(0))
                .with_scalar("y", ScalarType::F64, col(1))
                .with_scalar("z", ScalarType::F64, col(2)),
        );
        ply
    }
}

/// Reads a feature cloud from `.json` or a `.ply` point cloud.
pub fn load_features<T: Real>(path: impl AsRef<Path>) -> Result<FeatureCloud<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match extension(path).as_deref() {
        Some("json") => {
            let rec: FeatureRecord = serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))?;
            FeatureCloud::from_record(&rec)
        }
        Some("ply") => {
            let ply = Ply::parse(&bytes, path)?;
            let v = ply.element("vertex").ok_or_else(|| Error::parse(path, "no vertex element"))?;
            let get = |n: &str| v.scalar(n).ok_or_else(|| Error::parse(path, format!("vertex has no {n}")));
            let (x, y, z) = (get("x")?, get("y")?, get("z")?);
            let pts = (0..v.count).map(|i| Vec3::new(T::lit(x[i]), T::lit(y[i]), T::lit(z[i]))).collect();
            FeatureCloud::new(pts, None)
        }
        other => Err(Error::UnsupportedFormat(format!("feature file extension {:?}", other.unwrap_or("")))),
    }
}

pub fn save_features<T: Real>(features: &FeatureCloud<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match extension(path).as_deref() {
        Some("json") => serde_json::to_vec(&features.to_record()).expect("features serialize"),
        Some("ply") => features.to_ply().to_bytes(),
        other => return Err(Error::UnsupportedFormat(format!("feature file extension {:?}", other.unwrap_or("")))),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
