use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rigid, Vec3};
use crate::scalar::Real;

/// How a basis set came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FpsInit,
    Optimized,
    Trajectory,
    Grid,
    Perturbed,
    Exhaustive,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FpsInit => "fps-init",
            Self::Optimized => "optimized",
            Self::Trajectory => "trajectory",
            Self::Grid => "grid",
            Self::Perturbed => "perturbed",
            Self::Exhaustive => "exhaustive",
        }
    }
}

/// Positions of the representation bases, optionally grouped into cores.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet<T> {
    positions: Vec<Vec3<T>>,
    cores: Option<Cores<T>>,
    pub provenance: Provenance,
    /// Full-batch energy per iteration, when produced by the optimizer.
    pub energy_history: Vec<T>,
}

/// K-means grouping of basis positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Cores<T> {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec3<T>>,
}

impl<T: Real> BasisSet<T> {
    pub fn new(positions: Vec<Vec3<T>>, provenance: Provenance) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("basis set must not be empty".into()));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("basis {i} has a non-finite coordinate")));
        }
        Ok(Self { positions, cores: None, provenance, energy_history: Vec::new() })
    }

    pub fn positions(&self) -> &[Vec3<T>] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn cores(&self) -> Option<&Cores<T>> {
        self.cores.as_ref()
    }

    /// Attaches core labels; every label must index `centers`.
    pub fn with_cores(mut self, labels: Vec<usize>, centers: Vec<Vec3<T>>) -> Result<Self> {
        if labels.len() != self.positions.len() {
            return Err(Error::InvalidArgument(format!("{} core labels for {} bases", labels.len(), self.len())));
        }
        if labels.iter().any(|&l| l >= centers.len()) {
            return Err(Error::InvalidArgument("core label out of range".into()));
        }
        self.cores = Some(Cores { labels, centers });
        Ok(self)
    }

    pub fn with_positions(&self, positions: Vec<Vec3<T>>, provenance: Provenance) -> Result<Self> {
        Self::new(positions, provenance)
    }

    pub fn transformed(&self, xf: &Rigid<T>) -> Self {
        let mut out = self.clone();
        out.positions.iter_mut().for_each(|p| *p = xf.apply_point(*p));
        if let Some(c) = out.cores.as_mut() {
            c.centers.iter_mut().for_each(|p| *p = xf.apply_point(*p));
        }
        out
    }

    /// Applies `p ↦ (p − center)·scale`. Energies are left untouched.
    pub fn rescaled(&self, center: Vec3<T>, scale: T) -> Self {
        let mut out = self.clone();
        out.positions.iter_mut().for_each(|p| *p = (*p - center) * scale);
        if let Some(c) = out.cores.as_mut() {
            c.centers.iter_mut().for_each(|p| *p = (*p - center) * scale);
        }
        out
    }

    pub fn to_record(&self) -> BasisSetRecord {
        BasisSetRecord {
            positions: self.positions.iter().map(|p| p.to_f64()).collect(),
            core_labels: self.cores.as_ref().map(|c| c.labels.clone()).unwrap_or_default(),
            core_centers: self.cores.as_ref().map(|c| c.centers.iter().map(|p| p.to_f64()).collect()).unwrap_or_default(),
            provenance: self.provenance,
            energy_history: self.energy_history.iter().map(|e| e.as_f64()).collect(),
        }
    }

    pub fn from_record(r: &BasisSetRecord) -> Result<Self> {
        let mut out = Self::new(r.positions.iter().copied().map(Vec3::from_f64).collect(), r.provenance)?;
        if !r.core_labels.is_empty() {
            out = out.with_cores(r.core_labels.clone(), r.core_centers.iter().copied().map(Vec3::from_f64).collect())?;
        }
        out.energy_history = r.energy_history.iter().map(|&e| T::lit(e)).collect();
        Ok(out)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rec: BasisSetRecord = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        Self::from_record(&rec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSetRecord {
    pub positions: Vec<[f64; 3]>,
    #[serde(default)]
    pub core_labels: Vec<usize>,
    #[serde(default)]
    pub core_centers: Vec<[f64; 3]>,
    pub provenance: Provenance,
    #[serde(default)]
    pub energy_history: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(BasisSet::<f64>::new(vec![], Provenance::Grid).is_err());
        assert!(BasisSet::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)], Provenance::Grid).is_err());
    }

    #[test]
    fn record_round_trip() {
        let b = BasisSet::new(vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 0.0)], Provenance::Optimized)
            .unwrap()
            .with_cores(vec![0, 0], vec![Vec3::new(0.0, 1.25, 1.5)])
            .unwrap();
        let rec = b.to_record();
        let text = serde_json::to_string(&rec).unwrap();
        assert!(text.contains("\"provenance\":\"optimized\""));
        let back: BasisSet<f64> = BasisSet::from_record(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn core_labels_validated() {
        let b = BasisSet::<f64>::new(vec![Vec3::zero()], Provenance::Grid).unwrap();
        assert!(b.clone().with_cores(vec![1], vec![Vec3::zero()]).is_err());
        assert!(b.with_cores(vec![0, 0], vec![Vec3::zero()]).is_err());
    }
}
