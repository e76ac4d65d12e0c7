use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Rigid, Vec3};
use crate::mesh_io::TriangleMesh;
use crate::scalar::Real;

/// Default number of surface samples drawn from a scaffold.
pub const DEFAULT_SAMPLE_COUNT: usize = 100_000;

/// Oriented surface points, each standing in for an equal share of area.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSamples<T> {
    points: Vec<Vec3<T>>,
    normals: Vec<Vec3<T>>,
    areas: Vec<T>,
    triangle_ids: Vec<u32>,
}

impl<T: Real> SurfaceSamples<T> {
    /// Checks lengths, finiteness and unit normals (renormalizing within 1e-3).
    pub fn from_parts(points: Vec<Vec3<T>>, normals: Vec<Vec3<T>>, areas: Vec<T>, triangle_ids: Vec<u32>) -> Result<Self> {
        let n = points.len();
        if normals.len() != n || areas.len() != n || triangle_ids.len() != n {
            return Err(Error::InvalidMesh(format!(
                "sample arrays disagree: {n} points, {} normals, {} areas, {} ids",
                normals.len(),
                areas.len(),
                triangle_ids.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh("non-finite sample point".into()));
        }
        if areas.iter().any(|&a| !(a > T::zero()) || !a.is_finite()) {
            return Err(Error::InvalidMesh("sample areas must be positive".into()));
        }
        let normals = normals
            .into_iter()
            .enumerate()
            .map(|(i, nv)| {
                let len = nv.norm();
                if (len - T::one()).abs() < T::lit(1e-3) {
                    Ok(nv / len)
                } else {
                    Err(Error::InvalidMesh(format!("sample normal {i} has length {len}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { points, normals, areas, triangle_ids })
    }

    /// Samples with unit area and no source triangle (`u32::MAX`).
    pub fn from_points_normals(points: Vec<Vec3<T>>, normals: Vec<Vec3<T>>) -> Result<Self> {
        let n = points.len();
        Self::from_parts(points, normals, vec![T::one(); n], vec![u32::MAX; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    pub fn triangle_ids(&self) -> &[u32] {
        &self.triangle_ids
    }

    pub fn bbox(&self) -> Aabb<T> {
        Aabb::from_points(&self.points)
    }

    pub fn transformed(&self, xf: &Rigid<T>) -> Self {
        Self {
            points: self.points.iter().map(|&p| xf.apply_point(p)).collect(),
            normals: self.normals.iter().map(|&n| xf.apply_vector(n)).collect(),
            ..self.clone()
        }
    }

    /// `x ↦ (x − center) · scale`; areas scale by `scale²`.
    pub fn rescaled(&self, center: Vec3<T>, scale: T) -> Self {
        Self {
            points: self.points.iter().map(|&p| (p - center) * scale).collect(),
            areas: self.areas.iter().map(|&a| a * scale * scale).collect(),
            ..self.clone()
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            areas: indices.iter().map(|&i| self.areas[i]).collect(),
            triangle_ids: indices.iter().map(|&i| self.triangle_ids[i]).collect(),
        }
    }
}

/// Draws `count` area-weighted samples: a triangle with probability
/// proportional to its area, then a uniform barycentric point. Normals are
/// interpolated from the vertex normals and renormalized.
pub fn sample_surface<T: Real>(mesh: &TriangleMesh<T>, count: usize, seed: u64) -> Result<SurfaceSamples<T>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if mesh.is_empty() {
        return Err(Error::InvalidMesh("cannot sample an empty mesh".into()));
    }

    // Cumulative areas in f64 so the search is stable for f32 meshes too.
    let mut cdf = Vec::with_capacity(mesh.triangle_count());
    let mut acc = 0.0_f64;
    for i in 0..mesh.triangle_count() {
        acc += mesh.triangle_area(i).as_f64();
        cdf.push(acc);
    }
    let total = acc;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let share = T::lit(total / count as f64);
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random::<f64>() * total;
        let tri = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let (a, b, c) = (T::lit(1.0 - s), T::lit(s * (1.0 - r2)), T::lit(s * r2));

        let [p0, p1, p2] = mesh.triangle(tri);
        let [n0, n1, n2] = mesh.triangles()[tri].map(|v| mesh.normals()[v as usize]);
        points.push(p0 * a + p1 * b + p2 * c);
        normals.push((n0 * a + n1 * b + n2 * c).try_normalize().unwrap_or_else(|| mesh.face_normal(tri)));
        ids.push(tri as u32);
    }
    Ok(SurfaceSamples { points, normals, areas: vec![share; count], triangle_ids: ids })
}
