use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Rigid, Vec3};
use crate::mesh_io::ply::{Encoding, Element, Ply, ScalarType};
use crate::scalar::Real;

/// Relative area (× bbox diagonal²) at or below which a triangle is dropped.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

/// Indexed triangle mesh with unit per-vertex normals.
///
/// Construction drops degenerate triangles and fills in any missing normal
/// with the area-weighted average of the incident face normals.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vec3<T>>,
}

/// A mesh together with what was discarded while building it.
#[derive(Debug, Clone)]
pub struct LoadedMesh<T> {
    pub mesh: TriangleMesh<T>,
    pub dropped_degenerate: usize,
}

impl<T: Real> TriangleMesh<T> {
    /// Validates and assembles a mesh. `normals`, when given, must have one
    /// entry per vertex; zero or non-finite entries are recomputed.
    pub fn from_parts(
        vertices: Vec<Vec3<T>>,
        triangles: Vec<[u32; 3]>,
        normals: Option<Vec<Vec3<T>>>,
    ) -> Result<LoadedMesh<T>> {
        let n = vertices.len();
        if let Some(bad) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {bad} is not finite")));
        }
        if let Some((i, t)) = triangles.iter().enumerate().find(|(_, t)| t.iter().any(|&v| v as usize >= n)) {
            return Err(Error::InvalidMesh(format!("triangle {i} references vertex {:?} of {n}", t)));
        }
        if let Some(ns) = &normals {
            if ns.len() != n {
                return Err(Error::InvalidMesh(format!("{} normals for {n} vertices", ns.len())));
            }
        }

        let diag = Aabb::from_points(&vertices).diagonal();
        let min_area = T::lit(DEGENERATE_AREA_FRACTION) * diag * diag;
        let before = triangles.len();
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                (b - a).cross(c - a).norm() * T::lit(0.5) > min_area
            })
            .collect();
        let dropped_degenerate = before - triangles.len();

        let mut accum = vec![Vec3::zero(); n];
        for t in &triangles {
            let [a, b, c] = t.map(|i| vertices[i as usize]);
            // |cross| = 2·area, so summing raw cross products area-weights.
            let face = (b - a).cross(c - a);
            for &i in t {
                accum[i as usize] += face;
            }
        }
        let given = normals.unwrap_or_default();
        let normals = (0..n)
            .map(|i| {
                given
                    .get(i)
                    .and_then(|&v| {
                        // Keep already-unit normals bit-exact so files round-trip.
                        if (v.norm_squared() - T::one()).abs() <= T::lit(4.0) * T::epsilon() {
                            Some(v)
                        } else {
                            v.try_normalize()
                        }
                    })
                    .or_else(|| accum[i].try_normalize())
                    .unwrap_or_else(|| Vec3::axis(2))
            })
            .collect();

        Ok(LoadedMesh { mesh: Self { vertices, triangles, normals }, dropped_degenerate })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn triangle(&self, i: usize) -> [Vec3<T>; 3] {
        self.triangles[i].map(|v| self.vertices[v as usize])
    }

    /// Unit normal by the right-hand rule over the stored winding.
    pub fn face_normal(&self, i: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(c - a).normalize()
    }

    pub fn triangle_area(&self, i: usize) -> T {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(c - a).norm() * T::lit(0.5)
    }

    pub fn total_area(&self) -> T {
        (0..self.triangle_count()).map(|i| self.triangle_area(i)).sum()
    }

    /// Bounds of the vertices referenced by at least one triangle.
    pub fn bbox(&self) -> Aabb<T> {
        self.triangles
            .iter()
            .flatten()
            .fold(Aabb::empty(), |b, &v| b.grow(self.vertices[v as usize]))
    }

    pub fn transformed(&self, xf: &Rigid<T>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| xf.apply_point(v)).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.iter().map(|&n| xf.apply_vector(n)).collect(),
        }
    }

    /// Applies `x ↦ (x − center) · scale` with `scale > 0`; normals unchanged.
    pub fn rescaled(&self, center: Vec3<T>, scale: T) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| (v - center) * scale).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.clone(),
        }
    }

    /// Concatenates meshes, reindexing triangles.
    pub fn merged(parts: &[Self]) -> Self {
        let mut out = Self { vertices: Vec::new(), triangles: Vec::new(), normals: Vec::new() };
        for p in parts {
            let base = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&p.vertices);
            out.normals.extend_from_slice(&p.normals);
            out.triangles.extend(p.triangles.iter().map(|t| t.map(|i| i + base)));
        }
        out
    }

    /// Encodes as PLY; coordinates are written as `double` for `f64` meshes
    /// and `float` otherwise so a binary round trip is lossless.
    pub fn to_ply(&self, encoding: Encoding) -> Ply {
        let ty = if std::mem::size_of::<T>() == 8 { ScalarType::F64 } else { ScalarType::F32 };
        let col = |f: &dyn Fn(&Vec3<T>) -> T, src: &[Vec3<T>]| src.iter().map(|v| f(v).as_f64()).collect::<Vec<_>>();
        let mut ply = Ply::new(encoding);
        ply.elements.push(
            Element::new("vertex", self.vertices.len())
                .with_scalar("x", ty, col(&|v| v.x, &self.vertices))
                .with_scalar("y", ty, col(&|v| v.y, &self.vertices))
                .with_scalar("z", ty, col(&|v| v.z, &self.vertices))
                .with_scalar("nx", ty, col(&|v| v.x, &self.normals))
                .with_scalar("ny", ty, col(&|v| v.y, &self.normals))
                .with_scalar("nz", ty, col(&|v| v.z, &self.normals)),
        );
        ply.elements.push(Element::new("face", self.triangles.len()).with_list(
            "vertex_indices",
            ScalarType::U8,
            ScalarType::U32,
            self.triangles.iter().map(|t| t.iter().map(|&i| i as f64).collect()).collect(),
        ));
        ply
    }
}

/// Reads a PLY (ASCII or binary little-endian) or OBJ mesh, by extension.
pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<LoadedMesh<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match extension(path).as_deref() {
        Some("ply") => mesh_from_ply(&Ply::parse(&bytes, path)?, path),
        Some("obj") => {
            let text = String::from_utf8_lossy(&bytes);
            parse_obj(&text, path)
        }
        other => Err(Error::UnsupportedFormat(format!("mesh extension {:?}", other.unwrap_or("")))),
    }
}

/// Writes binary little-endian PLY (`.ply`) — the only mesh format we emit.
pub fn save_mesh<T: Real>(mesh: &TriangleMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if extension(path).as_deref() != Some("ply") {
        return Err(Error::UnsupportedFormat(format!("cannot write mesh to {}", path.display())));
    }
    std::fs::write(path, mesh.to_ply(Encoding::BinaryLittleEndian).to_bytes()).map_err(|e| Error::io(path, e))
}

pub(crate) fn extension(path: &Path) -> Option<String> {
    path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase)
}

pub fn mesh_from_ply<T: Real>(ply: &Ply, path: &Path) -> Result<LoadedMesh<T>> {
    let vert = ply.element("vertex").ok_or_else(|| Error::parse(path, "no `vertex` element"))?;
    let coord = |name: &str| vert.scalar(name).ok_or_else(|| Error::parse(path, format!("vertex has no `{name}`")));
    let (xs, ys, zs) = (coord("x")?, coord("y")?, coord("z")?);
    let vertices = (0..vert.count).map(|i| Vec3::from_f64([xs[i], ys[i], zs[i]])).collect();

    let normals = match (vert.scalar("nx"), vert.scalar("ny"), vert.scalar("nz")) {
        (Some(nx), Some(ny), Some(nz)) => Some((0..vert.count).map(|i| Vec3::from_f64([nx[i], ny[i], nz[i]])).collect()),
        _ => None,
    };

    let mut triangles = Vec::new();
    if let Some(face) = ply.element("face") {
        let lists = face
            .list("vertex_indices")
            .or_else(|| face.list("vertex_index"))
            .ok_or_else(|| Error::parse(path, "face has no `vertex_indices` list"))?;
        for (i, poly) in lists.iter().enumerate() {
            let idx: Vec<u32> = poly
                .iter()
                .map(|&v| {
                    if v >= 0.0 && v <= u32::MAX as f64 {
                        Ok(v as u32)
                    } else {
                        Err(Error::InvalidMesh(format!("face {i} has index {v}")))
                    }
                })
                .collect::<Result<_>>()?;
            fan(&idx, &mut triangles).map_err(|m| Error::parse(path, format!("face {i}: {m}")))?;
        }
    }
    TriangleMesh::from_parts(vertices, triangles, normals)
}

fn fan(poly: &[u32], out: &mut Vec<[u32; 3]>) -> std::result::Result<(), String> {
    if poly.len() < 3 {
        return Err(format!("polygon with {} vertices", poly.len()));
    }
    out.extend((1..poly.len() - 1).map(|k| [poly[0], poly[k], poly[k + 1]]));
    Ok(())
}

/// Geometry-only OBJ reader: `v`, `vn` and `f` records; everything else is
/// skipped. Per-corner normals are collapsed onto their vertex.
pub fn parse_obj<T: Real>(text: &str, path: &Path) -> Result<LoadedMesh<T>> {
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut obj_normals: Vec<Vec3<T>> = Vec::new();
    let mut corner_normals: Vec<Option<usize>> = Vec::new();
    let mut triangles = Vec::new();

    let floats = |toks: &[&str], lineno: usize| -> Result<[f64; 3]> {
        if toks.len() < 3 {
            return Err(Error::parse(path, format!("line {lineno}: expected 3 coordinates")));
        }
        let mut out = [0.0; 3];
        for (o, t) in out.iter_mut().zip(toks) {
            *o = t.parse().map_err(|_| Error::parse(path, format!("line {lineno}: bad number `{t}`")))?;
        }
        Ok(out)
    };
    // OBJ indices are 1-based; negative values count back from the end.
    let resolve = |tok: &str, len: usize, lineno: usize| -> Result<usize> {
        let v: i64 = tok.parse().map_err(|_| Error::parse(path, format!("line {lineno}: bad index `{tok}`")))?;
        let idx = if v > 0 { v - 1 } else { len as i64 + v };
        if v == 0 || idx < 0 || idx as usize >= len {
            return Err(Error::InvalidMesh(format!("line {lineno}: index {v} out of range")));
        }
        Ok(idx as usize)
    };

    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = line.split('#').next().unwrap_or("");
        let mut toks = line.split_whitespace();
        let Some(tag) = toks.next() else { continue };
        let rest: Vec<&str> = toks.collect();
        match tag {
            "v" => {
                vertices.push(Vec3::from_f64(floats(&rest, lineno)?));
                corner_normals.push(None);
            }
            "vn" => obj_normals.push(Vec3::from_f64(floats(&rest, lineno)?)),
            "f" => {
                let mut poly = Vec::with_capacity(rest.len());
                for corner in &rest {
                    let mut parts = corner.split('/');
                    let v = resolve(parts.next().unwrap_or(""), vertices.len(), lineno)?;
                    if let Some(n) = parts.nth(1).filter(|s| !s.is_empty()) {
                        corner_normals[v] = Some(resolve(n, obj_normals.len(), lineno)?);
                    }
                    poly.push(v as u32);
                }
                fan(&poly, &mut triangles).map_err(|m| Error::parse(path, format!("line {lineno}: {m}")))?;
            }
            _ => {}
        }
    }

    let normals = corner_normals
        .iter()
        .any(Option::is_some)
        .then(|| corner_normals.iter().map(|n| n.map_or(Vec3::zero(), |k| obj_normals[k])).collect());
    TriangleMesh::from_parts(vertices, triangles, normals)
}
