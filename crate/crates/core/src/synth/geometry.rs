//! Axis-aligned building blocks: subdivided rectangles and boxes.

use crate::geom::Vec3;
use crate::mesh_io::TriangleMesh;
use crate::scalar::Real;

/// Collects rectangles into one mesh. Each rectangle owns its vertices so
/// per-vertex normals stay exact at creases.
#[derive(Debug, Default)]
pub(crate) struct MeshBuilder<T> {
    vertices: Vec<Vec3<T>>,
    normals: Vec<Vec3<T>>,
    triangles: Vec<[u32; 3]>,
    pub subdivisions: u32,
}

impl<T: Real> MeshBuilder<T> {
    pub fn new(subdivisions: u32) -> Self {
        Self { vertices: Vec::new(), normals: Vec::new(), triangles: Vec::new(), subdivisions: subdivisions.max(1) }
    }

    /// Rectangle `o + s·u + t·v`, `s, t ∈ [0, 1]`, facing `normal`.
    pub fn rect(&mut self, o: Vec3<T>, u: Vec3<T>, v: Vec3<T>, normal: Vec3<T>) {
        let (u, v) = if u.cross(v).dot(normal) > T::zero() { (u, v) } else { (v, u) };
        let n = self.subdivisions;
        let base = self.vertices.len() as u32;
        let step = T::one() / T::from_u32(n).unwrap();
        for j in 0..=n {
            for i in 0..=n {
                let (s, t) = (T::from_u32(i).unwrap() * step, T::from_u32(j).unwrap() * step);
                self.vertices.push(o + u * s + v * t);
                self.normals.push(normal);
            }
        }
        let idx = |i: u32, j: u32| base + j * (n + 1) + i;
        for j in 0..n {
            for i in 0..n {
                self.triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                self.triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }

    /// Axis-aligned rectangle on the plane `axis = at`, spanning `lo..hi`
    /// in the other two coordinates, facing `sign` along `axis`.
    pub fn axis_rect(&mut self, axis: usize, at: f64, lo: [f64; 2], hi: [f64; 2], sign: f64) {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut o = [0.0; 3];
        o[axis] = at;
        o[a] = lo[0];
        o[b] = lo[1];
        let mut u = [0.0; 3];
        u[a] = hi[0] - lo[0];
        let mut v = [0.0; 3];
        v[b] = hi[1] - lo[1];
        let mut n = [0.0; 3];
        n[axis] = sign;
        self.rect(Vec3::from_f64(o), Vec3::from_f64(u), Vec3::from_f64(v), Vec3::from_f64(n));
    }

    /// Six (or five, without the bottom) faces of `[min, max]`, normals
    /// pointing out of the box or, with `inward`, into it.
    pub fn add_box(&mut self, min: [f64; 3], max: [f64; 3], inward: bool, bottom: bool) {
        let s = if inward { -1.0 } else { 1.0 };
        for axis in 0..3 {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let lo = [min[a], min[b]];
            let hi = [max[a], max[b]];
            if axis != 2 || bottom {
                self.axis_rect(axis, min[axis], lo, hi, -s);
            }
            self.axis_rect(axis, max[axis], lo, hi, s);
        }
    }

    pub fn finish(self) -> TriangleMesh<T> {
        TriangleMesh::from_parts(self.vertices, self.triangles, Some(self.normals)).expect("generated mesh is valid").mesh
    }
}

/// Closed box `[min, max]` with 12 triangles; `inward` flips the normals
/// toward the interior.
pub fn box_mesh<T: Real>(min: Vec3<T>, max: Vec3<T>, inward: bool) -> TriangleMesh<T> {
    let mut b = MeshBuilder::new(1);
    b.add_box(min.to_f64(), max.to_f64(), inward, true);
    b.finish()
}
