use crate::geom::{Aabb, Vec3};
use crate::mesh_io::TriangleMesh;
use crate::raycast::triangle::{closest_point_on_triangle, intersect_triangle};
use crate::scalar::Real;

/// Maximum triangles per leaf.
pub const LEAF_SIZE: usize = 4;
/// Ray epsilon relative to the scene's bounding-box diagonal.
pub const T_MIN_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<T> {
    pub t: T,
    pub triangle: u32,
}

#[derive(Debug, Clone)]
struct Node<T> {
    bbox: Aabb<T>,
    /// Leaf: first index into `order`. Inner: index of the right child
    /// (the left child is always the next node).
    offset: u32,
    /// Zero for inner nodes.
    count: u32,
}

/// Bounding-volume hierarchy over a mesh's triangles, built by median
/// split of triangle centroids along the longest centroid-bounds axis.
#[derive(Debug, Clone)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    order: Vec<u32>,
    triangles: Vec<[Vec3<T>; 3]>,
    t_min: T,
}

impl<T: Real> Bvh<T> {
    pub fn build(mesh: &TriangleMesh<T>) -> Self {
        Self::from_triangles((0..mesh.triangle_count()).map(|i| mesh.triangle(i)).collect())
    }

    /// Triangle ids are positions in `triangles`.
    pub fn from_triangles(triangles: Vec<[Vec3<T>; 3]>) -> Self {
        let centroids: Vec<Vec3<T>> = triangles.iter().map(|t| (t[0] + t[1] + t[2]) / T::lit(3.0)).collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            build_node(&triangles, &centroids, &mut order, 0, &mut nodes);
        }
        let diag = nodes.first().map_or(T::zero(), |n: &Node<T>| n.bbox.diagonal());
        let t_min = T::lit(T_MIN_FRACTION) * diag;
        Self { nodes, order, triangles, t_min }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, id: u32) -> &[Vec3<T>; 3] {
        &self.triangles[id as usize]
    }

    pub fn bbox(&self) -> Aabb<T> {
        self.nodes.first().map_or_else(Aabb::empty, |n| n.bbox)
    }

    /// `1e-6 ×` the bounding-box diagonal.
    pub fn t_min(&self) -> T {
        self.t_min
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Structural self-check: every triangle in exactly one leaf, leaves no
    /// larger than [`LEAF_SIZE`], parent boxes containing their children.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = vec![0u32; self.triangles.len()];
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let Some(node) = self.nodes.get(ni) else {
                return if self.triangles.is_empty() { Ok(()) } else { Err("missing root".into()) };
            };
            if node.count > 0 {
                if node.count as usize > LEAF_SIZE {
                    return Err(format!("leaf {ni} holds {} triangles", node.count));
                }
                for &t in &self.order[node.offset as usize..(node.offset + node.count) as usize] {
                    seen[t as usize] += 1;
                    let tb = Aabb::from_points(&self.triangles[t as usize]);
                    if !node.bbox.contains_box(&tb) {
                        return Err(format!("leaf {ni} box misses triangle {t}"));
                    }
                }
            } else {
                for child in [ni + 1, node.offset as usize] {
                    if !node.bbox.contains_box(&self.nodes[child].bbox) {
                        return Err(format!("node {ni} does not contain child {child}"));
                    }
                    stack.push(child);
                }
            }
        }
        match seen.iter().position(|&c| c != 1) {
            Some(t) => Err(format!("triangle {t} appears in {} leaves", seen[t])),
            None => Ok(()),
        }
    }

    /// Nearest intersection with `t_min() < t < t_max`; ties go to the
    /// lower triangle id.
    pub fn first_hit(&self, origin: Vec3<T>, dir: Vec3<T>, t_max: T) -> Option<Hit<T>> {
        self.first_hit_in(origin, dir, self.t_min, t_max)
    }

    pub fn first_hit_in(&self, origin: Vec3<T>, dir: Vec3<T>, t_min: T, t_max: T) -> Option<Hit<T>> {
        let mut best: Option<Hit<T>> = None;
        let inv = dir.map(|c| T::one() / c);
        self.traverse(origin, inv, t_min, t_max, |tri, limit| {
            if let Some(t) = intersect_triangle(origin, dir, &self.triangles[tri as usize], t_min, t_max) {
                let better = match best {
                    None => true,
                    Some(b) => t < b.t || (t == b.t && tri < b.triangle),
                };
                if better {
                    best = Some(Hit { t, triangle: tri });
                    *limit = t;
                }
            }
            false
        });
        best
    }

    /// True if anything intersects the open interval `(t_min, t_max)`.
    pub fn any_hit(&self, origin: Vec3<T>, dir: Vec3<T>, t_min: T, t_max: T) -> bool {
        if t_max <= t_min {
            return false;
        }
        let inv = dir.map(|c| T::one() / c);
        let mut found = false;
        self.traverse(origin, inv, t_min, t_max, |tri, _| {
            found = intersect_triangle(origin, dir, &self.triangles[tri as usize], t_min, t_max).is_some();
            found
        });
        found
    }

    /// Number of triangle crossings beyond `t_min()`.
    pub fn count_hits(&self, origin: Vec3<T>, dir: Vec3<T>) -> usize {
        let inv = dir.map(|c| T::one() / c);
        let mut n = 0;
        self.traverse(origin, inv, self.t_min, T::infinity(), |tri, _| {
            n += intersect_triangle(origin, dir, &self.triangles[tri as usize], self.t_min, T::infinity()).is_some() as usize;
            false
        });
        n
    }

    /// Visits leaf triangles whose boxes overlap `[t_min, limit]`. The
    /// visitor may shrink `limit`; returning `true` stops traversal.
    fn traverse(&self, origin: Vec3<T>, inv: Vec3<T>, t_min: T, t_max: T, mut visit: impl FnMut(u32, &mut T) -> bool) {
        if self.nodes.is_empty() {
            return;
        }
        let mut limit = t_max;
        let mut stack: Vec<(usize, T)> = Vec::with_capacity(64);
        if let Some((t0, _)) = self.nodes[0].bbox.ray_interval(origin, inv, t_min, limit) {
            stack.push((0, t0));
        }
        while let Some((ni, entry)) = stack.pop() {
            if entry > limit {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                let start = node.offset as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    if visit(tri, &mut limit) {
                        return;
                    }
                }
                continue;
            }
            let (l, r) = (ni + 1, node.offset as usize);
            let hl = self.nodes[l].bbox.ray_interval(origin, inv, t_min, limit).map(|i| (l, i.0));
            let hr = self.nodes[r].bbox.ray_interval(origin, inv, t_min, limit).map(|i| (r, i.0));
            match (hl, hr) {
                (Some(a), Some(b)) => {
                    let (near, far) = if b.1 < a.1 { (b, a) } else { (a, b) };
                    stack.push(far);
                    stack.push(near);
                }
                (Some(a), None) | (None, Some(a)) => stack.push(a),
                (None, None) => {}
            }
        }
    }

    /// Distance from `p` to the nearest triangle (`+∞` for an empty tree).
    pub fn distance_to(&self, p: Vec3<T>) -> T {
        let mut best = T::infinity();
        self.nearest_within(p, &mut best, false);
        best.sqrt()
    }

    /// True if some triangle lies strictly closer than `radius`.
    pub fn within_distance(&self, p: Vec3<T>, radius: T) -> bool {
        let mut best = radius * radius;
        self.nearest_within(p, &mut best, true)
    }

    /// Shrinks `best_sq` to the squared distance of the closest triangle.
    fn nearest_within(&self, p: Vec3<T>, best_sq: &mut T, stop_early: bool) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut found = false;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bbox.distance_squared(p) >= *best_sq {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    let q = closest_point_on_triangle(p, &self.triangles[tri as usize]);
                    let d = q.distance_squared(p);
                    if d < *best_sq {
                        *best_sq = d;
                        found = true;
                        if stop_early {
                            return true;
                        }
                    }
                }
            } else {
                let (l, r) = (ni + 1, node.offset as usize);
                let (dl, dr) = (self.nodes[l].bbox.distance_squared(p), self.nodes[r].bbox.distance_squared(p));
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        found
    }
}

fn build_node<T: Real>(
    triangles: &[[Vec3<T>; 3]],
    centroids: &[Vec3<T>],
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<Node<T>>,
) -> usize {
    let bbox = order.iter().fold(Aabb::empty(), |b, &t| Aabb::from_points(&triangles[t as usize]).union(&b));
    let index = nodes.len();
    nodes.push(Node { bbox, offset: offset as u32, count: order.len() as u32 });
    if order.len() <= LEAF_SIZE {
        return index;
    }

    let cbox = Aabb::from_points(order.iter().map(|&t| &centroids[t as usize]));
    let axis = cbox.longest_axis();
    let mid = order.len() / 2;
    // (coordinate, id) is a total order, so the split is deterministic.
    order.select_nth_unstable_by(mid, |&a, &b| {
        let (ca, cb) = (centroids[a as usize][axis], centroids[b as usize][axis]);
        ca.partial_cmp(&cb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build_node(triangles, centroids, left, offset, nodes);
    let r = build_node(triangles, centroids, right, offset + mid, nodes);
    nodes[index].offset = r as u32;
    nodes[index].count = 0;
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    /// Axis-aligned cube of half-extent `h` centered at the origin.
    pub(crate) fn cube(h: f64) -> TriangleMesh<f64> {
        let mut verts = Vec::new();
        for i in 0..8 {
            verts.push(v(if i & 1 == 0 { -h } else { h }, if i & 2 == 0 { -h } else { h }, if i & 4 == 0 { -h } else { h }));
        }
        let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
        let tris = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
        TriangleMesh::from_parts(verts, tris, None).unwrap().mesh
    }

    fn brute(bvh: &Bvh<f64>, o: Vec3<f64>, d: Vec3<f64>, t_max: f64) -> Option<Hit<f64>> {
        let mut best: Option<Hit<f64>> = None;
        for id in 0..bvh.triangle_count() as u32 {
            if let Some(t) = intersect_triangle(o, d, bvh.triangle(id), bvh.t_min(), t_max) {
                if best.map_or(true, |b| t < b.t) {
                    best = Some(Hit { t, triangle: id });
                }
            }
        }
        best
    }

    #[test]
    fn single_triangle_is_one_leaf() {
        let mesh = TriangleMesh::from_parts(vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)], vec![[0, 1, 2]], None)
            .unwrap()
            .mesh;
        let bvh = Bvh::build(&mesh);
        assert_eq!(bvh.node_count(), 1);
        bvh.validate().unwrap();
    }

    #[test]
    fn cube_hits_from_outside_and_inside() {
        let bvh = Bvh::build(&cube(0.5));
        bvh.validate().unwrap();
        let hit = bvh.first_hit(v(0.0, 0.0, 2.0), v(0.0, 0.0, -1.0), f64::INFINITY).unwrap();
        assert!((hit.t - 1.5).abs() < 1e-15);
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let hit = bvh.first_hit(Vec3::zero(), Vec3::axis(axis) * sign, f64::INFINITY).unwrap();
                assert!((hit.t - 0.5).abs() < 1e-15);
            }
        }
        // Parallel to the top face plane and outside the cube.
        assert!(bvh.first_hit(v(-2.0, 0.0, 0.7), v(1.0, 0.0, 0.0), f64::INFINITY).is_none());
        assert_eq!(bvh.count_hits(v(-2.0, 0.1, 0.2), v(1.0, 0.0, 0.0)), 2);
        assert_eq!(bvh.count_hits(v(0.0, 0.1, 0.2), v(1.0, 0.0, 0.0)), 1);
    }

    #[test]
    fn edge_ties_prefer_lower_triangle_id() {
        // The cube's top face diagonal: both triangles are hit at the same t.
        let bvh = Bvh::build(&cube(0.5));
        let hit = bvh.first_hit(v(0.1, 0.1, 2.0), v(0.0, 0.0, -1.0), f64::INFINITY).unwrap();
        let ids: Vec<u32> = (0..12)
            .filter(|&id| intersect_triangle(v(0.1, 0.1, 2.0), v(0.0, 0.0, -1.0), bvh.triangle(id), 0.0, 10.0) == Some(hit.t))
            .collect();
        assert!(ids.len() == 2);
        assert_eq!(hit.triangle, ids[0]);
    }

    #[test]
    fn matches_brute_force_on_random_soup() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut r = || rng.random::<f64>();
        let mut tris = Vec::new();
        for _ in 0..300 {
            let c = v(r(), r(), r());
            tris.push([c, c + v(r(), r(), r()) * 0.1, c + v(r(), r(), r()) * 0.1]);
        }
        let bvh = Bvh::from_triangles(tris);
        bvh.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let o = v(rng.random(), rng.random(), rng.random()) * 1.4 - v(0.2, 0.2, 0.2);
            let d = v(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5).normalize();
            assert_eq!(bvh.first_hit(o, d, f64::INFINITY), brute(&bvh, o, d, f64::INFINITY));
            assert_eq!(bvh.any_hit(o, d, bvh.t_min(), 0.3), brute(&bvh, o, d, 0.3).is_some());
        }
    }

    #[test]
    fn empty_tree_misses_everything() {
        let bvh = Bvh::<f64>::from_triangles(Vec::new());
        assert!(bvh.first_hit(Vec3::zero(), v(1.0, 0.0, 0.0), 1.0).is_none());
        assert_eq!(bvh.distance_to(Vec3::zero()), f64::INFINITY);
        bvh.validate().unwrap();
    }

    #[test]
    fn point_distance_queries() {
        let bvh = Bvh::build(&cube(0.5));
        assert!((bvh.distance_to(v(0.0, 0.0, 0.1)) - 0.4).abs() < 1e-15);
        assert!((bvh.distance_to(v(2.0, 0.0, 0.0)) - 1.5).abs() < 1e-15);
        assert!(bvh.within_distance(v(0.0, 0.0, 0.45), 0.1));
        assert!(!bvh.within_distance(v(0.0, 0.0, 0.0), 0.4));
    }
}
