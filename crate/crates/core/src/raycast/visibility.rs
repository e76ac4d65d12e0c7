use crate::geom::Vec3;
use crate::mesh_io::Camera;
use crate::raycast::{Bvh, DepthMap, Interpolation};
use crate::scalar::Real;

/// Default occlusion tolerance as a fraction of the bounding-box diagonal.
pub const DEFAULT_EPS_OCC_FRACTION: f64 = 0.005;

/// How occlusion is decided once a point is known to be in the frustum.
#[derive(Debug, Clone, Copy)]
pub enum Occlusion<'a, T> {
    /// Compare the point's z with a pre-rendered depth map of the same camera.
    DepthMap(&'a DepthMap<T>, Interpolation),
    /// Cast a segment from the camera center toward the point.
    ShadowRay,
}

/// Point-to-camera visibility: inside the image on both axes with positive
/// depth, not occluded beyond `eps_occ`, and (when a normal is given)
/// front-facing.
pub fn visible<T: Real>(
    bvh: &Bvh<T>,
    camera: &Camera<T>,
    x: Vec3<T>,
    normal: Option<Vec3<T>>,
    occlusion: Occlusion<'_, T>,
    eps_occ: T,
) -> bool {
    let c = camera.center();
    if let Some(n) = normal {
        if !(n.dot(c - x) > T::zero()) {
            return false;
        }
    }
    let Some(proj) = camera.in_frustum(x) else {
        return false;
    };
    match occlusion {
        Occlusion::DepthMap(map, interp) => proj.z - map.sample(proj.px, proj.py, interp) <= eps_occ,
        Occlusion::ShadowRay => !shadow_blocked(bvh, c, x, eps_occ),
    }
}

/// True if geometry lies on the segment `from → to` closer than
/// `|to − from| − eps` to `from`.
pub fn shadow_blocked<T: Real>(bvh: &Bvh<T>, from: Vec3<T>, to: Vec3<T>, eps: T) -> bool {
    let d = to - from;
    let len = d.norm();
    if !(len > T::zero()) {
        return false;
    }
    bvh.any_hit(from, d / len, bvh.t_min(), len - eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_io::{Intrinsics, TriangleMesh};
    use crate::raycast::render_depth;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn camera_at(eye: Vec3<f64>) -> Camera<f64> {
        Camera::look_at(0, Intrinsics::from_fov(64, 64, 1.2), eye, v(0.0, 0.0, 0.0), v(0.0, 1.0, 0.0)).unwrap()
    }

    /// A small wall square at z = `z`.
    fn wall(z: f64) -> TriangleMesh<f64> {
        let p = |x, y| v(x, y, z);
        TriangleMesh::from_parts(vec![p(-0.2, -0.2), p(0.2, -0.2), p(0.2, 0.2), p(-0.2, 0.2)], vec![[0, 1, 2], [0, 2, 3]], None)
            .unwrap()
            .mesh
    }

    #[test]
    fn facing_unobstructed_point_is_visible() {
        let bvh = Bvh::build(&wall(-5.0));
        let cam = camera_at(v(0.0, 0.0, 2.0));
        let n = Some(v(0.0, 0.0, 1.0));
        assert!(visible(&bvh, &cam, Vec3::zero(), n, Occlusion::ShadowRay, 1e-3));
        let map = render_depth(&bvh, &cam);
        assert!(visible(&bvh, &cam, Vec3::zero(), n, Occlusion::DepthMap(&map, Interpolation::Bilinear), 1e-3));
    }

    #[test]
    fn flipped_normal_is_rejected() {
        let bvh = Bvh::build(&wall(-5.0));
        let cam = camera_at(v(0.0, 0.0, 2.0));
        assert!(!visible(&bvh, &cam, Vec3::zero(), Some(v(0.0, 0.0, -1.0)), Occlusion::ShadowRay, 1e-3));
        // Without a normal there is no backface test.
        assert!(visible(&bvh, &cam, Vec3::zero(), None, Occlusion::ShadowRay, 1e-3));
    }

    #[test]
    fn wall_between_camera_and_point_occludes() {
        let bvh = Bvh::build(&wall(1.0));
        let cam = camera_at(v(0.0, 0.0, 2.0));
        let n = Some(v(0.0, 0.0, 1.0));
        assert!(!visible(&bvh, &cam, Vec3::zero(), n, Occlusion::ShadowRay, 1e-3));
        let map = render_depth(&bvh, &cam);
        assert!(!visible(&bvh, &cam, Vec3::zero(), n, Occlusion::DepthMap(&map, Interpolation::Bilinear), 1e-3));
        // A tolerance larger than the gap lets it through.
        assert!(visible(&bvh, &cam, Vec3::zero(), n, Occlusion::ShadowRay, 1.5));
    }

    #[test]
    fn outside_frustum_or_behind_is_invisible() {
        let bvh = Bvh::build(&wall(-5.0));
        let cam = camera_at(v(0.0, 0.0, 2.0));
        assert!(!visible(&bvh, &cam, v(10.0, 0.0, 0.0), None, Occlusion::ShadowRay, 1e-3));
        assert!(!visible(&bvh, &cam, v(0.0, 0.0, 3.0), None, Occlusion::ShadowRay, 1e-3));
    }
}
