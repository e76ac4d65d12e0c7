use proptest::prelude::*;

use scaffold_core::geom::Vec3;
use scaffold_core::mesh_io::{sample_surface, Camera, Intrinsics, TriangleMesh};
use scaffold_core::raycast::{render_depth, visible, Bvh, Interpolation, Occlusion};
use scaffold_core::synth::{brute_force_first_hit, make_scene, SceneKind, SceneParams};

fn v3() -> impl Strategy<Value = Vec3<f64>> {
    prop::array::uniform3(-5.0..5.0f64).prop_map(Vec3::from)
}

fn dir3() -> impl Strategy<Value = Vec3<f64>> {
    v3().prop_filter_map("zero direction", |d| d.try_normalize())
}

fn soup() -> impl Strategy<Value = TriangleMesh<f64>> {
    prop::collection::vec((v3(), v3(), v3()), 1..60).prop_filter_map("degenerate soup", |tris| {
        let mut v = Vec::new();
        let mut t = Vec::new();
        for (i, (a, b, c)) in tris.into_iter().enumerate() {
            v.extend([a, b, c]);
            let k = 3 * i as u32;
            t.push([k, k + 1, k + 2]);
        }
        TriangleMesh::from_parts(v, t, None).ok().map(|l| l.mesh)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bvh_first_hit_matches_exhaustive_search(mesh in soup(), rays in prop::collection::vec((v3(), dir3()), 50)) {
        let bvh = Bvh::build(&mesh);
        prop_assert!(bvh.validate().is_ok());
        for (o, d) in rays {
            let fast = bvh.first_hit(o, d, f64::INFINITY).map(|h| (h.t, h.triangle));
            let slow = brute_force_first_hit(&mesh, o, d, bvh.t_min(), f64::INFINITY);
            match (fast, slow) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    prop_assert!((a.0 - b.0).abs() <= 1e-9);
                    prop_assert_eq!(a.1, b.1);
                }
                other => prop_assert!(false, "mismatch {:?}", other),
            }
        }
    }

    #[test]
    fn shrinking_eps_never_reveals_an_occluded_point(seed in 0u64..1000, e1 in 0.0..0.2f64, e2 in 0.0..0.2f64) {
        let scene = two_room();
        let bvh = Bvh::build(&scene.0);
        let s = sample_surface(&scene.0, 40, seed).unwrap();
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let cam = &scene.1[seed as usize % scene.1.len()];
        for (x, n) in s.points().iter().zip(s.normals()) {
            let small = visible(&bvh, cam, *x, Some(*n), Occlusion::ShadowRay, lo);
            let large = visible(&bvh, cam, *x, Some(*n), Occlusion::ShadowRay, hi);
            prop_assert!(!small || large);
        }
    }
}

fn two_room() -> (TriangleMesh<f64>, Vec<Camera<f64>>) {
    let scene = make_scene::<f64>(SceneKind::TwoRoom, &SceneParams::default(), 1).unwrap();
    (scene.mesh, scene.trajectory.cameras().to_vec())
}

#[test]
fn depth_map_visibility_agrees_with_shadow_rays() {
    let (mesh, cams) = two_room();
    let bvh = Bvh::build(&mesh);
    let eps = 0.005 * mesh.bbox().diagonal();
    let s = sample_surface(&mesh, 4000, 9).unwrap();
    let (mut agree, mut total) = (0usize, 0usize);
    for cam in cams.iter().step_by(6) {
        let map = render_depth(&bvh, cam);
        for (x, n) in s.points().iter().zip(s.normals()) {
            let Some(p) = cam.in_frustum(*x) else { continue };
            // Bilinear lookups straddling a depth edge are excluded.
            let (i, j) = (p.px.floor(), p.py.floor());
            let corners = [(i, j), (i + 1.0, j), (i, j + 1.0), (i + 1.0, j + 1.0)]
                .map(|(a, b)| map.get(a.clamp(0.0, map.width as f64 - 1.0) as u32, b.clamp(0.0, map.height as f64 - 1.0) as u32));
            let (lo, hi) = corners.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &d| (l.min(d), h.max(d)));
            if !hi.is_finite() || hi - lo > eps {
                continue;
            }
            let a = visible(&bvh, cam, *x, Some(*n), Occlusion::DepthMap(&map, Interpolation::Bilinear), eps);
            let b = visible(&bvh, cam, *x, Some(*n), Occlusion::ShadowRay, eps);
            total += 1;
            agree += (a == b) as usize;
        }
    }
    let rate = agree as f64 / total as f64;
    assert!(total > 10_000, "only {total} comparisons");
    assert!(rate >= 0.999, "agreement {rate} over {total}");
}

#[test]
fn cube_room_center_pixel_is_finite() {
    let cube = scaffold_core::synth::box_mesh(Vec3::<f64>::new(0.0, 0.0, 0.0), Vec3::new(2.0, 2.0, 2.0), true);
    let bvh = Bvh::build(&cube);
    let cam = Camera::look_at(0, Intrinsics::from_fov(33, 33, 1.0), Vec3::splat(1.0), Vec3::new(2.0, 1.0, 1.0), Vec3::new(0.0, 0.0, 1.0))
        .unwrap();
    let map = render_depth(&bvh, &cam);
    assert!((map.get(16, 16) - 1.0).abs() < 1e-12);
    assert_eq!(map.finite_count(), 33 * 33);
}

