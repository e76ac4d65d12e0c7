use proptest::prelude::*;

use scaffold_core::geom::Vec3;
use scaffold_core::mesh_io::{load_mesh, load_trajectory, sample_surface, save_mesh, save_trajectory, Camera, Intrinsics, Trajectory, TriangleMesh};

fn sorted_triangles(m: &TriangleMesh<f64>) -> Vec<[[u64; 3]; 3]> {
    let mut t: Vec<[[u64; 3]; 3]> =
        (0..m.triangle_count()).map(|i| m.triangle(i).map(|p| p.to_f64().map(f64::to_bits))).collect();
    t.sort();
    t
}

fn arb_mesh() -> impl Strategy<Value = TriangleMesh<f64>> {
    (3usize..30).prop_flat_map(|nv| {
        let verts = prop::collection::vec(prop::array::uniform3(-100.0..100.0f64), nv);
        let tris = prop::collection::vec(prop::array::uniform3(0..nv as u32), 1..40);
        (verts, tris).prop_filter_map("all triangles degenerate", |(v, t)| {
            let verts = v.into_iter().map(Vec3::from).collect();
            TriangleMesh::from_parts(verts, t, None).ok().map(|l| l.mesh)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn binary_ply_round_trip_keeps_the_triangle_multiset(mesh in arb_mesh()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ply");
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh::<f64>(&path).unwrap();
        prop_assert_eq!(back.dropped_degenerate, 0);
        prop_assert_eq!(sorted_triangles(&back.mesh), sorted_triangles(&mesh));
    }
}

/// Ten triangles with areas 1..=10 in a row along x.
fn staircase() -> TriangleMesh<f64> {
    let mut v = Vec::new();
    let mut t = Vec::new();
    for k in 0..10u32 {
        let x = 30.0 * k as f64;
        let h = 2.0 * (k + 1) as f64;
        v.extend([Vec3::new(x, 0.0, 0.0), Vec3::new(x + 1.0, 0.0, 0.0), Vec3::new(x, h, 0.0)]);
        t.push([3 * k, 3 * k + 1, 3 * k + 2]);
    }
    TriangleMesh::from_parts(v, t, None).unwrap().mesh
}

#[test]
fn sample_frequencies_pass_chi_square_against_area_fractions() {
    let mesh = staircase();
    let n = 100_000;
    let s = sample_surface(&mesh, n, 11).unwrap();
    let mut hits = [0usize; 10];
    for &id in s.triangle_ids() {
        hits[id as usize] += 1;
    }
    let total = mesh.total_area();
    let chi2: f64 = (0..10)
        .map(|i| {
            let expected = n as f64 * mesh.triangle_area(i) / total;
            (hits[i] as f64 - expected).powi(2) / expected
        })
        .sum();
    // Upper 1% point of chi-square with 9 degrees of freedom.
    assert!(chi2 < 21.666, "chi-square {chi2}, hits {hits:?}");
}

#[test]
fn flat_mesh_sample_normals_equal_the_face_normal() {
    let v = [[0.0, 0.0, 2.0], [3.0, 0.0, 2.0], [3.0, 1.0, 2.0], [0.0, 1.0, 2.0], [1.5, 0.5, 2.0]].map(Vec3::from).to_vec();
    let mesh = TriangleMesh::from_parts(v, vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]], None).unwrap().mesh;
    let s = sample_surface(&mesh, 500, 3).unwrap();
    for (i, n) in s.normals().iter().enumerate() {
        assert_eq!(*n, mesh.face_normal(s.triangle_ids()[i] as usize));
        assert_eq!(*n, Vec3::new(0.0, 0.0, 1.0));
    }
}

#[test]
fn trajectory_file_round_trip_is_exact() {
    let k = Intrinsics::from_fov(64, 48, 1.2);
    let cams: Vec<Camera<f64>> = (0..5)
        .map(|i| {
            let eye = Vec3::new(i as f64 * 0.37, 1.0 / 3.0, 2.0);
            Camera::look_at(i * 3 - 4, k, eye, eye + Vec3::new(0.3, 1.0, -0.2), Vec3::new(0.0, 0.0, 1.0)).unwrap()
        })
        .collect();
    let traj = Trajectory::new(cams).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    save_trajectory(&traj, &path).unwrap();
    let back = load_trajectory::<f64>(&path).unwrap();
    assert_eq!(back.to_record().cameras, traj.to_record().cameras);
}
