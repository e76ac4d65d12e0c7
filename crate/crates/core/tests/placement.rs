use proptest::prelude::*;

use scaffold_core::coverage::{accumulate_coverage, CoverageField, CoverageOptions};
use scaffold_core::geom::{Mat3, Rigid, Vec3};
use scaffold_core::mesh_io::{sample_surface, Camera, Intrinsics, SceneFrame, SurfaceSamples, Trajectory};
use scaffold_core::placement::{
    assign_positions, blend_weights, coverage_loss, coverage_loss_grad, fps_init, kmeans, nearest_k_bases, optimize_placement,
    perturb_bases, AssignMode, BasisSet, Optimizer, PlacementConfig, Provenance,
};
use scaffold_core::raycast::Bvh;
use scaffold_core::synth::{make_scene, SceneKind, SceneParams};

fn unit() -> impl Strategy<Value = Vec3<f64>> {
    prop::array::uniform3(-1.0..1.0f64).prop_filter_map("near zero", |a| Vec3::from(a).try_normalize())
}

/// Samples on the unit sphere with roughly inward normals, bases inside.
fn instance() -> impl Strategy<Value = (SurfaceSamples<f64>, Vec<f64>, Vec<Vec3<f64>>)> {
    (5usize..=50, 1usize..=8).prop_flat_map(|(ns, nb)| {
        let pts = prop::collection::vec((unit(), unit(), 0.0..2.0f64), ns);
        let bases = prop::collection::vec((unit(), 0.0..0.5f64), nb);
        (pts, bases).prop_map(|(pts, bases)| {
            let (mut p, mut n, mut w) = (Vec::new(), Vec::new(), Vec::new());
            for (d, jitter, weight) in pts {
                p.push(d);
                n.push((-d + jitter * 0.3).normalize());
                w.push(weight);
            }
            let b = bases.into_iter().map(|(d, r)| d * r).collect();
            (SurfaceSamples::from_points_normals(p, n).unwrap(), w, b)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences((s, w, bases) in instance()) {
        let (eps, h) = (1e-4, 1e-5);
        let a = assign_positions(&s, &bases, AssignMode::HalfSpace);
        let g = coverage_loss_grad(&s, &w, &bases, &a, eps);
        for j in 0..bases.len() {
            let mut fd = Vec3::zero();
            for k in 0..3 {
                let (mut hi, mut lo) = (bases.clone(), bases.clone());
                hi[j][k] += h;
                lo[j][k] -= h;
                fd[k] = (coverage_loss(&s, &w, &hi, &a, eps) - coverage_loss(&s, &w, &lo, &a, eps)) / (2.0 * h);
            }
            let scale = g[j].norm().max(1e-12);
            prop_assert!((fd - g[j]).norm() / scale < 1e-5, "basis {}: analytic {:?} fd {:?}", j, g[j], fd);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_batch_descent_never_raises_the_energy((s, w, bases) in instance(), lr in 0.001..0.2f64) {
        let field = CoverageField::from_weights(s, w).unwrap();
        let init = BasisSet::new(bases.clone(), Provenance::FpsInit).unwrap();
        let cfg = PlacementConfig {
            basis_count: bases.len(),
            optimizer: Optimizer::Descent,
            batch_size: usize::MAX,
            learning_rate: lr,
            max_iterations: 60,
            ..Default::default()
        };
        let (_, r) = optimize_placement(&field, &init, &cfg).unwrap();
        prop_assert_eq!(r.energy_history.len(), 61);
        for win in r.energy_history.windows(2) {
            prop_assert!(win[1] <= win[0], "{} -> {}", win[0], win[1]);
        }
    }
}

fn normalized_two_room(samples: usize) -> (CoverageField<f64>, Trajectory<f64>) {
    let scene = make_scene::<f64>(SceneKind::TwoRoom, &SceneParams { camera_count: 60, ..Default::default() }, 8).unwrap();
    let s = sample_surface(&scene.mesh, samples, 8).unwrap();
    let field = accumulate_coverage(&s, &scene.trajectory, &Bvh::build(&scene.mesh), &CoverageOptions::default());
    let f = SceneFrame::from_bbox(&scene.mesh.bbox());
    (field.rescaled(f.center, f.scale), scene.trajectory.rescaled(f.center, f.scale))
}

#[test]
fn optimization_commutes_with_rigid_motions() {
    let (field, traj) = normalized_two_room(3000);
    let xf = Rigid::new(Mat3::rotation(Vec3::new(0.3, -1.0, 0.6).normalize(), 2.1), Vec3::new(0.4, -0.2, 0.9));
    for optimizer in [Optimizer::Adam, Optimizer::Descent] {
        let cfg = PlacementConfig { basis_count: 4, max_iterations: 100, batch_size: 1000, optimizer, ..Default::default() };
        let init = fps_init(&traj, 4, 0).unwrap();
        let (a, _) = optimize_placement(&field, &init, &cfg).unwrap();
        let (b, _) = optimize_placement(&field.transformed(&xf), &init.transformed(&xf), &cfg).unwrap();
        for (p, q) in a.positions().iter().zip(b.positions()) {
            let err = (xf.apply_point(*p) - *q).norm();
            assert!(err < 1e-6, "{optimizer:?}: {err}");
        }
    }
}

#[test]
fn same_seed_same_result_and_seed_changes_batches() {
    let (field, traj) = normalized_two_room(3000);
    let init = fps_init(&traj, 4, 0).unwrap();
    let cfg = PlacementConfig { basis_count: 4, max_iterations: 30, batch_size: 500, ..Default::default() };
    let (a, ra) = optimize_placement(&field, &init, &cfg).unwrap();
    let (b, rb) = optimize_placement(&field, &init, &cfg).unwrap();
    assert_eq!(a.positions(), b.positions());
    assert_eq!(ra.energy_history, rb.energy_history);
    let (c, _) = optimize_placement(&field, &init, &PlacementConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a.positions(), c.positions());
}

#[test]
fn perturbation_std_matches_sigma() {
    let bases = BasisSet::new(vec![Vec3::new(1.0, -2.0, 3.0); 1000], Provenance::Optimized).unwrap();
    let moved = perturb_bases(&bases, 0.5, 17).unwrap();
    assert_eq!(moved.provenance, Provenance::Perturbed);
    for k in 0..3 {
        let d: Vec<f64> = moved.positions().iter().zip(bases.positions()).map(|(m, b)| m[k] - b[k]).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        assert!((0.45..=0.55).contains(&std), "axis {k}: std {std}");
    }
}

/// Best 2-partition of sorted 1D points into a prefix and a suffix.
fn best_split(xs: &[f64]) -> f64 {
    let cost = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    (1..xs.len()).map(|i| cost(&xs[..i]) + cost(&xs[i..])).fold(f64::INFINITY, f64::min)
}

#[test]
fn kmeans_on_a_line_matches_the_exhaustive_split() {
    let pts: Vec<Vec3<f64>> = [0.0, 1.0, 10.0, 11.0].iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect();
    let (labels, centers) = kmeans(&pts, 2, 0).unwrap();
    let mut c: Vec<f64> = centers.iter().map(|p| p.x).collect();
    c.sort_by(f64::total_cmp);
    assert_eq!(c, [0.5, 10.5]);
    assert_eq!(labels[0], labels[1]);
    assert_eq!(labels[2], labels[3]);
    assert_ne!(labels[0], labels[2]);

    let xs = [0.0, 0.3, 0.7, 1.0, 4.0, 4.2, 4.9, 5.5];
    let pts: Vec<Vec3<f64>> = xs.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect();
    let (labels, centers) = kmeans(&pts, 2, 3).unwrap();
    let sse: f64 = pts.iter().zip(&labels).map(|(p, &l)| p.distance_squared(centers[l])).sum();
    assert!((sse - best_split(&xs)).abs() < 1e-12);
}

#[test]
fn nearest_and_blend_examples() {
    let bases = BasisSet::new(
        vec![Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, -2.0)],
        Provenance::Grid,
    )
    .unwrap();
    assert_eq!(nearest_k_bases(Vec3::zero(), &bases, 2).unwrap(), [1, 2]);
    assert_eq!(nearest_k_bases(Vec3::zero(), &bases, 3).unwrap(), [1, 2, 0]);
    let two = BasisSet::new(vec![Vec3::<f64>::new(-1.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0)], Provenance::Grid).unwrap();
    let w = blend_weights(Vec3::zero(), &two);
    assert!((w[0].1 - 0.75).abs() < 1e-15 && (w[1].1 - 0.25).abs() < 1e-15);
    let mut w = blend_weights(Vec3::new(3.0, 0.0, 0.0), &two);
    w.sort_by_key(|p| p.0);
    assert_eq!(w, [(0, 0.0), (1, 1.0)]);
}

#[test]
fn fps_picks_the_corners_of_a_square() {
    let k = Intrinsics::from_fov(8, 8, 1.0);
    let eyes = [(0.5, 0.5), (0.0, 0.0), (0.3, 0.6), (1.0, 0.0), (1.0, 1.0), (0.6, 0.2), (0.0, 1.0)];
    let cams = eyes
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let e = Vec3::new(x, y, 1.0);
            Camera::look_at(i as i64, k, e, e + Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0)).unwrap()
        })
        .collect();
    let b = fps_init(&Trajectory::new(cams).unwrap(), 4, 0).unwrap();
    let mut got: Vec<(i64, i64)> = b.positions().iter().map(|p| (p.x as i64, p.y as i64)).collect();
    got.sort();
    assert_eq!(got, [(0, 0), (0, 1), (1, 0), (1, 1)]);
    assert_eq!(b.provenance, Provenance::FpsInit);
}
