use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use scaffold_core::coverage::{accumulate_coverage, CoverageField};
use scaffold_core::geom::{Aabb, Vec3};
use scaffold_core::losses::{depth_agreement_report, fit_scale_shift, ScaleShift};
use scaffold_core::mesh_io::{load_mesh, load_trajectory, sample_surface, save_mesh, save_trajectory, SceneFrame, Trajectory, TriangleMesh};
use scaffold_core::placement::{
    baseline_grid, baseline_trajectory, fps_init, full_energy, grid_dims_for, kmeans_cores, optimize_placement, AssignMode, BasisSet,
    PlacementReport,
};
use scaffold_core::raycast::{self, load_depth, save_depth, Bvh, DepthMap};
use scaffold_core::synth::make_scene;
use scaffold_core::viewplan::{
    build_similarity, depth_file_name, export_virtual_depths, load_features, sample_candidates, save_features, select_views, DepthManifest,
    DepthManifestEntry, ViewPlan,
};
use scaffold_core::Error;

use crate::config::Config;
use crate::{CliError, CoverageArgs, CoverageFlags, EvalArgs, PlaceArgs, PlacementFlags, PlanViewsArgs, RenderDepthArgs, SynthArgs};

type Result<T> = std::result::Result<T, CliError>;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    write_text(path, &text)
}

/// `run.json`: the resolved config, the inputs and a command summary.
fn write_run(out: &Path, command: &str, cfg: &Config, inputs: Value, summary: Value) -> Result<()> {
    write_json(&out.join("run.json"), &json!({ "command": command, "config": cfg, "inputs": inputs, "summary": summary }))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn apply_coverage_flags(cfg: &mut Config, f: &CoverageFlags) {
    let c = &mut cfg.coverage;
    c.samples = f.samples.unwrap_or(c.samples);
    c.form = f.form.unwrap_or(c.form);
    c.visibility = f.visibility.unwrap_or(c.visibility);
    c.eps_occ_fraction = f.eps_occ_fraction.unwrap_or(c.eps_occ_fraction);
}

fn apply_placement_flags(cfg: &mut Config, f: &PlacementFlags) {
    let p = &mut cfg.placement;
    p.basis_count = f.basis_count.unwrap_or(p.basis_count);
    p.epsilon = f.epsilon.unwrap_or(p.epsilon);
    p.learning_rate = f.learning_rate.unwrap_or(p.learning_rate);
    p.max_iterations = f.max_iterations.unwrap_or(p.max_iterations);
    p.batch_size = f.batch_size.unwrap_or(p.batch_size);
    p.lr_decay = f.lr_decay.unwrap_or(p.lr_decay);
    p.optimizer = f.optimizer.unwrap_or(p.optimizer);
    if f.unconstrained_assign {
        p.assign = AssignMode::Unconstrained;
    }
}

fn read_mesh(path: &Path) -> Result<TriangleMesh<f64>> {
    let loaded = load_mesh(path)?;
    if loaded.dropped_degenerate > 0 {
        log::warn!("{}: dropped {} degenerate triangles", path.display(), loaded.dropped_degenerate);
    }
    Ok(loaded.mesh)
}

fn compute_coverage(cfg: &Config, mesh: &TriangleMesh<f64>, traj: &Trajectory<f64>) -> Result<CoverageField<f64>> {
    let bvh = Bvh::build(mesh);
    let samples = sample_surface(mesh, cfg.coverage.samples, cfg.seed)?;
    Ok(accumulate_coverage(&samples, traj, &bvh, &cfg.coverage.options(mesh.bbox().diagonal())))
}

/// Inverse of `rescaled(frame.center, frame.scale)`.
fn to_world_args(frame: &SceneFrame<f64>) -> (Vec3<f64>, f64) {
    (-frame.center * frame.scale, 1.0 / frame.scale)
}

pub fn synth(mut cfg: Config, a: SynthArgs) -> Result<()> {
    let s = &mut cfg.synth;
    s.scene = a.scene.unwrap_or(s.scene);
    s.params.subdivisions = a.subdivisions.unwrap_or(s.params.subdivisions);
    s.params.camera_count = a.cameras.unwrap_or(s.params.camera_count);
    s.params.feature_count = a.features.unwrap_or(s.params.feature_count);
    let cfg = cfg.finalize()?;
    let scene = make_scene::<f64>(cfg.synth.scene, &cfg.synth.params, cfg.seed)?;
    create_dir(&a.out)?;
    save_mesh(&scene.mesh, a.out.join("mesh.ply"))?;
    save_trajectory(&scene.trajectory, a.out.join("trajectory.json"))?;
    save_features(&scene.features, a.out.join("features.json"))?;
    let summary = json!({
        "scene": scene.kind.name(),
        "triangles": scene.mesh.triangle_count(),
        "cameras": scene.trajectory.len(),
        "features": scene.features.len(),
    });
    println!(
        "{}: {} triangles, {} cameras, {} features",
        scene.kind.name(),
        scene.mesh.triangle_count(),
        scene.trajectory.len(),
        scene.features.len()
    );
    write_run(&a.out, "synth", &cfg, json!({}), summary)
}

pub fn coverage(mut cfg: Config, a: CoverageArgs) -> Result<()> {
    apply_coverage_flags(&mut cfg, &a.flags);
    let cfg = cfg.finalize()?;
    let mesh = read_mesh(&a.mesh)?;
    let traj = load_trajectory(&a.trajectory)?;
    let t = Instant::now();
    let field = compute_coverage(&cfg, &mesh, &traj)?;
    let secs = t.elapsed().as_secs_f64();
    create_dir(&a.out)?;
    field.save_json(a.out.join("coverage.json"))?;
    field.save_ply(a.out.join("coverage.ply"))?;
    println!(
        "{} samples, zero-weight fraction {:.4}, {} cameras, {:.2}s",
        field.len(),
        field.zero_fraction(),
        traj.len(),
        secs
    );
    let summary = json!({
        "samples": field.len(),
        "zero_fraction": field.zero_fraction(),
        "total_weight": field.total_weight(),
        "skipped_terms": field.skipped_terms,
    });
    let inputs = json!({ "mesh": path_str(&a.mesh), "trajectory": path_str(&a.trajectory) });
    write_run(&a.out, "coverage", &cfg, inputs, summary)
}

/// Coverage field and scene bounds, from a coverage file or recomputed
/// from the mesh.
fn field_and_bounds(
    cfg: &Config,
    coverage: Option<&PathBuf>,
    mesh: Option<&PathBuf>,
    traj: &Trajectory<f64>,
) -> Result<(CoverageField<f64>, Aabb<f64>)> {
    let mesh = mesh.map(|p| read_mesh(p)).transpose()?;
    let field = match (coverage, &mesh) {
        (Some(p), _) => CoverageField::load_json(p)?,
        (None, Some(m)) => compute_coverage(cfg, m, traj)?,
        (None, None) => return Err(CliError::Config("either --coverage or --mesh is required".into())),
    };
    let bounds = mesh.map_or_else(|| field.samples().bbox(), |m| m.bbox());
    Ok((field, bounds))
}

/// Placement inputs mapped into the unit-diagonal frame.
struct Normalized {
    frame: SceneFrame<f64>,
    field: CoverageField<f64>,
    trajectory: Trajectory<f64>,
    bounds: Aabb<f64>,
}

impl Normalized {
    fn new(field: &CoverageField<f64>, traj: &Trajectory<f64>, bounds: &Aabb<f64>) -> Self {
        let frame = SceneFrame::from_bbox(bounds);
        Self {
            field: field.rescaled(frame.center, frame.scale),
            trajectory: traj.rescaled(frame.center, frame.scale),
            bounds: Aabb::new(frame.to_normalized(bounds.min), frame.to_normalized(bounds.max)),
            frame,
        }
    }

    fn energy(&self, cfg: &Config, bases: &BasisSet<f64>) -> f64 {
        full_energy(self.field.samples(), self.field.weights(), bases.positions(), cfg.placement.epsilon, cfg.placement.assign)
    }

    fn optimize(&self, cfg: &Config) -> Result<(BasisSet<f64>, BasisSet<f64>, PlacementReport<f64>)> {
        let init = fps_init(&self.trajectory, cfg.placement.basis_count, cfg.seed)?;
        let (opt, report) = optimize_placement(&self.field, &init, &cfg.placement)?;
        Ok((init, opt, report))
    }

    fn grid(&self, count: usize) -> Result<BasisSet<f64>> {
        let (nx, ny, nz) = grid_dims_for(count, &self.bounds);
        Ok(baseline_grid(&self.bounds, nx, ny, nz)?)
    }

    fn to_world(&self, b: &BasisSet<f64>) -> BasisSet<f64> {
        let (c, s) = to_world_args(&self.frame);
        b.rescaled(c, s)
    }
}

fn frame_json(f: &SceneFrame<f64>) -> Value {
    json!({ "center": f.center.to_f64(), "scale": f.scale })
}

pub fn place(mut cfg: Config, a: PlaceArgs) -> Result<()> {
    apply_placement_flags(&mut cfg, &a.placement);
    apply_coverage_flags(&mut cfg, &a.coverage_flags);
    cfg.place.baseline = a.baseline.unwrap_or(cfg.place.baseline);
    cfg.place.core_count = a.cores.unwrap_or(cfg.place.core_count);
    let cfg = cfg.finalize()?;
    let traj = load_trajectory(&a.trajectory)?;
    let (field, bounds) = field_and_bounds(&cfg, a.coverage.as_ref(), a.mesh.as_ref(), &traj)?;
    let norm = Normalized::new(&field, &traj, &bounds);
    let t = Instant::now();
    let (init, mut opt, report) = norm.optimize(&cfg)?;
    let secs = t.elapsed().as_secs_f64();
    if cfg.place.core_count > 0 {
        let k = cfg.place.core_count.min(opt.len());
        if k < cfg.place.core_count {
            log::warn!("{} cores requested for {} bases; using {k}", cfg.place.core_count, opt.len());
        }
        opt = kmeans_cores(&opt, k, cfg.seed)?;
    }
    create_dir(&a.out)?;
    let mut energies = serde_json::Map::new();
    energies.insert("fps_init".into(), json!(norm.energy(&cfg, &init)));
    energies.insert("optimized".into(), json!(norm.energy(&cfg, &opt)));
    write_json(&a.out.join("fps_init.json"), &norm.to_world(&init).to_record())?;
    write_json(&a.out.join("optimized.json"), &norm.to_world(&opt).to_record())?;
    let n = cfg.placement.basis_count;
    if cfg.place.baseline.trajectory() {
        let b = baseline_trajectory(&norm.trajectory, n)?;
        energies.insert("trajectory".into(), json!(norm.energy(&cfg, &b)));
        write_json(&a.out.join("baseline_trajectory.json"), &norm.to_world(&b).to_record())?;
    }
    if cfg.place.baseline.grid() {
        let b = norm.grid(n)?;
        energies.insert("grid".into(), json!(norm.energy(&cfg, &b)));
        write_json(&a.out.join("baseline_grid.json"), &norm.to_world(&b).to_record())?;
    }
    println!("{n} bases, {} iterations in {secs:.2}s", report.iterations());
    for (k, v) in &energies {
        println!("  L_cov {k:<10} {}", v.as_f64().unwrap_or(f64::NAN));
    }
    let summary = json!({
        "frame": frame_json(&norm.frame),
        "energies": energies,
        "iterations": report.iterations(),
        "infeasible_count": report.infeasible_count,
        "stationary_events": report.stationary_events,
        "rejected_steps": report.rejected_steps,
        "basis_mass": report.basis_mass,
    });
    let inputs = json!({
        "coverage": a.coverage.as_deref().map(path_str),
        "trajectory": path_str(&a.trajectory),
        "mesh": a.mesh.as_deref().map(path_str),
    });
    write_run(&a.out, "place", &cfg, inputs, summary)
}

pub fn plan_views(mut cfg: Config, a: PlanViewsArgs) -> Result<()> {
    let v = &mut cfg.viewplan;
    v.candidates = a.candidates.unwrap_or(v.candidates);
    v.count = a.count.unwrap_or(v.count);
    v.kappa = a.kappa.unwrap_or(v.kappa);
    v.line_of_sight |= a.line_of_sight;
    let cfg = cfg.finalize()?;
    let mesh = read_mesh(&a.mesh)?;
    let traj = load_trajectory(&a.trajectory)?;
    let features = load_features::<f64>(&a.features)?;
    features.check_observers(&traj)?;

    let frame = SceneFrame::from_bbox(&mesh.bbox());
    let (c, s) = (frame.center, frame.scale);
    let nbvh = Bvh::build(&mesh.rescaled(c, s));
    let ntraj = traj.rescaled(c, s);
    let nfeat = features.rescaled(c, s);
    let t = Instant::now();
    let vp = &cfg.viewplan;
    let cands = sample_candidates(&nbvh, &ntraj, &nfeat, vp.candidates, cfg.seed, &vp.candidate_options())?;
    let sim = build_similarity(&ntraj, &cands, &nfeat, &nbvh, None)?;
    let plan = select_views(&cands, &ntraj, &sim, vp.kappa, vp.count, cfg.seed)?;
    let (wc, ws) = to_world_args(&frame);
    let plan = ViewPlan { views: plan.views.iter().map(|v| v.rescaled(wc, ws)).collect(), ..plan };
    let secs = t.elapsed().as_secs_f64();

    create_dir(&a.out)?;
    write_json(&a.out.join("plan.json"), &plan.to_record())?;
    let manifest = export_virtual_depths(&plan, &Bvh::build(&mesh), a.out.join("depth"))?;
    println!("{} of {} candidates selected in {secs:.2}s; {} depth maps", plan.len(), cands.len(), manifest.views.len());
    let summary = json!({
        "frame": frame_json(&frame),
        "candidates": cands.len(),
        "selected": plan.len(),
        "similarity_max": sim.max(),
    });
    let inputs = json!({
        "mesh": path_str(&a.mesh),
        "trajectory": path_str(&a.trajectory),
        "features": path_str(&a.features),
    });
    write_run(&a.out, "plan-views", &cfg, inputs, summary)
}

pub fn render_depth(mut cfg: Config, a: RenderDepthArgs) -> Result<()> {
    cfg.depth.format = a.format.unwrap_or(cfg.depth.format);
    let cfg = cfg.finalize()?;
    let mesh = read_mesh(&a.mesh)?;
    let cams = load_trajectory::<f64>(&a.cameras)?;
    let bvh = Bvh::build(&mesh);
    create_dir(&a.out)?;
    let ext = cfg.depth.format.extension();
    let mut views = Vec::with_capacity(cams.len());
    let mut finite = 0;
    for (rank, cam) in cams.cameras().iter().enumerate() {
        let map = raycast::render_depth(&bvh, cam);
        finite += map.finite_count();
        let file = depth_file_name(rank, cam.id).replace(".pfm", &format!(".{ext}"));
        save_depth(&map, a.out.join(&file))?;
        views.push(DepthManifestEntry { rank, file, camera: cam.to_record() });
    }
    write_json(&a.out.join("manifest.json"), &DepthManifest { views })?;
    println!("{} depth maps, {finite} finite pixels", cams.len());
    let inputs = json!({ "mesh": path_str(&a.mesh), "cameras": path_str(&a.cameras) });
    write_run(&a.out, "render-depth", &cfg, inputs, json!({ "maps": cams.len(), "finite_pixels": finite }))
}

/// (file name, camera id) pairs: from `manifest.json` if present, otherwise
/// every depth file in name order with its index as the id.
fn depth_listing(dir: &Path) -> Result<Vec<(String, i64)>> {
    let manifest = dir.join("manifest.json");
    if manifest.exists() {
        let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let m: DepthManifest = serde_json::from_str(&text).map_err(|e| Error::parse(&manifest, e.to_string()))?;
        return Ok(m.views.into_iter().map(|v| (v.file, v.camera.id)).collect());
    }
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| {
            let l = n.to_ascii_lowercase();
            l.ends_with(".pfm") || l.ends_with(".png")
        })
        .collect();
    names.sort();
    Ok(names.into_iter().enumerate().map(|(i, n)| (n, i as i64)).collect())
}

fn aligned(pred: &DepthMap<f64>, fit: &ScaleShift<f64>) -> Result<DepthMap<f64>> {
    let values = pred.values().iter().map(|&d| if d.is_finite() { fit.alpha * d + fit.beta } else { d }).collect();
    Ok(DepthMap::new(pred.width, pred.height, pred.camera_id, values)?)
}

fn eval_depth(cfg: &Config, reference: &Path, predicted: &Path, out: &Path) -> Result<Value> {
    let listing = depth_listing(reference)?;
    let mut refs = Vec::with_capacity(listing.len());
    let mut preds = Vec::with_capacity(listing.len());
    let mut fits = Vec::new();
    for (file, id) in &listing {
        let r = load_depth::<f64>(reference.join(file), *id)?;
        let mut p = load_depth::<f64>(predicted.join(file), *id)?;
        if cfg.eval.align {
            if (r.width, r.height) != (p.width, p.height) {
                return Err(Error::InvalidArgument(format!("{file}: reference and prediction sizes differ")).into());
            }
            let mut fit = fit_scale_shift(p.values(), r.values(), None)?;
            fit.frame_id = Some(*id);
            p = aligned(&p, &fit)?;
            fits.push(fit);
        }
        refs.push(r);
        preds.push(p);
    }
    let report = depth_agreement_report(&refs, &preds, &cfg.eval.robust)?;
    write_text(&out.join("depth.json"), &(report.to_json() + "\n"))?;
    write_text(&out.join("depth.csv"), &report.to_csv())?;
    if cfg.eval.align {
        write_json(&out.join("alignment.json"), &fits)?;
    }
    println!(
        "depth: {} maps, mean robust loss {}",
        listing.len(),
        report.aggregate.mean_robust.map_or("n/a".to_string(), |v| format!("{v:.6e}"))
    );
    Ok(json!({ "maps": listing.len(), "aggregate": report.aggregate }))
}

#[derive(Serialize)]
struct PlacementRow {
    basis_count: usize,
    strategy: &'static str,
    l_cov: f64,
    /// 1 = lowest energy among the strategies at this basis count.
    rank: usize,
}

fn eval_placement(cfg: &Config, norm: &Normalized, out: &Path) -> Result<Vec<PlacementRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.eval.basis_counts {
        let mut c = cfg.clone();
        c.placement.basis_count = n;
        let (_, opt, _) = norm.optimize(&c)?;
        let traj = baseline_trajectory(&norm.trajectory, n)?;
        let grid = norm.grid(n)?;
        let mut group: Vec<PlacementRow> = [("optimized", &opt), ("trajectory", &traj), ("grid", &grid)]
            .into_iter()
            .map(|(strategy, b)| PlacementRow { basis_count: n, strategy, l_cov: norm.energy(cfg, b), rank: 0 })
            .collect();
        let mut order: Vec<usize> = (0..group.len()).collect();
        order.sort_by(|&i, &j| group[i].l_cov.total_cmp(&group[j].l_cov).then(i.cmp(&j)));
        for (r, &i) in order.iter().enumerate() {
            group[i].rank = r + 1;
        }
        rows.extend(group);
    }
    let mut csv = String::from("basis_count,strategy,l_cov,rank\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{:.17e},{}\n", r.basis_count, r.strategy, r.l_cov, r.rank));
    }
    write_text(&out.join("placement.csv"), &csv)?;
    write_json(&out.join("placement.json"), &json!({ "frame": frame_json(&norm.frame), "rows": rows }))?;
    for r in &rows {
        println!("  N={:<3} {:<10} L_cov {:.6e}  rank {}", r.basis_count, r.strategy, r.l_cov, r.rank);
    }
    Ok(rows)
}

pub fn eval(mut cfg: Config, a: EvalArgs) -> Result<()> {
    apply_placement_flags(&mut cfg, &a.placement);
    apply_coverage_flags(&mut cfg, &a.coverage_flags);
    if let Some(b) = &a.basis_counts {
        cfg.eval.basis_counts = b.clone();
    }
    cfg.eval.robust.gamma = a.gamma.unwrap_or(cfg.eval.robust.gamma);
    cfg.eval.align |= a.align;
    let cfg = cfg.finalize()?;
    let placement = a.trajectory.is_some() && (a.coverage.is_some() || a.mesh.is_some());
    if !placement && a.reference.is_none() {
        return Err(CliError::Config("nothing to evaluate: give --trajectory with --coverage/--mesh, or --reference/--predicted".into()));
    }
    create_dir(&a.out)?;
    let mut summary = serde_json::Map::new();
    if let (true, Some(tp)) = (placement, &a.trajectory) {
        let traj = load_trajectory(tp)?;
        let (field, bounds) = field_and_bounds(&cfg, a.coverage.as_ref(), a.mesh.as_ref(), &traj)?;
        let norm = Normalized::new(&field, &traj, &bounds);
        let rows = eval_placement(&cfg, &norm, &a.out)?;
        summary.insert("placement_rows".into(), json!(rows.len()));
    }
    if let (Some(r), Some(p)) = (&a.reference, &a.predicted) {
        summary.insert("depth".into(), eval_depth(&cfg, r, p, &a.out)?);
    }
    info!("eval outputs written to {}", a.out.display());
    let inputs = json!({
        "coverage": a.coverage.as_deref().map(path_str),
        "trajectory": a.trajectory.as_deref().map(path_str),
        "mesh": a.mesh.as_deref().map(path_str),
        "reference": a.reference.as_deref().map(path_str),
        "predicted": a.predicted.as_deref().map(path_str),
    });
    write_run(&a.out, "eval", &cfg, inputs, Value::Object(summary))
}
