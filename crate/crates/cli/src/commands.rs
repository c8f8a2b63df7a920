use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use varimatch::deformation::{deform_grid, DisplacementField, GridSpec, DEFAULT_GRID_NODE_CAP};
use varimatch::evaluation::{
    emit_report, landmark_metric, landmark_rows, surface_metric, transport_landmarks, LandmarkRole,
    LandmarkSet, Report,
};
use varimatch::geometry::{
    face_elements, load_mesh, save_mesh, synth_ellipsoid, synth_sphere, truncate_by_cylinder, Mesh,
    MeshFormat,
};
use varimatch::map::{ComposedMap, SpatialMap};
use varimatch::registration::{pipeline, Method, RegistrationConfig};
use varimatch::varifold::RegularizerKind;
use varimatch::Vec3;

use crate::manifest::RunManifest;
use crate::CliError;

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got '{s}'"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|e| format!("'{p}': {e}"))?;
    }
    Ok(out)
}

fn parse_shape(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated integers, got '{s}'"
        ));
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|e| format!("'{p}': {e}"))?;
    }
    Ok(out)
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect()
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: varimatch::Error| e.to_string())
}

fn parse_regularizer(s: &str) -> Result<RegularizerKind, String> {
    s.parse().map_err(|e: varimatch::Error| e.to_string())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

fn mesh_format(path: &Path) -> Result<MeshFormat, CliError> {
    MeshFormat::from_path(path).ok_or_else(|| {
        CliError::input(format!(
            "{}: unknown mesh extension (use .off or .ply)",
            path.display()
        ))
    })
}

fn read_mesh(path: &Path, manifest: &mut RunManifest) -> Result<Mesh, CliError> {
    manifest.add_input(path)?;
    Ok(load_mesh(path, mesh_format(path)?)?)
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Shape {
    Sphere,
    Ellipsoid,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    shape: Shape,
    /// Sphere radius (mm).
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    /// Ellipsoid semi-axes "a,b,c" (mm).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3, default_value = "20,14,10")]
    semi_axes: [f64; 3],
    #[arg(long, default_value_t = 3)]
    subdivisions: u32,
    /// Keep only faces inside a cylinder of this radius (mm) for the source.
    #[arg(long)]
    truncate_radius: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3, default_value = "0,0,0")]
    axis_point: [f64; 3],
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3, default_value = "0,0,1")]
    axis_dir: [f64; 3],
    /// Also write landmark files for source and target.
    #[arg(long)]
    landmarks: bool,
    #[arg(long)]
    out: PathBuf,
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    if a.subdivisions > 7 {
        return Err(CliError::input("at most 7 subdivisions are supported"));
    }
    let semi = match a.shape {
        Shape::Sphere => {
            if !(a.radius > 0.0) {
                return Err(CliError::input("radius must be positive"));
            }
            Vec3::repeat(a.radius)
        }
        Shape::Ellipsoid => Vec3::from(a.semi_axes),
    };
    let target = match a.shape {
        Shape::Sphere => synth_sphere(a.radius, a.subdivisions),
        Shape::Ellipsoid => {
            if semi.iter().any(|s| !(*s > 0.0)) {
                return Err(CliError::input("semi-axes must be positive"));
            }
            synth_ellipsoid(semi, a.subdivisions)
        }
    };
    let source = match a.truncate_radius {
        Some(r) => {
            truncate_by_cylinder(&target, Vec3::from(a.axis_point), Vec3::from(a.axis_dir), r)?
        }
        None => target.clone(),
    };
    ensure_dir(&a.out)?;
    save_mesh(&target, a.out.join("target.off"), MeshFormat::Off)?;
    save_mesh(&source, a.out.join("source.off"), MeshFormat::Off)?;
    if a.landmarks {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut roles = Vec::new();
        for (k, name) in ["x", "y", "z"].iter().enumerate() {
            for (sign, tag) in [(0.5, "pos"), (-0.5, "neg")] {
                let mut p = Vec3::zeros();
                p[k] = sign * semi[k];
                points.push(p);
                labels.push(format!("poi_{name}_{tag}"));
                roles.push(LandmarkRole::Poi);
            }
        }
        for (i, t) in [-0.3, 0.0, 0.3].iter().enumerate() {
            points.push(Vec3::new(0.2 * semi.x, t * semi.y, 0.2 * semi.z));
            labels.push(format!("tumor_{i}"));
            roles.push(LandmarkRole::TumorAxis);
        }
        let lm = LandmarkSet::new(points, labels, roles)?;
        lm.save_csv(&a.out.join("target_landmarks.csv"))?;
        lm.save_csv(&a.out.join("source_landmarks.csv"))?;
    }
    RunManifest::new().write(&a.out)?;
    println!(
        "wrote target ({} faces) and source ({} faces) to {}",
        target.num_faces(),
        source.num_faces(),
        a.out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct RegisterArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// icp_rigid, rigid_pm, translation, rigid_pm+lddmm or translation+lddmm.
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kernel width schedule "10,5" (mm).
    #[arg(long, value_parser = parse_list)]
    sigma_w: Option<Vec<f64>>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// none, global or local.
    #[arg(long, value_parser = parse_regularizer)]
    regularizer: Option<RegularizerKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Shooting steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Source landmarks to transport and compare with `--reference-landmarks`.
    #[arg(long, requires = "reference_landmarks")]
    landmarks: Option<PathBuf>,
    #[arg(long)]
    reference_landmarks: Option<PathBuf>,
    /// Report adjacent faces with inconsistent winding.
    #[arg(long)]
    check_orientation: bool,
    #[arg(long)]
    out: PathBuf,
}

fn build_config(
    a: &RegisterArgs,
    manifest: &mut RunManifest,
) -> Result<RegistrationConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => {
            manifest.add_input(p)?;
            RegistrationConfig::load(p)?
        }
        None => RegistrationConfig::default(),
    };
    if let Some(s) = &a.sigma_w {
        cfg.sigma_w_schedule = s.clone();
    }
    if a.sigma0.is_some() {
        cfg.sigma0 = a.sigma0;
    }
    if let Some(v) = a.lambda1 {
        cfg.lambda1 = v;
    }
    if let Some(v) = a.lambda2 {
        cfg.lambda2 = v;
    }
    if let Some(v) = a.regularizer {
        cfg.regularizer = v;
    }
    if let Some(v) = a.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = a.steps {
        cfg.n_steps = v;
    }
    cfg.validate()?;
    manifest.set_config(&cfg);
    Ok(cfg)
}

fn report_orientation(name: &str, mesh: &Mesh) {
    let bad = mesh.inconsistent_orientations();
    if bad.is_empty() {
        eprintln!("{name}: face orientation consistent");
    } else {
        eprintln!(
            "{name}: {} adjacent face pairs with inconsistent orientation (first: faces {} and {})",
            bad.len(),
            bad[0].0,
            bad[0].1
        );
    }
}

pub fn register(a: RegisterArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new();
    let source = read_mesh(&a.source, &mut manifest)?;
    let target = read_mesh(&a.target, &mut manifest)?;
    let cfg = build_config(&a, &mut manifest)?;
    if a.check_orientation {
        report_orientation("source", &source);
        report_orientation("target", &target);
    }
    let landmarks = match (&a.landmarks, &a.reference_landmarks) {
        (Some(s), Some(r)) => {
            manifest.add_input(s)?;
            manifest.add_input(r)?;
            Some((LandmarkSet::load_csv(s)?, LandmarkSet::load_csv(r)?))
        }
        _ => None,
    };
    ensure_dir(&a.out)?;
    let result = pipeline(a.method, &source, &target, &cfg)?;
    save_mesh(
        &result.deformed_source,
        a.out.join("deformed.off"),
        MeshFormat::Off,
    )?;
    result.map.save(&a.out.join("map.json"))?;

    let mut report = Report::from_registration(&result, &cfg);
    let deformed = face_elements(&result.deformed_source);
    match deformed {
        Ok(d) => {
            report.metrics.surface_distance = Some(surface_metric(&d, &face_elements(&target)?))
        }
        Err(e) => log::warn!("surface metric skipped: {e}"),
    }
    if let Some((src_lm, ref_lm)) = &landmarks {
        let moved = transport_landmarks(&result.map, src_lm)?;
        report.metrics.landmarks = Some(landmark_metric(&moved, ref_lm)?);
        report.landmark_rows = landmark_rows(&moved, ref_lm)?;
        moved.save_csv(&a.out.join("deformed_landmarks.csv"))?;
    }
    emit_report(&report, &a.out.join("report.json"))?;
    manifest.write(&a.out)?;
    if let Some(f) = &result.failure {
        return Err(CliError::Numerical(format!("registration incomplete: {f}")));
    }
    if let Some(d) = report.metrics.surface_distance {
        println!("{}: surface distance {d:.6} mm", a.method);
    }
    Ok(())
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Landmarks to compare (already deformed unless `--map` is given).
    #[arg(long)]
    landmarks: PathBuf,
    /// Map produced by `register`; transports `--landmarks` first.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new();
    manifest.add_input(&a.landmarks)?;
    manifest.add_input(&a.reference)?;
    let mut lm = LandmarkSet::load_csv(&a.landmarks)?;
    let reference = LandmarkSet::load_csv(&a.reference)?;
    if let Some(m) = &a.map {
        manifest.add_input(m)?;
        lm = transport_landmarks(&ComposedMap::load(m)?, &lm)?;
    }
    let metrics = landmark_metric(&lm, &reference)?;
    ensure_dir(&a.out)?;
    let mut report = Report::new();
    report.landmark_rows = landmark_rows(&lm, &reference)?;
    println!(
        "landmarks: mean {:.6} mm, std {:.6}, median {:.6} over {}",
        metrics.mean, metrics.std, metrics.median, metrics.count
    );
    report.metrics.landmarks = Some(metrics);
    emit_report(&report, &a.out.join("report.json"))?;
    manifest.write(&a.out)
}

#[derive(Args)]
pub struct DeformArgs {
    /// Map produced by `register`.
    #[arg(long)]
    map: PathBuf,
    /// CSV of points "x,y,z" (header optional).
    #[arg(long, conflicts_with_all = ["grid_origin", "grid_spacing", "grid_shape"])]
    points: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3, requires_all = ["grid_spacing", "grid_shape"])]
    grid_origin: Option<[f64; 3]>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    grid_spacing: Option<[f64; 3]>,
    /// Nodes along x, y and z.
    #[arg(long, value_parser = parse_shape)]
    grid_shape: Option<[usize; 3]>,
    /// Refuse grids with more nodes than this.
    #[arg(long, default_value_t = DEFAULT_GRID_NODE_CAP)]
    max_nodes: usize,
    #[arg(long)]
    out: PathBuf,
}

fn read_points(path: &Path) -> Result<Vec<Vec3>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_vec3(line) {
            Ok(p) => pts.push(Vec3::from(p)),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(CliError::input(format!(
                    "{}: line {}: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(pts)
}

pub fn deform(a: DeformArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new();
    manifest.add_input(&a.map)?;
    let map = ComposedMap::load(&a.map)?;
    ensure_dir(&a.out)?;
    if let Some(p) = &a.points {
        manifest.add_input(p)?;
        let pts = read_points(p)?;
        let moved = map.apply_points(&pts)?;
        let mut text = String::from("x,y,z\n");
        for q in &moved {
            text.push_str(&format!("{},{},{}\n", q.x, q.y, q.z));
        }
        let path = a.out.join("points.csv");
        std::fs::write(&path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        println!("transported {} points", moved.len());
    } else {
        let (Some(origin), Some(spacing), Some(shape)) =
            (a.grid_origin, a.grid_spacing, a.grid_shape)
        else {
            return Err(CliError::input(
                "give --points or all of --grid-origin, --grid-spacing, --grid-shape",
            ));
        };
        let grid = GridSpec::new(origin, spacing, shape)?;
        let field = grid_displacement(&map, &grid, a.max_nodes)?;
        field.write(&a.out.join("displacement.bin"))?;
        println!("wrote displacement field with {} nodes", grid.num_nodes());
    }
    manifest.write(&a.out)
}

/// Displacement of the whole composed map; a single flow stage uses the
/// dedicated grid routine.
fn grid_displacement(
    map: &ComposedMap,
    grid: &GridSpec,
    cap: usize,
) -> Result<DisplacementField, CliError> {
    if let [SpatialMap::Flow {
        initial,
        kernel,
        n_steps,
    }] = map.stages.as_slice()
    {
        return Ok(deform_grid(grid, initial, kernel, *n_steps, cap)?);
    }
    let nodes = grid.num_nodes();
    if nodes > cap {
        return Err(varimatch::Error::GridTooLarge { nodes, cap }.into());
    }
    let start = grid.nodes();
    let end = map.apply_points(&start)?;
    Ok(DisplacementField {
        grid: grid.clone(),
        displacements: end.iter().zip(&start).map(|(e, s)| e - s).collect(),
    })
}
