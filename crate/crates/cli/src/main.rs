use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use surfcut::cut::{extract_boundary, BoundaryCurve, BoundaryParams, StopReason};
use surfcut::mesh::SurfaceMesh;
use surfcut::metrics::{MetricReport, DEFAULT_EPSILON};
use surfcut::pipeline::{
    solve, surface_from_boundary, surfcut, surfcut_auto, AutoParams, SurfCutParams, SurfCutResult,
};
use surfcut::svol::{load_svol, save_svol};
use surfcut::synth::{generate_surface, GroundTruth, Manifest, ManifestEntry, SurfaceKind};
use surfcut::volume::{add_gaussian_noise, ScalarVolume, SeedPoint};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (unknown flag, missing or unparsable value)
  3  input path missing or unreadable, or output not writable
  4  malformed input file
  5  invalid parameter or seed point
  6  extraction failed (no ridge, degenerate cut, chaining, ...)

On failure the last line on stderr is a JSON object:
  {\"error\":{\"code\":5,\"kind\":\"param\",\"message\":\"...\"}}";

#[derive(Parser)]
#[command(name = "surfcut", version, about = "Free-boundary surface extraction from 3D scalar volumes", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted distance U and Euclidean path length U_E from a seed point.
    Fmm(FmmArgs),
    /// Boundary curve of the surface through a seed point.
    ExtractBoundary(SeededArgs),
    /// Surface spanning a given boundary curve.
    ExtractSurface(SurfaceArgs),
    /// Boundary curve and surface through a seed point.
    Surfcut(SeededArgs),
    /// Surfaces from automatically proposed seeds, duplicates removed.
    Auto(AutoArgs),
    /// Generate a synthetic volume with ground truth.
    Synth(SynthArgs),
    /// Score a result against ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct Params {
    /// Spacing ΔD between successive fronts, in units of U.
    #[arg(long, default_value_t = 20.0)]
    delta_d: f64,
    /// Stopping threshold T on the mean cost per cut edge.
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
    /// Multiplier applied to the image before solving.
    #[arg(long, default_value_t = 8.0)]
    gain: f64,
    /// Additive regularizer on the cost.
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    /// Largest number of fronts examined.
    #[arg(long, default_value_t = 64)]
    max_fronts: usize,
    /// Mesh vertices sampled for the minimal-path cover check (0 skips it).
    #[arg(long, default_value_t = 0)]
    cover_samples: usize,
    /// Distance in voxels within which a minimal path counts as covered.
    #[arg(long, default_value_t = 2.0)]
    cover_tol: f64,
    /// Seed of the sampling in the cover check.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

impl Params {
    fn build(&self) -> SurfCutParams {
        SurfCutParams {
            delta_d: self.delta_d,
            t: self.threshold,
            gain: self.gain,
            rho: self.rho,
            max_fronts: self.max_fronts,
            cover_tol: self.cover_tol,
            cover_samples: self.cover_samples,
            rng_seed: self.rng_seed,
        }
    }
}

#[derive(Args)]
struct FmmArgs {
    /// Input volume (.svol).
    #[arg(long)]
    phi: PathBuf,
    /// Seed voxel as x,y,z.
    #[arg(long, value_parser = parse_point)]
    point: [usize; 3],
    /// Output directory; receives u.svol and ue.svol.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct SeededArgs {
    /// Input volume (.svol).
    #[arg(long)]
    phi: PathBuf,
    /// Seed voxel as x,y,z.
    #[arg(long, value_parser = parse_point)]
    point: [usize; 3],
    /// Output directory; receives boundary.json (and surface.obj).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Print stage timings to stderr.
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct SurfaceArgs {
    /// Input volume (.svol).
    #[arg(long)]
    phi: PathBuf,
    /// Boundary curve JSON (output of extract-boundary, or a bare curve).
    #[arg(long, conflicts_with = "gt", required_unless_present = "gt")]
    boundary: Option<PathBuf>,
    /// Take the boundary from a ground-truth file instead.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Seed voxel as x,y,z (defaults to the ground-truth interior point with --gt).
    #[arg(long, value_parser = parse_point)]
    point: Option<[usize; 3]>,
    /// Output directory; receives surface.obj.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct AutoArgs {
    /// Input volume (.svol).
    #[arg(long)]
    phi: PathBuf,
    /// Output directory; receives auto.json, surface_NNN.obj and boundary_NNN.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Largest number of proposed seeds.
    #[arg(long, default_value_t = 8)]
    max_seeds: usize,
    /// Seeds come from voxels at or below this percentile of the image.
    #[arg(long, default_value_t = 10.0)]
    percentile: f64,
    /// Smallest distance between two proposed seeds.
    #[arg(long, default_value_t = 10.0)]
    suppression_radius: f64,
    /// GT-Cov against a kept surface above which a result is a duplicate.
    #[arg(long, default_value_t = 0.8)]
    dedup_cov: f64,
    /// Worker threads (0 uses all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct SynthArgs {
    /// Surface family: trimmed-plane, cut-sphere or random-heightfield.
    #[arg(long)]
    kind: SurfaceKind,
    /// Volume size, either N or X,Y,Z.
    #[arg(long, value_parser = parse_dims, default_value = "100")]
    dims: [usize; 3],
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Seed of the shape and noise generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of cases, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Output directory; receives phi.svol, gt.json and manifest.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Result surface (.obj, or mesh JSON).
    #[arg(long)]
    result: PathBuf,
    /// Ground truth JSON written by synth.
    #[arg(long)]
    gt: PathBuf,
    /// Boundary JSON; without it the boundary loop stored in the mesh is used.
    #[arg(long)]
    boundary: Option<PathBuf>,
    /// Distance tolerance ε in voxels.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    <[usize; 3]>::try_from(v).map_err(|_| format!("expected x,y,z, got {s:?}"))
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    match s.trim().parse::<usize>() {
        Ok(n) => Ok([n; 3]),
        Err(_) => parse_point(s),
    }
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn path(message: String) -> Self {
        Failure {
            code: 3,
            kind: "path",
            message,
        }
    }

    fn param(message: String) -> Self {
        Failure {
            code: 5,
            kind: "param",
            message,
        }
    }
}

impl From<surfcut::Error> for Failure {
    fn from(e: surfcut::Error) -> Self {
        use surfcut::Error as E;
        let (code, kind) = match &e {
            E::Io(_) => (3, "io"),
            E::Format(_) | E::Json(_) => (4, "format"),
            E::InvalidDims(_)
            | E::InvalidParam(_)
            | E::SeedOutside(_)
            | E::SurfaceExceedsMargin => (5, "param"),
            _ => (6, "extraction"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn input(p: &Path) -> Outcome<&Path> {
    if p.is_file() {
        Ok(p)
    } else {
        Err(Failure::path(format!(
            "input file {} does not exist",
            p.display()
        )))
    }
}

fn out_dir(p: &Path) -> Outcome<&Path> {
    fs::create_dir_all(p).map_err(|e| {
        Failure::path(format!(
            "cannot create output directory {}: {e}",
            p.display()
        ))
    })?;
    Ok(p)
}

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> Outcome<()> {
    fs::write(&path, contents)
        .map_err(|e| Failure::path(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Outcome<String> {
    let mut s =
        serde_json::to_string_pretty(v).map_err(|e| Failure::from(surfcut::Error::from(e)))?;
    s.push('\n');
    Ok(s)
}

fn seed_in(phi: &ScalarVolume, point: [usize; 3]) -> Outcome<SeedPoint> {
    Ok(SeedPoint::new(point, phi.dims())?)
}

fn checked(params: &Params) -> Outcome<SurfCutParams> {
    let p = params.build();
    p.validate()?;
    Ok(p)
}

#[derive(Serialize)]
struct BoundaryFile<'a> {
    seed: [usize; 3],
    stop: StopReason,
    degraded: bool,
    curves: usize,
    cut_cost: f64,
    cut_size: usize,
    boundary: &'a BoundaryCurve,
}

#[derive(Serialize)]
struct RunSummary {
    seed: [usize; 3],
    stop: StopReason,
    degraded: bool,
    curves: usize,
    cut_cost: f64,
    cut_size: usize,
    quads: usize,
    coverage: Option<f64>,
}

fn boundary_file(r: &SurfCutResult) -> BoundaryFile<'_> {
    BoundaryFile {
        seed: r.seed.voxel(),
        stop: r.stop,
        degraded: r.is_degraded(),
        curves: r.curves,
        cut_cost: r.cut_cost,
        cut_size: r.cut_size,
        boundary: &r.boundary,
    }
}

fn summary(r: &SurfCutResult) -> RunSummary {
    RunSummary {
        seed: r.seed.voxel(),
        stop: r.stop,
        degraded: r.is_degraded(),
        curves: r.curves,
        cut_cost: r.cut_cost,
        cut_size: r.cut_size,
        quads: r.mesh.quads.len(),
        coverage: r.coverage,
    }
}

fn read_boundary(path: &Path) -> Outcome<BoundaryCurve> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::path(format!("cannot read {}: {e}", path.display())))?;
    let mut v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::from(surfcut::Error::from(e)))?;
    if let Some(inner) = v.get_mut("boundary") {
        v = inner.take();
    }
    serde_json::from_value(v).map_err(|e| Failure::from(surfcut::Error::from(e)))
}

fn run_fmm(a: &FmmArgs) -> Outcome<()> {
    let params = checked(&a.params)?;
    let phi = load_svol(input(&a.phi)?)?;
    let out = out_dir(&a.out)?;
    let res = solve(&phi, seed_in(&phi, a.point)?, &params)?;
    save_svol(out.join("u.svol"), &res.u)?;
    save_svol(out.join("ue.svol"), &res.ue)?;
    Ok(())
}

fn run_extract_boundary(a: &SeededArgs) -> Outcome<()> {
    let params = checked(&a.params)?;
    let phi = load_svol(input(&a.phi)?)?;
    let out = out_dir(&a.out)?;
    let p = seed_in(&phi, a.point)?;
    let res = solve(&phi, p, &params)?;
    let bp = BoundaryParams {
        delta_d: params.delta_d,
        t: params.t,
        max_fronts: params.max_fronts,
    };
    let ex = extract_boundary(&res, &bp)?;
    let file = BoundaryFile {
        seed: p.voxel(),
        stop: ex.stop,
        degraded: ex.stop.is_degraded(),
        curves: ex.curves.len(),
        cut_cost: ex.cut_cost,
        cut_size: ex.cut_size,
        boundary: &ex.boundary,
    };
    write(out.join("boundary.json"), to_json(&file)?)
}

fn run_extract_surface(a: &SurfaceArgs) -> Outcome<()> {
    let params = checked(&a.params)?;
    let phi = load_svol(input(&a.phi)?)?;
    let (boundary, default_seed) = match (&a.boundary, &a.gt) {
        (Some(b), _) => (read_boundary(input(b)?)?, None),
        (None, Some(g)) => {
            let gt = GroundTruth::load(input(g)?)?;
            (gt.boundary_curve()?, Some(gt.interior_seed()))
        }
        (None, None) => {
            return Err(Failure::param(
                "either --boundary or --gt is required".into(),
            ))
        }
    };
    let p = match (a.point, default_seed) {
        (Some(v), _) => seed_in(&phi, v)?,
        (None, Some(s)) => s,
        (None, None) => return Err(Failure::param("--point is required with --boundary".into())),
    };
    let out = out_dir(&a.out)?;
    let mesh = surface_from_boundary(&phi, p, &boundary, &params)?;
    write(out.join("surface.obj"), mesh.to_obj())
}

fn run_surfcut(a: &SeededArgs) -> Outcome<()> {
    let params = checked(&a.params)?;
    let phi = load_svol(input(&a.phi)?)?;
    let out = out_dir(&a.out)?;
    let r = surfcut(&phi, seed_in(&phi, a.point)?, &params)?;
    if a.timings {
        eprintln!("{:?}", r.timings);
    }
    write(out.join("boundary.json"), to_json(&boundary_file(&r))?)?;
    write(out.join("surface.obj"), r.mesh.to_obj())?;
    print!("{}", to_json(&summary(&r))?);
    Ok(())
}

#[derive(Serialize)]
struct AutoSurface {
    #[serde(flatten)]
    run: RunSummary,
    surface: String,
    boundary: String,
}

#[derive(Serialize)]
struct AutoFailure {
    seed: [usize; 3],
    error: String,
}

#[derive(Serialize)]
struct AutoFile {
    surfaces: Vec<AutoSurface>,
    duplicates: Vec<[usize; 3]>,
    failures: Vec<AutoFailure>,
}

fn run_auto(a: &AutoArgs) -> Outcome<()> {
    let params = checked(&a.params)?;
    let phi = load_svol(input(&a.phi)?)?;
    let out = out_dir(&a.out)?;
    let auto = AutoParams {
        max_seeds: a.max_seeds,
        percentile: a.percentile,
        suppression_radius: a.suppression_radius,
        threads: a.threads,
        dedup_cov: a.dedup_cov,
    };
    let report = surfcut_auto(&phi, &params, &auto)?;
    let mut file = AutoFile {
        surfaces: Vec::new(),
        duplicates: report.duplicates.iter().map(|s| s.voxel()).collect(),
        failures: report
            .failures
            .iter()
            .map(|(s, e)| AutoFailure {
                seed: s.voxel(),
                error: e.clone(),
            })
            .collect(),
    };
    for (i, r) in report.surfaces.iter().enumerate() {
        let (surface, boundary) = (
            format!("surface_{i:03}.obj"),
            format!("boundary_{i:03}.json"),
        );
        write(out.join(&surface), r.mesh.to_obj())?;
        write(out.join(&boundary), to_json(&boundary_file(r))?)?;
        file.surfaces.push(AutoSurface {
            run: summary(r),
            surface,
            boundary,
        });
    }
    let text = to_json(&file)?;
    write(out.join("auto.json"), &text)?;
    print!("{text}");
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Outcome<()> {
    if a.count == 0 {
        return Err(Failure::param("--count must be at least 1".into()));
    }
    if !(a.sigma >= 0.0 && a.sigma.is_finite()) {
        return Err(Failure::param(format!(
            "--sigma must be >= 0, got {}",
            a.sigma
        )));
    }
    let out = out_dir(&a.out)?;
    let mut manifest = Manifest {
        dims: a.dims,
        cases: Vec::new(),
    };
    for i in 0..a.count {
        let rng_seed = a.seed + i as u64;
        let s = generate_surface(a.kind, a.dims, rng_seed)?;
        let phi = add_gaussian_noise(&s.phi, a.sigma, rng_seed ^ 0x9e37_79b9_7f4a_7c15)?;
        let (phi_name, gt_name) = if a.count == 1 {
            ("phi.svol".to_string(), "gt.json".to_string())
        } else {
            (format!("phi_{i:03}.svol"), format!("gt_{i:03}.json"))
        };
        save_svol(out.join(&phi_name), &phi)?;
        s.gt.save(&out.join(&gt_name))?;
        manifest.cases.push(ManifestEntry {
            kind: a.kind,
            rng_seed,
            sigma: a.sigma,
            phi: phi_name,
            gt: gt_name,
        });
    }
    write(out.join("manifest.json"), to_json(&manifest)?)
}

fn run_eval(a: &EvalArgs) -> Outcome<()> {
    let mesh = SurfaceMesh::load(input(&a.result)?)?;
    let gt = GroundTruth::load(input(&a.gt)?)?;
    let boundary = match &a.boundary {
        Some(b) => Some(read_boundary(input(b)?)?.points()),
        None => mesh.boundary_points(),
    };
    let report = MetricReport::score(&mesh, boundary.as_deref(), &gt, a.epsilon)?;
    let text = to_json(&report)?;
    if let Some(path) = &a.report {
        write(path.clone(), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fmm(a) => run_fmm(a),
        Command::ExtractBoundary(a) => run_extract_boundary(a),
        Command::ExtractSurface(a) => run_extract_surface(a),
        Command::Surfcut(a) => run_surfcut(a),
        Command::Auto(a) => run_auto(a),
        Command::Synth(a) => run_synth(a),
        Command::Eval(a) => run_eval(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let line = serde_json::json!({ "error": { "code": f.code, "kind": f.kind, "message": f.message } });
            eprintln!("{line}");
            ExitCode::from(f.code)
        }
    }
}
