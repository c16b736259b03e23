use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use apsets::density::{density_estimate, discrepancy_scan};
use apsets::generators::{generate, GeneratorKind, GeneratorSpec, LatticeSpec, PerturbationTerm};
use apsets::harness::{run_suite, Suite};
use apsets::io::{canonical_json, format_float, read_point_set, write_point_set};
use apsets::measure::{convolve, scan_measure_periods, SampleGrid, TestFunction};
use apsets::metric::{bottleneck_distance, CollarSpec};
use apsets::pointset::{Point, PointConfiguration, Window, WindowKind};
use apsets::scanner::{scan_periods, shift_distance, CollarPolicy, PeriodScanSpec};

/// Almost periodic discrete sets: generation, distances, period scans,
/// densities, measure-level checks and verification suites.
#[derive(Parser, Debug)]
#[command(name = "apsets", version)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a point set.
    Generate(GenerateArgs),
    /// Windowed bottleneck distance between two point sets.
    Dist(DistArgs),
    /// Scan a box of shifts for eps-almost periods.
    Scan(ScanArgs),
    /// Cube counts and density ratios.
    Density(DensityArgs),
    /// Count differences of shifted cubes or balls.
    Discrepancy(DiscrepancyArgs),
    /// Convolution field of the counting measure as CSV.
    Convolve(ConvolveArgs),
    /// Scan for almost periods of the convolution field.
    MeasureScan(MeasureScanArgs),
    /// Run verification suites; exits 0 only if every check passes.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Kind {
    Lattice,
    PerturbedLattice,
    CutAndProject,
    Poisson,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Generator kind; ignored when --spec is given.
    #[arg(long, value_enum, required_unless_present = "spec")]
    kind: Option<Kind>,
    /// Full generator spec as JSON (any kind, including lattice unions).
    #[arg(long, conflicts_with = "kind")]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Window as kind:center:extent, e.g. cube:0:100 or ball:0,0:5.
    #[arg(long, default_value = "cube:0:100")]
    window: String,
    /// Lattice spacing (integer lattice scaled uniformly).
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Perturbation amplitude for perturbed lattices.
    #[arg(long, default_value_t = 0.1)]
    amplitude: f64,
    /// Perturbation frequency, broadcast to every coordinate.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    frequency: f64,
    /// Slope of the cut-and-project strip.
    #[arg(long, default_value_t = 0.618_033_988_749_894_9)]
    slope: f64,
    #[arg(long, default_value_t = 1.0)]
    intensity: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DistArgs {
    a: PathBuf,
    b: PathBuf,
    /// Collar width; points within it of the window boundary may stay unmatched.
    #[arg(long, default_value_t = 0.0)]
    collar: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    input: PathBuf,
    #[arg(long)]
    eps: f64,
    /// Half-width of the centered search cube.
    #[arg(long = "box")]
    half_width: f64,
    #[arg(long)]
    step: f64,
    /// Fixed collar width instead of the automatic |tau| + eps.
    #[arg(long)]
    collar: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write (tau, distance, accepted) rows for every grid node.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    input: PathBuf,
    /// Cube edge lengths.
    #[arg(long = "t", value_delimiter = ',', required = true)]
    ts: Vec<f64>,
    /// Number of random cube centers besides the origin.
    #[arg(long, default_value_t = 0)]
    alphas: usize,
    /// Random centers are drawn from the cube of this half-width.
    #[arg(long, default_value_t = 1.0)]
    alpha_radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ShapeKind {
    Cube,
    Ball,
}

#[derive(Args, Debug)]
struct DiscrepancyArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "cube")]
    shape: ShapeKind,
    /// Cube edges or ball radii, centered at the window center.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<f64>,
    /// Number of random shifts.
    #[arg(long, default_value_t = 10)]
    shifts: usize,
    #[arg(long, default_value_t = 1.0)]
    shift_radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ProfileArg {
    Tent,
    Bump,
}

#[derive(Args, Debug)]
struct FieldArgs {
    #[arg(long, value_enum, default_value = "tent")]
    profile: ProfileArg,
    /// Support radius of the test function.
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    /// Sample box as kind:center:extent (cube).
    #[arg(long)]
    grid_box: String,
    #[arg(long)]
    grid_step: f64,
}

impl FieldArgs {
    fn build(&self, dim: usize) -> anyhow::Result<(TestFunction, SampleGrid)> {
        let phi = match self.profile {
            ProfileArg::Tent => TestFunction::tent(self.radius)?,
            ProfileArg::Bump => TestFunction::bump(self.radius)?,
        };
        let grid = SampleGrid::new(parse_window(&self.grid_box, dim)?, self.grid_step)?;
        Ok((phi, grid))
    }
}

#[derive(Args, Debug)]
struct ConvolveArgs {
    input: PathBuf,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MeasureScanArgs {
    input: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long = "box")]
    half_width: f64,
    #[arg(long)]
    step: f64,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure that maps to exit code 2.
#[derive(Debug)]
struct Infeasible(String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Infeasible {}

/// Suite finished but some check failed.
#[derive(Debug)]
struct ChecksFailed(usize);

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} report(s) with failing checks", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

fn parse_window(s: &str, dim: usize) -> anyhow::Result<Window> {
    let parts: Vec<&str> = s.split(':').collect();
    let [kind, center, extent] = parts[..] else {
        bail!("window {s:?} is not of the form kind:center:extent");
    };
    let kind = match kind {
        "cube" => WindowKind::Cube,
        "ball" => WindowKind::Ball,
        other => bail!("unknown window kind {other:?}"),
    };
    let coords: Vec<f64> = center
        .split(',')
        .map(|c| c.trim().parse::<f64>().with_context(|| format!("bad window center {center:?}")))
        .collect::<anyhow::Result<_>>()?;
    let coords = if coords.len() == 1 { vec![coords[0]; dim] } else { coords };
    if coords.len() != dim {
        bail!("window center has {} coordinates, expected {dim}", coords.len());
    }
    let extent: f64 = extent.parse().with_context(|| format!("bad window extent {extent:?}"))?;
    Ok(Window::new(kind, Point::new(coords), extent)?)
}

fn emit(text: &str, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> anyhow::Result<()> {
    emit(&canonical_json(value)?, path)
}

fn read(path: &Path) -> anyhow::Result<PointConfiguration> {
    read_point_set(path).with_context(|| format!("reading {}", path.display()))
}

fn coords(p: &Point) -> Vec<String> {
    p.coords().iter().map(|&x| format_float(x)).collect()
}

fn axis_header(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

/// Writes a header and rows as CSV to `path`, or stdout.
fn emit_csv(header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>, path: Option<&Path>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    emit(std::str::from_utf8(&bytes)?, path)
}

fn cols(head: Vec<String>, tail: &[&str]) -> Vec<String> {
    head.into_iter().chain(tail.iter().map(|s| s.to_string())).collect()
}

fn random_points(k: usize, n: usize, half: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new((0..k).map(|_| rng.random_range(-half..=half)).collect()))
        .collect()
}

fn cmd_generate(a: GenerateArgs) -> anyhow::Result<()> {
    let spec: GeneratorSpec = match &a.spec {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?).context("parsing generator spec")?,
        None => {
            let window = parse_window(&a.window, a.dim)?;
            let mut lattice = LatticeSpec::integer(a.dim);
            for row in &mut lattice.basis {
                row.iter_mut().for_each(|x| *x *= a.spacing);
            }
            let kind = match a.kind.expect("clap enforces kind or spec") {
                Kind::Lattice => GeneratorKind::Lattice { lattice },
                Kind::PerturbedLattice => GeneratorKind::PerturbedLattice {
                    lattice,
                    terms: vec![PerturbationTerm {
                        amplitude: a.amplitude,
                        frequency: vec![a.frequency; a.dim],
                        phase: 0.0,
                    }],
                },
                Kind::CutAndProject => GeneratorKind::CutAndProject1d { slope: a.slope, acceptance: None },
                Kind::Poisson => GeneratorKind::Poisson { intensity: a.intensity, seed: a.seed },
            };
            GeneratorSpec::new(kind, window)
        }
    };
    let d = generate(&spec)?;
    log::info!("generated {} points", d.len());
    match &a.output {
        Some(p) => write_point_set(p, &d)?,
        None => emit(&apsets::io::point_set_to_string(&d)?, None)?,
    }
    Ok(())
}

fn cmd_dist(a: DistArgs) -> anyhow::Result<()> {
    let (x, y) = (read(&a.a)?, read(&a.b)?);
    let r = bottleneck_distance(&x, &y, CollarSpec::new(a.collar)?)?;
    emit_json(&r, a.output.as_deref())?;
    if r.value.is_none() {
        return Err(Infeasible("no matching covers the mandatory points".into()).into());
    }
    Ok(())
}

fn cmd_scan(a: ScanArgs) -> anyhow::Result<()> {
    let d = read(&a.input)?;
    let mut spec = PeriodScanSpec::centered(d.dim(), a.eps, a.half_width, a.step)?;
    if let Some(w) = a.collar {
        spec.collar_policy = CollarPolicy::Fixed { width: w };
    }
    let report = scan_periods(&d, &spec)?;
    log::info!("{} of {} shifts accepted", report.accepted.len(), report.nodes_scanned);
    emit_json(&report, a.output.as_deref())?;
    if let Some(path) = &a.csv {
        let mut rows = Vec::new();
        for tau in spec.nodes() {
            let r = shift_distance(&d, &tau, spec.collar_policy.collar_for(&tau, spec.eps))?;
            let dist = r.value.unwrap_or(f64::INFINITY);
            let ok = report.accepted.contains(&tau);
            rows.push(cols(coords(&tau), &[&format_float(dist), &ok.to_string()]));
        }
        emit_csv(cols(axis_header("tau", d.dim()), &["distance", "accepted"]), rows, Some(path))?;
    }
    Ok(())
}

fn cmd_density(a: DensityArgs) -> anyhow::Result<()> {
    let d = read(&a.input)?;
    let alphas = random_points(d.dim(), a.alphas, a.alpha_radius, a.seed);
    let est = density_estimate(&d, &alphas, &a.ts)?;
    emit_json(&est, a.output.as_deref())?;
    if let Some(path) = &a.csv {
        let mut header = vec!["t".to_string()];
        header.extend(axis_header("alpha", d.dim()));
        let rows = est.samples.iter().map(|s| {
            let mut row = vec![format_float(s.t)];
            row.extend(coords(&s.alpha));
            cols(row, &[&s.count.to_string(), &format_float(s.ratio)])
        });
        emit_csv(cols(header, &["count", "ratio"]), rows, Some(path))?;
    }
    Ok(())
}

fn cmd_discrepancy(a: DiscrepancyArgs) -> anyhow::Result<()> {
    let d = read(&a.input)?;
    let center = d.window().center.clone();
    let shapes: Vec<Window> = a
        .sizes
        .iter()
        .map(|&s| match a.shape {
            ShapeKind::Cube => Window::cube(center.clone(), s),
            ShapeKind::Ball => Window::ball(center.clone(), s),
        })
        .collect::<Result<_, _>>()?;
    let shifts = random_points(d.dim(), a.shifts, a.shift_radius, a.seed);
    let report = discrepancy_scan(&d, &shapes, &shifts)?;
    emit_json(&report, a.output.as_deref())?;
    if let Some(path) = &a.csv {
        let mut header = vec!["diameter".to_string()];
        header.extend(axis_header("shift", d.dim()));
        let rows = report.observed.iter().map(|o| {
            let mut row = vec![format_float(o.diameter)];
            row.extend(coords(&o.shift));
            cols(row, &[&o.delta.to_string()])
        });
        emit_csv(cols(header, &["delta"]), rows, Some(path))?;
    }
    Ok(())
}

fn cmd_convolve(a: ConvolveArgs) -> anyhow::Result<()> {
    let d = read(&a.input)?;
    let (phi, grid) = a.field.build(d.dim())?;
    let field = convolve(&d, &phi, &grid)?;
    let rows = field.nodes.iter().zip(&field.values).map(|(x, v)| cols(coords(x), &[&format_float(*v)]));
    emit_csv(cols(axis_header("x", d.dim()), &["value"]), rows, a.output.as_deref())
}

fn cmd_measure_scan(a: MeasureScanArgs) -> anyhow::Result<()> {
    let d = read(&a.input)?;
    let (phi, grid) = a.field.build(d.dim())?;
    let spec = PeriodScanSpec::centered(d.dim(), a.eps, a.half_width, a.step)?;
    let report = scan_measure_periods(&d, &spec, &phi, &grid)?;
    emit_json(&report, a.output.as_deref())
}

fn cmd_verify(a: VerifyArgs) -> anyhow::Result<()> {
    let suite: Suite = a.suite.parse()?;
    let reports = run_suite(suite)?;
    for r in &reports {
        for c in &r.checks {
            log::info!("{} {} {}", r.id, if c.passed { "pass" } else { "FAIL" }, c.name);
        }
    }
    emit_json(&reports, a.out.as_deref())?;
    let failing = reports.iter().filter(|r| !r.all_checks_passed).count();
    if failing > 0 {
        return Err(ChecksFailed(failing).into());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Infeasible>().is_some() {
        return 2;
    }
    match err.downcast_ref::<apsets::Error>() {
        Some(e) if e.is_window_too_small() => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Dist(a) => cmd_dist(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Density(a) => cmd_density(a),
        Command::Discrepancy(a) => cmd_discrepancy(a),
        Command::Convolve(a) => cmd_convolve(a),
        Command::MeasureScan(a) => cmd_measure_scan(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
