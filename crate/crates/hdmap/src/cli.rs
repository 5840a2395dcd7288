//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdmap_core::eval::{map_score, ChamferParams, ScoredElement, DEFAULT_THRESHOLDS};
use hdmap_core::geometry::rdp_simplify;
use hdmap_core::gradcheck::{self, GradCheckConfig};
use hdmap_core::hsmr::element_at_density;
use hdmap_core::losses::LossWeights;
use hdmap_core::refine::{progressive_fit, FitConfig};
use hdmap_core::scenegen::{generate_scene, PerceptionRange, SceneSpec};
use hdmap_core::{DensitySchedule, GroundTruthSet};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mapfile::{list_maps, read_map, write_atomic, write_map, MapContent, MapFile, MANIFEST_NAME};
use crate::report::{ap_table_csv, ap_table_text, trajectory_csv};
use crate::suite::SuiteManifest;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "HDMAP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hdmap", version, about = "Vectorized HD-map geometry, fitting and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic ground-truth scene, or the standard suite.
    Generate(GenerateArgs),
    /// Simplify every element with Ramer-Douglas-Peucker.
    Simplify(SimplifyArgs),
    /// Render every element at a fixed vertex count.
    Densify(DensifyArgs),
    /// Fit candidates to a ground-truth map (file or directory).
    Fit(FitArgs),
    /// Score predictions against ground truth (files or directories).
    Eval(EvalArgs),
    /// Compare analytic loss gradients with finite differences.
    GradCheck(GradCheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RangeArg {
    Regular,
    Long,
}

impl RangeArg {
    fn range(self) -> PerceptionRange {
        match self {
            RangeArg::Regular => PerceptionRange::REGULAR,
            RangeArg::Long => PerceptionRange::LONG,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Output map file.
    #[arg(short, long, required_unless_present = "suite", conflicts_with = "suite")]
    output: Option<PathBuf>,
    /// Write the 20 pinned scenes and a manifest into this directory instead.
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "regular")]
    range: RangeArg,
    /// Overrides of the seed's randomized spec.
    #[arg(long)]
    roads: Option<usize>,
    #[arg(long)]
    lanes: Option<usize>,
    #[arg(long)]
    crossings: Option<usize>,
    /// Upper bound of the curvature magnitude, 1/m.
    #[arg(long)]
    curvature_max: Option<f64>,
    /// Lateral wobble amplitude, m.
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Args, Debug)]
struct SimplifyArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct DensifyArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    density: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Ground-truth map file, or a directory of them.
    input: PathBuf,
    /// Prediction map file (a directory when the input is one).
    #[arg(short, long)]
    output: PathBuf,
    /// Loss trajectory CSV (a directory when the input is one).
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long, default_value = "3,5,9,17,17,17")]
    schedule: DensitySchedule,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    step_size: f64,
    #[arg(long, default_value_t = 1)]
    rematch_every: usize,
    /// Drop the edge-point, slope and angle terms.
    #[arg(long)]
    no_edge_loss: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Prediction map file or directory.
    predictions: PathBuf,
    /// Ground-truth map file or directory; directories pair files by name.
    ground_truth: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS.to_vec())]
    thresholds: Vec<f64>,
    /// Also write the AP table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args, Debug)]
struct GradCheckArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return e.exit_code();
    }
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // a pool may already exist when run() is called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Generate(a) => generate(a, out),
        Command::Simplify(a) => simplify(a, out),
        Command::Densify(a) => densify(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Eval(a) => eval(a, out, err),
        Command::GradCheck(a) => grad_check(a, out),
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::Write { path: PathBuf::from("<stdout>"), source: e }
}

fn scene_spec(a: &GenerateArgs, seed: u64) -> SceneSpec {
    let mut spec = SceneSpec::standard(seed);
    if let Some(r) = a.roads {
        spec.road_count = r;
    }
    if let Some(l) = a.lanes {
        spec.lanes_per_road = l;
    }
    if let Some(c) = a.crossings {
        spec.crossing_count = c;
    }
    if let Some(k) = a.curvature_max {
        spec.curvature = (0.0, k);
    }
    if let Some(j) = a.jitter {
        spec.jitter = j;
    }
    spec
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let range = a.range.range();
    if let Some(dir) = &a.suite {
        let manifest = SuiteManifest::standard().with_range(&range);
        std::fs::create_dir_all(dir).map_err(|source| Error::Write { path: dir.clone(), source })?;
        let scenes: Vec<(PathBuf, MapFile)> = manifest
            .seeds
            .par_iter()
            .map(|&seed| {
                let gt = generate_scene(&scene_spec(&a, seed), &range)?;
                let map = MapFile { range, content: MapContent::GroundTruth(gt) };
                Ok((dir.join(SuiteManifest::scene_file(seed)), map))
            })
            .collect::<Result<_>>()?;
        for (path, map) in &scenes {
            write_map(map, path)?;
        }
        write_atomic(&dir.join(MANIFEST_NAME), manifest.render().as_bytes())?;
        writeln!(out, "wrote {} scenes to {}", scenes.len(), dir.display()).map_err(io_out)?;
        return Ok(0);
    }
    let path = a.output.clone().expect("clap requires --output without --suite");
    let gt = generate_scene(&scene_spec(&a, a.seed), &range)?;
    let n = gt.len();
    write_map(&MapFile { range, content: MapContent::GroundTruth(gt) }, &path)?;
    writeln!(out, "wrote {n} elements to {}", path.display()).map_err(io_out)?;
    Ok(0)
}

fn simplify(a: SimplifyArgs, out: &mut dyn Write) -> Result<i32> {
    if !(a.epsilon >= 0.0 && a.epsilon.is_finite()) {
        return Err(Error::Usage(format!("--epsilon must be finite and non-negative, got {}", a.epsilon)));
    }
    let map = read_map(&a.input)?;
    let content = map.content.try_map(|e| e.with_shape(rdp_simplify(e.shape(), a.epsilon)?))?;
    let before: usize = map.content.elements().iter().map(|(e, _)| e.shape().len()).sum();
    let after: usize = content.elements().iter().map(|(e, _)| e.shape().len()).sum();
    write_map(&MapFile { range: map.range, content }, &a.output)?;
    writeln!(out, "{before} -> {after} vertices").map_err(io_out)?;
    Ok(0)
}

fn densify(a: DensifyArgs, out: &mut dyn Write) -> Result<i32> {
    let map = read_map(&a.input)?;
    let content = map.content.try_map(|e| e.with_shape(element_at_density(e, a.density)?))?;
    let n = content.len();
    write_map(&MapFile { range: map.range, content }, &a.output)?;
    writeln!(out, "rendered {n} elements at {} vertices", a.density).map_err(io_out)?;
    Ok(0)
}

fn fit_config(a: &FitArgs, range: PerceptionRange) -> FitConfig {
    let weights = if a.no_edge_loss { LossWeights::default().without_edge_loss() } else { LossWeights::default() };
    FitConfig {
        schedule: a.schedule.clone(),
        n_candidates: a.n,
        steps_per_layer: a.steps,
        step_size: a.step_size,
        seed: a.seed,
        rematch_every: a.rematch_every,
        weights,
        range,
        ..FitConfig::default()
    }
}

struct FitJob {
    input: PathBuf,
    output: PathBuf,
    trajectory: Option<PathBuf>,
}

fn fit_one(job: &FitJob, a: &FitArgs) -> Result<(usize, usize)> {
    let map = read_map(&job.input)?;
    let gt = map.ground_truth().ok_or_else(|| {
        Error::Usage(format!("{}: expected a ground-truth map, found predictions", job.input.display()))
    })?;
    let config = fit_config(a, map.range);
    let outcome = progressive_fit(gt, &config)?;
    let kept = outcome.predictions.len();
    let traj = job.trajectory.as_ref().map(|_| trajectory_csv(&outcome.trajectory)).transpose()?;
    write_map(&MapFile { range: map.range, content: MapContent::Predictions(outcome.predictions) }, &job.output)?;
    if let (Some(path), Some(bytes)) = (&job.trajectory, traj) {
        write_atomic(path, &bytes)?;
    }
    Ok((gt.len(), kept))
}

fn fit(a: FitArgs, out: &mut dyn Write) -> Result<i32> {
    let jobs = if a.input.is_dir() {
        let inputs = list_maps(&a.input)?;
        for d in std::iter::once(&a.output).chain(a.trajectory.as_ref()) {
            std::fs::create_dir_all(d).map_err(|source| Error::Write { path: d.clone(), source })?;
        }
        inputs
            .into_iter()
            .map(|input| {
                let name = input.file_name().expect("listed files have names").to_owned();
                let stem = input.file_stem().expect("listed files have stems").to_owned();
                FitJob {
                    output: a.output.join(&name),
                    trajectory: a.trajectory.as_ref().map(|t| t.join(Path::new(&stem).with_extension("csv"))),
                    input,
                }
            })
            .collect()
    } else {
        vec![FitJob { input: a.input.clone(), output: a.output.clone(), trajectory: a.trajectory.clone() }]
    };
    let results: Vec<Result<(usize, usize)>> = jobs.par_iter().map(|j| fit_one(j, &a)).collect();
    for (job, r) in jobs.iter().zip(results) {
        let (m, kept) = r?;
        writeln!(out, "{}: {m} ground-truth elements, {kept} predictions", job.input.display()).map_err(io_out)?;
    }
    Ok(0)
}

fn as_predictions(map: MapFile) -> Vec<ScoredElement> {
    match map.content {
        MapContent::Predictions(p) => p,
        // a ground-truth file scored as a prediction: every element fully confident
        MapContent::GroundTruth(g) => {
            g.elements.into_iter().map(|element| ScoredElement { element, confidence: 1.0 }).collect()
        }
    }
}

fn pair_files(pred: &Path, gt: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    match (pred.is_dir(), gt.is_dir()) {
        (false, false) => Ok(vec![(pred.to_path_buf(), gt.to_path_buf())]),
        (true, true) => {
            let gts = list_maps(gt)?;
            let preds = list_maps(pred)?;
            let name = |p: &PathBuf| p.file_name().map(|n| n.to_owned());
            for p in &preds {
                if !gts.iter().any(|g| name(g) == name(p)) {
                    return Err(Error::Usage(format!("{} has no ground-truth counterpart in {}", p.display(), gt.display())));
                }
            }
            gts.into_iter()
                .map(|g| {
                    let p = pred.join(g.file_name().expect("listed files have names"));
                    if p.is_file() {
                        Ok((p, g))
                    } else {
                        Err(Error::Usage(format!("{} has no prediction counterpart in {}", g.display(), pred.display())))
                    }
                })
                .collect()
        }
        _ => Err(Error::Usage("predictions and ground truth must both be files or both be directories".into())),
    }
}

fn eval(a: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let pairs = pair_files(&a.predictions, &a.ground_truth)?;
    let loaded: Vec<(Vec<ScoredElement>, GroundTruthSet)> = pairs
        .par_iter()
        .map(|(p, g)| {
            let gt = read_map(g)?;
            let gt = match gt.content {
                MapContent::GroundTruth(s) => s,
                MapContent::Predictions(_) => {
                    return Err(Error::Usage(format!("{}: ground truth must not carry confidences", g.display())))
                }
            };
            Ok((as_predictions(read_map(p)?), gt))
        })
        .collect::<Result<_>>()?;
    let (preds, gts): (Vec<_>, Vec<_>) = loaded.into_iter().unzip();
    let score = map_score(&preds, &gts, &a.thresholds, ChamferParams { sample_count: a.samples })?;
    for c in &score.excluded {
        writeln!(err, "warning: no {} in the ground truth; excluded from mAP", c.name()).map_err(io_out)?;
    }
    write!(out, "{}", ap_table_text(&score)).map_err(io_out)?;
    writeln!(out, "mAP {:.4} over {} scene(s)", score.map, pairs.len()).map_err(io_out)?;
    if let Some(path) = &a.csv {
        write_atomic(path, &ap_table_csv(&score)?)?;
    }
    Ok(0)
}

fn grad_check(a: GradCheckArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = GradCheckConfig { trials: a.trials, seed: a.seed, ..GradCheckConfig::default() };
    let report = gradcheck::run(&cfg)?;
    writeln!(out, "{:<11} {:>7} {:>7} {:>7} {:>12}  result", "component", "density", "checked", "skipped", "max rel err")
        .map_err(io_out)?;
    for c in &report.components {
        let verdict = if c.passed(report.tolerance) { "pass" } else { "FAIL" };
        writeln!(
            out,
            "{:<11} {:>7} {:>7} {:>7} {:>12.3e}  {verdict}",
            c.component.name(),
            c.density,
            c.checked,
            c.skipped,
            c.max_relative_error
        )
        .map_err(io_out)?;
    }
    let passed = report.passed();
    writeln!(out, "grad-check {} (tolerance {:e})", if passed { "passed" } else { "FAILED" }, report.tolerance)
        .map_err(io_out)?;
    Ok(if passed { 0 } else { 2 })
}
