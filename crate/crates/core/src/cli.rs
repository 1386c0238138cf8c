//! Command-line front end. Exit codes: 0 success, 2 bad configuration or
//! arguments, 3 filesystem failure.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::corresponding_points;
use crate::io::write_atomic;
use crate::losses::LossWeights;
use crate::mesh::{MeshError, TriangleMesh};
use crate::metrics::{aggregate_report, PoseErrorRecord, PoseMetrics, CSV_HEADER};
use crate::pfm::{read_pfm, write_pfm, PfmError};
use crate::pnp::{solve_pnp_ransac, PnpProblem, RansacConfig};
use crate::synth::{
    corrupt, derive_seed, generate_dataset, generate_samples, load_dataset, GeneratorConfig, NoiseModel, PoseRecord,
    SynthError, SyntheticSample,
};
use crate::uvmap::{extract_vertices, render_uv_position_map, DEFAULT_UV_SIZE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<PfmError> for CliError {
    fn from(e: PfmError) -> Self {
        match e {
            PfmError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Everything a run can be configured with. Loaded from `--config` (JSON),
/// then overridden by flags. The top-level seed drives every seeded stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub noise: NoiseModel,
    pub ransac: RansacConfig,
    pub loss_weights: LossWeights,
    /// Manifest of an existing dataset.
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Pushes the top-level seed into the stages and checks every part.
    pub fn finalize(mut self) -> Result<Self, CliError> {
        self.generator.seed = self.seed;
        self.noise.seed = self.seed;
        self.ransac.seed = self.seed;
        self.generator.validate()?;
        self.noise.validate()?;
        self.ransac.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.loss_weights.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(self)
    }

    fn out(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| CliError::Config("--out is required".into()))
    }

    fn dataset(&self) -> Result<&Path, CliError> {
        self.dataset.as_deref().ok_or_else(|| CliError::Config("--manifest is required".into()))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "perspface",
    version,
    about = "Perspective face geometry: synthetic data, PnP pose recovery and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (mesh, per-sample pixels, correspondences, masks, manifest).
    Generate(GenerateArgs),
    /// Recover a pose for every sample of a dataset from corrupted correspondences.
    Solve(SolveArgs),
    /// Score predictions against a dataset's ground truth.
    Evaluate(EvaluateArgs),
    /// Generate, corrupt, solve and score across values of one parameter.
    Sweep(SweepArgs),
    /// Render a mesh's UV position map to PFM (plus its `.mask.pfm` weight mask).
    RenderUv(RenderUvArgs),
    /// Read vertices back out of a UV position map and write them as OBJ.
    Extract(ExtractArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// Number of samples.
    #[arg(long)]
    pub n: Option<usize>,
    /// Pixels per sample.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub tz_min: Option<f64>,
    #[arg(long)]
    pub tz_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub pixel_sigma: Option<f64>,
    #[arg(long)]
    pub corr_sigma: Option<f64>,
    #[arg(long)]
    pub outlier_rate: Option<f64>,
    #[arg(long)]
    pub vertex_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RansacArgs {
    #[arg(long)]
    pub ransac_iters: Option<usize>,
    /// Inlier threshold in pixels.
    #[arg(long)]
    pub ransac_thresh: Option<f64>,
    /// Skip the Gauss-Newton refinement after consensus.
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub generator: GeneratorArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub ransac: RansacArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub predictions: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    PixelSigma,
    OutlierRate,
    M,
    Tz,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::PixelSigma => "pixel_sigma",
            SweepParam::OutlierRate => "outlier_rate",
            SweepParam::M => "m",
            SweepParam::Tz => "tz",
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub ransac: RansacArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RenderUvArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Map size as HEIGHTxWIDTH, or a single number for a square map.
    #[arg(long, default_value_t = format!("{DEFAULT_UV_SIZE}x{DEFAULT_UV_SIZE}"))]
    pub dims: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Position map written by `render-uv`.
    #[arg(long)]
    pub map: PathBuf,
    /// Mesh supplying UV coordinates and triangles.
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_samples(manifest: &Path) -> Result<Vec<SyntheticSample>, CliError> {
    load_dataset(manifest).map(|(_, s)| s).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", manifest.display())),
        other => other,
    })
}

fn base_config(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn apply_generator(cfg: &mut ExperimentConfig, a: &GeneratorArgs) {
    let g = &mut cfg.generator;
    if let Some(n) = a.n {
        g.samples = n;
    }
    if let Some(m) = a.m {
        g.m = m;
    }
    if let Some(v) = a.tz_min {
        g.ranges.tz[0] = v;
    }
    if let Some(v) = a.tz_max {
        g.ranges.tz[1] = v;
    }
}

fn apply_noise(cfg: &mut ExperimentConfig, a: &NoiseArgs) {
    let n = &mut cfg.noise;
    for (slot, flag) in [
        (&mut n.pixel_sigma, a.pixel_sigma),
        (&mut n.corr_sigma, a.corr_sigma),
        (&mut n.outlier_rate, a.outlier_rate),
        (&mut n.vertex_sigma, a.vertex_sigma),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
}

fn apply_ransac(cfg: &mut ExperimentConfig, a: &RansacArgs) {
    if let Some(i) = a.ransac_iters {
        cfg.ransac.max_iterations = i;
    }
    if let Some(t) = a.ransac_thresh {
        cfg.ransac.inlier_threshold_px = t;
    }
    if a.no_refine {
        cfg.ransac.refine = false;
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    write_atomic(path, bytes).map_err(io_err(path))
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// One solved (or failed) sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: usize,
    pub pose: Option<PoseRecord>,
    pub inliers: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub noise: NoiseModel,
    pub ransac: RansacConfig,
    pub predictions: Vec<Prediction>,
}

/// Corrupts the sample's ground truth and solves for its pose.
pub fn predict(sample: &SyntheticSample, noise: &NoiseModel, ransac: &RansacConfig) -> Prediction {
    let fail = |e: String| Prediction { id: sample.id, pose: None, inliers: 0, error: Some(e) };
    let c = match corrupt(sample, noise) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string()),
    };
    let points = corresponding_points(&c.correspondence, &c.vertices).expect("corrupted shape keeps the vertex count");
    let problem = match PnpProblem::new(c.pixels.0, points, sample.intrinsics) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let cfg = RansacConfig { seed: derive_seed(ransac.seed, sample.id as u64), ..*ransac };
    match solve_pnp_ransac(&problem, &cfg) {
        Ok(r) => {
            Prediction { id: sample.id, pose: Some(PoseRecord::from(&r.pose)), inliers: r.inliers.len(), error: None }
        }
        Err(e) => fail(e.to_string()),
    }
}

/// Per-sample error records plus the count of unsolved samples.
fn score(samples: &[SyntheticSample], predictions: &[Prediction]) -> Result<(Vec<PoseErrorRecord>, usize), CliError> {
    let by_id: HashMap<usize, &SyntheticSample> = samples.iter().map(|s| (s.id, s)).collect();
    if predictions.len() != samples.len() {
        return Err(CliError::Config(format!("{} predictions for {} samples", predictions.len(), samples.len())));
    }
    let mut records = Vec::with_capacity(predictions.len());
    let mut failed = 0;
    for p in predictions {
        let s = by_id
            .get(&p.id)
            .ok_or_else(|| CliError::Config(format!("prediction id {} is not in the manifest", p.id)))?;
        let Some(rec) = &p.pose else {
            failed += 1;
            continue;
        };
        let pose = rec.to_pose()?;
        let r = PoseErrorRecord::between(&s.pose, &pose)
            .with_add(&s.mesh, &s.pose, &pose)
            .map_err(|e| CliError::Config(e.to_string()))?;
        records.push(r);
    }
    Ok((records, failed))
}

fn report(records: &[PoseErrorRecord], failed: usize) -> Result<PoseMetrics, CliError> {
    aggregate_report(records).map_err(|e| CliError::Config(format!("{e} ({failed} samples failed)")))
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let mut cfg = base_config(&a.common)?;
    apply_generator(&mut cfg, &a.generator);
    let cfg = cfg.finalize()?;
    let out = cfg.out()?;
    let manifest = generate_dataset(&cfg.generator, out)?;
    eprintln!("wrote {} samples to {}", manifest.samples.len(), out.display());
    Ok(())
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let mut cfg = base_config(&a.common)?;
    if let Some(m) = &a.manifest {
        cfg.dataset = Some(m.clone());
    }
    apply_noise(&mut cfg, &a.noise);
    apply_ransac(&mut cfg, &a.ransac);
    let cfg = cfg.finalize()?;
    let out = cfg.out()?;
    let samples = load_samples(cfg.dataset()?)?;
    let predictions: Vec<Prediction> = samples.par_iter().map(|s| predict(s, &cfg.noise, &cfg.ransac)).collect();
    let failed = predictions.iter().filter(|p| p.pose.is_none()).count();
    let file = PredictionFile { noise: cfg.noise, ransac: cfg.ransac, predictions };
    write_file(out, &to_json_bytes(&file))?;
    eprintln!("solved {} of {} samples -> {}", file.predictions.len() - failed, file.predictions.len(), out.display());
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let mut cfg = base_config(&a.common)?;
    if let Some(m) = &a.manifest {
        cfg.dataset = Some(m.clone());
    }
    let cfg = cfg.finalize()?;
    let out = cfg.out()?;
    let samples = load_samples(cfg.dataset()?)?;
    let text = fs::read_to_string(&a.predictions).map_err(io_err(&a.predictions))?;
    let preds: PredictionFile =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", a.predictions.display())))?;
    let (records, failed) = score(&samples, &preds.predictions)?;
    let metrics = report(&records, failed)?;

    let mut per_sample = String::from("id,yaw,pitch,roll,tx,ty,tz,add_mm\n");
    let solved = preds.predictions.iter().filter(|p| p.pose.is_some());
    for (p, r) in solved.zip(&records) {
        per_sample.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.id,
            r.yaw,
            r.pitch,
            r.roll,
            r.tx,
            r.ty,
            r.tz,
            r.add_mm.unwrap_or(f64::NAN)
        ));
    }
    let mut json = metrics.to_json();
    json["failed"] = failed.into();
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_file(&out.join("metrics.csv"), metrics.to_csv().as_bytes())?;
    write_file(&out.join("metrics.json"), &to_json_bytes(&json))?;
    write_file(&out.join("per_sample.csv"), per_sample.as_bytes())?;
    eprint!("{}", metrics.to_csv());
    Ok(())
}

/// Column layout of the sweep CSV.
pub fn sweep_header(param: SweepParam) -> String {
    format!("{},solved,failed,median_rotation_deg,median_add_mm,{CSV_HEADER}", param.name())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    if a.values.is_empty() {
        return Err(CliError::Config("--values needs at least one value".into()));
    }
    let mut cfg = base_config(&a.common)?;
    apply_generator(&mut cfg, &a.generator);
    apply_noise(&mut cfg, &a.noise);
    apply_ransac(&mut cfg, &a.ransac);
    let cfg = cfg.finalize()?;
    let out = cfg.out()?;

    let mut csv = sweep_header(a.param);
    csv.push('\n');
    let mut shared: Option<Vec<SyntheticSample>> = None;
    for &value in &a.values {
        let mut point = cfg.clone();
        match a.param {
            SweepParam::PixelSigma => point.noise.pixel_sigma = value,
            SweepParam::OutlierRate => point.noise.outlier_rate = value,
            SweepParam::M => {
                if value.fract() != 0.0 || value < 4.0 {
                    return Err(CliError::Config(format!("m must be an integer of at least 4, got {value}")));
                }
                point.generator.m = value as usize;
            }
            SweepParam::Tz => point.generator.ranges.tz = [value, value],
        }
        let point = point.finalize()?;
        let regenerate = matches!(a.param, SweepParam::M | SweepParam::Tz);
        let fresh;
        let samples = if regenerate {
            fresh = generate_samples(&point.generator)?;
            &fresh
        } else {
            if shared.is_none() {
                shared = Some(generate_samples(&point.generator)?);
            }
            shared.as_ref().expect("just set")
        };
        let predictions: Vec<Prediction> =
            samples.par_iter().map(|s| predict(s, &point.noise, &point.ransac)).collect();
        let (records, failed) = score(samples, &predictions)?;
        let rotation: Vec<f64> = samples
            .iter()
            .zip(&predictions)
            .filter_map(|(s, p)| p.pose.map(|r| r.to_pose().map(|pose| pose.rotation_angle_to(&s.pose))))
            .collect::<Result<_, _>>()?;
        let adds: Vec<f64> = records.iter().filter_map(|r| r.add_mm).collect();
        let row = match report(&records, failed) {
            Ok(m) => m.csv_row(),
            Err(_) => ",,,,,,,,".to_string(),
        };
        csv.push_str(&format!("{value},{},{failed},{},{},{row}\n", records.len(), median(rotation), median(adds)));
    }
    write_file(out, csv.as_bytes())?;
    eprint!("{csv}");
    Ok(())
}

fn parse_dims(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("--dims expects HEIGHTxWIDTH or N, got {s:?}"));
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    match s.split_once(['x', 'X']) {
        Some((h, w)) => Ok((parse(h)?, parse(w)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

fn load_obj(path: &Path) -> Result<TriangleMesh, CliError> {
    let is_obj = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
    if !is_obj {
        return Err(CliError::Config(format!("{} is not an .obj file", path.display())));
    }
    TriangleMesh::load(path).map_err(|e| match e {
        MeshError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Config(format!("{}: {other}", path.display())),
    })
}

pub fn cmd_render_uv(a: &RenderUvArgs) -> Result<(), CliError> {
    let (h, w) = parse_dims(&a.dims)?;
    let mesh = load_obj(&a.mesh)?;
    let rendered = render_uv_position_map(&mesh, h, w).map_err(|e| CliError::Config(e.to_string()))?;
    if !rendered.warnings.is_empty() {
        eprintln!("warning: {} render warnings (first: {:?})", rendered.warnings.len(), rendered.warnings[0]);
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    write_pfm(&rendered.map, &a.out)?;
    Ok(())
}

pub fn cmd_extract(a: &ExtractArgs) -> Result<(), CliError> {
    let mesh = load_obj(&a.mesh)?;
    if !a.map.exists() {
        return Err(CliError::Io(format!("{}: no such file", a.map.display())));
    }
    let map = read_pfm(&a.map)?;
    let vertices = extract_vertices(&map, mesh.uv_coords()).map_err(|e| CliError::Config(e.to_string()))?;
    let out = mesh.with_vertices(vertices)?;
    write_file(&a.out, out.to_obj_string().as_bytes())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::RenderUv(a) => cmd_render_uv(a),
        Command::Extract(a) => cmd_extract(a),
    }
}

/// Parses `args` (including the program name) and runs, returning the exit
/// code. Usage errors print clap's message and map to the config code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
