//! Terrain generator CLI: `generate` runs a simulation from a constraint
//! map, `bench` times both algorithms over square grids, `noise` writes
//! fractal noise maps for self-contained inputs.

mod bench;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use fluvial::baseline::{baseline_tick, BaselineGrid};
use fluvial::heightmap::{read_heightmap, write_heightmap, Heightmap, HeightmapFormat};
use fluvial::noise::fractal_noise;
use fluvial::simulation::{initialize, tick_with, FieldSpec, InitSpec, TickScratch, ValueStrengthSpec};

use config::{
    Algorithm, ConfigError, MapOrUniform, RangePair, ResolvedRun, RunConfig, ValueStrengthArg,
};

const REPORT_HEADER: &str = "#tick\tmean_abs_dh\tmax_abs_dh\tminima_count\tgorges_carved\tmillis";

#[derive(Parser)]
#[command(name = "fluvial", version, about = "Fluvial erosion terrain generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a terrain simulation and write the resulting heightmaps.
    Generate(GenerateArgs),
    /// Time both algorithms over square grids and print a summary table.
    Bench(bench::BenchArgs),
    /// Write a seeded fractal noise heightmap.
    Noise(NoiseArgs),
}

#[derive(Args, Debug, Default)]
struct GenerateArgs {
    /// Config file with `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Constraint heightmap (.pgm or raw float32).
    #[arg(long)]
    constraint: Option<PathBuf>,
    /// Remap the constraint map onto this world range, as MIN,MAX.
    #[arg(long, value_parser = RangePair::from_str)]
    constraint_range: Option<RangePair>,
    /// Moisture map path.
    #[arg(long, conflicts_with = "moisture_uniform")]
    moisture: Option<PathBuf>,
    /// Uniform moisture level (default 1).
    #[arg(long)]
    moisture_uniform: Option<f64>,
    /// Gradient constraint strength map path.
    #[arg(long, conflicts_with = "gradient_strength_uniform")]
    gradient_strength: Option<PathBuf>,
    /// Uniform gradient constraint strength (default 0.8).
    #[arg(long)]
    gradient_strength_uniform: Option<f64>,
    /// Value constraint strength: a number, or "remap" to reuse the
    /// constraint map re-mapped onto `[0,1]` (default 0.02).
    #[arg(long, value_parser = ValueStrengthArg::from_str)]
    value_strength: Option<ValueStrengthArg>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sea_level: Option<f64>,
    /// Output land heightmap path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional water-depth heightmap path.
    #[arg(long)]
    water_out: Option<PathBuf>,
    /// Write an intermediate heightmap every K ticks (plus the initial state).
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    /// Tributary decay factor k_d.
    #[arg(long)]
    k_d: Option<f64>,
    /// Erosion constant k_e.
    #[arg(long)]
    k_e: Option<f64>,
    /// Drainage exponent n.
    #[arg(long)]
    n_exp: Option<f64>,
    /// Slope exponent m.
    #[arg(long)]
    m_exp: Option<f64>,
    /// Gorge carve-weight constant k_g.
    #[arg(long)]
    k_g: Option<f64>,
    /// Constraint noise amplitude (default 0.5% of the constraint range).
    #[arg(long)]
    noise_amplitude: Option<f64>,
    /// Per-tick uplift, as a fraction of the constraint map (baseline only).
    #[arg(long)]
    uplift_scale: Option<f64>,
    /// Baseline erosion constant k.
    #[arg(long)]
    baseline_k: Option<f64>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 3)]
    octaves: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Remap the `[0,1]` noise onto this world range, as MIN,MAX.
    #[arg(long, value_parser = RangePair::from_str)]
    range: Option<RangePair>,
    #[arg(long)]
    out: PathBuf,
}

/// Errors split by exit code: configuration problems exit 1, file problems
/// exit 2.
#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<fluvial::SimError> for CliError {
    fn from(e: fluvial::SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Bench(args) => bench::run_bench(args),
        Command::Noise(args) => run_noise(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

impl GenerateArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            algorithm: self.algorithm,
            constraint: self.constraint,
            constraint_range: self.constraint_range,
            moisture: self.moisture,
            moisture_uniform: self.moisture_uniform,
            gradient_strength: self.gradient_strength,
            gradient_strength_uniform: self.gradient_strength_uniform,
            value_strength: self.value_strength,
            iterations: self.iterations,
            seed: self.seed,
            sea_level: self.sea_level,
            k_d: self.k_d,
            k_e: self.k_e,
            n_exp: self.n_exp,
            m_exp: self.m_exp,
            k_g: self.k_g,
            noise_amplitude: self.noise_amplitude,
            out: self.out,
            water_out: self.water_out,
            snapshot_every: self.snapshot_every,
            uplift_scale: self.uplift_scale,
            baseline_k: self.baseline_k,
        }
    }
}

/// Tick-report writer that goes quiet when the stdout consumer disappears
/// (the output files still get written).
struct ReportSink {
    enabled: bool,
}

impl ReportSink {
    fn new() -> Self {
        ReportSink { enabled: true }
    }

    fn line(&mut self, args: std::fmt::Arguments) -> Result<(), CliError> {
        use std::io::Write;
        if !self.enabled {
            return Ok(());
        }
        let mut out = std::io::stdout().lock();
        match out.write_fmt(args).and_then(|_| out.write_all(b"\n")) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {
                self.enabled = false;
                Ok(())
            }
            Err(e) => Err(CliError::Io(format!("stdout: {e}"))),
        }
    }
}

fn read_map(path: &Path) -> Result<Heightmap, CliError> {
    read_heightmap(path, HeightmapFormat::from_path(path))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_map(map: &Heightmap, path: &Path) -> Result<(), CliError> {
    write_heightmap(map, path, HeightmapFormat::from_path(path))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Checks every input exists and every output directory exists before any
/// simulation work starts.
fn validate_paths(run: &ResolvedRun) -> Result<(), CliError> {
    for path in run.input_paths() {
        if !path.is_file() {
            return Err(CliError::Io(format!("input not found: {}", path.display())));
        }
    }
    for path in run.output_paths() {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(CliError::Io(format!(
                    "output directory not found: {}",
                    dir.display()
                )));
            }
        }
    }
    Ok(())
}

/// `terrain.hgt` -> `terrain.<tick>.hgt`.
fn snapshot_path(out: &Path, tick: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("hgt");
    out.with_file_name(format!("{stem}.{tick}.{ext}"))
}

fn run_generate(args: GenerateArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        cfg = RunConfig::parse(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.0)))?;
    }
    let run = cfg.overlay(args.into_config()).resolve()?;
    validate_paths(&run)?;

    let mut constraint = read_map(&run.constraint)?;
    if let Some(range) = run.constraint_range {
        constraint.remap_to((range.lo, range.hi));
    }

    match run.algorithm {
        Algorithm::Ours => generate_ours(&run, constraint),
        Algorithm::Baseline => generate_baseline(&run, constraint),
    }
}

fn load_field(spec: &MapOrUniform) -> Result<FieldSpec, CliError> {
    match spec {
        MapOrUniform::Uniform(v) => Ok(FieldSpec::Uniform(*v)),
        MapOrUniform::Map(path) => Ok(FieldSpec::Map(read_map(path)?)),
    }
}

fn generate_ours(run: &ResolvedRun, constraint: Heightmap) -> Result<(), CliError> {
    let (width, height) = (constraint.width, constraint.height);
    let spec = InitSpec {
        constraint,
        moisture: load_field(&run.moisture)?,
        gradient_strength: load_field(&run.gradient_strength)?,
        value_strength: match run.value_strength {
            ValueStrengthArg::Uniform(v) => ValueStrengthSpec::Uniform(v),
            ValueStrengthArg::Remap => ValueStrengthSpec::Remap,
        },
    };
    let params = run.params.clone();
    let mut grid = initialize(&spec, &params)?;
    let mut scratch = TickScratch::new(&grid);

    let land = |g: &fluvial::TileGrid| -> Heightmap {
        Heightmap::from_samples(width, height, g.tiles().iter().map(|t| t.land_height).collect())
    };

    let mut sink = ReportSink::new();
    sink.line(format_args!("{REPORT_HEADER}"))?;
    if run.snapshot_every.is_some() {
        write_map(&land(&grid), &snapshot_path(&run.out, 0))?;
    }
    for t in 1..=params.iterations {
        let r = tick_with(&mut grid, &params, &mut scratch);
        sink.line(format_args!(
            "{t}\t{}\t{}\t{}\t{}\t{:.3}",
            r.mean_abs_dh, r.max_abs_dh, r.minima_count, r.gorges_carved, r.millis
        ))?;
        if run.snapshot_every.is_some_and(|k| t % k == 0) {
            write_map(&land(&grid), &snapshot_path(&run.out, t))?;
        }
    }

    write_map(&land(&grid), &run.out)?;
    if let Some(water_out) = &run.water_out {
        let water = Heightmap::from_samples(
            width,
            height,
            grid.tiles().iter().map(|t| t.water_height).collect(),
        );
        write_map(&water, water_out)?;
    }
    Ok(())
}

fn generate_baseline(run: &ResolvedRun, constraint: Heightmap) -> Result<(), CliError> {
    let (width, height) = (constraint.width, constraint.height);
    let uplift: Vec<f64> = constraint
        .samples
        .iter()
        .map(|&s| s * run.uplift_scale)
        .collect();
    let mut grid = BaselineGrid::new(width, height, &uplift, run.params.seed);

    let land = |g: &BaselineGrid| Heightmap::from_samples(width, height, g.heights());

    let mut sink = ReportSink::new();
    sink.line(format_args!("{REPORT_HEADER}"))?;
    if run.snapshot_every.is_some() {
        write_map(&land(&grid), &snapshot_path(&run.out, 0))?;
    }
    let mut before = Vec::new();
    for t in 1..=run.params.iterations {
        let start = Instant::now();
        before.clear();
        before.extend(grid.heights());
        baseline_tick(&mut grid, run.baseline_k);
        let millis = start.elapsed().as_secs_f64() * 1e3;
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for (i, a) in before.iter().enumerate() {
            let dh = (grid.tile(i).height - a).abs();
            sum += dh;
            max = max.max(dh);
        }
        sink.line(format_args!(
            "{t}\t{}\t{}\t{}\t0\t{millis:.3}",
            sum / (width * height) as f64,
            max,
            grid.last_unrouted
        ))?;
        if run.snapshot_every.is_some_and(|k| t % k == 0) {
            write_map(&land(&grid), &snapshot_path(&run.out, t))?;
        }
    }

    write_map(&land(&grid), &run.out)?;
    if let Some(water_out) = &run.water_out {
        write_map(&Heightmap::new(width, height), water_out)?;
    }
    Ok(())
}

fn run_noise(args: NoiseArgs) -> Result<(), CliError> {
    if args.width == 0 || args.height == 0 {
        return Err(CliError::Config("noise dimensions must be positive".into()));
    }
    let mut map = fractal_noise(args.width, args.height, args.octaves, args.seed);
    if let Some(range) = args.range {
        map.remap_to((range.lo, range.hi));
    }
    write_map(&map, &args.out)
}
