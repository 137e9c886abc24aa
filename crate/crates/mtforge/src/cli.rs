//! Command-line interface of the `mtforge` binary.
//!
//! Every run logs its resolved configuration as one JSON line prefixed with
//! `config `. Saving that JSON and passing it back with `--config` repeats
//! the run exactly.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mtforge_core::analytic1d::{impedance_recursion, LayeredModel};
use mtforge_core::femsolver::{Channel, SolverOptions};
use mtforge_core::geomodel::generate_grf;
use mtforge_core::metrics::{report, ReportOptions, SsimParams};
use mtforge_core::pipeline::{
    add_noise, split, DatasetManifest, NoiseSpec, Normalization, NormalizationAccumulator,
    PhaseScaling, SampleMeta, SampleRecord,
};
use serde::{Deserialize, Serialize};

use crate::dataset::{build_dataset, BuildConfig, MANIFEST_FILE};
use crate::error::{io_err, Error, Result};
use crate::forward::{forward_parallel, thread_pool};
use crate::io::{
    list_samples, read_frequencies, read_grid, read_json, read_model, read_sample, write_atomic,
    write_json, write_model, write_sample_to, STANDARD_SWEEP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mtforge",
    version,
    about = "3D magnetotelluric forward modeling and dataset generation",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    /// Repeat a run from the JSON logged on its `config` line.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "flags", rename_all = "kebab-case")]
pub enum Command {
    /// Generate random-field resistivity models as raw f32 files.
    GenModels(GenModelsArgs),
    /// Compute the 3D response of one model.
    Forward(ForwardArgs),
    /// Print the 1D layered-earth response as CSV.
    Forward1d(Forward1dArgs),
    /// Generate a complete dataset with manifest.
    BuildDataset(BuildDatasetArgs),
    /// Add multiplicative Gaussian noise to a sample's response.
    AddNoise(AddNoiseArgs),
    /// Recompute the train/validation/test split of a manifest.
    Split(SplitArgs),
    /// Compare predicted against true samples.
    Metrics(MetricsArgs),
    /// Export one channel at one frequency as a 2D CSV grid.
    ExportSlice(ExportSliceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenModels(_) => "gen-models",
            Command::Forward(_) => "forward",
            Command::Forward1d(_) => "forward1d",
            Command::BuildDataset(_) => "build-dataset",
            Command::AddNoise(_) => "add-noise",
            Command::Split(_) => "split",
            Command::Metrics(_) => "metrics",
            Command::ExportSlice(_) => "export-slice",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenModelsArgs {
    #[arg(long, default_value_t = 1)]
    pub n_per_alpha: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    /// Model cells along x, y, z.
    #[arg(long, value_parser = parse_triple::<usize>, default_value = "32,32,32")]
    pub dims: [usize; 3],
    /// Cell size in meters along x, y, z.
    #[arg(long, value_parser = parse_triple::<f64>, default_value = "1000,1000,1000")]
    pub spacing: [f64; 3],
    #[arg(long, default_value_t = 1.0)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 1.0e4)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 0)]
    pub master_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ForwardArgs {
    /// Raw f32 model with a JSON sidecar.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value = STANDARD_SWEEP)]
    pub freqs: String,
    /// Output sample file; its stem becomes the sample id.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "MTFORGE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = SolverOptions::default().tolerance)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Forward1dArgs {
    /// Layer resistivities in Ωm from the top; the last is the half-space.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rho: Vec<f64>,
    /// Layer thicknesses in meters, one fewer than `--rho`.
    #[arg(long, value_delimiter = ',')]
    pub thickness: Vec<f64>,
    #[arg(long, default_value = STANDARD_SWEEP)]
    pub freqs: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BuildDatasetArgs {
    #[arg(long)]
    pub n_per_alpha: usize,
    #[arg(long, value_delimiter = ',', default_value = "6,7,8,9,10")]
    pub alphas: Vec<f64>,
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value = STANDARD_SWEEP)]
    pub freqs: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "MTFORGE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub master_seed: u64,
    #[arg(long, value_parser = parse_triple::<f64>, default_value = "0.85,0.10,0.05")]
    pub fractions: [f64; 3],
    #[arg(long, value_parser = parse_phase_scaling, default_value = "log10")]
    pub phase_scaling: PhaseScaling,
    #[arg(long, default_value_t = 1.0)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 1.0e4)]
    pub rho_max: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AddNoiseArgs {
    /// Relative standard deviation, e.g. 0.05.
    #[arg(long)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    pub input: PathBuf,
    /// Output sample file; its stem becomes the sample id.
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_triple::<f64>, default_value = "0.85,0.10,0.05")]
    pub fractions: [f64; 3],
    /// Shuffle seed; defaults to the manifest's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the updated manifest; defaults to rewriting it in place.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Report file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Normalization source. Defaults to `<truth>/manifest.json`, falling
    /// back to maxima over the true samples.
    #[arg(long, conflicts_with = "raw")]
    pub manifest: Option<PathBuf>,
    /// Compare channels in physical units instead of normalized.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Windowed SSIM with this cubic window instead of the global form.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExportSliceArgs {
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long, value_parser = parse_channel)]
    pub channel: Channel,
    #[arg(long)]
    pub freq_index: usize,
    /// CSV file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub threads: Option<usize>,
    pub master_seed: Option<u64>,
}

fn parse_triple<T: std::str::FromStr>(s: &str) -> std::result::Result<[T; 3], String>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[T; 3]>::try_from(parts)
        .map_err(|v| format!("expected 3 comma-separated values, got {}", v.len()))
}

fn parse_phase_scaling(s: &str) -> std::result::Result<PhaseScaling, String> {
    match s {
        "log10" => Ok(PhaseScaling::Log10),
        "linear90" => Ok(PhaseScaling::Linear90),
        _ => Err(format!("unknown phase scaling {s:?} (log10 or linear90)")),
    }
}

fn parse_channel(s: &str) -> std::result::Result<Channel, String> {
    Channel::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Channel::ALL.iter().map(|c| c.name()).collect();
        format!("unknown channel {s:?} (one of {})", names.join(", "))
    })
}

fn absolute(p: &mut PathBuf) {
    if let Ok(abs) = std::path::absolute(&*p) {
        *p = abs;
    }
}

fn absolute_freqs(arg: &mut String) {
    if arg != STANDARD_SWEEP {
        let mut p = PathBuf::from(&*arg);
        absolute(&mut p);
        *arg = p.to_string_lossy().into_owned();
    }
}

/// Makes paths absolute and fills in the thread count actually used, so the
/// logged config is complete.
pub fn resolve(mut command: Command) -> RunConfig {
    let pool_size = |t: Option<usize>| {
        Some(
            t.filter(|&n| n > 0)
                .unwrap_or_else(rayon::current_num_threads),
        )
    };
    let (mut threads, mut master_seed) = (None, None);
    match &mut command {
        Command::GenModels(a) => {
            absolute(&mut a.out);
            master_seed = Some(a.master_seed);
        }
        Command::Forward(a) => {
            absolute(&mut a.model);
            absolute(&mut a.grid);
            absolute(&mut a.out);
            absolute_freqs(&mut a.freqs);
            a.threads = pool_size(a.threads);
            threads = a.threads;
        }
        Command::Forward1d(a) => absolute_freqs(&mut a.freqs),
        Command::BuildDataset(a) => {
            absolute(&mut a.grid);
            absolute(&mut a.out);
            absolute_freqs(&mut a.freqs);
            a.threads = pool_size(a.threads);
            threads = a.threads;
            master_seed = Some(a.master_seed);
        }
        Command::AddNoise(a) => {
            absolute(&mut a.input);
            absolute(&mut a.output);
        }
        Command::Split(a) => {
            absolute(&mut a.manifest);
            if let Some(o) = &mut a.out {
                absolute(o);
            }
        }
        Command::Metrics(a) => {
            absolute(&mut a.pred);
            absolute(&mut a.truth);
            for p in [&mut a.out, &mut a.manifest].into_iter().flatten() {
                absolute(p);
            }
        }
        Command::ExportSlice(a) => {
            absolute(&mut a.sample);
            if let Some(o) = &mut a.out {
                absolute(o);
            }
        }
    }
    RunConfig {
        command,
        threads,
        master_seed,
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let command = match (cli.config, cli.command) {
        (Some(path), None) => match read_json::<RunConfig>(&path) {
            Ok(c) => c.command,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
        (_, Some(c)) => c,
        (None, None) => {
            let _ = <Cli as clap::CommandFactory>::command().print_help();
            return EXIT_USAGE;
        }
    };
    let config = resolve(command);
    match serde_json::to_string(&config) {
        Ok(json) => log::info!("config {json}"),
        Err(e) => log::warn!("could not serialize config: {e}"),
    }
    match execute(&config.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{} failed: {e}", config.command.name());
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::GenModels(a) => gen_models(a),
        Command::Forward(a) => forward(a),
        Command::Forward1d(a) => forward1d(a, &mut std::io::stdout().lock()),
        Command::BuildDataset(a) => build(a),
        Command::AddNoise(a) => noise(a),
        Command::Split(a) => resplit(a),
        Command::Metrics(a) => metrics(a),
        Command::ExportSlice(a) => export_slice(a),
    }
}

fn install<R: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    let pool = thread_pool(threads).map_err(|e| Error::Parse {
        path: PathBuf::new(),
        message: e.to_string(),
    })?;
    pool.install(f)
}

fn stem_id(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            message: "cannot derive a sample id".into(),
        })
}

fn gen_models(a: &GenModelsArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let grid = mtforge_core::mesh::GridSpec {
        core: a.dims,
        spacing_m: a.spacing,
        n_pad: 0,
        expansion: 1.0,
        n_air: 0,
    };
    let mut config = BuildConfig::new(
        a.master_seed,
        a.alphas.clone(),
        a.n_per_alpha,
        grid,
        read_frequencies(STANDARD_SWEEP)?,
    );
    config.rho_bounds = [a.rho_min, a.rho_max];
    for entry in config.entries() {
        let model = generate_grf(&config.grf_spec(&entry))?;
        let path = a.out.join(format!("{}.f32", entry.id));
        write_model(&path, &model)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn forward(a: &ForwardArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let grid = read_grid(&a.grid)?;
    if model.dims != grid.core || model.spacing != grid.spacing_m {
        return Err(mtforge_core::Error::InvalidArgument(format!(
            "model dims {:?} / spacing {:?} do not match grid core {:?} / spacing {:?}",
            model.dims, model.spacing, grid.core, grid.spacing_m
        ))
        .into());
    }
    let sweep = read_frequencies(&a.freqs)?;
    let options = SolverOptions {
        tolerance: a.tolerance,
        ..SolverOptions::default()
    };
    let result = install(a.threads, || {
        forward_parallel(&model, &grid, sweep.freqs(), options)
    })?;
    for d in &result.diagnostics {
        log::info!(
            "{} Hz: asymmetry {:.1e}, residuals {:.1e}/{:.1e}",
            d.frequency,
            d.relative_asymmetry,
            d.residuals[0],
            d.residuals[1]
        );
    }
    let record = SampleRecord::new(stem_id(&a.out)?, model, result.response)?;
    write_sample_to(&a.out, &record)
}

fn forward1d(a: &Forward1dArgs, out: &mut impl Write) -> Result<()> {
    let model = LayeredModel::new(a.thickness.clone(), a.rho.clone())?;
    let sweep = read_frequencies(&a.freqs)?;
    let mut text = String::from("freq,rho_a,phase_deg\n");
    for &f in sweep.freqs() {
        let r = impedance_recursion(&model, f)?;
        text.push_str(&format!(
            "{f},{},{}\n",
            r.apparent_resistivity(),
            r.phase_deg()
        ));
    }
    out.write_all(text.as_bytes()).map_err(io_err("<stdout>"))
}

fn build(a: &BuildDatasetArgs) -> Result<()> {
    let grid = read_grid(&a.grid)?;
    let sweep = read_frequencies(&a.freqs)?;
    let mut config = BuildConfig::new(a.master_seed, a.alphas.clone(), a.n_per_alpha, grid, sweep);
    config.fractions = a.fractions;
    config.phase_scaling = a.phase_scaling;
    config.rho_bounds = [a.rho_min, a.rho_max];
    let manifest = install(a.threads, || build_dataset(&config, &a.out))?;
    log::info!(
        "{} samples: {} train, {} validation, {} test",
        manifest.samples.len(),
        manifest.splits.train.len(),
        manifest.splits.validation.len(),
        manifest.splits.test.len()
    );
    Ok(())
}

fn noise(a: &AddNoiseArgs) -> Result<()> {
    let input = read_sample(&a.input)?;
    let response = add_noise(
        &input.response,
        &NoiseSpec {
            level: a.level,
            seed: a.seed,
        },
    )?;
    let mut record = SampleRecord::new(stem_id(&a.output)?, input.model, response)?;
    record.meta = SampleMeta {
        id: record.meta.id,
        noise_level: a.level,
        noise_seed: Some(a.seed),
        ..input.meta
    };
    write_sample_to(&a.output, &record)
}

fn resplit(a: &SplitArgs) -> Result<()> {
    let mut manifest: DatasetManifest = read_json(&a.manifest)?;
    let ids: Vec<String> = manifest.samples.iter().map(|s| s.id.clone()).collect();
    manifest.splits = split(&ids, a.fractions, a.seed.unwrap_or(manifest.master_seed))?;
    manifest.fractions = a.fractions;
    manifest.validate()?;
    write_json(a.out.as_deref().unwrap_or(&a.manifest), &manifest)
}

fn read_all(dir: &Path) -> Result<Vec<SampleRecord>> {
    list_samples(dir)?.iter().map(|p| read_sample(p)).collect()
}

fn metrics(a: &MetricsArgs) -> Result<()> {
    let pred = read_all(&a.pred)?;
    let truth = read_all(&a.truth)?;
    let normalization = if a.raw {
        None
    } else {
        Some(truth_normalization(a, &truth)?)
    };
    let options = ReportOptions {
        bins: a.bins,
        ssim: SsimParams::default(),
        window: a.window,
        normalization,
    };
    let report = report(&pred, &truth, &options)?;
    let means: BTreeMap<_, _> = report
        .channels
        .iter()
        .map(|(k, c)| (k, (c.mean_ssim, c.mean_rmse)))
        .collect();
    log::info!("mean (ssim, rmse) per channel: {means:?}");
    match &a.out {
        Some(path) => write_json(path, &report),
        None => {
            let text = serde_json::to_string_pretty(&report).map_err(|source| Error::Json {
                path: "<stdout>".into(),
                source,
            })?;
            println!("{text}");
            Ok(())
        }
    }
}

fn truth_normalization(a: &MetricsArgs, truth: &[SampleRecord]) -> Result<Normalization> {
    let default = a.truth.join(MANIFEST_FILE);
    let path = a
        .manifest
        .clone()
        .or_else(|| default.exists().then_some(default));
    if let Some(path) = path {
        log::info!("normalization from {}", path.display());
        let manifest: DatasetManifest = read_json(&path)?;
        return Ok(manifest.normalization);
    }
    log::info!("normalization from maxima of the true samples");
    let mut acc = NormalizationAccumulator::new(PhaseScaling::default());
    for r in truth {
        acc.add(&r.model, &r.response);
    }
    Ok(acc.finish()?)
}

/// Rows are stations along y, columns stations along x.
fn export_slice(a: &ExportSliceArgs) -> Result<()> {
    let record = read_sample(&a.sample)?;
    let [nx, ny, nf] = record.response.dims;
    if a.freq_index >= nf {
        return Err(mtforge_core::Error::InvalidArgument(format!(
            "frequency index {} out of range for {nf} frequencies",
            a.freq_index
        ))
        .into());
    }
    let values = record.response.channel(a.channel);
    let mut text = String::new();
    for iy in 0..ny {
        let row: Vec<String> = (0..nx)
            .map(|ix| values[record.response.index(ix, iy, a.freq_index)].to_string())
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match &a.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(io_err("<stdout>")),
    }
}
