use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use linesketch::emit::parse_svg;
use linesketch::lora::{
    fine_tune, loss_curve_csv, merge_lora, synthetic_dataset, AffineDenoiser, GradientFlow, MergeSpec, Matrix,
    NoiseSchedule, TextEncoder, TrainConfig, TrainingPair,
};
use linesketch::pipeline::{
    compare_runs, plan_and_emit, report_summary, run_pipeline_on_raster, workspace_for_strokes,
    write_outputs_atomically, ErrorKind, PipelineConfig, PipelineError, VectorFriendlinessReport,
};
use linesketch::raster::{read_pgm, GrayRaster};

/// Line-art vectorization and pen-plotter toolchain.
#[derive(Parser)]
#[command(name = "linesketch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace a line-art image into strokes.svg, program.txt and report.json.
    Trace {
        /// PNG or PGM image (dark ink on a light background unless --invert).
        input: PathBuf,
        #[command(flatten)]
        opts: PipelineArgs,
    },
    /// Plan and emit an existing SVG of cubic paths.
    Plan {
        /// SVG containing M/L/C/Z paths in millimeters.
        input: PathBuf,
        #[command(flatten)]
        opts: PipelineArgs,
    },
    /// Merge weighted low-rank adapters into a base matrix.
    MergeLora {
        /// Base matrix JSON: {"rows", "cols", "data"}.
        #[arg(long)]
        base: PathBuf,
        /// Adapter list JSON: [{"adapter": {"b": .., "a": ..}, "weight": w}, ..].
        #[arg(long)]
        adapters: PathBuf,
        /// Merged matrix JSON output.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fine-tune the toy affine denoiser; writes loss.csv and theta.json.
    TrainToy(TrainArgs),
    /// Compare two report.json files field by field.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Print JSON instead of a text table.
        #[arg(long)]
        json: bool,
        /// Also write the comparison JSON here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
    /// TOML file with pipeline settings; flags below win over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixed binarization threshold (Otsu by default).
    #[arg(long)]
    threshold: Option<u8>,
    /// Treat light pixels as ink.
    #[arg(long)]
    invert: bool,
    /// Skip thinning (input must already be 1 px wide).
    #[arg(long)]
    no_thinning: bool,
    #[arg(long)]
    max_turn_deg: Option<f64>,
    #[arg(long)]
    min_path_px: Option<usize>,
    #[arg(long)]
    mm_per_pixel: Option<f64>,
    #[arg(long)]
    rdp_epsilon: Option<f64>,
    #[arg(long)]
    max_err: Option<f64>,
    #[arg(long)]
    corner_deg: Option<f64>,
    #[arg(long)]
    two_opt_passes: Option<usize>,
    #[arg(long)]
    flatten_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
    /// Dataset JSON (array of pairs); a synthetic one is generated when absent.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Pairs in the generated dataset.
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    /// Image side of the generated dataset.
    #[arg(long, default_value_t = 8)]
    side: usize,
    #[arg(long, default_value_t = 0.005)]
    step_size: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Treat generated images as constants when differentiating.
    #[arg(long)]
    detached: bool,
    /// Diffusion steps of the linear noise schedule.
    #[arg(long, default_value_t = 10)]
    steps: usize,
}

/// Failure with the exit code it maps to.
enum Failure {
    Input(anyhow::Error),
    Invariant(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e.kind {
            ErrorKind::Input => Failure::Input(e.into()),
            ErrorKind::Invariant => Failure::Invariant(e.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Trace { input, opts } => {
            let cfg = pipeline_config(&opts, Some(&input))?;
            let image = load_image(&input)?;
            let out = run_pipeline_on_raster(&image, &cfg)?;
            write_outputs_atomically(&opts.output, &out.files())?;
            print!("{}", report_summary(&out.report));
        }
        Command::Plan { input, opts } => {
            let cfg = pipeline_config(&opts, Some(&input))?;
            let text = read_text(&input)?;
            let strokes = parse_svg(&text).with_context(|| input.display().to_string())?;
            let workspace = workspace_for_strokes(&strokes, &cfg);
            let out = plan_and_emit(strokes, workspace, &cfg)?;
            write_outputs_atomically(&opts.output, &out.files())?;
            print!("{}", report_summary(&out.report));
        }
        Command::MergeLora { base, adapters, output } => {
            let base: Matrix = read_json(&base)?;
            let spec: MergeSpec = read_json(&adapters)?;
            let merged = merge_lora(&base, &spec).map_err(anyhow::Error::from)?;
            let mut text = serde_json::to_string(&merged).map_err(anyhow::Error::from)?;
            text.push('\n');
            write_file(&output, &text)?;
            println!("merged {} adapter(s) into a {}x{} matrix", spec.0.len(), merged.rows(), merged.cols());
        }
        Command::TrainToy(args) => train_toy(args)?,
        Command::Compare { a, b, json, output } => {
            let ra: VectorFriendlinessReport = read_json(&a)?;
            let rb: VectorFriendlinessReport = read_json(&b)?;
            let cmp = compare_runs(&ra, &rb);
            let mut text = serde_json::to_string_pretty(&cmp).map_err(anyhow::Error::from)?;
            text.push('\n');
            if let Some(path) = output {
                write_file(&path, &text)?;
            }
            if json {
                print!("{text}");
            } else {
                print!("{cmp}");
            }
        }
    }
    Ok(())
}

fn pipeline_config(opts: &PipelineArgs, input: Option<&Path>) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &opts.config {
        Some(path) => toml::from_str(&read_text(path)?).with_context(|| format!("config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    cfg.input = input.map(Path::to_path_buf);
    cfg.output_dir = Some(opts.output.clone());
    if opts.threshold.is_some() {
        cfg.threshold = opts.threshold;
    }
    cfg.invert |= opts.invert;
    if opts.no_thinning {
        cfg.thinning = false;
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = opts.$field { cfg.$field = v; } )* };
    }
    set!(max_turn_deg, min_path_px, mm_per_pixel, rdp_epsilon, max_err, corner_deg, two_opt_passes, flatten_tol, seed);
    Ok(cfg)
}

fn load_image(path: &Path) -> anyhow::Result<GrayRaster> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        return read_pgm(&bytes).with_context(|| path.display().to_string());
    }
    let img = image::load_from_memory(&bytes).with_context(|| format!("decoding {}", path.display()))?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(GrayRaster::new(w as usize, h as usize, img.into_raw())?)
}

fn train_toy(args: TrainArgs) -> anyhow::Result<()> {
    let encoder = TextEncoder::default();
    let dataset: Vec<TrainingPair> = match &args.dataset {
        Some(path) => {
            let raw: Vec<TrainingPair> = read_json(path)?;
            // revalidate what serde accepted structurally
            raw.into_iter()
                .enumerate()
                .map(|(i, p)| TrainingPair::new(p.x_style, p.x_reg, p.c_style, p.c_reg).with_context(|| format!("pair {i}")))
                .collect::<anyhow::Result<_>>()?
        }
        None => synthetic_dataset(args.pairs, args.side, &encoder, args.seed)?,
    };
    let first = dataset.first().ok_or_else(|| anyhow!("dataset is empty"))?;
    let (d, k) = (first.x_style.len(), first.c_style.len());
    if dataset.iter().any(|p| p.x_style.len() != d || p.c_style.len() != k) {
        return Err(anyhow!("pairs disagree on image or condition dimension"));
    }
    let init = AffineDenoiser::random(d, k, 0.02, args.seed.wrapping_add(1));
    let sched = NoiseSchedule::linear(args.steps)?;
    let mut cfg = TrainConfig::two_phase(args.step_size, args.seed);
    cfg.batch = args.batch;
    cfg.flow = if args.detached { GradientFlow::Detached } else { GradientFlow::ThroughGeneration };
    let run = fine_tune(&init, &dataset, &sched, &cfg)?;

    fs::create_dir_all(&args.output).with_context(|| args.output.display().to_string())?;
    let mut theta = serde_json::to_string(&run.model)?;
    theta.push('\n');
    let mut files = vec![("loss.csv", loss_curve_csv(&run.records)), ("theta.json", theta)];
    if args.dataset.is_none() {
        let mut data = serde_json::to_string(&dataset)?;
        data.push('\n');
        files.push(("dataset.json", data));
    }
    write_outputs_atomically(&args.output, &files).map_err(|e| anyhow!(e))?;
    let last = run.records.last().map_or(0.0, |r| r.total);
    println!("{} iterations on {} pair(s); final loss {last:.6}", run.records.len(), dataset.len());
    Ok(())
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).ok_or_else(|| anyhow!("bad output path {}", path.display()))?;
    write_outputs_atomically(dir, &[(name, text.to_string())]).map_err(|e| anyhow!(e))?;
    Ok(())
}
