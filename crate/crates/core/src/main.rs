use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stgroup::config::PipelineConfig;
use stgroup::pipeline::{self, ArtifactOptions, EvaluateOptions};
use stgroup::synth;
use stgroup::volume::DEFAULT_PATTERN;
use stgroup::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser)]
#[command(name = "stgroup", about = "Spatiotemporal motion saliency and saliency-guided grouping", disable_version_flag = true)]
struct Cli {
    /// Print the version and the default configuration.
    #[arg(long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scene with ground-truth masks.
    Synth(SynthArgs),
    /// Segment all slice stacks and cache the label maps.
    Segment {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        emit: EmitArgs,
    },
    /// Compute angles and motion saliency from cached label maps.
    Saliency {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        emit: EmitArgs,
    },
    /// Group regions at the focus of attention from cached stages.
    Select {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        cache: PathBuf,
    },
    /// Run the full pipeline.
    Run {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        emit: EmitArgs,
    },
    /// Score selections and saliency maps against ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    /// Built-in scene: bar, one-mover, two-movers, static-target.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the scene description used.
    #[arg(long)]
    write_spec: bool,
}

#[derive(Args)]
struct PipelineArgs {
    /// Key/value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input_dir: Option<PathBuf>,
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    start: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long = "volume-size")]
    volume_size: Option<usize>,
    #[arg(long)]
    seed_threshold: Option<f64>,
    #[arg(long)]
    border_threshold: Option<f64>,
    #[arg(long)]
    min_region_size: Option<usize>,
    /// linear or uniform
    #[arg(long)]
    weight_mode: Option<String>,
    #[arg(long)]
    normalize_saliency: bool,
    #[arg(long)]
    tau: Option<f64>,
    /// Sets both noise floors.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    sigma_xt: Option<f64>,
    #[arg(long)]
    sigma_yt: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// and | or
    #[arg(long)]
    noise_mode: Option<String>,
    #[arg(long)]
    cycles: Option<usize>,
    /// Skip the motion-similarity condition during grouping.
    #[arg(long)]
    no_similarity: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ground-truth masks, named like the frames, for scoring in the report.
    #[arg(long)]
    gt_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    render_seed: Option<u64>,
}

#[derive(Args)]
struct EmitArgs {
    /// Directory for per-frame normalized saliency PNGs.
    #[arg(long)]
    emit_saliency: Option<PathBuf>,
    /// File for per-region saliency values keyed by frame and region id.
    #[arg(long)]
    emit_saliency_json: Option<PathBuf>,
    /// Directory for X-Y label maps in random colors.
    #[arg(long)]
    emit_labels: Option<PathBuf>,
    /// Directory for X-T angle maps.
    #[arg(long)]
    emit_angles: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    selections: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = DEFAULT_PATTERN)]
    gt_pattern: String,
    /// Saliency maps to sweep, as NAME=DIR; repeatable.
    #[arg(long = "maps", value_parser = parse_named_dir)]
    maps: Vec<(String, PathBuf)>,
    #[arg(long, default_value = "sal_%04d.png")]
    maps_pattern: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = stgroup::evaluation::DEFAULT_LEVELS)]
    levels: usize,
}

fn parse_named_dir(s: &str) -> Result<(String, PathBuf), String> {
    let (name, dir) = s.split_once('=').ok_or("expected NAME=DIR")?;
    if name.is_empty() || dir.is_empty() {
        return Err("expected NAME=DIR".into());
    }
    Ok((name.to_string(), PathBuf::from(dir)))
}

impl PipelineArgs {
    fn resolve(&self) -> stgroup::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        let mut set = |key: &str, value: Option<String>| -> stgroup::Result<()> {
            match value {
                Some(v) => cfg.set(key, &v),
                None => Ok(()),
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let num = |v: Option<f64>| v.map(|v| v.to_string());
        set("input_dir", path(&self.input_dir))?;
        set("pattern", self.pattern.clone())?;
        set("start", self.start.map(|v| v.to_string()))?;
        set("count", self.count.map(|v| v.to_string()))?;
        set("volume_size", self.volume_size.map(|v| v.to_string()))?;
        set("seed_threshold", num(self.seed_threshold))?;
        set("border_threshold", num(self.border_threshold))?;
        set("min_region_size", self.min_region_size.map(|v| v.to_string()))?;
        set("weight_mode", self.weight_mode.clone())?;
        set("normalize_saliency", self.normalize_saliency.then(|| "true".into()))?;
        set("tau", num(self.tau))?;
        set("sigma_xt", num(self.sigma))?;
        set("sigma_yt", num(self.sigma))?;
        set("sigma_xt", num(self.sigma_xt))?;
        set("sigma_yt", num(self.sigma_yt))?;
        set("eta", num(self.eta))?;
        set("noise_mode", self.noise_mode.clone())?;
        set("cycles", self.cycles.map(|v| v.to_string()))?;
        set("check_similarity", self.no_similarity.then(|| "false".into()))?;
        set("output_dir", path(&self.out))?;
        set("gt_dir", path(&self.gt_dir))?;
        set("threads", self.threads.map(|v| v.to_string()))?;
        set("render_seed", self.render_seed.map(|v| v.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl EmitArgs {
    fn options(&self) -> ArtifactOptions {
        ArtifactOptions {
            saliency_dir: self.emit_saliency.clone(),
            saliency_json: self.emit_saliency_json.clone(),
            labels_dir: self.emit_labels.clone(),
            angles_dir: self.emit_angles.clone(),
        }
    }
}

fn run_synth(args: &SynthArgs) -> stgroup::Result<()> {
    let spec = match (&args.spec, &args.preset) {
        (Some(path), _) => synth::load_spec(path)?,
        (None, Some(name)) => synth::presets::by_name(name).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown preset `{name}`, expected one of {:?}", synth::presets::NAMES))
        })?,
        (None, None) => unreachable!("clap requires one of --spec/--preset"),
    };
    let scene = synth::generate_scene(&spec)?;
    synth::write_scene(&scene, &args.out)?;
    if args.write_spec {
        stgroup::io::write_json(&args.out.join("scene.json"), &spec)?;
    }
    println!("wrote {} frames to {}", scene.frames.len(), args.out.display());
    Ok(())
}

fn summarize(report: &stgroup::RunReport) {
    let records: usize = report.volumes.iter().map(|v| v.selections.len()).sum();
    println!("{} volumes, {} selections", report.volumes.len(), records);
    if let Some(m) = report.aggregate_metrics {
        println!("selection tp_rate {:.4} fp_rate {:.4}", m.tp_rate, m.fp_rate);
    }
}

fn dispatch(command: Command) -> stgroup::Result<()> {
    match command {
        Command::Synth(args) => run_synth(&args),
        Command::Segment { pipeline: p, cache, emit } => pipeline::run_segment_stage(&p.resolve()?, &cache, &emit.options()),
        Command::Saliency { pipeline: p, cache, emit } => pipeline::run_saliency_stage(&p.resolve()?, &cache, &emit.options()),
        Command::Select { pipeline: p, cache } => {
            summarize(&pipeline::run_select_stage(&p.resolve()?, &cache)?);
            Ok(())
        }
        Command::Run { pipeline: p, emit } => {
            summarize(&pipeline::run_pipeline(&p.resolve()?, &emit.options())?);
            Ok(())
        }
        Command::Evaluate(a) => {
            let summary = pipeline::evaluate_run(&EvaluateOptions {
                selections_dir: a.selections,
                gt_dir: a.gt,
                gt_pattern: a.gt_pattern,
                maps: a.maps,
                maps_pattern: a.maps_pattern,
                out_dir: a.out,
                levels: a.levels,
            })?;
            println!(
                "{} frames, selection tp_rate {:.4} fp_rate {:.4}",
                summary.frames.len(),
                summary.selection.tp_rate,
                summary.selection.fp_rate
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.version {
        println!("stgroup {}", env!("CARGO_PKG_VERSION"));
        println!("# default configuration");
        print!("{}", PipelineConfig::default().to_kv());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see `stgroup --help`");
        return ExitCode::from(EXIT_USAGE);
    };
    match dispatch(command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_DATA),
            }
        }
    }
}
