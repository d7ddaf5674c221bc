//! `foci` command line: `track`, `eval`, `synth` and `pipeline`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalMode, EvalParams, InstanceMatchParams};
use crate::io::{
    load_registry, parse_annotations, parse_detections, parse_tracks, write_annotations,
    write_detections, write_file, write_tracks,
};
use crate::model::{ClassRegistry, Detection, Track};
use crate::par::Execution;
use crate::report::ReportFile;
use crate::suppression::{confidence_filter, suppress_stream_with, SuppressionParams};
use crate::synth::{generate, SceneConfig};
use crate::tracker::{track_video, TrackerParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "foci", version, about = "Track and evaluate per-frame object detections from UAV video")]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Suppress and associate detections into tracks
    Track(TrackCmd),
    /// Evaluate a track file against annotations
    Eval(EvalCmd),
    /// Generate a synthetic scene from a config file
    Synth(SynthCmd),
    /// synth, track and eval one or more scenes
    Pipeline(PipelineCmd),
}

#[derive(Debug, Args)]
struct ClassArgs {
    /// Extra class names, one per line, appended after the built-in six
    #[arg(long, value_name = "FILE")]
    classes: Option<PathBuf>,
}

impl ClassArgs {
    fn registry(&self) -> Result<ClassRegistry> {
        match &self.classes {
            Some(path) => load_registry(path),
            None => Ok(ClassRegistry::default()),
        }
    }
}

#[derive(Debug, Clone, Args)]
struct TrackArgs {
    /// Drop detections below this confidence
    #[arg(long, default_value_t = 0.5)]
    conf_thresh: f64,
    /// Same-class overlap that suppresses the lower-confidence box
    #[arg(long, default_value_t = 0.5)]
    nms_iou: f64,
    /// Minimum IOU to continue a track
    #[arg(long, default_value_t = 0.1)]
    track_iou: f64,
    /// Frames a track stays matchable after its last detection
    #[arg(long, default_value_t = 45)]
    time_window: u32,
    /// Skip non-maximum suppression (the confidence filter still applies)
    #[arg(long)]
    no_nms: bool,
}

impl TrackArgs {
    fn suppression(&self) -> SuppressionParams {
        SuppressionParams {
            conf_thresh: self.conf_thresh,
            nms_iou: self.nms_iou,
        }
    }

    fn tracker(&self) -> TrackerParams {
        TrackerParams {
            time_window: self.time_window,
            match_iou: self.track_iou,
        }
    }

    fn validate(&self) -> Result<()> {
        self.suppression().validate()?;
        self.tracker().validate()
    }
}

#[derive(Debug, Clone, Args)]
struct EvalArgs {
    /// Minimum IOU for a frame-level box match
    #[arg(long, default_value_t = 0.5)]
    frame_iou: f64,
    /// First/last sight frame difference must stay strictly below this
    #[arg(long, default_value_t = 45)]
    frame_tol: u32,
    /// Minimum first/last sight IOU
    #[arg(long, default_value_t = 0.1)]
    sight_iou: f64,
    /// Maximum displacement cosine distance
    #[arg(long, default_value_t = 0.01)]
    max_dcos: f64,
    /// Only the frame-level confusion matrix
    #[arg(long, group = "mode")]
    frame_level: bool,
    /// Only the instance-level TP/FP/FN table
    #[arg(long, group = "mode")]
    instance_level: bool,
    /// Both evaluations (default)
    #[arg(long, group = "mode")]
    both: bool,
}

impl EvalArgs {
    fn params(&self) -> EvalParams {
        EvalParams {
            instance: InstanceMatchParams {
                frame_tol: self.frame_tol,
                sight_iou: self.sight_iou,
                max_dcos: self.max_dcos,
            },
            frame_iou: self.frame_iou,
        }
    }

    fn mode(&self) -> EvalMode {
        if self.frame_level {
            EvalMode::FrameLevel
        } else if self.instance_level {
            EvalMode::InstanceLevel
        } else {
            EvalMode::Both
        }
    }
}

#[derive(Debug, Args)]
struct TrackCmd {
    /// Detection file
    detections: PathBuf,
    /// Output track file
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    classes: ClassArgs,
    #[command(flatten)]
    track: TrackArgs,
}

#[derive(Debug, Args)]
struct EvalCmd {
    /// Track file to evaluate
    #[arg(long)]
    tracks: PathBuf,
    /// Annotation file (a track file is accepted too)
    #[arg(long)]
    annotations: PathBuf,
    /// Output report (JSON)
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    classes: ClassArgs,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Debug, Args)]
struct SynthCmd {
    /// Scene config (TOML)
    config: PathBuf,
    /// Output annotation file
    #[arg(long)]
    annotations: PathBuf,
    /// Output detection file
    #[arg(long)]
    detections: PathBuf,
}

#[derive(Debug, Args)]
struct PipelineCmd {
    /// Scene configs (TOML); each runs in its own output subdirectory
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Output root directory
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    track: TrackArgs,
    #[command(flatten)]
    eval: EvalArgs,
}

/// Parse `args` (program name first) and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        #[cfg(feature = "parallel")]
        {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let exec = match cli.threads {
        Some(1) => Execution::Sequential,
        _ => Execution::default(),
    };
    let result = match &cli.command {
        Command::Track(cmd) => run_track(cmd, exec),
        Command::Eval(cmd) => run_eval(cmd),
        Command::Synth(cmd) => run_synth(cmd),
        Command::Pipeline(cmd) => run_pipeline(cmd, exec),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Suppression followed by association.
fn track_detections(dets: &[Detection], args: &TrackArgs, exec: Execution) -> Vec<Track> {
    let kept = if args.no_nms {
        confidence_filter(dets, args.conf_thresh)
    } else {
        suppress_stream_with(dets, &args.suppression(), exec)
    };
    track_video(&kept, &args.tracker())
}

fn run_track(cmd: &TrackCmd, exec: Execution) -> Result<()> {
    cmd.track.validate()?;
    let registry = cmd.classes.registry()?;
    let start = Instant::now();
    let dets = parse_detections(&cmd.detections, &registry)?;
    let parse_ms = ms(start);

    let t = Instant::now();
    let tracks = track_detections(&dets, &cmd.track, exec);
    let track_ms = ms(t);

    let t = Instant::now();
    write_file(&cmd.output, |w| write_tracks(w, &tracks, &registry))?;
    let write_ms = ms(t);

    eprintln!(
        "track: {} detections -> {} tracks; parse {parse_ms:.1} ms, track {track_ms:.1} ms, write {write_ms:.1} ms, total {:.1} ms",
        dets.len(),
        tracks.len(),
        ms(start)
    );
    Ok(())
}

fn run_eval(cmd: &EvalCmd) -> Result<()> {
    let registry = cmd.classes.registry()?;
    let tracks = parse_tracks(&cmd.tracks, &registry)?;
    let gts = parse_annotations(&cmd.annotations, &registry)?;
    let mode = cmd.eval.mode();
    let report = evaluate(&gts, &tracks, &cmd.eval.params(), mode, registry.len());
    let file = ReportFile::new(&report, mode, &registry);
    file.save(&cmd.output)?;
    print_summary(&cmd.output.display().to_string(), &file);
    Ok(())
}

fn print_summary(label: &str, file: &ReportFile) {
    if let Some(inst) = &file.instance_level {
        let t = inst.totals;
        println!("{label}: TP {} FP {} FN {}", t.tp, t.fp, t.fn_);
    }
}

fn load_scene(path: &Path) -> Result<SceneConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SceneConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn run_synth(cmd: &SynthCmd) -> Result<()> {
    let config = load_scene(&cmd.config)?;
    let scene = generate(&config)?;
    let registry = ClassRegistry::default();
    write_file(&cmd.annotations, |w| write_annotations(w, &scene.ground_truth, &registry))?;
    write_file(&cmd.detections, |w| write_detections(w, &scene.detections, &registry))?;
    eprintln!(
        "synth: {} instances, {} detections",
        scene.ground_truth.len(),
        scene.detections.len()
    );
    Ok(())
}

fn pipeline_scene(config_path: &Path, cmd: &PipelineCmd, exec: Execution) -> Result<ReportFile> {
    let name = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    let dir = cmd.out.join(name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let registry = ClassRegistry::default();

    let config = load_scene(config_path)?;
    let scene = generate(&config)?;
    let annotations = dir.join("annotations.csv");
    let detections = dir.join("detections.csv");
    let tracks_path = dir.join("tracks.csv");
    write_file(&annotations, |w| write_annotations(w, &scene.ground_truth, &registry))?;
    write_file(&detections, |w| write_detections(w, &scene.detections, &registry))?;

    // read back so the pipeline exercises exactly what `track` and `eval` see
    let dets = parse_detections(&detections, &registry)?;
    let tracks = track_detections(&dets, &cmd.track, exec);
    write_file(&tracks_path, |w| write_tracks(w, &tracks, &registry))?;

    let tracks = parse_tracks(&tracks_path, &registry)?;
    let gts = parse_annotations(&annotations, &registry)?;
    let mode = cmd.eval.mode();
    let report = evaluate(&gts, &tracks, &cmd.eval.params(), mode, registry.len());
    let file = ReportFile::new(&report, mode, &registry);
    file.save(&dir.join("report.json"))?;
    Ok(file)
}

fn run_pipeline(cmd: &PipelineCmd, exec: Execution) -> Result<()> {
    cmd.track.validate()?;
    let results = exec.map(&cmd.configs, |path| pipeline_scene(path, cmd, Execution::Sequential));
    for (path, result) in cmd.configs.iter().zip(results) {
        let file = result?;
        print_summary(&path.display().to_string(), &file);
    }
    Ok(())
}
