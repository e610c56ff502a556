use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hairline::grid::OrientationGrid;
use hairline::interior::OpenShellPolicy;
use hairline::io;
use hairline::pipeline::{
    self, Counts, OrientMode, PipelineConfig, PipelineError, RunOptions, Stage, VisibilitySource,
};
use hairline::synth::{build_scene, EvalThreshold, SceneConfig, Style};
use hairline::Error;

#[derive(Parser, Debug)]
#[command(
    name = "hairline",
    version,
    about = "Multi-view hair strand reconstruction"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Orientation and confidence maps from photographs (or precomputed maps).
    ExtractOrient {
        #[arg(long)]
        cameras: PathBuf,
        /// Directory with view_XX.png (gabor) or orientation_XX.hpx files (maps).
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        masks: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "gabor")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Depth maps of a point cloud in every view.
    RenderDepth {
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Oriented line map from a noisy cloud.
    Pmvo {
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long)]
        maps: PathBuf,
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Undirectional strand maps of a line map in the fixed rig.
    RenderStrandmaps {
        #[arg(long)]
        line_map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Voxel orientation field with the hidden interior filled in.
    Interior {
        #[arg(long)]
        line_map: PathBuf,
        #[arg(long)]
        scalp: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep going with the exterior alone when the shell is open.
        #[arg(long)]
        exterior_only: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Traces and connects strands through an orientation grid.
    Grow {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        scalp: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Exterior line map merged over the grid.
        #[arg(long)]
        line_map: Option<PathBuf>,
        /// With --depth, keep only interior voxels invisible in all views.
        #[arg(long, requires = "depth")]
        cameras: Option<PathBuf>,
        #[arg(long, requires = "cameras")]
        depth: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Writes a synthetic scene and a matching pipeline config.
    Synth {
        #[arg(long, default_value = "wavy")]
        style: Style,
        #[arg(long, default_value_t = 50)]
        strands: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precision, recall and F-score against ground-truth strands.
    Eval {
        /// Strand file, or a .ply line map.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value = "2/20,3/30,4/40")]
        thresholds: String,
        #[arg(long)]
        report: PathBuf,
    },
    /// Runs the full pipeline from one config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Reuse cached stage outputs that match the config.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        stop_after: Option<Stage>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Maps,
    Gabor,
}

enum Failure {
    Validation(String),
    Stage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Stage(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Stage(e.to_string())
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Validation(_) => Failure::Validation(e.to_string()),
            PipelineError::Stage { .. } => Failure::Stage(e.to_string()),
        }
    }
}

fn config_or_default(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(p) => PipelineConfig::load(p).map_err(|e| Failure::Validation(e.to_string())),
        None => Ok(PipelineConfig::default()),
    }
}

fn existing(what: &str, p: &Path) -> Result<(), Failure> {
    if p.exists() {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "{what} '{}' does not exist",
            p.display()
        )))
    }
}

fn print_counts(counts: &Counts) {
    for (k, v) in counts {
        println!("{k}: {v}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ExtractOrient {
            cameras,
            source,
            masks,
            mode,
            out,
            config,
        } => {
            existing("camera file", &cameras)?;
            existing("source directory", &source)?;
            let mut cfg = config_or_default(config.as_deref())?.orient;
            cfg.mode = match mode {
                Mode::Maps => OrientMode::Maps,
                Mode::Gabor => OrientMode::Gabor,
            };
            let cams = io::load_cameras(&cameras)?;
            print_counts(&pipeline::extract_orient(
                &cfg,
                &cams,
                &source,
                masks.as_deref(),
                &out,
            )?);
        }
        Command::RenderDepth {
            cameras,
            cloud,
            out,
            config,
        } => {
            existing("camera file", &cameras)?;
            existing("point cloud", &cloud)?;
            let cfg = config_or_default(config.as_deref())?;
            let cams = io::load_cameras(&cameras)?;
            let pts = pipeline::load_cloud(&cloud)?;
            print_counts(&pipeline::render_depths(
                &cams,
                &pts,
                cfg.depth.splat_radius,
                &out,
            )?);
        }
        Command::Pmvo {
            cameras,
            maps,
            depth,
            cloud,
            out,
            config,
        } => {
            for (w, p) in [
                ("camera file", &cameras),
                ("maps directory", &maps),
                ("depth directory", &depth),
                ("point cloud", &cloud),
            ] {
                existing(w, p)?;
            }
            let cfg = config_or_default(config.as_deref())?;
            let cams = io::load_cameras(&cameras)?;
            let pts = pipeline::load_cloud(&cloud)?;
            print_counts(&pipeline::run_pmvo(
                &cfg.pmvo, &cams, &maps, &depth, &pts, &out,
            )?);
        }
        Command::RenderStrandmaps {
            line_map,
            out,
            config,
        } => {
            existing("line map", &line_map)?;
            let cfg = config_or_default(config.as_deref())?;
            let map = io::load_line_map(&line_map, 0.0)?;
            print_counts(&pipeline::render_rig_maps(&cfg.strandmap, &map, &out)?);
        }
        Command::Interior {
            line_map,
            scalp,
            out,
            exterior_only,
            config,
        } => {
            existing("line map", &line_map)?;
            existing("scalp mesh", &scalp)?;
            let mut cfg = config_or_default(config.as_deref())?.interior;
            if exterior_only {
                cfg.open_shell = OpenShellPolicy::ExteriorOnly;
            }
            let map = io::load_line_map(&line_map, 0.0)?;
            let scalp = io::load_scalp(&scalp)?;
            print_counts(&pipeline::run_interior(&cfg, &map, &scalp, &out)?);
        }
        Command::Grow {
            grid,
            scalp,
            out,
            line_map,
            cameras,
            depth,
            config,
        } => {
            existing("grid", &grid)?;
            existing("scalp mesh", &scalp)?;
            let cfg = config_or_default(config.as_deref())?;
            let g = OrientationGrid::load(&grid)?;
            let scalp = io::load_scalp(&scalp)?;
            let map = match &line_map {
                Some(p) => Some(io::load_line_map(p, 0.0)?),
                None => None,
            };
            let cams = match &cameras {
                Some(p) => io::load_cameras(p)?,
                None => Vec::new(),
            };
            let vis = match &depth {
                Some(d) => Some(VisibilitySource {
                    cameras: &cams,
                    depths: pipeline::load_depths(d, cams.len())?,
                    tau: cfg.pmvo.tau,
                }),
                None => None,
            };
            print_counts(&pipeline::run_grow(
                &cfg.grow,
                &g,
                map.as_ref(),
                &scalp,
                vis,
                &out,
            )?);
        }
        Command::Synth {
            style,
            strands,
            seed,
            noise,
            out,
        } => {
            let scene_cfg = SceneConfig {
                style,
                strands,
                seed,
                noise_fraction: noise,
                ..SceneConfig::default()
            };
            let scene = build_scene(&scene_cfg)?;
            scene.write(&out)?;
            let cfg_path = out.join("pipeline.toml");
            std::fs::write(&cfg_path, pipeline::scene_config().to_toml()?)
                .map_err(|e| Failure::Stage(format!("{}: {e}", cfg_path.display())))?;
            println!("strands: {}", scene.strands.len());
            println!("views: {}", scene.cameras.len());
            println!("cloud_points: {}", scene.cloud.len());
            println!("config: {}", cfg_path.display());
        }
        Command::Eval {
            pred,
            gt,
            thresholds,
            report,
        } => {
            existing("prediction", &pred)?;
            existing("ground truth", &gt)?;
            let t = EvalThreshold::parse_list(&thresholds)?;
            let r = pipeline::run_eval(&pred, &gt, &t, &report)?;
            if r.empty_prediction {
                eprintln!("warning: empty prediction");
            }
            for s in &r.scores {
                println!(
                    "{}: precision {:.2} recall {:.2} f-score {:.2}",
                    s.threshold, s.precision, s.recall, s.f_score
                );
            }
        }
        Command::Run {
            config,
            resume,
            stop_after,
        } => {
            existing("config", &config)?;
            let cfg =
                PipelineConfig::load(&config).map_err(|e| Failure::Validation(e.to_string()))?;
            let summary = pipeline::run_pipeline(&cfg, &RunOptions { resume, stop_after })?;
            for r in &summary.stages {
                println!("{:<18} {:?} {:.2}s", r.stage.name(), r.status, r.seconds);
            }
            if let Some(e) = &summary.eval {
                for s in &e.scores {
                    println!("eval {}: f-score {:.2}", s.threshold, s.f_score);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Validation(m) | Failure::Stage(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
