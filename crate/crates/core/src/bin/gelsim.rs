use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use gelsim::config::{EnvKind, RunConfig};
use gelsim::mpm::YieldPreset;
use gelsim::observations::{read_pgm, segment_tactile_image, write_pgm, BinaryMask};
use gelsim::press::run_press_demo;
use gelsim::rl::{
    eval_seeds, evaluate, read_checkpoint, rollout, save_checkpoint, train, Checkpoint, Environment, Policy, Strategy,
};
use gelsim::tasks::{
    baseline_roundness, roundness_detail, roundness_report, success_check, Face, TaskKind, ROUNDNESS_CSV_HEADER,
};
use gelsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "gelsim",
    version,
    about = "Gel-pad soft manipulation simulator and TD3 benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset used when no config file is given.
    #[arg(long, default_value = "desk_cylinder")]
    preset: String,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Press a cube between both gels, hold, release, and report its recovery.
    PressDemo {
        #[command(flatten)]
        common: Common,
        /// Single yield stress; all three presets run when omitted.
        #[arg(long)]
        yield_stress: Option<f64>,
    },
    /// Train a policy; writes curve.csv, checkpoint.bin and manifest.txt.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint (or the expert) on the fixed evaluation seeds.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to evaluate; the expert is replayed when omitted.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Segment a tactile image into object, squeezed-area and contour masks.
    Segment {
        image: PathBuf,
        /// Gradient threshold for the object mask, on a [0, 1] scale.
        #[arg(long, default_value_t = 0.08)]
        threshold1: f64,
        /// Brightness margin above the mean object color, in 8-bit units.
        #[arg(long, default_value_t = 12.0)]
        threshold2: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Roundness of a mask (PGM) or a point list (one `x y` or `x,y` per line).
    Roundness {
        input: PathBuf,
        /// Task and face select the baseline for the success flag.
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long)]
        face: Option<Face>,
        #[arg(long)]
        baseline: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::preset(&common.preset)?,
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

/// Git-style object hash: SHA-256 of `blob <len>\0<content>`.
fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()));
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn press_demo(common: &Common, yield_stress: Option<f64>) -> Result<()> {
    let cfg = load_config(common)?;
    let runs: Vec<(String, f64)> = match yield_stress {
        Some(s) => vec![(format!("yield_{s}"), s)],
        None => YieldPreset::ALL
            .iter()
            .map(|p| (p.name().to_string(), p.yield_stress()))
            .collect(),
    };
    for (name, stress) in runs {
        let dir = cfg.output_dir.join(&name);
        let frames = dir.join("frames");
        create_dir(&frames)?;
        let r = run_press_demo(&cfg.scene, &cfg.press, stress)?;
        for f in &r.frames {
            for (g, mask) in f.squeezed.iter().enumerate() {
                let path = frames.join(format!("frame_{:06}_gel{}.pgm", f.substep, g));
                write_pgm(&path, mask.width, mask.height, &mask.to_gray())?;
            }
        }
        let mut xs = String::from("x,z\n");
        for [x, z] in &r.cross_section {
            let _ = writeln!(xs, "{x:e},{z:e}");
        }
        write(&dir.join("cross_section.csv"), xs)?;
        let report = format!(
            "yield_stress {}\ninitial_height {:e}\npressed_height {:e}\nfinal_height {:e}\nrecovery_ratio {:.6}\nheight_ratio {:.6}\nsubsteps {}\nframes {}\n",
            r.yield_stress,
            r.initial_height,
            r.pressed_height,
            r.final_height,
            r.recovery_ratio,
            r.height_ratio,
            r.substeps,
            r.frames.len()
        );
        write(&dir.join("report.txt"), &report)?;
        println!(
            "{name}: recovery_ratio {:.4} height_ratio {:.4} ({:.1}s)",
            r.recovery_ratio, r.height_ratio, r.seconds
        );
    }
    Ok(())
}

fn train_cmd(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    create_dir(&cfg.output_dir)?;
    let factory = || cfg.make_env();
    let out = train(&factory, &cfg.td3, cfg.seed)?;
    let csv = out.curve.to_csv();
    let ck = save_checkpoint(&Checkpoint::from_agent(&out.agent, out.strategy));
    let csv_path = cfg.output_dir.join("curve.csv");
    let ck_path = cfg.output_dir.join("checkpoint.bin");
    write(&csv_path, &csv)?;
    write(&ck_path, &ck)?;
    let mut manifest = format!("seed {}\nstrategy {}\n", cfg.seed, out.strategy);
    let _ = writeln!(manifest, "curve.csv {}", blob_hash(csv.as_bytes()));
    let _ = writeln!(manifest, "checkpoint.bin {}", blob_hash(&ck));
    let _ = writeln!(manifest, "config\n{}", cfg.to_json());
    write(&cfg.output_dir.join("manifest.txt"), manifest)?;
    if let Some(last) = out.curve.last() {
        println!(
            "episode {} mean {:e} std {:e}",
            last.episode, last.mean_reward, last.std_reward
        );
    }
    Ok(())
}

fn eval_cmd(common: &Common, checkpoint: Option<&Path>) -> Result<()> {
    let cfg = load_config(common)?;
    create_dir(&cfg.output_dir)?;
    let agent = match checkpoint {
        Some(path) => {
            let ck = read_checkpoint(path)?;
            (ck.strategy != Strategy::Baseline).then(|| ck.to_agent(&cfg.td3))
        }
        None if cfg.td3.strategy == Strategy::Baseline => None,
        None => {
            return Err(Error::Config(
                "eval needs --checkpoint unless the strategy is baseline".into(),
            ))
        }
    };
    let policy = agent.as_ref().map_or(Policy::Expert, Policy::Actor);
    let factory = || cfg.make_env();
    let seeds = eval_seeds(&cfg.td3);
    let e = evaluate(policy, &factory, &seeds, cfg.td3.eval_window)?;
    let mut report = String::from("seed,reward\n");
    for (s, r) in e.seeds.iter().zip(&e.per_seed) {
        let _ = writeln!(report, "{s},{r:e}");
    }
    write(&cfg.output_dir.join("eval.csv"), &report)?;
    print!("{report}");
    println!("mean {:e} +- {:e}", e.mean, e.std);

    if cfg.environment == EnvKind::Tactile && matches!(cfg.task.kind, TaskKind::Cylinder | TaskKind::Sphere) {
        let mut env = cfg.make_tactile_env()?;
        rollout(&mut env as &mut dyn Environment, policy, seeds[0])?;
        let state = env.state().expect("rolled out");
        let rows = roundness_report(cfg.task.kind, state, cfg.roundness_margin)?;
        let mut csv = format!("{ROUNDNESS_CSV_HEADER}\n");
        for row in &rows {
            csv.push_str(&row.csv());
            csv.push('\n');
        }
        write(&cfg.output_dir.join("roundness.csv"), &csv)?;
        print!("{csv}");
    }
    Ok(())
}

fn segment_cmd(image: &Path, t1: f64, t2: f64, out: &Path) -> Result<()> {
    let img = image::open(image)
        .map_err(|e| Error::Image(format!("{}: {e}", image.display())))?
        .to_rgb8();
    let seg = segment_tactile_image(&img, t1, t2)?;
    create_dir(out)?;
    let put = |name: &str, m: &BinaryMask| write_pgm(&out.join(name), m.width, m.height, &m.to_gray());
    put("B1.pgm", &seg.object)?;
    put("B2.pgm", &seg.squeezed)?;
    write_pgm(
        &out.join("B3.pgm"),
        seg.contour.width,
        seg.contour.height,
        &seg.contour.to_gray(),
    )?;
    let meta = serde_json::json!({
        "image": image.display().to_string(),
        "threshold1": t1,
        "threshold2": t2,
        "centroid": [seg.centroid.0, seg.centroid.1],
    });
    write(&out.join("segment.json"), serde_json::to_string_pretty(&meta)?)?;
    println!("{} {}", seg.centroid.0, seg.centroid.1);
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some([x, y]) => points.push([*x, *y]),
            // a non-numeric first line is a header
            None if points.is_empty() && n == 0 => continue,
            _ => {
                return Err(Error::Config(format!(
                    "{}:{}: expected two numbers",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    Ok(points)
}

fn roundness_cmd(
    input: &Path,
    task: Option<TaskKind>,
    face: Option<Face>,
    baseline: Option<f64>,
    margin: f64,
    out: Option<&Path>,
) -> Result<()> {
    let is_pgm = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let points = if is_pgm {
        let img = read_pgm(input)?;
        let mask = BinaryMask::from_fn(img.width, img.height, |r, c| img.data[r * img.width + c] > 127);
        gelsim::tasks::mask_boundary(&mask)
    } else {
        read_points(input)?
    };
    let r = roundness_detail(&points)?;
    let baseline = baseline.or_else(|| baseline_roundness(task?, face?));
    let success = baseline.map(|b| success_check(r.ratio, b, margin));
    let row = format!(
        "{},{},{:.6},{:.6},{:.6},{}",
        task.map_or("-".into(), |t| t.to_string()),
        face.map_or("-", |f| f.name()),
        r.r_min,
        r.r_max,
        r.ratio,
        success.map_or("-".into(), |s| s.to_string())
    );
    let csv = format!("{ROUNDNESS_CSV_HEADER}\n{row}\n");
    if let Some(dir) = out {
        create_dir(dir)?;
        write(&dir.join("roundness.csv"), &csv)?;
    }
    print!("{csv}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PressDemo { common, yield_stress } => press_demo(&common, yield_stress),
        Command::Train { common } => train_cmd(&common),
        Command::Eval { common, checkpoint } => eval_cmd(&common, checkpoint.as_deref()),
        Command::Segment {
            image,
            threshold1,
            threshold2,
            out,
        } => segment_cmd(&image, threshold1, threshold2, &out),
        Command::Roundness {
            input,
            task,
            face,
            baseline,
            margin,
            out,
        } => roundness_cmd(&input, task, face, baseline, margin, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
