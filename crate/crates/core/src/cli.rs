//! The `fracrd` command line: `restore`, `synth`, `eval` and `sweep`.
//!
//! Every subcommand accepts `--config <file.toml>`; flags override keys from
//! the file. Errors are reported as one line on stderr with exit status 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{CliConfig, DegradationSection, EvalSection, FlexValue, RestorationSection, SceneSection};
use crate::error::{Error, Result};
use crate::field::compute_metrics;
use crate::io::{format_g6, metrics_csv_header, metrics_csv_row, read_depth, write_depth, DepthFormat};
use crate::pipeline::{run_restoration, AlphaSchedule, RestorationConfig};
use crate::synth::{degrade, generate_scene, run_benchmark};

/// Fractional reaction-diffusion depth restoration.
#[derive(Debug, Parser)]
#[command(name = "fracrd", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Restore a depth map (PFM or 16-bit PGM); the output keeps the input format.
    Restore(RestoreArgs),
    /// Generate a ground-truth scene and its degraded measurement.
    Synth(SynthArgs),
    /// Compare a prediction against ground truth.
    Eval(EvalArgs),
    /// Sweep fixed fractional orders plus the adaptive schedule on a synthetic scene.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    /// Input depth file [config: io.input]
    pub input: Option<PathBuf>,
    /// Output depth file [config: io.output]
    pub output: Option<PathBuf>,
    /// Optional ground truth; adds MAE to the summary [config: io.gt]
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub restoration: RestorationSection,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Ground-truth output file; `.pgm` selects 16-bit PGM [config: io.gt]
    #[arg(long)]
    pub gt_out: Option<PathBuf>,
    /// Degraded output file [config: io.raw]
    #[arg(long)]
    pub raw_out: Option<PathBuf>,
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub scene: SceneSection,
    #[command(flatten)]
    pub degradation: DegradationSection,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted depth file [config: io.pred]
    pub pred: Option<PathBuf>,
    /// Ground-truth depth file [config: io.gt]
    pub gt: Option<PathBuf>,
    /// Also write the CSV here [config: io.csv]
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub eval: EvalSection,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Fixed orders to sweep, comma separated [default: 0.1,0.2,...,0.9]
    #[arg(long)]
    pub alphas: Option<FlexValue>,
    /// Output CSV; printed to stdout when absent [config: io.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub restoration: RestorationSection,
    #[command(flatten)]
    pub scene: SceneSection,
    #[command(flatten)]
    pub degradation: DegradationSection,
    #[command(flatten)]
    pub eval: EvalSection,
}

fn required(path: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::Config(format!("missing {what} path")))
}

pub fn cmd_restore(args: RestoreArgs, out: &mut dyn Write) -> Result<()> {
    let file = CliConfig::load_optional(args.config.as_deref())?;
    let mut section = file.restoration;
    section.overlay(&args.restoration);
    let config = section.to_config()?;
    let input = required(args.input.or(file.io.input), "input")?;
    let output = required(args.output.or(file.io.output), "output")?;
    let (raw, format) = read_depth(&input)?;
    let gt = args.gt.or(file.io.gt).map(|p| read_depth(&p).map(|(f, _)| f)).transpose()?;
    let (restored, trace) = run_restoration(&raw, &config, gt.as_ref())?;
    write_depth(&output, &restored, format)?;
    let mut line = format!(
        "restored {}x{}: iterations={} final_max_update={}",
        restored.width(),
        restored.height(),
        trace.len(),
        format_g6(trace.final_max_update().unwrap_or(0.0))
    );
    if let Some(halted) = trace.halted_at {
        line.push_str(&format!(" halted_at={halted}"));
    }
    if let Some(m) = trace.records.last().and_then(|r| r.metrics.as_ref()) {
        line.push_str(&format!(" mae={}", format_g6(m.mae)));
    }
    writeln!(out, "{line}")?;
    Ok(())
}

pub fn cmd_synth(args: SynthArgs, _out: &mut dyn Write) -> Result<()> {
    let file = CliConfig::load_optional(args.config.as_deref())?;
    let (mut scene, mut degradation) = (file.scene, file.degradation);
    scene.overlay(&args.scene);
    degradation.overlay(&args.degradation);
    let scene = scene.to_spec()?;
    let degradation = degradation.to_spec(scene.seed)?;
    let gt_path = required(args.gt_out.or(file.io.gt), "ground-truth output")?;
    let raw_path = required(args.raw_out.or(file.io.raw), "degraded output")?;
    let gt = generate_scene(&scene)?;
    let raw = degrade(&gt, &degradation)?;
    write_depth(&gt_path, &gt, DepthFormat::from_path(&gt_path))?;
    write_depth(&raw_path, &raw, DepthFormat::from_path(&raw_path))?;
    Ok(())
}

pub fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let file = CliConfig::load_optional(args.config.as_deref())?;
    let mut eval = file.eval;
    eval.overlay(&args.eval);
    let thresholds = eval.thresholds()?;
    let pred = read_depth(&required(args.pred.or(file.io.pred), "prediction")?)?.0;
    let gt = read_depth(&required(args.gt.or(file.io.gt), "ground-truth")?)?.0;
    let metrics = compute_metrics(&pred, &gt, &thresholds)?;
    let csv = format!("{}\n{}\n", metrics_csv_header(&thresholds), metrics_csv_row(&metrics));
    out.write_all(csv.as_bytes())?;
    if let Some(path) = args.csv.or(file.io.csv) {
        std::fs::write(path, csv)?;
    }
    Ok(())
}

/// Orders swept when none are given.
pub const DEFAULT_SWEEP: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub fn cmd_sweep(args: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let file = CliConfig::load_optional(args.config.as_deref())?;
    let alphas = match args.alphas.or(file.sweep.alphas) {
        None => DEFAULT_SWEEP.to_vec(),
        Some(v) => v.numbers("alphas")?,
    };
    if alphas.is_empty() {
        return Err(Error::Config("alpha list is empty".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::Config(format!("fractional order {a} is outside (0, 1]")));
    }
    let (mut restoration, mut scene, mut degradation, mut eval) =
        (file.restoration, file.scene, file.degradation, file.eval);
    restoration.overlay(&args.restoration);
    scene.overlay(&args.scene);
    degradation.overlay(&args.degradation);
    eval.overlay(&args.eval);
    let base = restoration.to_config()?;
    let scene = scene.to_spec()?;
    let degradation = degradation.to_spec(scene.seed)?;
    let thresholds = eval.thresholds()?;

    let configs = sweep_configs(&base, &alphas, &restoration);
    let rows = run_benchmark(&[scene], &[degradation], &configs, &thresholds)?;
    let mut csv = format!("alpha,{}\n", metrics_csv_header(&thresholds));
    for row in &rows {
        csv.push_str(&format!("{},{}\n", crate::synth::alpha_label(&row.config.alpha), metrics_csv_row(&row.restored)));
    }
    match args.out.or(file.io.csv) {
        Some(path) => {
            std::fs::write(&path, &csv)?;
            writeln!(
                out,
                "sweep: {} rows written to {} (raw mae={})",
                rows.len(),
                path.display(),
                format_g6(rows[0].raw.mae)
            )?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

/// One configuration per fixed order followed by the adaptive schedule, all
/// sharing the remaining settings of `base`.
pub fn sweep_configs(base: &RestorationConfig, alphas: &[f64], section: &RestorationSection) -> Vec<RestorationConfig> {
    alphas
        .iter()
        .map(|&a| RestorationConfig { alpha: AlphaSchedule::Constant(a), ..base.clone() })
        .chain(std::iter::once(RestorationConfig {
            alpha: AlphaSchedule::Adaptive(section.adaptive_rule()),
            ..base.clone()
        }))
        .collect()
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let _ = writeln!(err, "{}", first.trim());
            return 2;
        }
    };
    let result = match cli.command {
        Command::Restore(a) => cmd_restore(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", single_line(&e.to_string()));
            1
        }
    }
}

fn single_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}
