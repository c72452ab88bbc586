use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use mmt_core::scenario::{emit_report, render_catalog, run_scenario, ScenarioConfig};

/// Output root used when neither the command line, the config nor
/// `MMT_OUT_DIR` names one.
const DEFAULT_OUT_ROOT: &str = "out";

#[derive(Parser)]
#[command(
    name = "mmt",
    version,
    about = "Integrate transfer maps between quadratic Hamiltonian systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write samples.csv and summary.json.
    Run {
        path: PathBuf,
        /// Output directory (overrides output.dir and MMT_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Integration step (overrides integration.h).
        #[arg(long = "h", value_name = "STEP")]
        h: Option<f64>,
        /// Final proper time (overrides integration.tau_max).
        #[arg(long = "tau-max", value_name = "T")]
        tau_max: Option<f64>,
    },
    /// Parse and validate a scenario without running it.
    Check { path: PathBuf },
    /// List built-in metrics, congruences, Hamiltonian kinds and templates.
    Catalog,
}

fn load(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScenarioConfig::parse(&text).with_context(|| format!("{}", path.display()))
}

fn positive(flag: &str, v: f64) -> anyhow::Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        bail!("{flag} must be positive and finite, got {v}");
    }
    Ok(v)
}

fn output_dir(cfg: &ScenarioConfig, out: Option<PathBuf>) -> PathBuf {
    if let Some(out) = out {
        return out;
    }
    if let Some(dir) = &cfg.output_dir {
        return PathBuf::from(dir);
    }
    let root = std::env::var_os("MMT_OUT_DIR")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    root.join(&cfg.name)
}

fn run(path: &Path, out: Option<PathBuf>, h: Option<f64>, tau_max: Option<f64>) -> anyhow::Result<u8> {
    let mut cfg = load(path)?;
    if let Some(h) = h {
        cfg.h = positive("--h", h)?;
    }
    if let Some(t) = tau_max {
        cfg.tau_max = positive("--tau-max", t)?;
    }
    let dir = output_dir(&cfg, out);
    let report = run_scenario(&cfg).with_context(|| format!("scenario `{}`", cfg.name))?;
    let written = emit_report(&report, &cfg, &dir)?;

    let s = &report.summary;
    let flag = |ok: bool| if ok { "ok" } else { "FAIL" };
    println!("scenario {} (n = {}, {} samples)", s.scenario, s.n, s.grid.samples);
    println!(
        "  mapping residual   {:.3e} <= {:.1e}  {}",
        s.max.mapping_residual,
        s.tolerance.mapping,
        flag(s.pass.mapping)
    );
    println!(
        "  ode residual       {:.3e} <= {:.1e}  {}",
        s.max.ode_residual,
        s.tolerance.ode,
        flag(s.pass.ode)
    );
    println!(
        "  factorization      {:.3e} <= {:.1e}  {}",
        s.max.factorization,
        s.tolerance.factorization,
        flag(s.pass.factorization)
    );
    println!(
        "  drift              {:.3e} <= {:.1e}  {}",
        s.max.norm_drift.max(s.max.frame_drift),
        s.tolerance.drift,
        flag(s.pass.drift)
    );
    println!("  symplectic defect  {:.3e}", s.max.symplectic_defect);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(report.exit_code() as u8)
}

fn check(path: &Path) -> anyhow::Result<u8> {
    let cfg = load(path)?;
    print!("{cfg}");
    Ok(0)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as a tolerance
    // failure.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run { path, out, h, tau_max } => run(&path, out, h, tau_max),
        Command::Check { path } => check(&path),
        Command::Catalog => {
            print!("{}", render_catalog());
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
