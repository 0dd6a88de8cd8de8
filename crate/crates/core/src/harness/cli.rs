//! Command-line front end. `main` only forwards to [`run`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use super::{
    emit_plot_data, exit_code, read_sweep_report, run_blayer_check, run_correction, run_limit_spectrum, run_sweep,
    run_validate, sweep_csv, write_blayer_check, write_correction, write_json, write_limit_spectrum,
    write_sweep_metadata, Config, Format, Formats, OUT_DIR_ENV,
};
use crate::error::Result;
use crate::exec::{with_jobs, ExecMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "stripspec-out")]
    out: PathBuf,
    /// Worker threads; 1 runs the sequential path.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides `solver.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output encoding; both are written when omitted.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the limiting spectrum.
    LimitSpectrum,
    /// First-order corrections and cluster splitting.
    Correction,
    /// Boundary-layer identities at the configured widths.
    BlayerCheck,
    /// Sweep plus pass/fail verdicts on the convergence claims.
    Validate,
    /// Direct eigenvalues over the configured (N, eta) grid.
    Sweep,
    /// Plot data from a saved sweep or validate report.
    EmitPlots {
        /// Report JSON; defaults to `<out>/sweep.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "stripspec",
    version,
    about = "Spectra of a cylinder with alternating Dirichlet/Neumann strips"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn load_config(c: &Common) -> Result<Config> {
    let mut cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = c.seed {
        cfg.solver.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exec_mode(jobs: Option<usize>) -> ExecMode {
    match jobs {
        Some(1) => ExecMode::Sequential,
        _ => ExecMode::Parallel,
    }
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        info!("wrote {}", p.display());
    }
}

fn write_sweep_outputs(report: &super::SweepReport, out: &Path, f: Formats, stem: &str) -> Result<()> {
    let mut written = Vec::new();
    if f.0 != Some(Format::Json) {
        let p = out.join(format!("{stem}.csv"));
        super::write_text(&p, &sweep_csv(report))?;
        written.push(p);
    }
    let meta = out.join(format!("{stem}.meta.json"));
    write_sweep_metadata(report, &meta)?;
    written.push(meta);
    report_written(&written);
    Ok(())
}

/// Exit code of a finished sweep: solver failure if any point failed.
fn sweep_status(report: &super::SweepReport) -> i32 {
    match report.first_error_code() {
        Some(code) => {
            warn!("{} sweep point(s) failed", report.summary.failed_points);
            code
        }
        None => 0,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let c = &cli.common;
    let f = Formats(c.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }));
    let exec = exec_mode(c.jobs);
    match &cli.command {
        Command::EmitPlots { report } => {
            let path = report.clone().unwrap_or_else(|| c.out.join("sweep.json"));
            let r = read_sweep_report(&path)?;
            let written = emit_plot_data(&r, &c.out.join("plots"))?;
            report_written(&written);
            Ok(0)
        }
        cmd => {
            let cfg = load_config(c)?;
            match cmd {
                Command::LimitSpectrum => {
                    let r = run_limit_spectrum(&cfg)?;
                    report_written(&write_limit_spectrum(&r, &c.out, f)?);
                    Ok(0)
                }
                Command::Correction => {
                    let r = run_correction(&cfg)?;
                    report_written(&write_correction(&r, &c.out, f)?);
                    Ok(0)
                }
                Command::BlayerCheck => {
                    let rows = run_blayer_check(&cfg, exec)?;
                    report_written(&write_blayer_check(&rows, &c.out, f)?);
                    let failed = rows.iter().filter(|r| !r.pass).count();
                    if failed > 0 {
                        warn!("{failed} boundary-layer check(s) outside tolerance");
                    }
                    Ok(0)
                }
                Command::Sweep => {
                    let r = run_sweep(&cfg, exec)?;
                    if f.0 != Some(Format::Csv) {
                        let p = c.out.join("sweep.json");
                        write_json(&r, &p)?;
                        report_written(&[p]);
                    }
                    write_sweep_outputs(&r, &c.out, f, "sweep")?;
                    Ok(sweep_status(&r))
                }
                Command::Validate => {
                    let v = run_validate(&cfg, exec)?;
                    if f.0 != Some(Format::Csv) {
                        let p = c.out.join("validate.json");
                        write_json(&v, &p)?;
                        report_written(&[p]);
                    }
                    write_sweep_outputs(&v.sweep, &c.out, f, "validate")?;
                    for ch in &v.checks {
                        println!("{} {}: {}", if ch.pass { "PASS" } else { "FAIL" }, ch.name, ch.detail);
                    }
                    Ok(sweep_status(&v.sweep))
                }
                Command::EmitPlots { .. } => unreachable!(),
            }
        }
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let jobs = cli.common.jobs.unwrap_or(0);
    let outcome = with_jobs(jobs, move || dispatch(cli));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
