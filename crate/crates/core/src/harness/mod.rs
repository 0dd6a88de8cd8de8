//! Orchestration behind the CLI: run configs, assemble reports, write files.
//!
//! File schemas (all floats in shortest round-trip decimal unless noted):
//!
//! * `limit_spectrum.{csv,json}`: one row per limiting mode,
//!   `index,m,n,k,kind,kappa,wavenumber,lambda0,cluster`.
//! * `correction.{csv,json}`: one CSV row per orthogonalised mode,
//!   `group_id,lambda0,epsilon,eta,modes,index,lambda1,predicted,splitting,alpha,remainder_band`;
//!   the JSON holds the full cluster reports.
//! * `blayer_check.{csv,json}`: `a,check,value,expected,error,tolerance,pass`.
//! * `sweep.{csv,json}` / `validate.json`: the sweep report; one CSV row per
//!   tracked mode. Wall times go to `*.meta.json` so the reports themselves
//!   are reproducible byte for byte.
//! * `plots/mode_n{order}_k{index}.dat` (`mode_3d_k{index}.dat` on the 3D
//!   path): `#` header, then `epsilon eta gap predicted_gap` per sweep point
//!   at 17 significant digits; `nan` marks an unknown prediction.

pub mod cli;
pub mod config;
pub mod sweep;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blayer::{flux_identities, mean_zero_check, norm_functionals_with, FluxIdentities};
use crate::correction::{classify_cluster, classify_record, CorrectionReport};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::spectrum::{clusters, limiting_spectrum, load_cross_section, AngularKind};

pub use config::{Config, CrossSection};
pub use sweep::{exit_code, match_ordered, run_sweep, BoundConstant, SweepPoint, SweepReport, TrackedMode};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "STRIPSPEC_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Which encodings to write; `None` writes both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats(pub Option<Format>);

impl Formats {
    fn csv(self) -> bool {
        self.0 != Some(Format::Json)
    }
    fn json(self) -> bool {
        self.0 != Some(Format::Csv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub kind: AngularKind,
    pub kappa: f64,
    pub wavenumber: f64,
    pub lambda0: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpectrumReport {
    pub height: f64,
    pub count: usize,
    pub modes: Vec<SpectrumRow>,
}

pub fn run_limit_spectrum(cfg: &Config) -> Result<LimitSpectrumReport> {
    let h = cfg.profile.height;
    let modes = limiting_spectrum(h, cfg.spectrum.count)?
        .into_iter()
        .enumerate()
        .map(|(i, m)| SpectrumRow {
            index: i + 1,
            m: m.m,
            n: m.n,
            k: m.k,
            kind: m.angular_kind,
            kappa: m.kappa,
            wavenumber: m.wavenumber,
            lambda0: m.lambda0,
            cluster: m.group,
        })
        .collect();
    Ok(LimitSpectrumReport {
        height: h,
        count: cfg.spectrum.count,
        modes,
    })
}

/// Cluster corrections on the disk, or per imported cross-section record.
pub fn run_correction(cfg: &Config) -> Result<Vec<CorrectionReport>> {
    let profile = cfg.profile()?;
    match cfg.spectrum.cross_section {
        CrossSection::Disk => {
            let modes = limiting_spectrum(profile.height, cfg.spectrum.count)?;
            clusters(&modes)
                .iter()
                .map(|c| classify_cluster(c, &profile, None))
                .collect()
        }
        CrossSection::Records => {
            let path = cfg
                .spectrum
                .records
                .as_ref()
                .ok_or_else(|| Error::config("spectrum.records", "missing records file"))?;
            let records = load_cross_section(path)?;
            records
                .iter()
                .enumerate()
                .map(|(i, r)| classify_record(r, cfg.spectrum.record_m, i, &profile, None))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlayerRow {
    pub a: f64,
    pub check: String,
    pub value: f64,
    pub expected: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Relative tolerance of the norm and flux identities.
pub const BLAYER_IDENTITY_TOL: f64 = 1e-6;
/// Absolute tolerance of the mean-zero check.
pub const BLAYER_MEAN_TOL: f64 = 1e-8;

fn rel(value: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        value.abs()
    } else {
        ((value - expected) / expected).abs()
    }
}

pub fn run_blayer_check(cfg: &Config, exec: ExecMode) -> Result<Vec<BlayerRow>> {
    let mut rows = Vec::new();
    let mut push = |a: f64, check: &str, value: f64, expected: f64, error: f64, tolerance: f64| {
        rows.push(BlayerRow {
            a,
            check: check.to_string(),
            value,
            expected,
            error,
            tolerance,
            pass: error <= tolerance,
        })
    };
    for &a in &cfg.blayer.a {
        let nf = norm_functionals_with(a, exec)?;
        push(
            a,
            "grad_x_sq",
            nf.grad_x_sq,
            nf.grad_x_sq_exact,
            nf.grad_rel_err(),
            BLAYER_IDENTITY_TOL,
        );
        push(
            a,
            "dx_da_sq",
            nf.dx_da_sq,
            nf.dx_da_sq_exact,
            nf.dx_da_rel_err(),
            BLAYER_IDENTITY_TOL,
        );
        push(
            a,
            "xi2_grad_x_norm",
            nf.xi2_grad_x_sq.sqrt(),
            nf.x_sq.sqrt(),
            nf.weighted_rel_err(),
            BLAYER_IDENTITY_TOL,
        );
        let fl = flux_identities(a)?;
        let ex = FluxIdentities::expected(a);
        push(
            a,
            "strip_flux",
            fl.strip_flux,
            ex.strip_flux,
            rel(fl.strip_flux, ex.strip_flux),
            BLAYER_IDENTITY_TOL,
        );
        push(
            a,
            "band_integral",
            fl.band_integral,
            ex.band_integral,
            rel(fl.band_integral, ex.band_integral),
            BLAYER_IDENTITY_TOL,
        );
        for xi2 in [0.05, 0.5, 2.0] {
            let r = mean_zero_check(xi2, a)?;
            push(a, &format!("mean_zero_xi2_{xi2}"), r, 0.0, r.abs(), BLAYER_MEAN_TOL);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub sweep: SweepReport,
}

/// Sweep plus the convergence verdicts; failed checks are flagged, not
/// raised.
pub fn run_validate(cfg: &Config, exec: ExecMode) -> Result<ValidationReport> {
    let sweep = run_sweep(cfg, exec)?;
    let s = &sweep.summary;
    let mut checks = vec![
        Check {
            name: "upper_bound".into(),
            pass: s.all_below_limit && s.failed_points == 0,
            detail: format!(
                "lambda_eps <= lambda0 at every tracked mode of {} points",
                s.points - s.failed_points
            ),
        },
        Check {
            name: "lower_envelope".into(),
            pass: s.all_in_envelope && s.failed_points == 0,
            detail: match &sweep.bound_constant {
                Some(c) => format!("C = {:.6}", c.value()),
                None => "no successful point".into(),
            },
        },
    ];
    // slope at the smallest ε for each η
    let mut etas: Vec<f64> = sweep.points.iter().map(|p| p.eta).collect();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    for eta in etas {
        let finest = sweep
            .points
            .iter()
            .filter(|p| p.eta == eta && !p.modes.is_empty())
            .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        if let Some(p) = finest {
            if let Some(m) = p.modes.first() {
                if let Some(dev) = m.slope_deviation {
                    checks.push(Check {
                        name: format!("slope_eta_{eta}_n_{}", p.n_strips),
                        pass: dev.abs() <= cfg.sweep.slope_tolerance,
                        detail: format!(
                            "slope {:.6} vs lambda1 {:.6}, deviation {:.4}",
                            m.slope,
                            m.matched.lambda1.unwrap_or(f64::NAN),
                            dev
                        ),
                    });
                }
            }
        }
    }
    if let Some(ok) = s.gap_monotone_in_eta {
        checks.push(Check {
            name: "gap_grows_as_eta_falls".into(),
            pass: ok,
            detail: "lowest mode at each N".into(),
        });
    }
    Ok(ValidationReport { checks, sweep })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    write_text(path, &s)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn optb(v: Option<bool>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn kind_name(k: AngularKind) -> &'static str {
    match k {
        AngularKind::Axisymmetric => "axisymmetric",
        AngularKind::Cosine => "cosine",
        AngularKind::Sine => "sine",
    }
}

pub fn write_limit_spectrum(r: &LimitSpectrumReport, out: &Path, f: Formats) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if f.csv() {
        let mut s = String::from("index,m,n,k,kind,kappa,wavenumber,lambda0,cluster\n");
        for m in &r.modes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                m.index,
                m.m,
                m.n,
                m.k,
                kind_name(m.kind),
                m.kappa,
                m.wavenumber,
                m.lambda0,
                m.cluster
            );
        }
        let p = out.join("limit_spectrum.csv");
        write_text(&p, &s)?;
        written.push(p);
    }
    if f.json() {
        let p = out.join("limit_spectrum.json");
        write_json(r, &p)?;
        written.push(p);
    }
    Ok(written)
}

pub fn write_correction(reports: &[CorrectionReport], out: &Path, f: Formats) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if f.csv() {
        let mut s =
            String::from("group_id,lambda0,epsilon,eta,modes,index,lambda1,predicted,splitting,alpha,remainder_band\n");
        for r in reports {
            let modes: Vec<String> = r
                .modes
                .iter()
                .map(|(m, n, k, kind)| format!("{m}:{n}:{k}:{}", kind_name(*kind)))
                .collect();
            let split = serde_json::to_value(r.splitting)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            for (i, (l1, pred)) in r.lambda1_values.iter().zip(&r.predicted).enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.group_id,
                    r.lambda0,
                    r.epsilon,
                    r.eta,
                    modes.join(";"),
                    i + 1,
                    l1,
                    pred,
                    split,
                    opt(r.alpha),
                    r.remainder_band
                );
            }
        }
        let p = out.join("correction.csv");
        write_text(&p, &s)?;
        written.push(p);
    }
    if f.json() {
        let p = out.join("correction.json");
        write_json(&reports, &p)?;
        written.push(p);
    }
    Ok(written)
}

pub fn write_blayer_check(rows: &[BlayerRow], out: &Path, f: Formats) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if f.csv() {
        let mut s = String::from("a,check,value,expected,error,tolerance,pass\n");
        for r in rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.a, r.check, r.value, r.expected, r.error, r.tolerance, r.pass
            );
        }
        let p = out.join("blayer_check.csv");
        write_text(&p, &s)?;
        written.push(p);
    }
    if f.json() {
        let p = out.join("blayer_check.json");
        write_json(&rows, &p)?;
        written.push(p);
    }
    Ok(written)
}

pub fn sweep_csv(r: &SweepReport) -> String {
    let mut s = String::from(
        "n_strips,epsilon,eta,eps_log_eta,order,index,m,k,lambda0,lambda0_kth,lambda1,predicted,lambda_eps,residual,\
         gap,slope,slope_deviation,bound_ratio,below_limit,slope_ok,in_envelope,error\n",
    );
    for p in &r.points {
        if let Some(e) = &p.error {
            let _ = writeln!(
                s,
                "{},{},{},{},,,,,,,,,,,,,,,,,,\"{}\"",
                p.n_strips,
                p.epsilon,
                p.eta,
                p.eps_log_eta,
                e.replace('"', "'")
            );
            continue;
        }
        for m in &p.modes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                p.n_strips,
                p.epsilon,
                p.eta,
                p.eps_log_eta,
                m.order.map_or_else(|| "3d".to_string(), |o| o.to_string()),
                m.index,
                m.matched.m.map_or_else(String::new, |v| v.to_string()),
                m.matched.k.map_or_else(String::new, |v| v.to_string()),
                m.matched.lambda0,
                m.lambda0_kth,
                opt(m.matched.lambda1),
                opt(m.matched.predicted),
                m.lambda_eps,
                m.residual,
                m.gap,
                m.slope,
                opt(m.slope_deviation),
                m.bound_ratio,
                m.below_limit,
                optb(m.slope_ok),
                optb(m.in_envelope)
            );
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct PointTiming {
    n_strips: u32,
    eta: f64,
    wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RunMetadata {
    finished_unix_s: u64,
    total_wall_time_s: f64,
    points: Vec<PointTiming>,
}

/// Timing block kept apart from the reproducible report.
pub fn write_sweep_metadata(r: &SweepReport, path: &Path) -> Result<()> {
    let points: Vec<PointTiming> = r
        .points
        .iter()
        .map(|p| PointTiming {
            n_strips: p.n_strips,
            eta: p.eta,
            wall_time_s: p.wall_time_s,
        })
        .collect();
    let meta = RunMetadata {
        finished_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        total_wall_time_s: points.iter().map(|p| p.wall_time_s).sum(),
        points,
    };
    write_json(&meta, path)
}

/// Load a report written by `sweep` or `validate`.
pub fn read_sweep_report(path: &Path) -> Result<SweepReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |e: serde_json::Error| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    match serde_json::from_str::<SweepReport>(&text) {
        Ok(r) => Ok(r),
        Err(_) => serde_json::from_str::<ValidationReport>(&text)
            .map(|v| v.sweep)
            .map_err(parse_err),
    }
}

/// Stem of the plot file for a tracked mode.
pub fn plot_file_name(order: Option<u32>, index: usize) -> String {
    match order {
        Some(n) => format!("mode_n{n}_k{index}.dat"),
        None => format!("mode_3d_k{index}.dat"),
    }
}

fn sci17(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => "nan".to_string(),
    }
}

/// One data file per tracked mode of the config, rows in report order.
pub fn emit_plot_data(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let orders: Vec<Option<u32>> = if report.config.solver.full3d {
        vec![None]
    } else {
        report.config.sweep.orders.iter().map(|&o| Some(o)).collect()
    };
    let mut written = Vec::new();
    for order in orders {
        for index in 1..=report.config.sweep.modes {
            let mut s = format!(
                "# tracked mode order={} index={index}\n# epsilon eta gap predicted_gap\n",
                order.map_or_else(|| "3d".to_string(), |o| o.to_string())
            );
            for p in &report.points {
                if let Some(m) = p.modes.iter().find(|m| m.order == order && m.index == index) {
                    let _ = writeln!(
                        s,
                        "{} {} {} {}",
                        sci17(Some(p.epsilon)),
                        sci17(Some(p.eta)),
                        sci17(Some(m.gap)),
                        sci17(m.predicted_gap)
                    );
                }
            }
            let path = dir.join(plot_file_name(order, index));
            write_text(&path, &s)?;
            written.push(path);
        }
    }
    Ok(written)
}
