//! `(N, η)` sweeps of the direct solver against the limiting spectrum and the
//! first-order prediction.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::correction::lambda1_mode;
use crate::direct::{
    build_full3d, build_mode_reduced, limiting_full3d, mode_grid_for, smallest_eigenpairs_with,
    solve_limiting_labelled, EigenOptions, Full3dGrid, ModeGrid,
};
use crate::error::{Error, Result};
use crate::exec::{map_collect, ExecMode};
use crate::spectrum::{AngularKind, LimitingMode, StripProfile};

use super::config::Config;

/// Extra limiting candidates offered to the matcher beyond the tracked count.
const MATCH_SLACK: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointGrid {
    ModeReduced(ModeGrid),
    Full3d(Full3dGrid),
}

/// Limiting eigenvalue a direct eigenvalue was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedLimit {
    pub lambda0: f64,
    /// Radial and axial indices, when known.
    pub k: Option<u32>,
    pub m: Option<u32>,
    pub lambda1: Option<f64>,
    /// `λ₀ + ελ₁`
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedMode {
    /// Angular order of the block; `None` on the 3D path.
    pub order: Option<u32>,
    /// Position in the block, from 1.
    pub index: usize,
    pub lambda_eps: f64,
    pub residual: f64,
    /// `λ₀^k`, the limiting eigenvalue with the same index on the same grid.
    pub lambda0_kth: f64,
    pub matched: MatchedLimit,
    /// `λ₀ − λ_ε` against the matched limit.
    pub gap: f64,
    /// `−ελ₁`
    pub predicted_gap: Option<f64>,
    /// `(λ_ε − λ₀)/ε`
    pub slope: f64,
    /// `slope/λ₁ − 1`
    pub slope_deviation: Option<f64>,
    /// `(λ₀^k − λ_ε^k) / (ε(|ln η| + 1))`
    pub bound_ratio: f64,
    pub below_limit: bool,
    pub slope_ok: Option<bool>,
    pub in_envelope: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_strips: u32,
    pub epsilon: f64,
    pub eta: f64,
    /// `ε|ln η|`, reported so runs can be read against the scaling hypothesis.
    pub eps_log_eta: f64,
    pub grid: Option<PointGrid>,
    pub modes: Vec<TrackedMode>,
    pub error: Option<String>,
    /// CLI exit code of `error`.
    pub error_code: Option<i32>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointSlope {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub slope: f64,
}

/// Slope history of one tracked mode at fixed `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub eta: f64,
    pub order: Option<u32>,
    pub index: usize,
    pub lambda1: Option<f64>,
    /// `(ε, (λ_ε − λ₀)/ε)` by decreasing `ε`.
    pub slopes: Vec<(f64, f64)>,
    /// Secant slopes of `λ_ε − λ₀` between neighbouring `ε`.
    pub two_point: Vec<TwoPointSlope>,
    /// Intercept of the least-squares fit `slope = s₀ + c ε^{1/2}`, three or
    /// more points only.
    pub richardson: Option<f64>,
    pub richardson_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum BoundConstant {
    Configured {
        value: f64,
    },
    /// Largest bound ratio at the point with the smallest `ε`, ties broken by
    /// the smallest `η`.
    Fitted {
        value: f64,
        n_strips: u32,
        eta: f64,
    },
}

impl BoundConstant {
    pub fn value(&self) -> f64 {
        match self {
            BoundConstant::Configured { value } | BoundConstant::Fitted { value, .. } => *value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: usize,
    pub failed_points: usize,
    pub all_below_limit: bool,
    pub all_in_envelope: bool,
    pub slope_flags: usize,
    /// `λ₀ − λ_ε` of the lowest mode grows as `η` decreases, at every `N`
    /// with two or more `η` values.
    pub gap_monotone_in_eta: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: Config,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    pub fits: Vec<SlopeFit>,
    pub bound_constant: Option<BoundConstant>,
    pub summary: SweepSummary,
}

impl SweepReport {
    /// Exit code of the first failed point.
    pub fn first_error_code(&self) -> Option<i32> {
        self.points.iter().find_map(|p| p.error_code)
    }
}

/// Order-preserving injective assignment of ascending `values` to `targets`
/// minimising `Σ|value − target|`. Returns target indices.
pub fn match_ordered(values: &[f64], targets: &[f64]) -> Vec<usize> {
    let (q, p) = (values.len(), targets.len());
    assert!(q <= p, "more values than targets");
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]));
    // cost[i][j]: first i values placed among the first j sorted targets
    let inf = f64::INFINITY;
    let mut cost = vec![vec![inf; p + 1]; q + 1];
    cost[0].iter_mut().for_each(|c| *c = 0.0);
    for i in 1..=q {
        for j in i..=p {
            let skip = cost[i][j - 1];
            let take = cost[i - 1][j - 1] + (values[i - 1] - targets[order[j - 1]]).abs();
            cost[i][j] = skip.min(take);
        }
    }
    let mut out = vec![0; q];
    let (mut i, mut j) = (q, p);
    while i > 0 {
        let take = cost[i - 1][j - 1] + (values[i - 1] - targets[order[j - 1]]).abs();
        if cost[i][j] == take {
            out[i - 1] = order[j - 1];
            i -= 1;
        }
        j -= 1;
    }
    out
}

fn tracked(
    profile: &StripProfile,
    order: Option<u32>,
    direct: &[(f64, f64)],
    limits: &[MatchedLimit],
    slope_tol: f64,
) -> Vec<TrackedMode> {
    let eps = profile.epsilon();
    let scale = eps * (profile.eta.ln().abs() + 1.0);
    let targets: Vec<f64> = limits.iter().map(|l| l.predicted.unwrap_or(l.lambda0)).collect();
    let values: Vec<f64> = direct.iter().map(|d| d.0).collect();
    let assign = match_ordered(&values, &targets);
    let mut kth: Vec<f64> = limits.iter().map(|l| l.lambda0).collect();
    kth.sort_by(f64::total_cmp);
    direct
        .iter()
        .enumerate()
        .map(|(i, &(lam, res))| {
            let m = limits[assign[i]];
            let slope = (lam - m.lambda0) / eps;
            let dev = m.lambda1.map(|l1| slope / l1 - 1.0);
            TrackedMode {
                order,
                index: i + 1,
                lambda_eps: lam,
                residual: res,
                lambda0_kth: kth[i],
                matched: m,
                gap: m.lambda0 - lam,
                predicted_gap: m.lambda1.map(|l1| -eps * l1),
                slope,
                slope_deviation: dev,
                bound_ratio: (kth[i] - lam) / scale,
                below_limit: lam <= kth[i],
                slope_ok: dev.map(|d| d.abs() <= slope_tol),
                in_envelope: None,
            }
        })
        .collect()
}

fn mode_reduced_point(
    cfg: &Config,
    profile: &StripProfile,
    opts: &EigenOptions,
) -> Result<(PointGrid, Vec<TrackedMode>)> {
    let so = &cfg.solver;
    let grid = mode_grid_for(profile, so.n_r, so.axial_per_strip, so.radial_grading);
    let count = cfg.sweep.modes;
    let mut modes = Vec::new();
    for &order in &cfg.sweep.orders {
        let op = build_mode_reduced(profile, order, grid)?;
        let pairs = smallest_eigenpairs_with(&op, count, so.tol, opts)?;
        let lim = solve_limiting_labelled(profile.height, order, grid, count + MATCH_SLACK)?;
        let kind = if order == 0 {
            AngularKind::Axisymmetric
        } else {
            AngularKind::Cosine
        };
        let limits = lim
            .iter()
            .map(|l| {
                let mode = LimitingMode::new(l.m, order, l.k, kind, profile.height)?;
                let l1 = lambda1_mode(&mode, 0.0, profile)?;
                Ok(MatchedLimit {
                    lambda0: l.value,
                    k: Some(l.k),
                    m: Some(l.m),
                    lambda1: Some(l1),
                    predicted: Some(l.value + profile.epsilon() * l1),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let direct: Vec<(f64, f64)> = pairs.iter().map(|p| (p.value, p.residual)).collect();
        modes.extend(tracked(
            profile,
            Some(order),
            &direct,
            &limits,
            cfg.sweep.slope_tolerance,
        ));
    }
    Ok((PointGrid::ModeReduced(grid), modes))
}

fn full3d_point(cfg: &Config, profile: &StripProfile, opts: &EigenOptions) -> Result<(PointGrid, Vec<TrackedMode>)> {
    let so = &cfg.solver;
    let mg = mode_grid_for(profile, so.n_r, so.axial_per_strip, so.radial_grading);
    let grid = Full3dGrid {
        n_r: so.n_r,
        n_theta: so.n_theta,
        n_x3: mg.n_x3,
        radial_grading: so.radial_grading,
    };
    let count = cfg.sweep.modes;
    let op = build_full3d(profile, grid)?;
    let pairs = smallest_eigenpairs_with(&op, count, so.tol, opts)?;
    let lim = smallest_eigenpairs_with(&limiting_full3d(profile.height, grid)?, count, so.tol, opts)?;
    let limits: Vec<MatchedLimit> = lim
        .iter()
        .map(|l| MatchedLimit {
            lambda0: l.value,
            k: None,
            m: None,
            lambda1: None,
            predicted: None,
        })
        .collect();
    let direct: Vec<(f64, f64)> = pairs.iter().map(|p| (p.value, p.residual)).collect();
    Ok((
        PointGrid::Full3d(grid),
        tracked(profile, None, &direct, &limits, cfg.sweep.slope_tolerance),
    ))
}

/// CLI exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 4,
        Error::Convergence { .. }
        | Error::EigenNotConverged { .. }
        | Error::Compatibility { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::SlitEndpoint { .. } => 3,
        Error::Domain(_)
        | Error::Resolution(_)
        | Error::MemoryGuard { .. }
        | Error::Config { .. }
        | Error::Parse { .. } => 2,
    }
}

fn run_point(cfg: &Config, n_strips: u32, eta: f64, exec: ExecMode) -> SweepPoint {
    let start = Instant::now();
    let opts = EigenOptions {
        seed: cfg.solver.seed,
        max_iter: cfg.solver.max_iter,
        exec,
        ..EigenOptions::default()
    };
    let profile = cfg.sweep_profile(n_strips, eta);
    let eps = cfg.profile.height / (std::f64::consts::PI * n_strips as f64);
    let result = profile.and_then(|p| {
        if cfg.solver.full3d {
            full3d_point(cfg, &p, &opts)
        } else {
            mode_reduced_point(cfg, &p, &opts)
        }
    });
    let (grid, modes, error, error_code) = match result {
        Ok((g, m)) => (Some(g), m, None, None),
        Err(e) => {
            log::warn!("sweep point N = {n_strips}, eta = {eta} failed: {e}");
            (None, Vec::new(), Some(e.to_string()), Some(exit_code(&e)))
        }
    };
    let wall = start.elapsed().as_secs_f64();
    log::info!("sweep point N = {n_strips}, eta = {eta} done in {wall:.1} s");
    SweepPoint {
        n_strips,
        epsilon: eps,
        eta,
        eps_log_eta: eps * eta.ln().abs(),
        grid,
        modes,
        error,
        error_code,
        wall_time_s: wall,
    }
}

/// Least-squares intercept of `y = s₀ + c√x`.
fn sqrt_fit(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(e, y) in pts {
        let x = e.sqrt();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    (det.abs() > 0.0).then(|| (sxx * sy - sx * sxy) / det)
}

fn slope_fits(points: &[SweepPoint]) -> Vec<SlopeFit> {
    let mut keys: Vec<(u64, Option<u32>, usize)> = Vec::new();
    for p in points {
        for m in &p.modes {
            let k = (p.eta.to_bits(), m.order, m.index);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    keys.into_iter()
        .map(|(eta_bits, order, index)| {
            let eta = f64::from_bits(eta_bits);
            let mut rows: Vec<(f64, &TrackedMode)> = points
                .iter()
                .filter(|p| p.eta.to_bits() == eta_bits)
                .filter_map(|p| {
                    p.modes
                        .iter()
                        .find(|m| m.order == order && m.index == index)
                        .map(|m| (p.epsilon, m))
                })
                .collect();
            rows.sort_by(|a, b| b.0.total_cmp(&a.0));
            let lambda1 = rows.last().and_then(|r| r.1.matched.lambda1);
            let slopes: Vec<(f64, f64)> = rows.iter().map(|(e, m)| (*e, m.slope)).collect();
            let two_point = rows
                .windows(2)
                .map(|w| TwoPointSlope {
                    eps_coarse: w[0].0,
                    eps_fine: w[1].0,
                    slope: (w[1].1.gap - w[0].1.gap) / (w[0].0 - w[1].0),
                })
                .collect();
            let richardson = sqrt_fit(&slopes);
            SlopeFit {
                eta,
                order,
                index,
                lambda1,
                slopes,
                two_point,
                richardson,
                richardson_deviation: richardson.zip(lambda1).map(|(r, l)| r / l - 1.0),
            }
        })
        .collect()
}

fn fit_constant(points: &[SweepPoint]) -> Option<BoundConstant> {
    let p = points
        .iter()
        .filter(|p| !p.modes.is_empty())
        .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.eta.total_cmp(&b.eta)))?;
    let value = p.modes.iter().map(|m| m.bound_ratio).fold(f64::NEG_INFINITY, f64::max);
    Some(BoundConstant::Fitted {
        value,
        n_strips: p.n_strips,
        eta: p.eta,
    })
}

fn gap_monotone(points: &[SweepPoint]) -> Option<bool> {
    let mut ns: Vec<u32> = points.iter().map(|p| p.n_strips).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut verdict = None;
    for n in ns {
        let mut row: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.n_strips == n)
            .filter_map(|p| p.modes.first().map(|m| (p.eta, m.lambda0_kth - m.lambda_eps)))
            .collect();
        if row.len() < 2 {
            continue;
        }
        row.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ok = row.windows(2).all(|w| w[0].1 > w[1].1);
        verdict = Some(verdict.unwrap_or(true) && ok);
    }
    verdict
}

/// Run every `(N, η)` point of the sweep; failures are recorded per point.
pub fn run_sweep(cfg: &Config, exec: ExecMode) -> Result<SweepReport> {
    cfg.validate()?;
    cfg.validate_direct()?;
    let mut grid = Vec::new();
    for &eta in &cfg.sweep.eta {
        for &n in &cfg.sweep.n_strips {
            grid.push((n, eta));
        }
    }
    let mut points = map_collect(&grid, exec, |&(n, eta)| run_point(cfg, n, eta, exec));
    let bound_constant = match cfg.sweep.bound_constant {
        Some(value) => Some(BoundConstant::Configured { value }),
        None => fit_constant(&points),
    };
    if let Some(c) = &bound_constant {
        let c = c.value();
        for m in points.iter_mut().flat_map(|p| p.modes.iter_mut()) {
            m.in_envelope = Some(m.bound_ratio <= c);
        }
    }
    let fits = slope_fits(&points);
    let modes = || points.iter().flat_map(|p| p.modes.iter());
    let summary = SweepSummary {
        points: points.len(),
        failed_points: points.iter().filter(|p| p.error.is_some()).count(),
        all_below_limit: modes().all(|m| m.below_limit),
        all_in_envelope: modes().all(|m| m.in_envelope != Some(false)),
        slope_flags: modes().filter(|m| m.slope_ok == Some(false)).count(),
        gap_monotone_in_eta: gap_monotone(&points),
    };
    Ok(SweepReport {
        config: cfg.clone(),
        seed: cfg.solver.seed,
        points,
        fits,
        bound_constant,
        summary,
    })
}
