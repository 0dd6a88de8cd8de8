//! Outer corrector `φ₁` on the unit disk, boundary-layer correctors and the
//! composite asymptotic eigenfunction.
//!
//! Coordinates near the lateral surface: `τ = 1 − r` (inward distance),
//! `s = θ`, fast variables `ξ₁ = x₃/ε − π/2` along the axis and `ξ₂ = τ/ε`
//! into the disk, so strip centres sit at `ξ₁ = πj`.

mod field;

pub use field::{
    composite_eigenfunction, cutoff, v1_plus, v2_pair, write_field_csv, CompositeField, CylinderPoint, FieldGrid,
    DEFAULT_CUTOFF_RADIUS, DISK_CURVATURE,
};

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::spectrum::{AngularKind, LimitingMode, StripProfile};

pub const DEFAULT_RADIAL_NODES: usize = 512;
/// The solvability defect of a consistent `λ₁` is about `h²`; the default
/// rejection threshold is this multiple of `h²`.
pub const COMPATIBILITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterOptions {
    /// Radial intervals; nodes are `r_i = i/n`, `i = 0..=n`.
    pub radial_nodes: usize,
    /// Relative solvability defect above which `λ₁` is declared
    /// inconsistent; `None` means [`COMPATIBILITY_FACTOR`]`·h²`.
    pub compatibility_tol: Option<f64>,
}

impl Default for OuterOptions {
    fn default() -> Self {
        OuterOptions {
            radial_nodes: DEFAULT_RADIAL_NODES,
            compatibility_tol: None,
        }
    }
}

/// One angular harmonic `u(r)·cos pθ` or `u(r)·sin pθ` of `φ₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialHarmonic {
    pub order: u32,
    /// `Cosine` or `Sine`; `p = 0` uses `Axisymmetric`.
    pub kind: AngularKind,
    /// Values at `r_i`, boundary node included.
    pub values: Vec<f64>,
    /// Coefficient of `−λ₁ R(r)` in the forcing; zero off resonance.
    pub forcing: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OuterCorrector {
    pub mode: LimitingMode,
    pub alpha: f64,
    pub lambda1: f64,
    pub radial_nodes: usize,
    pub harmonics: Vec<RadialHarmonic>,
    /// `φ₀^ν ln sin(ηg)` at `θ_j = 2πj/len`.
    pub boundary_data: Vec<f64>,
    /// Largest relative solvability defect over the resonant directions.
    pub compatibility_residual: f64,
    /// Discrete radial eigenvalue continuing `κ` on this grid.
    pub discrete_kappa: f64,
}

fn trig(kind: AngularKind, p: u32, theta: f64) -> f64 {
    match kind {
        AngularKind::Axisymmetric => 1.0,
        AngularKind::Cosine => (p as f64 * theta).cos(),
        AngularKind::Sine => (p as f64 * theta).sin(),
    }
}

/// `∫₀^{2π}` of the squared angular factor.
fn angular_mass(kind: AngularKind) -> f64 {
    match kind {
        AngularKind::Axisymmetric => TAU,
        _ => PI,
    }
}

/// Radial grid weights `r dr`: `h²/8` at the axis, `r_i h` inside.
fn volume_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    (0..n)
        .map(|i| if i == 0 { h * h / 8.0 } else { i as f64 * h * h })
        .collect()
}

/// Symmetric tridiagonal `V (L_p + shift)` on the unknown nodes `0..n`, where
/// `L_p u = u'' + u'/r − p²u/r²` in conservative form. For `p ≥ 1` the axis row
/// is the identity (`u₀ = 0`).
struct RadialOperator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    /// Coupling of the last unknown to the boundary node.
    boundary_coupling: f64,
}

impl RadialOperator {
    fn new(p: u32, n: usize, shift: f64) -> Self {
        let h = 1.0 / n as f64;
        let v = volume_weights(n);
        let mut sub = vec![0.0; n - 1];
        let mut sup = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let pp = (p * p) as f64;
        for i in 0..n {
            if i == 0 {
                if p == 0 {
                    // flux through the circle r = h/2
                    diag[0] = -0.5 + shift * v[0];
                    sup[0] = 0.5;
                } else {
                    diag[0] = 1.0;
                }
                continue;
            }
            let r = i as f64 * h;
            let (rm, rp) = (r - 0.5 * h, r + 0.5 * h);
            diag[i] = -(rm + rp) / h - v[i] * pp / (r * r) + shift * v[i];
            if i + 1 < n {
                sup[i] = rp / h;
            }
            let lower = if i == 1 && p > 0 { 0.0 } else { rm / h };
            sub[i - 1] = lower;
        }
        RadialOperator {
            sub,
            diag,
            sup,
            boundary_coupling: (1.0 - 0.5 * h) / h,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_tridiagonal(&self.sub, &self.diag, &self.sup, rhs)
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * u[i];
                if i > 0 {
                    s += self.sub[i - 1] * u[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * u[i + 1];
                }
                s
            })
            .collect()
    }
}

fn dot_w(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), z)| x * y * z).sum()
}

/// Discrete radial eigenpair nearest `κ` by inverse iteration, started from
/// the exact Bessel profile. Returns `(κ_h, R_h)` with `R_h` scaled like `R`.
fn discrete_eigenpair(mode: &LimitingMode, n: usize, exact: &[f64]) -> Result<(f64, Vec<f64>)> {
    let v = volume_weights(n);
    let op = RadialOperator::new(mode.n, n, mode.kappa);
    let mut x = exact.to_vec();
    for _ in 0..4 {
        let vx: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a * b).collect();
        let mut y = op.solve(&vx)?;
        if mode.n > 0 {
            y[0] = 0.0;
        }
        let scale = dot_w(&y, exact, &v) / dot_w(exact, exact, &v);
        y.iter_mut().for_each(|t| *t /= scale);
        x = y;
    }
    let sx = op.apply(&x);
    let num: f64 = x.iter().zip(&sx).map(|(a, b)| a * b).sum();
    let kappa_h = mode.kappa - num / dot_w(&x, &x, &v);
    Ok((kappa_h, x))
}

/// Fourier coefficients of real samples on a uniform periodic grid:
/// `(p, kind, coefficient)` for every harmonic above the noise floor.
fn fourier_modes(samples: &[f64]) -> Vec<(u32, AngularKind, f64)> {
    let m = samples.len();
    let pmax = m / 2 - 1;
    let mut out = Vec::new();
    for p in 0..=pmax {
        let (mut c, mut s) = (0.0, 0.0);
        for (j, v) in samples.iter().enumerate() {
            let t = TAU * (p * j % m) as f64 / m as f64;
            c += v * t.cos();
            s += v * t.sin();
        }
        if p == 0 {
            out.push((0, AngularKind::Axisymmetric, c / m as f64));
        } else {
            out.push((p as u32, AngularKind::Cosine, 2.0 * c / m as f64));
            out.push((p as u32, AngularKind::Sine, 2.0 * s / m as f64));
        }
    }
    let big = out.iter().fold(0.0f64, |a, t| a.max(t.2.abs()));
    out.retain(|t| t.2.abs() > 1e-15 * big);
    out
}

fn boundary_samples(mode: &LimitingMode, alpha: f64, profile: &StripProfile, m: usize) -> Result<Vec<f64>> {
    (0..m)
        .map(|j| {
            let t = TAU * j as f64 / m as f64;
            let a = profile.a(t);
            if !(a > 0.0 && a <= std::f64::consts::FRAC_PI_2) {
                return Err(Error::domain(format!("eta * g = {a} at theta = {t} leaves (0, pi/2]")));
            }
            Ok(mode.trace(t, alpha) * a.sin().ln())
        })
        .collect()
}

/// Angular coefficients of the mode in the `(cos nθ, sin nθ)` basis.
fn mode_angular(mode: &LimitingMode, alpha: f64) -> (f64, f64) {
    let (sa, ca) = alpha.sin_cos();
    match mode.angular_kind {
        AngularKind::Axisymmetric => (1.0, 0.0),
        AngularKind::Cosine => (ca, -sa),
        AngularKind::Sine => (sa, ca),
    }
}

pub fn solve_phi1(mode: &LimitingMode, alpha: f64, profile: &StripProfile, lambda1: f64) -> Result<OuterCorrector> {
    solve_phi1_with(mode, alpha, profile, lambda1, OuterOptions::default())
}

/// Solve `(Δ + κ)φ₁ = −λ₁φ₀` in the disk with `φ₁ = φ₀^ν ln sin(ηg)` on the
/// circle, `φ₁ ⟂ ker(Δ + κ)`.
pub fn solve_phi1_with(
    mode: &LimitingMode,
    alpha: f64,
    profile: &StripProfile,
    lambda1: f64,
    opts: OuterOptions,
) -> Result<OuterCorrector> {
    let n = opts.radial_nodes;
    if n < 8 {
        return Err(Error::domain("need at least 8 radial intervals"));
    }
    let h = 1.0 / n as f64;
    let idx = profile.g.fourier_index().max(mode.n as usize);
    let m = (8 * idx).max(256).next_power_of_two();
    let data = boundary_samples(mode, alpha, profile, m)?;
    let mut modes = fourier_modes(&data);
    // the resonant directions always get a solve, even without boundary data
    let resonant: Vec<AngularKind> = if mode.n == 0 {
        vec![AngularKind::Axisymmetric]
    } else {
        vec![AngularKind::Cosine, AngularKind::Sine]
    };
    for &k in &resonant {
        if !modes.iter().any(|t| t.0 == mode.n && t.1 == k) {
            modes.push((mode.n, k, 0.0));
        }
    }
    modes.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let v = volume_weights(n);
    let r_exact: Vec<f64> = (0..n).map(|i| mode.radial(i as f64 * h)).collect();
    let (kappa_h, r_h) = discrete_eigenpair(mode, n, &r_exact)?;
    let (ac, as_) = mode_angular(mode, alpha);

    // (defect, scale) per resonant direction; normalised by the largest scale
    let mut defects: Vec<(f64, f64)> = Vec::new();
    let mut harmonics = Vec::with_capacity(modes.len());
    for (p, kind, b) in modes {
        let is_res = p == mode.n && resonant.contains(&kind);
        let forcing = if !is_res {
            0.0
        } else if kind == AngularKind::Sine {
            as_
        } else {
            ac
        };
        let op = RadialOperator::new(p, n, mode.kappa);
        let mut rhs: Vec<f64> = (0..n).map(|i| -lambda1 * forcing * r_exact[i] * v[i]).collect();
        if p > 0 {
            rhs[0] = 0.0;
        }
        rhs[n - 1] -= op.boundary_coupling * b;
        let mut u = if is_res {
            let f_part: f64 = (0..n).map(|i| -lambda1 * forcing * r_exact[i] * v[i] * r_h[i]).sum();
            let b_part = op.boundary_coupling * b * r_h[n - 1];
            let defect: f64 = rhs.iter().zip(&r_h).map(|(a, b)| a * b).sum();
            defects.push((defect, f_part.abs() + b_part.abs()));
            // project the forcing onto the range, solve, then fix the kernel part
            let c = defect / dot_w(&r_h, &r_h, &v);
            for i in 0..n {
                rhs[i] -= c * v[i] * r_h[i];
            }
            let mut u = op.solve(&rhs)?;
            let c2 = dot_w(&u, &r_exact, &v) / dot_w(&r_exact, &r_exact, &v);
            for i in 0..n {
                u[i] -= c2 * r_exact[i];
            }
            u
        } else {
            op.solve(&rhs)?
        };
        if p > 0 {
            u[0] = 0.0;
        }
        u.push(b);
        harmonics.push(RadialHarmonic {
            order: p,
            kind,
            values: u,
            forcing,
        });
    }
    let scale = defects.iter().fold(0.0f64, |m, d| m.max(d.1));
    let worst_defect = if scale > 0.0 {
        defects.iter().fold(0.0f64, |m, d| m.max(d.0.abs())) / scale
    } else {
        0.0
    };
    let tol = opts.compatibility_tol.unwrap_or(COMPATIBILITY_FACTOR * h * h);
    if worst_defect > tol {
        return Err(Error::Compatibility {
            residual: worst_defect,
            tol,
        });
    }
    Ok(OuterCorrector {
        mode: mode.clone(),
        alpha,
        lambda1,
        radial_nodes: n,
        harmonics,
        boundary_data: data,
        compatibility_residual: worst_defect,
        discrete_kappa: kappa_h,
    })
}

/// Cubic Lagrange interpolation on the uniform radial grid.
fn interp(values: &[f64], r: f64) -> f64 {
    let n = values.len() - 1;
    let x = (r.clamp(0.0, 1.0)) * n as f64;
    let i0 = (x.floor() as usize).saturating_sub(1).min(n.saturating_sub(3));
    let mut s = 0.0;
    for j in 0..4 {
        let mut l = 1.0;
        for k in 0..4 {
            if k != j {
                l *= (x - (i0 + k) as f64) / (j as f64 - k as f64);
            }
        }
        s += l * values[i0 + j];
    }
    s
}

impl OuterCorrector {
    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|hm| interp(&hm.values, r) * trig(hm.kind, hm.order, theta))
            .sum()
    }

    /// `φ₁^ν = ∂φ₁/∂r` at `r = 1`, second-order one-sided.
    pub fn normal_derivative(&self, theta: f64) -> f64 {
        let n = self.radial_nodes;
        let h = 1.0 / n as f64;
        self.harmonics
            .iter()
            .map(|hm| {
                let u = &hm.values;
                (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h) * trig(hm.kind, hm.order, theta)
            })
            .sum()
    }

    /// Largest `|⟨φ₁, ·⟩|` against the unit-normalised κ-eigenfunctions,
    /// with the grid quadrature `r dr dθ`.
    pub fn phi0_overlap(&self) -> f64 {
        let n = self.radial_nodes;
        let v = volume_weights(n);
        let h = 1.0 / n as f64;
        let r: Vec<f64> = (0..n).map(|i| self.mode.radial(i as f64 * h)).collect();
        self.harmonics
            .iter()
            .filter(|hm| hm.order == self.mode.n)
            .map(|hm| (dot_w(&hm.values[..n], &r, &v) * angular_mass(hm.kind)).abs())
            .fold(0.0, f64::max)
    }

    /// Discrete L₂(ω) norm of `(Δ + κ)φ₁ + λ₁φ₀` with fourth-order differences
    /// at nodes `2..n−2`, so it measures the truncation error of the solve.
    pub fn equation_residual(&self) -> f64 {
        let n = self.radial_nodes;
        let h = 1.0 / n as f64;
        let kappa = self.mode.kappa;
        let mut total = 0.0;
        for hm in &self.harmonics {
            let u = &hm.values;
            let pp = (hm.order * hm.order) as f64;
            let mut acc = 0.0;
            for i in 2..n - 1 {
                let r = i as f64 * h;
                let d2 = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) / (12.0 * h * h);
                let d1 = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * h);
                let res =
                    d2 + d1 / r - pp * u[i] / (r * r) + kappa * u[i] + self.lambda1 * hm.forcing * self.mode.radial(r);
                acc += res * res * r * h;
            }
            total += acc * angular_mass(hm.kind);
        }
        total.sqrt()
    }

    /// Grid maximum of `|φ₁|` over radial nodes and 256 angles.
    pub fn max_abs(&self) -> f64 {
        let n = self.radial_nodes;
        let mut best: f64 = 0.0;
        for j in 0..256 {
            let t = TAU * j as f64 / 256.0;
            for i in 0..=n {
                let v: f64 = self
                    .harmonics
                    .iter()
                    .map(|hm| hm.values[i] * trig(hm.kind, hm.order, t))
                    .sum();
                best = best.max(v.abs());
            }
        }
        best
    }

    /// Largest angular-harmonic amplitude outside `order`.
    pub fn off_harmonic_amplitude(&self, order: u32) -> f64 {
        self.harmonics
            .iter()
            .filter(|hm| hm.order != order)
            .flat_map(|hm| hm.values.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}
