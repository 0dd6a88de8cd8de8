//! First-order eigenvalue corrections
//!
//! ```text
//! λ₁ = ∫_{∂ω} (∂φ₀/∂ν)² ln sin(η g) ds
//! ```
//!
//! the rotation that diagonalises a degenerate disk pair, splitting
//! classification of limiting clusters, and the two-sided bound envelope.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{AngularKind, CrossSectionRecord, LimitingMode, StripProfile};

/// Smallest trapezoid sample count for boundary integrals.
pub const MIN_SAMPLES: usize = 256;
const MAX_SAMPLES: usize = 1 << 18;

/// Default constant of the `ε^{3/2}(|ln η|^{3/2} + 1)` remainder band. It is
/// not known in closed form; reported for orientation only.
pub const DEFAULT_REMAINDER_CONSTANT: f64 = 1.0;

/// `ln sin(η g(t))`, or a domain error when `η g(t) ∉ (0, π/2]`.
fn log_weight(profile: &StripProfile, t: f64) -> Result<f64> {
    let a = profile.a(t);
    if !(a > 0.0) || a > FRAC_PI_2 {
        return Err(Error::domain(format!("eta * g = {a} at t = {t} leaves (0, pi/2]")));
    }
    Ok(a.sin().ln())
}

fn log_weights(profile: &StripProfile, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|i| log_weight(profile, TAU * i as f64 / n as f64)).collect()
}

fn sample_count(profile: &StripProfile, trace_index: usize) -> usize {
    let idx = profile.g.fourier_index().max(trace_index);
    (4 * idx).max(MIN_SAMPLES).next_power_of_two()
}

/// Doubles the sample count until two estimates agree to `1e-14` relative.
fn converged<const K: usize>(start: usize, mut est: impl FnMut(usize) -> Result<[f64; K]>) -> Result<[f64; K]> {
    let mut n = start;
    let mut prev = est(n)?;
    while n < MAX_SAMPLES {
        n *= 2;
        let next = est(n)?;
        let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        if next.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= 1e-14 * scale) {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// `λ₁` for a trace on the unit circle (`s = θ`). `trace_index` is the highest
/// angular frequency of the trace; it only seeds the sample count.
pub fn lambda1(trace: impl Fn(f64) -> f64, trace_index: usize, profile: &StripProfile) -> Result<f64> {
    let v = converged(sample_count(profile, trace_index), |n| {
        let w = log_weights(profile, n)?;
        let h = TAU / n as f64;
        let s: f64 = w
            .iter()
            .enumerate()
            .map(|(i, wi)| trace(i as f64 * h).powi(2) * wi)
            .sum();
        Ok([s * h])
    })?;
    Ok(v[0])
}

/// `λ₁` of a limiting disk mode with phase `alpha`.
pub fn lambda1_mode(mode: &LimitingMode, alpha: f64, profile: &StripProfile) -> Result<f64> {
    lambda1(|t| mode.trace(t, alpha), mode.n as usize, profile)
}

/// `λ₁` for trace samples on a uniform arclength grid of a curve of length
/// `perimeter`; `g` is read at `t = 2π s / L`.
pub fn lambda1_sampled(values: &[f64], perimeter: f64, profile: &StripProfile) -> Result<f64> {
    let n = values.len();
    let w = log_weights(profile, n)?;
    Ok(values.iter().zip(&w).map(|(v, w)| v * v * w).sum::<f64>() * perimeter / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolution {
    /// Phase in `[0, π/2)`.
    pub alpha: f64,
    /// Both harmonics vanish: every phase solves the constraint.
    pub degenerate: bool,
    /// `∫ cos(2nθ) ln sin(ηg) dθ`
    pub cos_moment: f64,
    /// `∫ sin(2nθ) ln sin(ηg) dθ`
    pub sin_moment: f64,
    /// `|∫ sin(2nθ + 2α) ln sin(ηg) dθ|` by direct quadrature.
    pub residual: f64,
}

/// Phase `α` with `∫ sin(2nθ + 2α) ln sin(η g(θ)) dθ = 0`, which makes the
/// traces `cos(nθ + α)` and `sin(nθ + α)` orthogonal under the weight
/// `−ln sin(η g)`.
pub fn solve_alpha(n: u32, profile: &StripProfile) -> Result<AlphaSolution> {
    if n == 0 {
        return Err(Error::domain("solve_alpha needs angular order n >= 1"));
    }
    let nf = n as f64;
    let start = sample_count(profile, 2 * n as usize);
    let [a, b, mass] = converged(start, |m| {
        let w = log_weights(profile, m)?;
        let h = TAU / m as f64;
        let (mut a, mut b, mut mass) = (0.0, 0.0, 0.0);
        for (i, wi) in w.iter().enumerate() {
            let t = 2.0 * nf * i as f64 * h;
            a += t.cos() * wi;
            b += t.sin() * wi;
            mass += wi.abs();
        }
        Ok([a * h, b * h, mass * h])
    })?;
    let degenerate = a.hypot(b) <= 1e-14 * mass.max(1e-300);
    let alpha = if degenerate {
        0.0
    } else {
        (0.5 * (-b).atan2(a)).rem_euclid(FRAC_PI_2)
    };
    let residual = {
        let m = start * 2;
        let w = log_weights(profile, m)?;
        let h = TAU / m as f64;
        w.iter()
            .enumerate()
            .map(|(i, wi)| (2.0 * nf * i as f64 * h + 2.0 * alpha).sin() * wi)
            .sum::<f64>()
            .abs()
            * h
    };
    Ok(AlphaSolution {
        alpha: if alpha >= FRAC_PI_2 { 0.0 } else { alpha },
        degenerate,
        cos_moment: a,
        sin_moment: b,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    Simple,
    NonSplit,
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub group_id: usize,
    pub lambda0: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// `(m, n, k, kind)` of the limiting modes spanning the cluster.
    pub modes: Vec<(u32, u32, u32, AngularKind)>,
    /// Ascending first-order corrections of the orthogonalised modes.
    pub lambda1_values: Vec<f64>,
    /// Coefficients of each orthogonalised mode in the cluster basis,
    /// aligned with `lambda1_values`.
    pub combinations: Vec<Vec<f64>>,
    /// Phase for a single disk pair with `n ≥ 1`.
    pub alpha: Option<f64>,
    pub alpha_degenerate: bool,
    pub splitting: Splitting,
    pub tolerance: f64,
    /// `λ₀ + ε λ₁` per orthogonalised mode.
    pub predicted: Vec<f64>,
    /// `C ε^{3/2} (|ln η|^{3/2} + 1)`
    pub remainder_band: f64,
    pub remainder_constant: f64,
}

/// Default splitting tolerance `1e-9 · max(1, |λ₁|)`.
pub fn default_tolerance(lambda1_values: &[f64]) -> f64 {
    let big = lambda1_values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    1e-9 * big
}

/// Gram matrix `G_ij = ∫ tr_i tr_j (−ln sin ηg) ds` of traces given as samples
/// on a common uniform grid.
fn weighted_gram(samples: &[Vec<f64>], weights: &[f64], ds: f64) -> DMatrix<f64> {
    let k = samples.len();
    DMatrix::from_fn(k, k, |i, j| {
        samples[i]
            .iter()
            .zip(&samples[j])
            .zip(weights)
            .map(|((a, b), w)| -a * b * w)
            .sum::<f64>()
            * ds
    })
}

/// Simultaneous diagonalisation: the traces are already orthonormal in
/// L₂(ω) (the identity Gram), so the weighted Gram's eigenvectors give the
/// orthogonalised modes and `λ₁ = −eigenvalue`.
fn diagonalise(gram: DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = gram.nrows();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..k).collect();
    // ascending λ₁ = descending eigenvalue
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| -eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // fix the sign: largest component positive
            let big = v
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    (vals, vecs)
}

fn classify(values: &[f64], tol: f64) -> Splitting {
    if values.len() == 1 {
        return Splitting::Simple;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= tol {
        Splitting::NonSplit
    } else {
        Splitting::Split
    }
}

fn remainder(profile: &StripProfile, c: f64) -> f64 {
    let eps = profile.epsilon();
    c * eps.powf(1.5) * (profile.eta.ln().abs().powf(1.5) + 1.0)
}

/// Classify one limiting cluster on the unit disk. `tol = None` uses
/// [`default_tolerance`].
pub fn classify_cluster(
    cluster: &[LimitingMode],
    profile: &StripProfile,
    tol: Option<f64>,
) -> Result<CorrectionReport> {
    classify_cluster_with(cluster, profile, tol, DEFAULT_REMAINDER_CONSTANT)
}

pub fn classify_cluster_with(
    cluster: &[LimitingMode],
    profile: &StripProfile,
    tol: Option<f64>,
    remainder_constant: f64,
) -> Result<CorrectionReport> {
    if cluster.is_empty() {
        return Err(Error::domain("empty cluster"));
    }
    let max_n = cluster.iter().map(|m| m.n as usize).max().unwrap_or(0);
    let mut n_samples = sample_count(profile, 2 * max_n);
    // Gram by trapezoid; refine until stable
    let mut gram_prev: Option<DMatrix<f64>> = None;
    let gram = loop {
        let w = log_weights(profile, n_samples)?;
        let h = TAU / n_samples as f64;
        let samples: Vec<Vec<f64>> = cluster
            .iter()
            .map(|m| (0..n_samples).map(|i| m.trace(i as f64 * h, 0.0)).collect())
            .collect();
        let g = weighted_gram(&samples, &w, h);
        if let Some(p) = &gram_prev {
            if (&g - p).amax() <= 1e-14 * g.amax() || n_samples >= MAX_SAMPLES {
                break g;
            }
        }
        gram_prev = Some(g);
        n_samples *= 2;
    };
    let (mut values, mut combos) = diagonalise(gram);

    let is_pair = cluster.len() == 2
        && cluster[0].n == cluster[1].n
        && cluster[0].n > 0
        && cluster[0].k == cluster[1].k
        && cluster[0].m == cluster[1].m
        && cluster[0].angular_kind != cluster[1].angular_kind;
    let (mut alpha, mut alpha_degenerate) = (None, false);
    if is_pair {
        let sol = solve_alpha(cluster[0].n, profile)?;
        alpha = Some(sol.alpha);
        alpha_degenerate = sol.degenerate;
        // report in the rotated (cos(nθ+α), sin(nθ+α)) basis
        let lc = lambda1_mode(&with_kind(&cluster[0], AngularKind::Cosine), sol.alpha, profile)?;
        let ls = lambda1_mode(&with_kind(&cluster[0], AngularKind::Sine), sol.alpha, profile)?;
        let (ca, sa) = (sol.alpha.cos(), sol.alpha.sin());
        // cos(nθ+α) = ca·cos nθ − sa·sin nθ ; sin(nθ+α) = sa·cos nθ + ca·sin nθ
        let basis_cos_first = cluster[0].angular_kind == AngularKind::Cosine;
        let to_basis = |c: f64, s: f64| if basis_cos_first { vec![c, s] } else { vec![s, c] };
        let mut pairs = vec![(lc, to_basis(ca, -sa)), (ls, to_basis(sa, ca))];
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        values = pairs.iter().map(|p| p.0).collect();
        combos = pairs.into_iter().map(|p| p.1).collect();
    }

    let tol = tol.unwrap_or_else(|| default_tolerance(&values));
    let lambda0 = cluster[0].lambda0;
    let eps = profile.epsilon();
    Ok(CorrectionReport {
        group_id: cluster[0].group,
        lambda0,
        epsilon: eps,
        eta: profile.eta,
        modes: cluster.iter().map(|m| (m.m, m.n, m.k, m.angular_kind)).collect(),
        predicted: values.iter().map(|l| lambda0 + eps * l).collect(),
        splitting: classify(&values, tol),
        lambda1_values: values,
        combinations: combos,
        alpha,
        alpha_degenerate,
        tolerance: tol,
        remainder_band: remainder(profile, remainder_constant),
        remainder_constant,
    })
}

fn with_kind(m: &LimitingMode, kind: AngularKind) -> LimitingMode {
    let mut out = m.clone();
    out.angular_kind = kind;
    out
}

/// Corrections for a user-supplied cross-section record at axial index `m`.
/// `group_id` is taken from the caller.
pub fn classify_record(
    record: &CrossSectionRecord,
    m: u32,
    group_id: usize,
    profile: &StripProfile,
    tol: Option<f64>,
) -> Result<CorrectionReport> {
    record.validate()?;
    let n = record.samples();
    let w = log_weights(profile, n)?;
    let ds = record.perimeter / n as f64;
    let (values, combos) = diagonalise(weighted_gram(&record.traces, &w, ds));
    let tol = tol.unwrap_or_else(|| default_tolerance(&values));
    let lambda0 = record.lambda0(m, profile.height);
    let eps = profile.epsilon();
    Ok(CorrectionReport {
        group_id,
        lambda0,
        epsilon: eps,
        eta: profile.eta,
        modes: vec![],
        predicted: values.iter().map(|l| lambda0 + eps * l).collect(),
        splitting: classify(&values, tol),
        lambda1_values: values,
        combinations: combos,
        alpha: None,
        alpha_degenerate: false,
        tolerance: tol,
        remainder_band: remainder(profile, DEFAULT_REMAINDER_CONSTANT),
        remainder_constant: DEFAULT_REMAINDER_CONSTANT,
    })
}

/// `[λ₀ − C ε (|ln η| + 1), λ₀]`
pub fn bound_envelope(lambda0: f64, profile: &StripProfile, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("bound constant must be positive, got {c}")));
    }
    let width = c * profile.epsilon() * (profile.eta.ln().abs() + 1.0);
    Ok((lambda0 - width, lambda0))
}

/// `max|ln sin g|` over the width function, used in the a-priori size bound
/// `|λ₁| ≤ ∫ tr² · (1 + max|ln sin g|) · (|ln η| + 1)`.
pub fn log_sin_g_max(profile: &StripProfile) -> f64 {
    let n = sample_count(profile, 0) * 4;
    (0..n)
        .map(|i| profile.g.eval(TAU * i as f64 / n as f64).sin().ln().abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{StripProfile, WidthFunction};
    use std::f64::consts::PI;

    #[test]
    fn constant_width_reduces_to_closed_form() {
        let p = StripProfile::uniform(8, PI, 0.4).unwrap();
        let md = LimitingMode::new(0, 0, 1, AngularKind::Axisymmetric, PI).unwrap();
        let l = lambda1_mode(&md, 0.0, &p).unwrap();
        let exact = 2.0 * md.kappa * 0.4f64.sin().ln();
        assert!((l - exact).abs() < 1e-12 * exact.abs());
        let j01: f64 = 2.404_825_557_695_773;
        assert!((l - 2.0 * j01 * j01 * 0.4f64.sin().ln()).abs() < 1e-9);
        assert!((l + 10.908_258).abs() < 1e-5);
    }

    #[test]
    fn constant_width_alpha_is_degenerate() {
        let p = StripProfile::uniform(8, PI, 0.7).unwrap();
        let s = solve_alpha(2, &p).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.alpha, 0.0);
    }

    #[test]
    fn envelope_shape() {
        let p = StripProfile::uniform(8, PI, 0.4).unwrap();
        let (lo, hi) = bound_envelope(6.0, &p, 2.0).unwrap();
        assert_eq!(hi, 6.0);
        assert!((6.0 - lo - 2.0 * p.epsilon() * (0.4f64.ln().abs() + 1.0)).abs() < 1e-14);
        assert!(bound_envelope(6.0, &p, 0.0).is_err());
    }

    #[test]
    fn fourier_width_is_sampled_consistently() {
        let g = WidthFunction::Fourier {
            mean: 0.7,
            cos: vec![0.1, 0.0, 0.05],
            sin: vec![],
        };
        let p = StripProfile::new(8, PI, 0.5, g).unwrap();
        let md = LimitingMode::new(0, 1, 1, AngularKind::Cosine, PI).unwrap();
        let a = lambda1_mode(&md, 0.0, &p).unwrap();
        let n = 4096;
        let h = TAU / n as f64;
        let b: f64 = (0..n)
            .map(|i| {
                let t = i as f64 * h;
                md.trace(t, 0.0).powi(2) * (p.a(t)).sin().ln()
            })
            .sum::<f64>()
            * h;
        assert!((a - b).abs() < 1e-12 * a.abs());
    }
}
