//! Periodic boundary-layer functions for an alternating strip/band boundary.
//!
//! With `z = ξ₁ + iξ₂` and a strip half-width `a ∈ (0, π/2]`,
//!
//! ```text
//! X + iY = ln(sin z + √(sin²z − sin²a)) + iz − iπ/2
//! ```
//!
//! `X` is harmonic in `ξ₂ > 0`, even and π-periodic in `ξ₁`, equals `ln sin a`
//! on the strips `|ξ₁ − πj| < a` of the line `ξ₂ = 0`, has `∂X/∂ξ₂ = −1` on the
//! complementary bands, and decays like `e^{−2ξ₂}`. `Y` is its harmonic
//! conjugate, odd in `ξ₁` and zero on every line `ξ₁ = πk/2`.
//!
//! Evaluation uses the equivalent decaying form
//!
//! ```text
//! X + iY = ln((1 − e^{2iz}) (1 + t) / 2),   t = √(1 − sin²a / sin²z)
//! ```
//!
//! with the principal square root (equivalently: the root `s = t·sin z` of
//! `s² = sin²z − sin²a` with `Re(conj(sin z)·s) ≥ 0`). Both factors have
//! positive real part, so the principal logarithm is continuous on the whole
//! open half-plane and π-periodic without any argument reduction. On the line
//! `ξ₂ = 0` inside a strip the value is the limit from `ξ₂ → 0⁺`.

mod norms;

pub use norms::{
    flux_identities, mean_zero_check, norm_functionals, norm_functionals_with, FluxIdentities, NormFunctionals,
};

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{adaptive, AdaptiveOptions};

/// Truncation height for improper integrals in `ξ₂`; the neglected tail is
/// below `e^{−2T}`.
pub const TAIL_CUTOFF: f64 = 20.0;

/// Above this height every field is below `e^{−600}`; it is returned as zero
/// instead of overflowing `sin z`.
const FAR_FIELD: f64 = 300.0;

/// A point of the half-strip in fast variables together with the strip
/// half-width parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerPoint {
    pub xi1: f64,
    pub xi2: f64,
    pub a: f64,
}

impl LayerPoint {
    pub fn new(xi1: f64, xi2: f64, a: f64) -> Result<Self> {
        let p = LayerPoint { xi1, xi2, a };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !self.xi1.is_finite() {
            return Err(Error::domain(format!("xi1 must be finite, got {}", self.xi1)));
        }
        if !(self.xi2 >= 0.0) || !self.xi2.is_finite() {
            return Err(Error::domain(format!("xi2 must be finite and >= 0, got {}", self.xi2)));
        }
        check_width(self.a)
    }

    /// `ξ₁` reduced to `(−π/2, π/2]`.
    pub fn reduced_xi1(&self) -> f64 {
        reduce(self.xi1)
    }

    pub fn is_slit_endpoint(&self) -> bool {
        if self.xi2 != 0.0 || self.a >= FRAC_PI_2 {
            return false;
        }
        let t = self.reduced_xi1().abs();
        (t - self.a).abs() <= 4.0 * f64::EPSILON * self.a.max(1.0)
    }
}

pub(crate) fn check_width(a: f64) -> Result<()> {
    if !(a > 0.0 && a <= FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON)) {
        return Err(Error::domain(format!(
            "strip half-width a must lie in (0, pi/2], got {a}"
        )));
    }
    Ok(())
}

fn reduce(xi1: f64) -> f64 {
    let mut t = xi1 - PI * (xi1 / PI).round();
    if t <= -FRAC_PI_2 {
        t += PI;
    }
    t
}

/// Value, gradient and parameter derivatives of X and Y at one point, plus the
/// vertical tail integrals `∫_{ξ₂}^{∞} X dt` and `∫_{ξ₂}^{∞} Y dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryLayerEval {
    pub x: f64,
    pub y: f64,
    pub dx_dxi1: f64,
    pub dx_dxi2: f64,
    pub dy_dxi1: f64,
    pub dy_dxi2: f64,
    pub dx_da: f64,
    pub dy_da: f64,
    pub tail_x: f64,
    pub tail_y: f64,
}

/// Complex-analytic pieces at a point: `F = X + iY`, `F' = dF/dz`, `∂F/∂a`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Analytic {
    pub f: Complex64,
    pub df_dz: Complex64,
    pub df_da: Complex64,
}

/// e^{w} − 1 without cancellation for small |w|.
fn cexpm1(w: Complex64) -> Complex64 {
    let (x, y) = (w.re, w.im);
    let em1 = x.exp_m1();
    let half = (0.5 * y).sin();
    Complex64::new(em1 * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// ln(1 + u) with full relative accuracy for small |u|.
fn cln1p(u: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
    Complex64::new(re, u.im.atan2(1.0 + u.re))
}

/// Above this height the decaying form `q = e^{2iz}` is used throughout.
const DECAYING_FORM_FROM: f64 = 1.0;

/// The closed-form core. Callers must have rejected slit endpoints and the
/// degenerate `a = π/2` case.
fn analytic(xi1: f64, xi2: f64, a: f64) -> Analytic {
    let t1 = reduce(xi1);
    let z = Complex64::new(t1, xi2);
    let w = z.sin();
    let (sa, ca) = a.sin_cos();
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);

    let on_strip = xi2 == 0.0 && t1.abs() < a;
    if xi2 == 0.0 && t1 == 0.0 {
        // z = 0: the two factors of the decaying form are 0 and ∞.
        let s = Complex64::new(0.0, sa);
        return Analytic {
            f: Complex64::new(sa.ln(), 0.0),
            df_dz: one / s + i,
            df_da: Complex64::new(ca / sa, 0.0),
        };
    }

    if xi2 > DECAYING_FORM_FROM {
        return analytic_decaying(z, sa, ca);
    }

    // sin²z − sin²a as a product, exact near the branch points z = ±a
    let diff = (z - a).sin() * (z + a).sin();
    let t = if on_strip {
        // limit from above: sign follows sin 2ξ₁
        let s1 = t1.sin();
        let r = (-diff.re / (s1 * s1)).max(0.0).sqrt();
        Complex64::new(0.0, r * (2.0 * t1).sin().signum())
    } else {
        (diff / (w * w)).sqrt()
    };
    let s = w * t;

    // 1 − e^{2iz}
    let one_minus_q = -cexpm1(2.0 * i * z);
    let f = (one_minus_q * (one + t) * 0.5).ln();

    let df_dz = z.cos() / s + i;
    let df_da = -sa * ca / (diff + w * s);
    Analytic { f, df_dz, df_da }
}

/// Same function written in `q = e^{2iz}` only, via `1/sin²z = −4q/(1−q)²`.
/// Nothing grows with `ξ₂`, and `F` keeps relative accuracy as it decays.
fn analytic_decaying(z: Complex64, sa: f64, ca: f64) -> Analytic {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let sa2 = sa * sa;
    let q = (2.0 * i * z).exp();
    let one_minus_q = one - q;
    let inv_w2 = -4.0 * q / (one_minus_q * one_minus_q);
    // r = sin²a / sin²z, t = √(1 − r) near 1
    let r = sa2 * inv_w2;
    let t = (one - r).sqrt();
    // (1 − q)(1 + t)/2 = 1 + u with t − 1 = −r/(1 + t)
    let u = -q - one_minus_q * r / (2.0 * (one + t));
    let f = cln1p(u);
    // cot z = −i(1 + q)/(1 − q)
    let cot = -i * (one + q) / one_minus_q;
    let df_dz = -2.0 * i * q / one_minus_q + sa2 * cot * inv_w2 / (t * (one + t));
    // sin²z − sin²a + sin z·s = sin²z (1 − r + t)
    let df_da = -sa * ca * inv_w2 / (one - r + t);
    Analytic { f, df_dz, df_da }
}

fn checked(p: &LayerPoint) -> Result<()> {
    p.validate()?;
    if p.is_slit_endpoint() {
        return Err(Error::SlitEndpoint { xi1: p.xi1, a: p.a });
    }
    Ok(())
}

fn full_strip(a: f64) -> bool {
    a >= FRAC_PI_2
}

pub(crate) fn analytic_checked(p: &LayerPoint) -> Result<Option<Analytic>> {
    checked(p)?;
    if full_strip(p.a) {
        return Ok(None);
    }
    if p.xi2 > FAR_FIELD {
        let zero = Complex64::new(0.0, 0.0);
        return Ok(Some(Analytic {
            f: zero,
            df_dz: zero,
            df_da: zero,
        }));
    }
    Ok(Some(analytic(p.xi1, p.xi2, p.a)))
}

pub fn eval_x(p: &LayerPoint) -> Result<f64> {
    Ok(analytic_checked(p)?.map_or(0.0, |an| an.f.re))
}

pub fn eval_y(p: &LayerPoint) -> Result<f64> {
    Ok(analytic_checked(p)?.map_or(0.0, |an| an.f.im))
}

/// Value and gradient of X and Y without the tail integrals.
pub fn eval_local(p: &LayerPoint) -> Result<BoundaryLayerEval> {
    Ok(match analytic_checked(p)? {
        None => BoundaryLayerEval::default(),
        Some(an) => local_from(&an),
    })
}

fn local_from(an: &Analytic) -> BoundaryLayerEval {
    // F' = X_ξ₁ − i X_ξ₂ = Y_ξ₂ + i Y_ξ₁
    BoundaryLayerEval {
        x: an.f.re,
        y: an.f.im,
        dx_dxi1: an.df_dz.re,
        dx_dxi2: -an.df_dz.im,
        dy_dxi1: an.df_dz.im,
        dy_dxi2: an.df_dz.re,
        dx_da: an.df_da.re,
        dy_da: an.df_da.im,
        tail_x: 0.0,
        tail_y: 0.0,
    }
}

/// Everything at once, including the tail integrals.
pub fn eval_bundle(p: &LayerPoint) -> Result<BoundaryLayerEval> {
    let Some(an) = analytic_checked(p)? else {
        return Ok(BoundaryLayerEval::default());
    };
    let mut out = local_from(&an);
    let [tx, ty] = tail_integrals(p.xi1, p.xi2, p.a)?;
    out.tail_x = tx;
    out.tail_y = ty;
    Ok(out)
}

/// `[∫_{ξ₂}^{ξ₂+T} X dt, ∫_{ξ₂}^{ξ₂+T} Y dt]` with `T =` [`TAIL_CUTOFF`].
pub(crate) fn tail_integrals(xi1: f64, xi2: f64, a: f64) -> Result<[f64; 2]> {
    if full_strip(a) || xi2 > FAR_FIELD {
        return Ok([0.0, 0.0]);
    }
    let top = xi2 + TAIL_CUTOFF;
    let breaks = [xi2, xi2 + 0.05, xi2 + 0.5, xi2 + 2.0, xi2 + 6.0, top];
    adaptive(
        |t| {
            let f = analytic(xi1, t, a).f;
            [f.re, f.im]
        },
        &breaks,
        AdaptiveOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 2000,
        },
    )
}

/// `∫_{ξ₂}^{∞} ∂X/∂a dt` at a point, by the same truncated quadrature.
pub fn tail_dx_da(p: &LayerPoint) -> Result<f64> {
    checked(p)?;
    if full_strip(p.a) || p.xi2 > FAR_FIELD {
        return Ok(0.0);
    }
    let (xi1, xi2, a) = (p.xi1, p.xi2, p.a);
    let breaks = [xi2, xi2 + 0.05, xi2 + 0.5, xi2 + 2.0, xi2 + 6.0, xi2 + TAIL_CUTOFF];
    crate::quad::adaptive_scalar(
        |t| analytic(xi1, t, a).df_da.re,
        &breaks,
        AdaptiveOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 2000,
        },
    )
}
