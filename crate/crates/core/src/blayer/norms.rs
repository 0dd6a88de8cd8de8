//! Integral functionals of X and Y over the half-strip
//! `Π = {|ξ₁| < π/2, ξ₂ > 0}` and along the line `ξ₂ = 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{analytic, check_width, full_strip, LayerPoint, TAIL_CUTOFF};
use crate::error::{Error, Result};
use crate::exec::{map_collect, ExecMode};
use crate::quad::{
    adaptive, adaptive_batch, graded_toward_start, periodic_trapezoid_converged, AdaptiveOptions, GaussLegendre,
};

/// Squared L₂(Π) norms. Fields ending in `_exact` hold the closed forms
/// where they exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormFunctionals {
    pub a: f64,
    pub x_sq: f64,
    pub y_sq: f64,
    pub grad_x_sq: f64,
    pub xi2_grad_x_sq: f64,
    pub dx_dxi1_sq: f64,
    pub dx_da_sq: f64,
    pub dy_da_sq: f64,
    pub tail_x_sq: f64,
    pub tail_y_sq: f64,
    /// `π |ln sin a|`
    pub grad_x_sq_exact: f64,
    /// `(π/2) cot²a |ln cos a|`
    pub dx_da_sq_exact: f64,
}

impl NormFunctionals {
    pub fn grad_rel_err(&self) -> f64 {
        rel_err(self.grad_x_sq, self.grad_x_sq_exact)
    }

    pub fn dx_da_rel_err(&self) -> f64 {
        rel_err(self.dx_da_sq, self.dx_da_sq_exact)
    }

    /// Relative mismatch between `‖ξ₂∇X‖` and `‖X‖`.
    pub fn weighted_rel_err(&self) -> f64 {
        rel_err(self.xi2_grad_x_sq.sqrt(), self.x_sq.sqrt())
    }
}

fn rel_err(v: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        v.abs()
    } else {
        ((v - exact) / exact).abs()
    }
}

const K: usize = 7;

fn norm_integrand(xi1: f64, xi2: f64, a: f64) -> [f64; K] {
    let an = analytic(xi1, xi2, a);
    let (x, y) = (an.f.re, an.f.im);
    let (x1, x2) = (an.df_dz.re, -an.df_dz.im);
    let g2 = x1 * x1 + x2 * x2;
    let (xa, ya) = (an.df_da.re, an.df_da.im);
    [x * x, g2, xi2 * xi2 * g2, xa * xa, y * y, x1 * x1, ya * ya]
}

fn inner_breaks(xi1: f64, a: f64) -> Vec<f64> {
    let d = (xi1 - a).abs();
    let mut b = vec![0.0, 0.5, 2.0, 6.0, TAIL_CUTOFF];
    for s in [0.25 * d, d, 4.0 * d] {
        if s > 1e-300 && s < 0.5 {
            b.push(s);
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Integrals over Π by nested adaptive Gauss–Kronrod. The ξ₁ integral runs
/// over `[0, π/2]` with a break at the slit endpoint and is doubled by
/// evenness; the ξ₂ integral is truncated at [`TAIL_CUTOFF`].
pub fn norm_functionals(a: f64) -> Result<NormFunctionals> {
    norm_functionals_with(a, ExecMode::default())
}

pub fn norm_functionals_with(a: f64, mode: ExecMode) -> Result<NormFunctionals> {
    check_width(a)?;
    let (sa, ca) = a.sin_cos();
    let grad_exact = PI * sa.ln().abs();
    let dxda_exact = if full_strip(a) {
        // cot²a |ln cos a| → 0 as a → π/2
        0.0
    } else {
        FRAC_PI_2 * (ca / sa).powi(2) * ca.ln().abs()
    };
    if full_strip(a) {
        return Ok(NormFunctionals {
            a,
            x_sq: 0.0,
            y_sq: 0.0,
            grad_x_sq: 0.0,
            xi2_grad_x_sq: 0.0,
            dx_dxi1_sq: 0.0,
            dx_da_sq: 0.0,
            dy_da_sq: 0.0,
            tail_x_sq: 0.0,
            tail_y_sq: 0.0,
            grad_x_sq_exact: grad_exact,
            dx_da_sq_exact: dxda_exact,
        });
    }

    let inner_opts = AdaptiveOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 1000,
    };
    let outer_opts = AdaptiveOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-9,
        max_intervals: 1000,
    };
    let column =
        |xi1: f64| -> Result<[f64; K]> { adaptive(|t| norm_integrand(xi1, t, a), &inner_breaks(xi1, a), inner_opts) };
    let failure = std::cell::Cell::new(None::<Error>);
    let half = adaptive_batch(
        |xs: &[f64]| {
            map_collect(xs, mode, |&x| column(x))
                .into_iter()
                .map(|r| match r {
                    Ok(v) => v,
                    Err(e) => {
                        failure.set(Some(e));
                        [0.0; K]
                    }
                })
                .collect()
        },
        &[0.0, a, FRAC_PI_2],
        outer_opts,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let [x_sq, grad_x_sq, xi2_grad_x_sq, dx_da_sq, y_sq, dx_dxi1_sq, dy_da_sq] = half.map(|v| 2.0 * v);
    let [tail_x_sq, tail_y_sq] = tail_norms(a, mode);
    Ok(NormFunctionals {
        a,
        x_sq,
        y_sq,
        grad_x_sq,
        xi2_grad_x_sq,
        dx_dxi1_sq,
        dx_da_sq,
        dy_da_sq,
        tail_x_sq,
        tail_y_sq,
        grad_x_sq_exact: grad_exact,
        dx_da_sq_exact: dxda_exact,
    })
}

/// `‖∫_{ξ₂}^∞ X‖²` and `‖∫_{ξ₂}^∞ Y‖²` on a fixed composite Gauss grid.
/// The tails are accumulated downward from the cutoff, so each column costs a
/// single pass. Accuracy is around 1e-8 relative; these are reported, not
/// checked against closed forms.
fn tail_norms(a: f64, mode: ExecMode) -> [f64; 2] {
    let rule = GaussLegendre::new(12);
    let fine = GaussLegendre::new(8);
    let mut xi1_breaks = graded_toward_start(a, 0.0, 0.35, 14);
    xi1_breaks.reverse();
    xi1_breaks.pop();
    xi1_breaks.extend(graded_toward_start(a, FRAC_PI_2, 0.35, 14));
    xi1_breaks.dedup();
    let xi1_nodes: Vec<(f64, f64)> = xi1_breaks
        .windows(2)
        .flat_map(|p| rule.mapped(p[0], p[1]).collect::<Vec<_>>())
        .collect();

    let mut xi2_breaks = graded_toward_start(0.0, 2.0, 0.35, 14);
    xi2_breaks.extend([3.0, 4.5, 6.5, 9.0, 12.0, 16.0, TAIL_CUTOFF]);
    let xi2_nodes: Vec<(f64, f64)> = xi2_breaks
        .windows(2)
        .flat_map(|p| rule.mapped(p[0], p[1]).collect::<Vec<_>>())
        .collect();

    let cols = map_collect(&xi1_nodes, mode, |&(xi1, w1)| {
        let mut tx = 0.0;
        let mut ty = 0.0;
        let mut upper = TAIL_CUTOFF;
        let mut acc = [0.0; 2];
        for &(xi2, w2) in xi2_nodes.iter().rev() {
            for (t, w) in fine.mapped(xi2, upper) {
                let f = analytic(xi1, t, a).f;
                tx += w * f.re;
                ty += w * f.im;
            }
            upper = xi2;
            acc[0] += w2 * tx * tx;
            acc[1] += w2 * ty * ty;
        }
        [w1 * acc[0], w1 * acc[1]]
    });
    let mut out = [0.0; 2];
    for c in cols {
        out[0] += 2.0 * c[0];
        out[1] += 2.0 * c[1];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxIdentities {
    /// `∫ ∂X/∂ξ₂ dξ₁` over the strip part of `ξ₂ = 0`, expected `π − 2a`.
    pub strip_flux: f64,
    /// `∫ X dξ₁` over the band part of `ξ₂ = 0`, expected `−2a ln sin a`.
    pub band_integral: f64,
}

impl FluxIdentities {
    pub fn expected(a: f64) -> FluxIdentities {
        FluxIdentities {
            strip_flux: PI - 2.0 * a,
            band_integral: -2.0 * a * a.sin().ln(),
        }
    }
}

/// Line integrals along `ξ₂ = 0` within one period. The strip integrand has
/// inverse square-root endpoints and is integrated after `ξ₁ = a sin φ`;
/// the band integrand has square-root endpoints and uses
/// `ξ₁ = a + (π/2 − a)u²`.
pub fn flux_identities(a: f64) -> Result<FluxIdentities> {
    if !(a > 0.0 && a < FRAC_PI_2) {
        return Err(Error::domain(format!("flux identities need a in (0, pi/2), got {a}")));
    }
    let rule = GaussLegendre::new(64);
    let sa2 = a.sin().powi(2);
    // φ ∈ (0, π/2), doubled by symmetry. The Jacobian a cos φ cancels the
    // endpoint blow-up of cos ξ₁ / √(sin²a − sin²ξ₁).
    let strip_half = rule.integrate(0.0, FRAC_PI_2, |phi| {
        let xi1 = a * phi.sin();
        let jac = a * phi.cos();
        let s1 = xi1.sin();
        let root = (sa2 - s1 * s1).max(0.0).sqrt();
        if root == 0.0 {
            return -jac;
        }
        let an = analytic(xi1, 0.0, a);
        -an.df_dz.im * jac
    });
    let span = FRAC_PI_2 - a;
    let band_half = rule.integrate(0.0, 1.0, |u| {
        let xi1 = a + span * u * u;
        analytic(xi1, 0.0, a).f.re * 2.0 * span * u
    });
    Ok(FluxIdentities {
        strip_flux: 2.0 * strip_half,
        band_integral: 2.0 * band_half,
    })
}

/// `|∫_{−π/2}^{π/2} X(ξ₁, ξ₂, a) dξ₁|` by the periodic trapezoid rule.
pub fn mean_zero_check(xi2: f64, a: f64) -> Result<f64> {
    if !(xi2 > 0.0) || !xi2.is_finite() {
        return Err(Error::domain(format!("mean-zero check needs xi2 > 0, got {xi2}")));
    }
    LayerPoint::new(0.0, xi2, a)?;
    if full_strip(a) {
        return Ok(0.0);
    }
    let v = periodic_trapezoid_converged(-FRAC_PI_2, PI, 32, 1e-15, 1 << 22, |t| analytic(t, xi2, a).f.re)?;
    Ok(v.abs())
}
