//! Boundary-layer correctors and the composite eigenfunction on the unit-disk
//! cylinder.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use crate::blayer::{eval_bundle, eval_x, LayerPoint};
use crate::error::{Error, Result};
use crate::spectrum::StripProfile;

use super::OuterCorrector;

/// Cutoff radius `c₀` of the curvilinear chart `τ < c₀`.
pub const DEFAULT_CUTOFF_RADIUS: f64 = 0.5;

/// Curvature in `𝖧 = 1 + τ𝗄` for the unit circle with `τ = 1 − r`: the polar
/// Laplacian has `𝖧 = r = 1 − τ`.
pub const DISK_CURVATURE: f64 = -1.0;

/// `χ(t)`: 1 below 1/4, 0 above 3/4, a quintic smootherstep in between.
pub fn cutoff(t: f64) -> f64 {
    if t <= 0.25 {
        return 1.0;
    }
    if t >= 0.75 {
        return 0.0;
    }
    let u = 2.0 * (t - 0.25);
    1.0 - u * u * u * (u * (6.0 * u - 15.0) + 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPoint {
    pub r: f64,
    pub theta: f64,
    pub x3: f64,
}

/// Everything needed to evaluate the asymptotic eigenfunction.
#[derive(Debug, Clone)]
pub struct CompositeField {
    pub corrector: OuterCorrector,
    pub profile: StripProfile,
    pub c0: f64,
    /// Add the `ε²` layer terms `v₂±`.
    pub second_order: bool,
}

impl CompositeField {
    pub fn new(corrector: OuterCorrector, profile: StripProfile) -> Self {
        CompositeField {
            corrector,
            profile,
            c0: DEFAULT_CUTOFF_RADIUS,
            second_order: false,
        }
    }

    fn trace(&self, s: f64) -> f64 {
        self.corrector.mode.trace(s, self.corrector.alpha)
    }

    /// Fast variables of a cylinder point; `a = ηg(θ)`.
    pub fn layer_point(&self, x: CylinderPoint) -> Result<LayerPoint> {
        let eps = self.profile.epsilon();
        let tau = (1.0 - x.r).max(0.0);
        LayerPoint::new(x.x3 / eps - FRAC_PI_2, tau / eps, self.profile.a(x.theta))
    }

    fn check_a(&self, p: &LayerPoint, s: f64) -> Result<()> {
        let a = self.profile.a(s);
        if (p.a - a).abs() > 1e-12 * a.max(1.0) {
            return Err(Error::domain(format!(
                "layer point has a = {}, but eta * g(s) = {a}",
                p.a
            )));
        }
        Ok(())
    }
}

/// `v₁⁺ = −φ₀^ν(s) X(ξ, ηg(s))`.
pub fn v1_plus(p: &LayerPoint, s: f64, ctx: &CompositeField) -> Result<f64> {
    ctx.check_a(p, s)?;
    Ok(-ctx.trace(s) * eval_x(p)?)
}

/// `(v₂⁺, v₂⁻)` with
/// `v₂⁺ = ½𝗄φ₀^ν(ξ₂X + ∫X) − φ₁^ν X` and `v₂⁻ = −Mφ₀^ν(ξ₂Y + ∫Y)`.
pub fn v2_pair(p: &LayerPoint, s: f64, ctx: &CompositeField) -> Result<(f64, f64)> {
    ctx.check_a(p, s)?;
    let b = eval_bundle(p)?;
    let tr = ctx.trace(s);
    let plus = 0.5 * DISK_CURVATURE * tr * (p.xi2 * b.x + b.tail_x) - ctx.corrector.normal_derivative(s) * b.x;
    let minus = -ctx.corrector.mode.wavenumber * tr * (p.xi2 * b.y + b.tail_y);
    Ok((plus, minus))
}

/// `ψ₀ + ε φ₁ cos Mx₃ + ε χ(τ/c₀) v₁⁺ cos Mx₃`, plus `ε² χ (v₂⁺ cos + v₂⁻ sin)`
/// when `second_order` is set.
pub fn composite_eigenfunction(x: CylinderPoint, ctx: &CompositeField) -> Result<f64> {
    if !(x.r >= 0.0 && x.r <= 1.0 && x.x3 >= 0.0 && x.x3 <= ctx.profile.height) {
        return Err(Error::domain(format!("point {x:?} is outside the cylinder")));
    }
    let md = &ctx.corrector.mode;
    let eps = ctx.profile.epsilon();
    let c = md.axial(x.x3);
    let mut out = md.phi0(x.r, x.theta, ctx.corrector.alpha) * c + eps * ctx.corrector.eval(x.r, x.theta) * c;
    let chi = cutoff((1.0 - x.r) / ctx.c0);
    if chi > 0.0 {
        let p = ctx.layer_point(x)?;
        out += eps * chi * v1_plus(&p, x.theta, ctx)? * c;
        if ctx.second_order {
            let (vp, vm) = v2_pair(&p, x.theta, ctx)?;
            let s = (md.wavenumber * x.x3).sin();
            out += eps * eps * chi * (vp * c + vm * s);
        }
    }
    Ok(out)
}

/// Structured `(r, θ, x₃)` sampling grid for field export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_x3: usize,
}

/// CSV with header `r,theta,x3,psi0,composite`; rows ordered by `x₃`, then `θ`,
/// then `r`. Points where the layer is singular (strip edges) are skipped.
pub fn write_field_csv(ctx: &CompositeField, grid: FieldGrid, out: &mut impl Write) -> std::io::Result<usize> {
    writeln!(out, "r,theta,x3,psi0,composite")?;
    let md = &ctx.corrector.mode;
    let mut rows = 0;
    for k in 0..grid.n_x3 {
        let x3 = ctx.profile.height * k as f64 / (grid.n_x3.max(2) - 1) as f64;
        for j in 0..grid.n_theta {
            let theta = std::f64::consts::TAU * j as f64 / grid.n_theta as f64;
            for i in 0..grid.n_r {
                let r = i as f64 / (grid.n_r.max(2) - 1) as f64;
                let x = CylinderPoint { r, theta, x3 };
                if let Ok(v) = composite_eigenfunction(x, ctx) {
                    let psi0 = md.psi0(r, theta, x3, ctx.corrector.alpha);
                    writeln!(out, "{r:.17e},{theta:.17e},{x3:.17e},{psi0:.17e},{v:.17e}")?;
                    rows += 1;
                }
            }
        }
    }
    Ok(rows)
}
