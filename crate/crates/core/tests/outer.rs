use std::f64::consts::{FRAC_PI_2, PI, TAU};

use stripspec::blayer::{eval_local, eval_x, LayerPoint};
use stripspec::correction::{lambda1_mode, solve_alpha};
use stripspec::outer::{
    composite_eigenfunction, solve_phi1, solve_phi1_with, v1_plus, v2_pair, write_field_csv, CompositeField,
    CylinderPoint, FieldGrid, OuterOptions, DISK_CURVATURE,
};
use stripspec::spectrum::{AngularKind, LimitingMode, StripProfile, WidthFunction};
use stripspec::Error;

fn exp_cos(harmonic: u32, scale: f64) -> WidthFunction {
    WidthFunction::ExpCos {
        harmonic,
        scale,
        phase: 0.0,
    }
}

fn opts(n: usize) -> OuterOptions {
    OuterOptions {
        radial_nodes: n,
        ..OuterOptions::default()
    }
}

/// For `g ≡ 1` the corrector is `(λ₁/2κ)(r R' + R) Θ(θ)`: differentiate the
/// Bessel equation in the root and add the multiple of `R` that makes it
/// orthogonal to `R` (`∫ r R' R r dr = −∫ R² r dr`).
fn exact_uniform(md: &LimitingMode, l1: f64, r: f64) -> f64 {
    l1 / (2.0 * md.kappa) * (r * md.radial_derivative(r) + md.radial(r))
}

#[test]
fn uniform_width_matches_closed_form_at_second_order() {
    let eta: f64 = 0.4;
    let p = StripProfile::uniform(16, PI, eta).unwrap();
    for &(n, kind) in &[(0, AngularKind::Axisymmetric), (2, AngularKind::Cosine)] {
        let md = LimitingMode::new(0, n, 1, kind, PI).unwrap();
        let l1 = lambda1_mode(&md, 0.0, &p).unwrap();
        let mut errs = Vec::new();
        for &nr in &[64, 128, 256] {
            let c = solve_phi1_with(&md, 0.0, &p, l1, opts(nr)).unwrap();
            let hm = c.harmonics.iter().find(|h| h.order == n && h.kind == kind).unwrap();
            let err = hm
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| (v - exact_uniform(&md, l1, i as f64 / nr as f64)).abs())
                .fold(0.0, f64::max);
            assert!(c.off_harmonic_amplitude(n) <= 1e-10, "{}", c.off_harmonic_amplitude(n));
            errs.push(err);
        }
        let (q1, q2) = (errs[0] / errs[1], errs[1] / errs[2]);
        assert!(
            (3.0..5.5).contains(&q1) && (3.0..5.5).contains(&q2),
            "n = {n}: {errs:?}"
        );
        assert!(errs[2] < 1e-3 * l1.abs());
    }
}

fn generic_pair() -> (StripProfile, LimitingMode, f64, f64) {
    let g = WidthFunction::ExpCos {
        harmonic: 1,
        scale: 2.0,
        phase: 0.3,
    };
    let p = StripProfile::new(16, PI, 0.5, g).unwrap();
    let md = LimitingMode::new(0, 1, 1, AngularKind::Cosine, PI).unwrap();
    let alpha = solve_alpha(1, &p).unwrap().alpha;
    let l1 = lambda1_mode(&md, alpha, &p).unwrap();
    (p, md, alpha, l1)
}

#[test]
fn residual_decays_and_corrector_is_orthogonal() {
    let (p, md, alpha, l1) = generic_pair();
    let mut res = Vec::new();
    for &nr in &[128, 256, 512] {
        let c = solve_phi1_with(&md, alpha, &p, l1, opts(nr)).unwrap();
        assert!(c.phi0_overlap() <= 1e-8, "overlap {}", c.phi0_overlap());
        assert!(c.compatibility_residual < 2.0 / (nr * nr) as f64);
        res.push(c.equation_residual());
    }
    let (q1, q2) = (res[0] / res[1], res[1] / res[2]);
    assert!(q1 > 3.0 && q2 > 3.0, "{res:?}");
}

#[test]
fn green_identity_reproduces_lambda1() {
    // ∫ ∇φ₁·∇φ₀ = κ⟨φ₁, φ₀⟩ + λ₁ since φ₀ vanishes on the circle
    let (p, md, alpha, l1) = generic_pair();
    let nr = 512;
    let c = solve_phi1_with(&md, alpha, &p, l1, opts(nr)).unwrap();
    let h = 1.0 / nr as f64;
    let (sa, ca) = alpha.sin_cos();
    let mut total = 0.0;
    for hm in c.harmonics.iter().filter(|hm| hm.order == 1) {
        let coef = if hm.kind == AngularKind::Cosine { ca } else { -sa };
        let u = &hm.values;
        let mut s = 0.0;
        for i in 0..nr {
            let rm = (i as f64 + 0.5) * h;
            s += (u[i + 1] - u[i]) / h * md.radial_derivative(rm) * rm * h;
            if i > 0 {
                let r = i as f64 * h;
                s += u[i] * md.radial(r) / (r * r) * r * h;
            }
        }
        total += coef * s * PI;
    }
    assert!((total - l1).abs() <= 1e-4 * l1.abs(), "{total} vs {l1}");
}

#[test]
fn inconsistent_lambda1_is_rejected() {
    let (p, md, alpha, l1) = generic_pair();
    assert!(matches!(
        solve_phi1(&md, alpha, &p, 1.1 * l1),
        Err(Error::Compatibility { .. })
    ));
    // an unrotated pair leaves the companion direction unsolvable
    assert!(alpha > 0.1 && alpha < FRAC_PI_2 - 0.1, "alpha = {alpha}");
    let l0 = lambda1_mode(&md, 0.0, &p).unwrap();
    let r = solve_phi1(&md, 0.0, &p, l0);
    assert!(matches!(r, Err(Error::Compatibility { .. })), "{r:?}");
}

#[test]
fn vanishing_data_gives_zero_corrector() {
    let p = StripProfile::uniform(16, PI, FRAC_PI_2 - 1e-12).unwrap();
    let md = LimitingMode::new(0, 0, 1, AngularKind::Axisymmetric, PI).unwrap();
    let l1 = lambda1_mode(&md, 0.0, &p).unwrap();
    let c = solve_phi1(&md, 0.0, &p, l1).unwrap();
    assert!(c.max_abs() < 1e-9);
}

#[test]
fn corrector_size_tracks_log_eta() {
    let md = LimitingMode::new(0, 0, 1, AngularKind::Axisymmetric, PI).unwrap();
    let ratios: Vec<f64> = [0.5f64, 0.1, 0.02]
        .iter()
        .map(|&eta| {
            let p = StripProfile::new(16, PI, eta, exp_cos(2, 3.0)).unwrap();
            let l1 = lambda1_mode(&md, 0.0, &p).unwrap();
            let c = solve_phi1_with(&md, 0.0, &p, l1, opts(256)).unwrap();
            c.max_abs() / (eta.ln().abs() + 1.0)
        })
        .collect();
    let big = ratios.iter().cloned().fold(0.0, f64::max);
    let small = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(big / small < 3.0, "{ratios:?}");
}

#[test]
fn curvilinear_laplacian_fixes_the_curvature_sign() {
    // u = r³ cos 2θ has Δu = 5 r cos 2θ
    let u = |tau: f64, s: f64| (1.0 - tau).powi(3) * (2.0 * s).cos();
    let lap = |k: f64, tau: f64, s: f64| {
        let h = 1e-4;
        let hh = |t: f64| 1.0 + t * k;
        let d_tau = |t: f64| (u(t + h, s) - u(t - h, s)) / (2.0 * h);
        let outer = (hh(tau + h) * d_tau(tau + h) - hh(tau - h) * d_tau(tau - h)) / (2.0 * h);
        let d_ss = (u(tau, s + h) - 2.0 * u(tau, s) + u(tau, s - h)) / (h * h);
        (outer + d_ss / hh(tau)) / hh(tau)
    };
    let (tau, s): (f64, f64) = (0.3, 0.4);
    let exact = 5.0 * (1.0 - tau) * (2.0 * s).cos();
    assert!((lap(DISK_CURVATURE, tau, s) - exact).abs() < 1e-5);
    assert!((lap(-DISK_CURVATURE, tau, s) - exact).abs() > 0.1);
}

fn field(n_strips: u32, eta: f64) -> CompositeField {
    let p = StripProfile::new(n_strips, PI, eta, exp_cos(1, 2.0)).unwrap();
    let md = LimitingMode::new(0, 1, 1, AngularKind::Cosine, PI).unwrap();
    let alpha = solve_alpha(1, &p).unwrap().alpha;
    let l1 = lambda1_mode(&md, alpha, &p).unwrap();
    CompositeField::new(solve_phi1_with(&md, alpha, &p, l1, opts(256)).unwrap(), p)
}

#[test]
fn v1_plus_boundary_behaviour() {
    let ctx = field(16, 0.5);
    let s = 0.7;
    let a = ctx.profile.a(s);
    let tr = ctx.corrector.mode.trace(s, ctx.corrector.alpha);
    let on = LayerPoint::new(0.5 * a, 0.0, a).unwrap();
    let v = v1_plus(&on, s, &ctx).unwrap();
    assert!((v + tr * a.sin().ln()).abs() < 1e-12);
    let far = LayerPoint::new(0.3, 25.0, a).unwrap();
    assert!(v1_plus(&far, s, &ctx).unwrap().abs() < 1e-18);
    let q = LayerPoint::new(1.1, 0.4, a).unwrap();
    assert_eq!(v1_plus(&q, s, &ctx).unwrap(), -tr * eval_x(&q).unwrap());
    // the band condition ∂v₁⁺/∂ξ₂ = φ₀^ν
    let band = LayerPoint::new(FRAC_PI_2, 0.0, a).unwrap();
    assert!((-tr * eval_local(&band).unwrap().dx_dxi2 - tr).abs() < 1e-12);
    // a mismatched width parameter is rejected
    assert!(v1_plus(&LayerPoint::new(0.3, 0.2, 0.5 * a).unwrap(), s, &ctx).is_err());
}

#[test]
fn v2_pair_solves_its_equations() {
    let ctx = field(16, 0.5);
    let s = 0.9;
    let a = ctx.profile.a(s);
    let tr = ctx.corrector.mode.trace(s, ctx.corrector.alpha);
    let m = ctx.corrector.mode.wavenumber;
    let v2 = |x1: f64, x2: f64| v2_pair(&LayerPoint::new(x1, x2, a).unwrap(), s, &ctx).unwrap();
    for &(x1, x2) in &[(0.3, 0.5), (1.2, 0.8)] {
        let b = eval_local(&LayerPoint::new(x1, x2, a).unwrap()).unwrap();
        // Δv₂⁺ = −𝗄 ∂v₁⁺/∂ξ₂ = 𝗄 φ₀^ν X_ξ₂ ; Δv₂⁻ = 2M ∂v₁⁺/∂ξ₁ = −2Mφ₀^ν X_ξ₁
        let target = (DISK_CURVATURE * tr * b.dx_dxi2, -2.0 * m * tr * b.dx_dxi1);
        let mut res = Vec::new();
        for &h in &[0.02, 0.01] {
            let c = v2(x1, x2);
            let lp = |k: usize| {
                let pick = |v: (f64, f64)| if k == 0 { v.0 } else { v.1 };
                (pick(v2(x1 + h, x2)) + pick(v2(x1 - h, x2)) + pick(v2(x1, x2 + h)) + pick(v2(x1, x2 - h))
                    - 4.0 * pick(c))
                    / (h * h)
            };
            res.push(((lp(0) - target.0).abs(), (lp(1) - target.1).abs()));
        }
        for k in 0..2 {
            let (r1, r2) = if k == 0 {
                (res[0].0, res[1].0)
            } else {
                (res[0].1, res[1].1)
            };
            let t = if k == 0 { target.0 } else { target.1 };
            assert!(
                r2 < 1e-3 * (1.0 + t.abs()) && (r2 < 1e-7 || r1 / r2 > 3.0),
                "component {k}: {res:?}"
            );
        }
    }
    // Neumann band conditions: ∂v₂⁺/∂ξ₂ = φ₁^ν, ∂v₂⁻/∂ξ₂ = 0
    let x1 = FRAC_PI_2 - 0.1;
    assert!(x1 > a);
    let h = 1e-3;
    let d = |k: usize| {
        let pick = |v: (f64, f64)| if k == 0 { v.0 } else { v.1 };
        (-3.0 * pick(v2(x1, 0.0)) + 4.0 * pick(v2(x1, h)) - pick(v2(x1, 2.0 * h))) / (2.0 * h)
    };
    let phi1_nu = ctx.corrector.normal_derivative(s);
    assert!(
        (d(0) - phi1_nu).abs() < 1e-4 * (1.0 + phi1_nu.abs()),
        "{} vs {phi1_nu}",
        d(0)
    );
    assert!(d(1).abs() < 1e-4);
    // a full strip has no layer at all
    let full = LayerPoint::new(0.4, 0.3, FRAC_PI_2).unwrap();
    let mut wide = ctx.clone();
    wide.profile.eta = FRAC_PI_2;
    wide.profile.g = WidthFunction::default();
    assert_eq!(
        v2_pair(&full, s, &wide).unwrap(),
        (0.0 - wide.corrector.normal_derivative(s) * 0.0, 0.0)
    );
}

#[test]
fn composite_structure() {
    let ctx = field(16, 0.5);
    let h = ctx.profile.height;
    // top lid: exactly zero
    for &r in &[0.0, 0.5, 0.95, 1.0] {
        let v = composite_eigenfunction(CylinderPoint { r, theta: 0.3, x3: h }, &ctx).unwrap();
        assert_eq!(v, 0.0);
    }
    // beyond the cutoff only the outer expansion remains
    let x = CylinderPoint {
        r: 0.5,
        theta: 1.1,
        x3: 0.77,
    };
    let outer = ctx.corrector.mode.psi0(x.r, x.theta, x.x3, ctx.corrector.alpha)
        + ctx.profile.epsilon() * ctx.corrector.eval(x.r, x.theta) * ctx.corrector.mode.axial(x.x3);
    assert_eq!(composite_eigenfunction(x, &ctx).unwrap(), outer);
    assert!(composite_eigenfunction(CylinderPoint { r: 1.2, ..x }, &ctx).is_err());
}

#[test]
fn strip_cancellation_ratio_is_bounded() {
    let eta: f64 = 0.5;
    let mut ratios = Vec::new();
    for &n in &[100u32, 1000] {
        let ctx = field(n, eta);
        let eps = ctx.profile.epsilon();
        let mut worst: f64 = 0.0;
        for j in 0..32 {
            let theta = TAU * j as f64 / 32.0;
            let half = eps * ctx.profile.a(theta);
            for strip in [0, n / 3, n - 1] {
                let c = ctx.profile.strip_centre(strip);
                for &f in &[-0.9, -0.4, 0.0, 0.6] {
                    let x = CylinderPoint {
                        r: 1.0,
                        theta,
                        x3: c + f * half,
                    };
                    worst = worst.max(composite_eigenfunction(x, &ctx).unwrap().abs());
                }
            }
        }
        ratios.push(worst / (eps * eps * (eta.ln().abs() + 1.0)));
    }
    assert!(ratios.iter().all(|r| *r < 1.0), "{ratios:?}");
}

#[test]
fn field_csv_export() {
    let ctx = field(16, 0.5);
    let mut buf = Vec::new();
    let rows = write_field_csv(
        &ctx,
        FieldGrid {
            n_r: 5,
            n_theta: 4,
            n_x3: 3,
        },
        &mut buf,
    )
    .unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,theta,x3,psi0,composite"));
    assert_eq!(lines.count(), rows);
    assert!(rows > 0 && rows <= 60);
}
