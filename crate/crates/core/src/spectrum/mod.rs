//! Limiting spectrum `λ₀ = M² + κ` of the cylinder with Dirichlet lateral
//! boundary, Dirichlet top and Neumann bottom. For the unit disk cross-section
//! `κ = j_{n,k}²` and `M = π(m + ½)/H`.

mod bessel;
mod import;
mod profile;

pub use bessel::{bessel_j, bessel_j_prime, bessel_zero, bessel_zeros_below};
pub use import::{load_cross_section, CrossSectionRecord};
pub use profile::{StripProfile, WidthFunction};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for treating two limiting eigenvalues as one cluster.
pub const CLUSTER_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularKind {
    Axisymmetric,
    Cosine,
    Sine,
}

/// One limiting eigenpair `ψ₀ = φ₀(r, θ) cos(M x₃)` on the unit-disk cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitingMode {
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub kappa: f64,
    /// Axial wavenumber `M`.
    pub wavenumber: f64,
    pub lambda0: f64,
    pub angular_kind: AngularKind,
    /// Amplitude of the outward normal derivative on the unit circle:
    /// `√(κ/π)` for `n = 0`, `√(2κ/π)` otherwise.
    pub normalization: f64,
    pub height: f64,
    /// Cluster id shared by modes with equal `λ₀`.
    pub group: usize,
}

pub fn axial_wavenumber(m: u32, height: f64) -> f64 {
    PI * (m as f64 + 0.5) / height
}

impl LimitingMode {
    pub fn new(m: u32, n: u32, k: u32, kind: AngularKind, height: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("radial index k starts at 1"));
        }
        if (n == 0) != (kind == AngularKind::Axisymmetric) {
            return Err(Error::domain("axisymmetric kind is exactly the n = 0 family"));
        }
        let j = bessel_zero(n, k)?;
        Ok(Self::from_zero(m, n, k, j, kind, height))
    }

    fn from_zero(m: u32, n: u32, k: u32, j: f64, kind: AngularKind, height: f64) -> Self {
        let kappa = j * j;
        let wavenumber = axial_wavenumber(m, height);
        let normalization = if n == 0 {
            (kappa / PI).sqrt()
        } else {
            (2.0 * kappa / PI).sqrt()
        };
        LimitingMode {
            m,
            n,
            k,
            kappa,
            wavenumber,
            lambda0: kappa + wavenumber * wavenumber,
            angular_kind: kind,
            normalization,
            height,
            group: 0,
        }
    }

    pub fn root(&self) -> f64 {
        self.kappa.sqrt()
    }

    fn radial_scale(&self) -> f64 {
        let c = if self.n == 0 {
            1.0 / PI.sqrt()
        } else {
            (2.0 / PI).sqrt()
        };
        c / bessel_j_prime(self.n, self.root())
    }

    /// Radial profile, scaled so that `φ₀` has unit L₂ norm on the disk and
    /// positive outward normal derivative amplitude.
    pub fn radial(&self, r: f64) -> f64 {
        self.radial_scale() * bessel_j(self.n, self.root() * r)
    }

    pub fn radial_derivative(&self, r: f64) -> f64 {
        let j = self.root();
        self.radial_scale() * j * bessel_j_prime(self.n, j * r)
    }

    pub fn angular(&self, theta: f64, alpha: f64) -> f64 {
        let t = self.n as f64 * theta + alpha;
        match self.angular_kind {
            AngularKind::Axisymmetric => 1.0,
            AngularKind::Cosine => t.cos(),
            AngularKind::Sine => t.sin(),
        }
    }

    pub fn phi0(&self, r: f64, theta: f64, alpha: f64) -> f64 {
        self.radial(r) * self.angular(theta, alpha)
    }

    pub fn psi0(&self, r: f64, theta: f64, x3: f64, alpha: f64) -> f64 {
        self.phi0(r, theta, alpha) * self.axial(x3)
    }

    pub fn axial(&self, x3: f64) -> f64 {
        axial_cos(self.m, self.height, x3)
    }

    /// `∂φ₀/∂ν` at the boundary point with angle `θ`.
    pub fn trace(&self, theta: f64, alpha: f64) -> f64 {
        self.normalization * self.angular(theta, alpha)
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.angular_kind == AngularKind::Axisymmetric
    }
}

/// `cos(π(m + ½) x₃ / H)`, with the phase reduced before the cosine so the
/// Dirichlet end `x₃ = H` gives an exact zero.
pub fn axial_cos(m: u32, height: f64, x3: f64) -> f64 {
    let u = ((m as f64 + 0.5) * (x3 / height)).rem_euclid(2.0);
    if u == 0.5 || u == 1.5 {
        return 0.0;
    }
    (PI * u).cos()
}

/// The boundary trace `θ ↦ ∂φ₀/∂ν(θ)` with the angular part rotated by `alpha`.
pub fn boundary_trace(mode: &LimitingMode, alpha: f64) -> impl Fn(f64) -> f64 + Clone + Send + Sync {
    let mode = mode.clone();
    move |theta| mode.trace(theta, alpha)
}

/// The first `count` limiting eigenvalues, counted with multiplicity, ordered
/// by `(λ₀, n, k, m, kind)`. Modes with equal `λ₀` (to [`CLUSTER_RTOL`]) share
/// a `group` id.
pub fn limiting_spectrum(height: f64, count: usize) -> Result<Vec<LimitingMode>> {
    if !(height > 0.0 && height.is_finite()) {
        return Err(Error::domain(format!("height must be positive, got {height}")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let m0 = axial_wavenumber(0, height);
    let mut bound = 2.0 * (bessel_zero(0, 1)?.powi(2) + m0 * m0);
    loop {
        let mut modes = enumerate_below(height, bound)?;
        if modes.len() >= count {
            modes.sort_by(|a, b| {
                a.lambda0
                    .total_cmp(&b.lambda0)
                    .then(a.n.cmp(&b.n))
                    .then(a.k.cmp(&b.k))
                    .then(a.m.cmp(&b.m))
                    .then(a.angular_kind.cmp(&b.angular_kind))
            });
            modes.truncate(count);
            assign_groups(&mut modes);
            return Ok(modes);
        }
        bound *= 2.0;
    }
}

fn enumerate_below(height: f64, bound: f64) -> Result<Vec<LimitingMode>> {
    let m0 = axial_wavenumber(0, height);
    let radial_cap = (bound - m0 * m0).max(0.0).sqrt();
    let mut out = Vec::new();
    for n in 0.. {
        if n as f64 >= radial_cap {
            break;
        }
        let zeros = bessel_zeros_below(n, radial_cap)?;
        if zeros.is_empty() {
            break;
        }
        for (ki, &j) in zeros.iter().enumerate() {
            for m in 0.. {
                let mm = axial_wavenumber(m, height);
                if j * j + mm * mm > bound {
                    break;
                }
                let k = ki as u32 + 1;
                if n == 0 {
                    out.push(LimitingMode::from_zero(m, n, k, j, AngularKind::Axisymmetric, height));
                } else {
                    out.push(LimitingMode::from_zero(m, n, k, j, AngularKind::Cosine, height));
                    out.push(LimitingMode::from_zero(m, n, k, j, AngularKind::Sine, height));
                }
            }
        }
    }
    Ok(out)
}

fn assign_groups(modes: &mut [LimitingMode]) {
    let mut group = 0;
    let mut anchor = f64::NAN;
    for (i, md) in modes.iter_mut().enumerate() {
        if i > 0 && (md.lambda0 - anchor).abs() > CLUSTER_RTOL * anchor.abs() {
            group += 1;
            anchor = md.lambda0;
        } else if i == 0 {
            anchor = md.lambda0;
        }
        md.group = group;
    }
}

/// Modes grouped by cluster id, in ascending order.
pub fn clusters(modes: &[LimitingMode]) -> Vec<Vec<LimitingMode>> {
    let mut out: Vec<Vec<LimitingMode>> = Vec::new();
    for md in modes {
        match out.last_mut() {
            Some(c) if c[0].group == md.group => c.push(md.clone()),
            _ => out.push(vec![md.clone()]),
        }
    }
    out
}

/// Adjacent clusters whose eigenvalues differ by less than `rel_window`
/// (relative) without being merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearDegenerate {
    pub lower_group: usize,
    pub upper_group: usize,
    pub gap: f64,
}

pub fn near_degenerate(modes: &[LimitingMode], rel_window: f64) -> Vec<NearDegenerate> {
    let cl = clusters(modes);
    cl.windows(2)
        .filter_map(|w| {
            let (a, b) = (&w[0][0], &w[1][0]);
            let gap = b.lambda0 - a.lambda0;
            (gap <= rel_window * b.lambda0).then_some(NearDegenerate {
                lower_group: a.group,
                upper_group: b.group,
                gap,
            })
        })
        .collect()
}
