use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width function `g` of the Dirichlet strips, a smooth 2π-periodic function
/// of the boundary parameter with `0 < c ≤ g ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WidthFunction {
    Constant {
        value: f64,
    },
    /// `mean + Σ_k cos[k−1]·cos kθ + sin[k−1]·sin kθ`
    Fourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// `exp(−(1 − cos(p(θ − phase))) / scale)`
    ExpCos {
        harmonic: u32,
        scale: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Default for WidthFunction {
    fn default() -> Self {
        WidthFunction::Constant { value: 1.0 }
    }
}

impl WidthFunction {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            WidthFunction::Constant { value } => *value,
            WidthFunction::Fourier { mean, cos, sin } => {
                let mut v = *mean;
                for (k, c) in cos.iter().enumerate() {
                    v += c * ((k + 1) as f64 * theta).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    v += s * ((k + 1) as f64 * theta).sin();
                }
                v
            }
            WidthFunction::ExpCos { harmonic, scale, phase } => {
                (-(1.0 - (*harmonic as f64 * (theta - phase)).cos()) / scale).exp()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            WidthFunction::Constant { .. } => true,
            WidthFunction::Fourier { cos, sin, .. } => cos.iter().chain(sin).all(|&c| c == 0.0),
            WidthFunction::ExpCos { harmonic, .. } => *harmonic == 0,
        }
    }

    /// Highest Fourier index carrying non-negligible energy (below 1e-17
    /// relative for the exponential family).
    pub fn fourier_index(&self) -> usize {
        match self {
            WidthFunction::Constant { .. } => 0,
            WidthFunction::Fourier { cos, sin, .. } => cos.len().max(sin.len()),
            WidthFunction::ExpCos { harmonic, scale, .. } => {
                if *harmonic == 0 {
                    return 0;
                }
                // coefficients of e^{cos t / q} behave like (1/(2q))^k / k!
                let x = 0.5 / scale;
                let mut term = 1.0;
                let mut k = 0;
                while term > 1e-17 && k < 10_000 {
                    k += 1;
                    term *= x / k as f64;
                }
                *harmonic as usize * k.max(1)
            }
        }
    }

    /// The same function rotated by `beta`: `θ ↦ g(θ − β)`.
    pub fn rotated(&self, beta: f64) -> WidthFunction {
        match self {
            WidthFunction::Constant { .. } => self.clone(),
            WidthFunction::Fourier { mean, cos, sin } => {
                let n = cos.len().max(sin.len());
                let mut c2 = vec![0.0; n];
                let mut s2 = vec![0.0; n];
                for k in 0..n {
                    let a = cos.get(k).copied().unwrap_or(0.0);
                    let b = sin.get(k).copied().unwrap_or(0.0);
                    let (s, c) = ((k + 1) as f64 * beta).sin_cos();
                    // a cos k(θ−β) + b sin k(θ−β)
                    c2[k] = a * c - b * s;
                    s2[k] = a * s + b * c;
                }
                WidthFunction::Fourier {
                    mean: *mean,
                    cos: c2,
                    sin: s2,
                }
            }
            WidthFunction::ExpCos { harmonic, scale, phase } => WidthFunction::ExpCos {
                harmonic: *harmonic,
                scale: *scale,
                phase: phase + beta,
            },
        }
    }

    /// Rigorous-enough bounds: extremes of a dense sample widened by
    /// `max|g'| · h / 2`, with `max|g'|` bounded from the coefficients.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            WidthFunction::Constant { value } => (*value, *value),
            WidthFunction::ExpCos { harmonic, scale, .. } => {
                if *harmonic == 0 {
                    (1.0, 1.0)
                } else {
                    ((-2.0 / scale).exp(), 1.0)
                }
            }
            WidthFunction::Fourier { cos, sin, .. } => {
                let idx = self.fourier_index();
                let n = 4096 + 16 * idx;
                let h = TAU / n as f64;
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..n {
                    let v = self.eval(i as f64 * h);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let slope: f64 = cos
                    .iter()
                    .enumerate()
                    .map(|(k, c)| (k + 1) as f64 * c.abs())
                    .chain(sin.iter().enumerate().map(|(k, s)| (k + 1) as f64 * s.abs()))
                    .sum();
                let pad = 0.5 * h * slope;
                (lo - pad, hi + pad)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            WidthFunction::Constant { value } => value.is_finite(),
            WidthFunction::Fourier { mean, cos, sin } => {
                mean.is_finite() && cos.iter().chain(sin).all(|c| c.is_finite())
            }
            WidthFunction::ExpCos { scale, phase, .. } => scale.is_finite() && *scale > 0.0 && phase.is_finite(),
        };
        if !finite {
            return Err(Error::domain("width function has non-finite or invalid parameters"));
        }
        let (lo, hi) = self.bounds();
        if !(lo > 0.0) {
            return Err(Error::domain(format!(
                "width function must stay positive; lower bound {lo}"
            )));
        }
        if hi > 1.0 + 1e-12 {
            return Err(Error::domain(format!(
                "width function must not exceed 1; upper bound {hi}"
            )));
        }
        Ok(())
    }
}

/// Geometry of the perturbation: `N` Dirichlet strips of half-width
/// `ε η g(θ)` centred at `x₃ = επ(j + ½)` on the lateral surface of a
/// cylinder of height `H`, with `ε = H/(πN)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripProfile {
    pub n_strips: u32,
    pub height: f64,
    pub eta: f64,
    #[serde(default)]
    pub g: WidthFunction,
}

impl StripProfile {
    pub fn new(n_strips: u32, height: f64, eta: f64, g: WidthFunction) -> Result<Self> {
        let p = StripProfile {
            n_strips,
            height,
            eta,
            g,
        };
        p.validate()?;
        Ok(p)
    }

    /// Strips of constant width.
    pub fn uniform(n_strips: u32, height: f64, eta: f64) -> Result<Self> {
        Self::new(n_strips, height, eta, WidthFunction::default())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_strips == 0 {
            return Err(Error::domain("number of strips N must be positive"));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::domain(format!("height H must be positive, got {}", self.height)));
        }
        if !(self.eta > 0.0 && self.eta < FRAC_PI_2) {
            return Err(Error::domain(format!("eta must lie in (0, pi/2), got {}", self.eta)));
        }
        self.g.validate()
    }

    pub fn epsilon(&self) -> f64 {
        self.height / (PI * self.n_strips as f64)
    }

    /// Local strip half-width parameter `η g(θ)` in fast variables.
    pub fn a(&self, theta: f64) -> f64 {
        self.eta * self.g.eval(theta)
    }

    /// Centre of strip `j` on the axis.
    pub fn strip_centre(&self, j: u32) -> f64 {
        self.epsilon() * PI * (j as f64 + 0.5)
    }

    /// Whether `(θ, x₃)` on the lateral surface lies on a closed strip.
    pub fn on_strip(&self, theta: f64, x3: f64) -> bool {
        let eps = self.epsilon();
        let period = eps * PI;
        let j = ((x3 / period) - 0.5).round().clamp(0.0, self.n_strips as f64 - 1.0);
        (x3 - period * (j + 0.5)).abs() <= eps * self.a(theta)
    }

    /// `ε |ln η|`, the quantity that must vanish for the Dirichlet limit.
    pub fn homogenization_indicator(&self) -> f64 {
        self.epsilon() * self.eta.ln().abs()
    }
}
