//! Quadrature rules used across the crate.
//!
//! * [`GaussLegendre`]: fixed n-point rules, nodes by Newton iteration on P_n.
//! * [`adaptive`]: globally adaptive Gauss–Kronrod (7/15) for vector-valued
//!   integrands. Interval bisection concentrates nodes at integrable endpoint
//!   singularities (inverse square roots, logarithms), which is what the
//!   boundary-layer functions produce at the slit endpoints.
//! * [`periodic_trapezoid`]: spectrally accurate for smooth periodic data.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over consecutive breakpoints.
    pub fn integrate_panels(&self, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        breaks.windows(2).map(|p| self.integrate(p[0], p[1], &mut f)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints on `[a, b]` graded geometrically toward `a`: the first panel
/// has width `(b - a) * ratio^levels`.
pub fn graded_toward_start(a: f64, b: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=levels).rev().map(|k| a + (b - a) * ratio.powi(k as i32)).collect();
    pts.insert(0, a);
    pts
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
}

fn gk15<const K: usize>(f: &impl Fn(&[f64]) -> Vec<[f64; K]>, a: f64, b: f64) -> Segment<K> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut xs = [c; 15];
    for j in 0..7 {
        xs[2 * j] = c - h * XGK[j];
        xs[2 * j + 1] = c + h * XGK[j];
    }
    let fx = f(&xs);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    for k in 0..K {
        kron[k] = WGK[7] * fx[14][k];
        gauss[k] = WG[3] * fx[14][k];
    }
    for j in 0..7 {
        for k in 0..K {
            let s = fx[2 * j][k] + fx[2 * j + 1][k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        value[k] = kron[k] * h;
        error[k] = ((kron[k] - gauss[k]) * h).abs();
    }
    Segment { a, b, value, error }
}

/// Globally adaptive Gauss–Kronrod integration of a vector-valued function.
///
/// Converged when every component satisfies
/// `err_k <= max(abs_tol, rel_tol * |I_k|)`.
pub fn adaptive<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<[f64; K]> {
    let f = std::cell::RefCell::new(&mut f);
    adaptive_batch(
        |xs: &[f64]| xs.iter().map(|&x| (f.borrow_mut())(x)).collect(),
        breaks,
        opts,
    )
}

/// [`adaptive`] with the 15 Kronrod nodes of each panel handed to `f` as one
/// batch, so the caller can evaluate them concurrently.
pub fn adaptive_batch<const K: usize>(
    f: impl Fn(&[f64]) -> Vec<[f64; K]>,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<[f64; K]> {
    assert!(breaks.len() >= 2);
    let mut segs: Vec<Segment<K>> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    loop {
        let mut total = [0.0; K];
        let mut err = [0.0; K];
        for s in &segs {
            for k in 0..K {
                total[k] += s.value[k];
                err[k] += s.error[k];
            }
        }
        if !(0..K).all(|k| total[k].is_finite() && err[k].is_finite()) {
            return Err(Error::Convergence {
                iterations: segs.len(),
                detail: "adaptive quadrature met a non-finite integrand".to_string(),
            });
        }
        let tol: Vec<f64> = (0..K)
            .map(|k| opts.abs_tol.max(opts.rel_tol * total[k].abs()))
            .collect();
        if (0..K).all(|k| err[k] <= tol[k]) {
            return Ok(total);
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Convergence {
                iterations: segs.len(),
                detail: format!("adaptive quadrature error {err:?} above tolerance {tol:?}"),
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let score = (0..K).map(|k| s.error[k] / tol[k]).fold(0.0_f64, f64::max);
                (i, score)
            })
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval exhausted at machine precision; keep its estimate.
            let mut frozen = s;
            frozen.error = [0.0; K];
            segs.push(frozen);
            continue;
        }
        segs.push(gk15(&f, s.a, mid));
        segs.push(gk15(&f, mid, s.b));
    }
}

pub fn adaptive_scalar(mut f: impl FnMut(f64) -> f64, breaks: &[f64], opts: AdaptiveOptions) -> Result<f64> {
    adaptive(|x| [f(x)], breaks, opts).map(|v| v[0])
}

/// Trapezoid rule with `n` equispaced samples over one period starting at `start`.
pub fn periodic_trapezoid(start: f64, period: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = period / n as f64;
    (0..n).map(|i| f(start + i as f64 * h)).sum::<f64>() * h
}

/// Periodic trapezoid, doubling the sample count until two successive
/// estimates agree to `tol` (absolute), starting from `n0` samples.
pub fn periodic_trapezoid_converged(
    start: f64,
    period: f64,
    n0: usize,
    tol: f64,
    max_samples: usize,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mut n = n0.max(2);
    let mut prev = periodic_trapezoid(start, period, n, &f);
    while n < max_samples {
        // Refinement reuses the previous samples: the midpoints are new.
        let h = period / n as f64;
        let mids: f64 = (0..n).map(|i| f(start + (i as f64 + 0.5) * h)).sum();
        let next = 0.5 * prev + 0.5 * h * mids;
        n *= 2;
        if (next - prev).abs() <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Convergence {
        iterations: n,
        detail: "periodic trapezoid did not settle".into(),
    })
}
