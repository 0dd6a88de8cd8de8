//! Integer-order Bessel functions of the first kind and their zeros.

use crate::error::{Error, Result};

/// `J_n(x)` for `x ≥ 0`.
///
/// Ascending series for `x ≤ 1`; otherwise Miller's backward recurrence,
/// normalised by `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j needs a finite x >= 0, got {x}");
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= 1.0 {
        return series(n, x);
    }
    miller(n, x)
}

fn series(n: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    let q = -h * h;
    for k in 1..60 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let top = {
        let base = (n as f64).max(x);
        let m = base + 30.0 + 3.0 * base.sqrt();
        2 * ((m as usize) / 2 + 1)
    };
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let mut out = 0.0;
    for k in (0..top).rev() {
        // J_{k} = (2(k+1)/x) J_{k+1} − J_{k+2}
        let jm1 = 2.0 * (k + 1) as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * j;
        }
        if k == n as usize {
            out = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            out *= 1e-250;
        }
    }
    norm += j;
    out / norm
}

/// `J_n'(x)`.
pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        return -bessel_j(1, x);
    }
    if x == 0.0 {
        return if n == 1 { 0.5 } else { 0.0 };
    }
    bessel_j(n - 1, x) - n as f64 / x * bessel_j(n, x)
}

const SCAN_STEP: f64 = 0.25;

/// Positive zeros of `J_n` below `x_max`, ascending.
pub fn bessel_zeros_below(n: u32, x_max: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    // j_{n,1} > n, and consecutive zeros are more than π apart
    let mut lo = (n as f64).max(SCAN_STEP);
    let mut f_lo = bessel_j(n, lo);
    while lo < x_max {
        let hi = lo + SCAN_STEP;
        let f_hi = bessel_j(n, hi);
        if f_lo == 0.0 {
            out.push(lo);
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            let z = refine(n, lo, hi, f_lo)?;
            if z < x_max {
                out.push(z);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    Ok(out)
}

/// The k-th positive zero `j_{n,k}`, `k ≥ 1`.
pub fn bessel_zero(n: u32, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("bessel_zero: radial index k starts at 1"));
    }
    let mut lo = (n as f64).max(SCAN_STEP);
    let mut f_lo = bessel_j(n, lo);
    let mut found = 0;
    // j_{n,k} stays below the McMahon phase (k + n/2 − 1/4)π; pad it
    let cap = (k as f64 + 0.5 * n as f64 + 1.0) * std::f64::consts::PI + 10.0;
    while lo < cap {
        let hi = lo + SCAN_STEP;
        let f_hi = bessel_j(n, hi);
        if f_lo.signum() != f_hi.signum() || f_hi == 0.0 {
            found += 1;
            if found == k {
                return if f_hi == 0.0 { Ok(hi) } else { refine(n, lo, hi, f_lo) };
            }
            if f_hi == 0.0 {
                // step past the exact zero so it is not counted twice
                lo = hi + 1e-9;
                f_lo = bessel_j(n, lo);
                continue;
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(Error::Convergence {
        iterations: found as usize,
        detail: format!("could not bracket zero k = {k} of J_{n} below {cap}"),
    })
}

/// Bisection down to a narrow bracket, then safeguarded Newton.
fn refine(n: u32, mut lo: f64, mut hi: f64, f_lo: f64) -> Result<f64> {
    let s_lo = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-10 * hi {
            break;
        }
        let fm = bessel_j(n, mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let f = bessel_j(n, x);
        let d = bessel_j_prime(n, x);
        let step = f / d;
        let next = x - step;
        if !(next > lo - 1e-12 && next < hi + 1e-12) {
            break;
        }
        x = next;
        if step.abs() < 1e-16 * x {
            break;
        }
    }
    Ok(x)
}
