//! Shift-invert block subspace iteration with Rayleigh-Ritz.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{map_collect, ExecMode};
use crate::linalg::BandedCholesky;

use super::DiscreteOperator;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Seed of the random starting block.
    pub seed: u64,
    pub max_iter: usize,
    /// Extra block columns beyond `count`; 0 picks `max(4, count)`.
    pub guard: usize,
    /// Factor `K − σM`; must lie below the spectrum.
    pub shift: f64,
    pub exec: ExecMode,
    /// Cap on stored band entries of the factor (8 bytes each).
    pub band_entry_cap: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            seed: 0x5eed,
            max_iter: 500,
            guard: 0,
            shift: 0.0,
            exec: ExecMode::Parallel,
            band_entry_cap: 300_000_000,
        }
    }
}

/// Eigenvalue, nodal vector normalised to `uᵀMu = 1`, and the residual
/// `‖Sv − λv‖/‖v‖` of the symmetric form `S = M^{-1/2}KM^{-1/2}`, `v = M^{1/2}u`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

pub fn smallest_eigenpairs(op: &DiscreteOperator, count: usize, tol: f64) -> Result<Vec<EigenPair>> {
    smallest_eigenpairs_with(op, count, tol, &EigenOptions::default())
}

fn m_dot(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    m.iter().zip(a).zip(b).map(|((m, a), b)| m * a * b).sum()
}

/// Modified Gram-Schmidt in the `M` inner product, two passes; drops columns
/// that collapse.
fn m_orthonormalize(m: &[f64], cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut c in cols.drain(..) {
        let n0 = m_dot(m, &c, &c).sqrt();
        for _ in 0..2 {
            for q in &out {
                let p = m_dot(m, q, &c);
                c.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            }
        }
        let nrm = m_dot(m, &c, &c).sqrt();
        if nrm > 1e-10 * n0 && nrm > 0.0 {
            c.iter_mut().for_each(|x| *x /= nrm);
            out.push(c);
        }
    }
    *cols = out;
}

pub fn smallest_eigenpairs_with(
    op: &DiscreteOperator,
    count: usize,
    tol: f64,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = op.dim();
    if count == 0 {
        return Ok(Vec::new());
    }
    if count > n {
        return Err(Error::domain(format!(
            "requested {count} eigenpairs of a {n}-dimensional operator"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("residual tolerance must be positive"));
    }
    let k = &op.stiffness;
    let m = &op.mass;
    let entries = n.saturating_mul(k.bandwidth() + 1);
    if entries > opts.band_entry_cap {
        return Err(Error::MemoryGuard {
            unknowns: entries,
            cap: opts.band_entry_cap,
        });
    }
    let factor = BandedCholesky::factor(k, m, opts.shift)?;
    let guard = if opts.guard == 0 { count.max(4) } else { opts.guard };
    let p = (count + guard).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    m_orthonormalize(m, &mut x);

    let mut best = vec![f64::INFINITY; count];
    for _ in 0..opts.max_iter {
        let mut y: Vec<Vec<f64>> = map_collect(&x, opts.exec, |c| {
            let rhs: Vec<f64> = c.iter().zip(m).map(|(c, m)| c * m).collect();
            factor.solve(&rhs)
        });
        m_orthonormalize(m, &mut y);
        let ky: Vec<Vec<f64>> = map_collect(&y, opts.exec, |c| k.matvec(c));
        let q = y.len();
        let kr = DMatrix::from_fn(q, q, |a, b| {
            let v: f64 = y[a].iter().zip(&ky[b]).map(|(u, w)| u * w).sum();
            let w: f64 = y[b].iter().zip(&ky[a]).map(|(u, w)| u * w).sum();
            0.5 * (v + w)
        });
        let eig = SymmetricEigen::new(kr);
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let ritz: Vec<(f64, Vec<f64>, Vec<f64>)> = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                let mut kv = vec![0.0; n];
                for a in 0..q {
                    let w = eig.eigenvectors[(a, c)];
                    v.iter_mut().zip(&y[a]).for_each(|(s, t)| *s += w * t);
                    kv.iter_mut().zip(&ky[a]).for_each(|(s, t)| *s += w * t);
                }
                (eig.eigenvalues[c], v, kv)
            })
            .collect();

        let residuals: Vec<f64> = ritz
            .iter()
            .take(count)
            .map(|(lam, v, kv)| {
                let r2: f64 = (0..n).map(|i| (kv[i] - lam * m[i] * v[i]).powi(2) / m[i]).sum();
                r2.sqrt() / m_dot(m, v, v).sqrt()
            })
            .collect();
        for (b, r) in best.iter_mut().zip(&residuals) {
            *b = b.min(*r);
        }
        x = ritz.iter().map(|(_, v, _)| v.clone()).collect();
        if residuals.len() == count && residuals.iter().all(|&r| r <= tol) {
            return Ok(ritz
                .into_iter()
                .take(count)
                .zip(residuals)
                .map(|((value, mut vector, _), residual)| {
                    let big = vector
                        .iter()
                        .copied()
                        .fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
                    if big < 0.0 {
                        vector.iter_mut().for_each(|v| *v = -*v);
                    }
                    EigenPair {
                        value,
                        vector,
                        residual,
                    }
                })
                .collect());
        }
    }
    Err(Error::EigenNotConverged {
        iterations: opts.max_iter,
        residuals: best,
        tol,
    })
}
