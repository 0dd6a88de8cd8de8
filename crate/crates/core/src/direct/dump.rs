//! Little-endian binary dumps.
//!
//! Operator file: magic `STRIPOP1` (8 bytes), `n: u64`, `nnz: u64`,
//! `row_ptr: [u64; n+1]`, `col_idx: [u64; nnz]`, `values: [f64; nnz]`,
//! `mass: [f64; n]`.
//!
//! Eigenpair file: magic `STRIPEV1`, `n: u64`, `count: u64`,
//! `values: [f64; count]`, `vectors: [f64; count·n]` stored vector by vector.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

use super::{DiscreteOperator, EigenPair};

const OP_MAGIC: &[u8; 8] = b"STRIPOP1";
const EV_MAGIC: &[u8; 8] = b"STRIPEV1";

fn put_u64(w: &mut impl Write, v: usize) -> std::io::Result<()> {
    w.write_all(&(v as u64).to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u64(r: &mut impl Read) -> std::io::Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn check_magic(r: &mut impl Read, magic: &[u8; 8], path: &Path) -> Result<()> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    if &b != magic {
        return Err(Error::Parse {
            path: path.into(),
            message: format!("bad magic {:?}", String::from_utf8_lossy(&b)),
        });
    }
    Ok(())
}

pub fn write_operator(op: &DiscreteOperator, path: &Path) -> Result<()> {
    let run = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let k = &op.stiffness;
        w.write_all(OP_MAGIC)?;
        put_u64(&mut w, k.n)?;
        put_u64(&mut w, k.nnz())?;
        for &p in &k.row_ptr {
            put_u64(&mut w, p)?;
        }
        for &c in &k.col_idx {
            put_u64(&mut w, c)?;
        }
        for &v in k.values.iter().chain(&op.mass) {
            put_f64(&mut w, v)?;
        }
        w.flush()
    };
    run().map_err(|e| Error::io(path, e))
}

/// Stiffness and mass back from an operator dump.
pub fn read_operator(path: &Path) -> Result<(CsrMatrix, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    check_magic(&mut r, OP_MAGIC, path)?;
    let mut run = || -> std::io::Result<(CsrMatrix, Vec<f64>)> {
        let n = get_u64(&mut r)?;
        let nnz = get_u64(&mut r)?;
        let row_ptr = (0..=n).map(|_| get_u64(&mut r)).collect::<std::io::Result<_>>()?;
        let col_idx = (0..nnz).map(|_| get_u64(&mut r)).collect::<std::io::Result<_>>()?;
        let values = (0..nnz).map(|_| get_f64(&mut r)).collect::<std::io::Result<_>>()?;
        let mass = (0..n).map(|_| get_f64(&mut r)).collect::<std::io::Result<_>>()?;
        Ok((
            CsrMatrix {
                n,
                row_ptr,
                col_idx,
                values,
            },
            mass,
        ))
    };
    run().map_err(|e| Error::io(path, e))
}

pub fn write_eigenpairs(pairs: &[EigenPair], path: &Path) -> Result<()> {
    let n = pairs.first().map_or(0, |p| p.vector.len());
    if pairs.iter().any(|p| p.vector.len() != n) {
        return Err(Error::domain("eigenvectors of different lengths"));
    }
    let run = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(EV_MAGIC)?;
        put_u64(&mut w, n)?;
        put_u64(&mut w, pairs.len())?;
        for p in pairs {
            put_f64(&mut w, p.value)?;
        }
        for p in pairs {
            for &v in &p.vector {
                put_f64(&mut w, v)?;
            }
        }
        w.flush()
    };
    run().map_err(|e| Error::io(path, e))
}

/// Eigenvalues and vectors back from an eigenpair dump.
pub fn read_eigenpairs(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    check_magic(&mut r, EV_MAGIC, path)?;
    let mut run = || -> std::io::Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = get_u64(&mut r)?;
        let count = get_u64(&mut r)?;
        let values = (0..count).map(|_| get_f64(&mut r)).collect::<std::io::Result<_>>()?;
        let vectors = (0..count)
            .map(|_| (0..n).map(|_| get_f64(&mut r)).collect::<std::io::Result<Vec<f64>>>())
            .collect::<std::io::Result<_>>()?;
        Ok((values, vectors))
    };
    run().map_err(|e| Error::io(path, e))
}
