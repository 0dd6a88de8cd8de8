//! User-supplied cross-section modes for non-circular `ω`.
//!
//! File format (JSON): an array of records
//!
//! ```json
//! [{ "kappa": 14.68, "multiplicity": 2, "perimeter": 6.28,
//!    "traces": [[...], [...]] }]
//! ```
//!
//! Each inner array samples one L₂(ω)-normalised eigenfunction's outward
//! normal derivative on a uniform arclength grid of the boundary, first sample
//! at `s = 0`, last sample at `s = L − L/n`. The width function `g` is read in
//! the matching parameter `t = 2π s / L`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionRecord {
    pub kappa: f64,
    pub multiplicity: usize,
    pub perimeter: f64,
    pub traces: Vec<Vec<f64>>,
}

impl CrossSectionRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.perimeter > 0.0 && self.perimeter.is_finite()) {
            return Err(Error::domain("perimeter must be positive"));
        }
        if self.multiplicity == 0 || self.traces.len() != self.multiplicity {
            return Err(Error::domain(format!(
                "multiplicity {} does not match {} trace arrays",
                self.multiplicity,
                self.traces.len()
            )));
        }
        let n = self.traces[0].len();
        if n < 8 {
            return Err(Error::domain("each trace needs at least 8 samples"));
        }
        if self
            .traces
            .iter()
            .any(|t| t.len() != n || t.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::domain("traces must have equal length and finite samples"));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.traces[0].len()
    }

    /// Boundary parameter `t ∈ [0, 2π)` of sample `i`.
    pub fn parameter(&self, i: usize) -> f64 {
        std::f64::consts::TAU * i as f64 / self.samples() as f64
    }

    pub fn lambda0(&self, m: u32, height: f64) -> f64 {
        let mm = super::axial_wavenumber(m, height);
        self.kappa + mm * mm
    }
}

pub fn load_cross_section(path: &Path) -> Result<Vec<CrossSectionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let recs: Vec<CrossSectionRecord> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for r in &recs {
        r.validate()?;
    }
    Ok(recs)
}
