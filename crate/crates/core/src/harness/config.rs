//! TOML run configuration.
//!
//! ```toml
//! [profile]            # strip geometry for correction and validate
//! n_strips = 16
//! height = 3.141592653589793
//! eta = 0.4
//! g = { kind = "constant", value = 1.0 }
//!
//! [spectrum]
//! count = 5
//! cross_section = "disk"          # or "records" with `records = "file.json"`
//!
//! [blayer]
//! a = [0.1, 0.5, 1.0, 1.4]
//!
//! [sweep]
//! n_strips = [8, 16, 32]
//! eta = [0.4]
//! orders = [0]
//! modes = 3
//! slope_tolerance = 0.15
//!
//! [solver]
//! n_r = 128
//! axial_per_strip = 64
//! radial_grading = 0.75
//! tol = 1e-6
//! max_iter = 500
//! seed = 24301
//! ```
//!
//! Every key is optional. Unknown sections or keys, wrong types and values
//! outside their range are reported as config errors naming the key and,
//! when it can be found, its line.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::direct::{DEFAULT_RADIAL_GRADING, DEFAULT_RADIAL_INTERVALS};
use crate::error::{Error, Result};
use crate::spectrum::{StripProfile, WidthFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSection {
    pub n_strips: u32,
    pub height: f64,
    pub eta: f64,
    pub g: WidthFunction,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            n_strips: 16,
            height: PI,
            eta: 0.4,
            g: WidthFunction::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossSection {
    Disk,
    Records,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumSection {
    pub count: usize,
    pub cross_section: CrossSection,
    /// JSON list of cross-section records, used with `cross_section = "records"`.
    pub records: Option<PathBuf>,
    /// Axial index paired with imported records.
    pub record_m: u32,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            count: 5,
            cross_section: CrossSection::Disk,
            records: None,
            record_m: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlayerSection {
    pub a: Vec<f64>,
}

impl Default for BlayerSection {
    fn default() -> Self {
        BlayerSection {
            a: vec![0.1, 0.5, 1.0, 1.4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub n_strips: Vec<u32>,
    pub eta: Vec<f64>,
    /// Angular orders solved by the mode-reduced path.
    pub orders: Vec<u32>,
    /// Tracked eigenvalues per order (per point on the 3D path).
    pub modes: usize,
    pub slope_tolerance: f64,
    /// Fixed `C` for the lower envelope; fitted when absent.
    pub bound_constant: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            n_strips: vec![8, 16, 32],
            eta: vec![0.4],
            orders: vec![0],
            modes: 3,
            slope_tolerance: 0.15,
            bound_constant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub n_r: usize,
    pub axial_per_strip: usize,
    pub radial_grading: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub full3d: bool,
    pub n_theta: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            n_r: DEFAULT_RADIAL_INTERVALS,
            axial_per_strip: 64,
            radial_grading: DEFAULT_RADIAL_GRADING,
            tol: 1e-6,
            max_iter: 500,
            seed: 0x5eed,
            full3d: false,
            n_theta: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub profile: ProfileSection,
    pub spectrum: SpectrumSection,
    pub blayer: BlayerSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
}

/// Line (1-based) of `key = …` inside `[section]`.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[') {
            current = h.trim_end_matches(']').trim().to_string();
            continue;
        }
        let sect_ok = current == section || (key.is_empty() && current.starts_with(section));
        if sect_ok {
            if key.is_empty() {
                return Some(i + 1);
            }
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') || rest.starts_with('.') {
                    return Some(i + 1);
                }
            }
        }
    }
    if key.is_empty() {
        return text
            .lines()
            .position(|l| l.trim().trim_matches(['[', ']']).trim() == section)
            .map(|i| i + 1);
    }
    None
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a toml::Table>,
    text: &'a str,
}

impl<'a> Section<'a> {
    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        let full = format!("{}.{}", self.name, key);
        let message = match locate(self.text, self.name, key) {
            Some(l) => format!("line {l}: {msg}"),
            None => msg.to_string(),
        };
        Error::config(full, message)
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.table.and_then(|t| t.get(key)) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into::<T>()
                .map(Some)
                .map_err(|e| self.err(key, e.message().trim())),
        }
    }

    fn set<T: DeserializeOwned>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !allowed.contains(&k.as_str()) {
                    return Err(self.err(k, format!("unknown key; expected one of {}", allowed.join(", "))));
                }
            }
        }
        Ok(())
    }
}

impl Config {
    /// Parse and validate; `origin` only labels syntax errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Config> {
        let root: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string().trim().to_string(),
        })?;
        const SECTIONS: [&str; 5] = ["profile", "spectrum", "blayer", "sweep", "solver"];
        let mut sections = Vec::new();
        for (k, v) in &root {
            if !SECTIONS.contains(&k.as_str()) {
                let line = locate(text, k, "").map(|l| format!("line {l}: ")).unwrap_or_default();
                return Err(Error::config(
                    k.clone(),
                    format!("{line}unknown section; expected one of {}", SECTIONS.join(", ")),
                ));
            }
            if !v.is_table() {
                return Err(Error::config(k.clone(), "must be a table"));
            }
        }
        for name in SECTIONS {
            sections.push(Section {
                name,
                table: root.get(name).and_then(|v| v.as_table()),
                text,
            });
        }
        let [p, s, b, w, v] = &sections[..] else { unreachable!() };
        let mut c = Config::default();

        p.only(&["n_strips", "height", "eta", "g"])?;
        p.set("n_strips", &mut c.profile.n_strips)?;
        p.set("height", &mut c.profile.height)?;
        p.set("eta", &mut c.profile.eta)?;
        p.set("g", &mut c.profile.g)?;

        s.only(&["count", "cross_section", "records", "record_m"])?;
        s.set("count", &mut c.spectrum.count)?;
        if let Some(cs) = s.get::<String>("cross_section")? {
            c.spectrum.cross_section = match cs.as_str() {
                "disk" => CrossSection::Disk,
                "records" => CrossSection::Records,
                other => return Err(s.err("cross_section", format!("`{other}` is not one of disk, records"))),
            };
        }
        c.spectrum.records = s.get("records")?;
        s.set("record_m", &mut c.spectrum.record_m)?;

        b.only(&["a"])?;
        b.set("a", &mut c.blayer.a)?;

        w.only(&[
            "n_strips",
            "eta",
            "orders",
            "modes",
            "slope_tolerance",
            "bound_constant",
        ])?;
        w.set("n_strips", &mut c.sweep.n_strips)?;
        w.set("eta", &mut c.sweep.eta)?;
        w.set("orders", &mut c.sweep.orders)?;
        w.set("modes", &mut c.sweep.modes)?;
        w.set("slope_tolerance", &mut c.sweep.slope_tolerance)?;
        c.sweep.bound_constant = w.get("bound_constant")?;

        v.only(&[
            "n_r",
            "axial_per_strip",
            "radial_grading",
            "tol",
            "max_iter",
            "seed",
            "full3d",
            "n_theta",
        ])?;
        v.set("n_r", &mut c.solver.n_r)?;
        v.set("axial_per_strip", &mut c.solver.axial_per_strip)?;
        v.set("radial_grading", &mut c.solver.radial_grading)?;
        v.set("tol", &mut c.solver.tol)?;
        v.set("max_iter", &mut c.solver.max_iter)?;
        if let Some(seed) = v.get::<i64>("seed")? {
            c.solver.seed = u64::try_from(seed).map_err(|_| v.err("seed", "must be non-negative"))?;
        }
        v.set("full3d", &mut c.solver.full3d)?;
        v.set("n_theta", &mut c.solver.n_theta)?;

        c.validate_with(&sections)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text, path)
    }

    /// Range checks on a programmatically built config.
    pub fn validate(&self) -> Result<()> {
        let sections: Vec<Section> = ["profile", "spectrum", "blayer", "sweep", "solver"]
            .into_iter()
            .map(|name| Section {
                name,
                table: None,
                text: "",
            })
            .collect();
        self.validate_with(&sections)
    }

    fn validate_with(&self, sec: &[Section]) -> Result<()> {
        let [p, s, b, w, v] = sec else { unreachable!() };
        let pr = &self.profile;
        if pr.n_strips == 0 {
            return Err(p.err("n_strips", "the number of strips must be at least 1"));
        }
        if !(pr.height > 0.0 && pr.height.is_finite()) {
            return Err(p.err("height", format!("must be positive, got {}", pr.height)));
        }
        check_eta(p, "eta", pr.eta)?;
        pr.g.validate().map_err(|e| p.err("g", e))?;
        let g_max = pr.g.bounds().1;
        if pr.eta * g_max >= FRAC_PI_2 {
            return Err(p.err("g", format!("eta * max g = {} reaches pi/2", pr.eta * g_max)));
        }
        if self.spectrum.cross_section == CrossSection::Records && self.spectrum.records.is_none() {
            return Err(s.err("records", "cross_section = \"records\" needs a records file"));
        }
        for &a in &self.blayer.a {
            if !(a > 0.0 && a < FRAC_PI_2) {
                return Err(b.err("a", format!("{a} is outside (0, pi/2)")));
            }
        }
        let sw = &self.sweep;
        if sw.n_strips.contains(&0) {
            return Err(w.err("n_strips", "every N must be at least 1"));
        }
        for &eta in &sw.eta {
            check_eta(w, "eta", eta)?;
            if eta * g_max >= FRAC_PI_2 {
                return Err(w.err("eta", format!("eta * max g = {} reaches pi/2", eta * g_max)));
            }
        }
        if sw.modes == 0 {
            return Err(w.err("modes", "must be at least 1"));
        }
        if !(sw.slope_tolerance > 0.0) {
            return Err(w.err("slope_tolerance", "must be positive"));
        }
        if let Some(c) = sw.bound_constant {
            if !(c > 0.0 && c.is_finite()) {
                return Err(w.err("bound_constant", "must be positive"));
            }
        }
        let so = &self.solver;
        if so.n_r < 4 {
            return Err(v.err("n_r", "needs at least 4 radial intervals"));
        }
        if so.axial_per_strip < 2 {
            return Err(v.err("axial_per_strip", "needs at least 2 intervals per strip"));
        }
        if !(0.0..1.0).contains(&so.radial_grading) {
            return Err(v.err("radial_grading", "must lie in [0, 1)"));
        }
        if !(so.tol > 0.0) {
            return Err(v.err("tol", "must be positive"));
        }
        if so.max_iter == 0 {
            return Err(v.err("max_iter", "must be at least 1"));
        }
        if so.n_theta < 8 {
            return Err(v.err("n_theta", "needs at least 8 angular nodes"));
        }
        Ok(())
    }

    /// Extra precondition of sweeps: the mode-reduced path needs a
    /// theta-independent width.
    pub fn validate_direct(&self) -> Result<()> {
        if !self.solver.full3d
            && !self.profile.g.is_constant()
            && !self.sweep.eta.is_empty()
            && !self.sweep.n_strips.is_empty()
        {
            return Err(Error::config(
                "solver.full3d",
                "a theta-dependent width needs full3d = true for direct solves",
            ));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<StripProfile> {
        StripProfile::new(
            self.profile.n_strips,
            self.profile.height,
            self.profile.eta,
            self.profile.g.clone(),
        )
    }

    /// Profile of one sweep point.
    pub fn sweep_profile(&self, n_strips: u32, eta: f64) -> Result<StripProfile> {
        StripProfile::new(n_strips, self.profile.height, eta, self.profile.g.clone())
    }
}

fn check_eta(sec: &Section, key: &str, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < FRAC_PI_2) {
        return Err(sec.err(key, format!("{eta} is outside (0, pi/2)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(t: &str) -> Result<Config> {
        Config::parse(t, Path::new("test.toml"))
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse("").unwrap(), Config::default());
    }

    #[test]
    fn diagnostics_name_key_and_line() {
        let e = parse("[profile]\neta = 0.4\nn_strips = 0\n").unwrap_err();
        match e {
            Error::Config { key, message } => {
                assert_eq!(key, "profile.n_strips");
                assert!(message.contains("line 3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let e = parse("[solver]\ntol = \"small\"\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "solver.tol"), "{e}");
        let e = parse("[sweep]\nbogus = 1\n").unwrap_err();
        assert!(
            matches!(e, Error::Config { ref key, .. } if key == "sweep.bogus"),
            "{e}"
        );
        let e = parse("[extra]\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "extra"), "{e}");
        assert!(matches!(parse("[profile\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn width_families_parse() {
        let c = parse("[profile]\ng = { kind = \"fourier\", mean = 0.8, cos = [0.0, 0.1] }\n[solver]\nfull3d = true\n")
            .unwrap();
        assert!(matches!(c.profile.g, WidthFunction::Fourier { .. }));
        let c = parse("[profile]\ng = { kind = \"exp_cos\", harmonic = 4, scale = 4.0 }\n[sweep]\nn_strips = []\n")
            .unwrap();
        assert!(matches!(c.profile.g, WidthFunction::ExpCos { harmonic: 4, .. }));
        let c = parse("[profile]\ng = { kind = \"fourier\", mean = 0.8, cos = [0.1] }\n").unwrap();
        let e = c.validate_direct().unwrap_err();
        assert!(
            matches!(e, Error::Config { ref key, .. } if key == "solver.full3d"),
            "{e}"
        );
    }
}
