//! Operator assembly and the separable limiting solve.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_eigenvalue, CsrMatrix};
use crate::spectrum::{StripProfile, WidthFunction};

use super::mask::{BoundaryTag, StripMask};

/// Radial intervals of the default validation grid.
pub const DEFAULT_RADIAL_INTERVALS: usize = 128;
/// Axial intervals per strip in the default grid.
pub const DEFAULT_AXIAL_PER_STRIP: usize = 64;
/// Axial nodes required across one strip half-width `εηg`.
pub const MIN_NODES_PER_HALF_WIDTH: f64 = 8.0;
/// Unknown cap for the full 3D operator.
pub const FULL3D_UNKNOWN_CAP: usize = 500_000;

/// Radial grading of the default grid: node spacing at the wall is
/// `(1 − c)` times the mean.
pub const DEFAULT_RADIAL_GRADING: f64 = 0.75;

/// Interval counts of the `(r, x₃)` grid. Radial nodes are
/// `r_i = s + c·s²(1 − s)`, `s = i/n_r`, with `c = radial_grading`; `c = 0`
/// is uniform, `c > 0` clusters nodes at the lateral wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub n_r: usize,
    pub n_x3: usize,
    pub radial_grading: f64,
}

impl ModeGrid {
    pub fn uniform(n_r: usize, n_x3: usize) -> Self {
        ModeGrid {
            n_r,
            n_x3,
            radial_grading: 0.0,
        }
    }
}

/// Interval counts of the `(r, θ, x₃)` grid; `n_theta` is the number of
/// angular nodes. Radial nodes as in [`ModeGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Full3dGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_x3: usize,
    pub radial_grading: f64,
}

impl Full3dGrid {
    pub fn uniform(n_r: usize, n_theta: usize, n_x3: usize) -> Self {
        Full3dGrid {
            n_r,
            n_theta,
            n_x3,
            radial_grading: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridMeta {
    ModeReduced {
        n_r: usize,
        n_x3: usize,
        radial_grading: f64,
        order: u32,
    },
    Full3d {
        n_r: usize,
        n_theta: usize,
        n_x3: usize,
        radial_grading: f64,
    },
    Custom,
}

/// Grid position of an unknown: radial, angular and axial node indices.
/// Axis nodes of the 3D grid have `i = 0, k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub i: usize,
    pub k: usize,
    pub j: usize,
}

/// Generalised problem `K u = λ M u` with symmetric sparse `K` and diagonal
/// positive `M`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    pub meta: GridMeta,
    pub nodes: Vec<Node>,
    /// Lateral boundary nodes removed as Dirichlet.
    pub lateral_dirichlet: usize,
}

impl DiscreteOperator {
    /// Wrap an explicit pair; used for test matrices.
    pub fn from_parts(stiffness: CsrMatrix, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != stiffness.n || mass.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::domain("mass must be a positive vector of matching length"));
        }
        let nodes = (0..stiffness.n).map(|i| Node { i, k: 0, j: 0 }).collect();
        Ok(DiscreteOperator {
            stiffness,
            mass,
            meta: GridMeta::Custom,
            nodes,
            lateral_dirichlet: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.stiffness.n
    }

    /// `M^{-1/2} K M^{-1/2}`, the symmetric form the eigensolver works with.
    pub fn symmetric_form(&self) -> CsrMatrix {
        let d: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        self.stiffness.scaled(&d)
    }

    /// Same operator plus `c·M`, so every eigenvalue moves by `c`.
    pub fn shifted(&self, c: f64) -> DiscreteOperator {
        let mut out = self.clone();
        for i in 0..out.stiffness.n {
            for p in out.stiffness.row_ptr[i]..out.stiffness.row_ptr[i + 1] {
                if out.stiffness.col_idx[p] == i {
                    out.stiffness.values[p] += c * self.mass[i];
                }
            }
        }
        out
    }
}

/// Radial nodes with their control volumes; faces sit at node midpoints.
#[derive(Debug, Clone)]
pub(crate) struct RadialGrid {
    pub(crate) r: Vec<f64>,
    faces: Vec<f64>,
}

impl RadialGrid {
    pub(crate) fn new(n_r: usize, grading: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&grading) {
            return Err(Error::domain(format!(
                "radial grading must lie in [0, 1), got {grading}"
            )));
        }
        let r: Vec<f64> = (0..=n_r)
            .map(|i| {
                if i == n_r {
                    return 1.0;
                }
                let s = i as f64 / n_r as f64;
                s + grading * s * s * (1.0 - s)
            })
            .collect();
        let faces = (0..n_r).map(|i| 0.5 * (r[i] + r[i + 1])).collect();
        Ok(RadialGrid { r, faces })
    }

    fn n_r(&self) -> usize {
        self.r.len() - 1
    }

    fn inner_face(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.faces[i - 1]
        }
    }

    fn outer_face(&self, i: usize) -> f64 {
        if i == self.n_r() {
            1.0
        } else {
            self.faces[i]
        }
    }

    /// `∫ r dr` over the control volume of node `i`.
    fn volume(&self, i: usize) -> f64 {
        let (a, b) = (self.inner_face(i), self.outer_face(i));
        0.5 * (b * b - a * a)
    }

    /// Radial extent of the control volume.
    fn extent(&self, i: usize) -> f64 {
        self.outer_face(i) - self.inner_face(i)
    }

    /// Flux weight `r_{i+½}/(r_{i+1} − r_i)` of the face between `i` and `i+1`.
    fn flux(&self, i: usize) -> f64 {
        self.faces[i] / (self.r[i + 1] - self.r[i])
    }
}

fn axial_volume(j: usize, hz: f64) -> f64 {
    if j == 0 {
        0.5 * hz
    } else {
        hz
    }
}

/// Symmetric assembly helper that drops couplings to eliminated nodes.
struct Assembler {
    triplets: Vec<(usize, usize, f64)>,
}

impl Assembler {
    fn edge(&mut self, a: Option<usize>, b: Option<usize>, w: f64) {
        match (a, b) {
            (Some(a), Some(b)) => {
                self.triplets.push((a, a, w));
                self.triplets.push((b, b, w));
                self.triplets.push((a, b, -w));
                self.triplets.push((b, a, -w));
            }
            (Some(a), None) | (None, Some(a)) => self.triplets.push((a, a, w)),
            (None, None) => {}
        }
    }

    fn diag(&mut self, a: Option<usize>, w: f64) {
        if let Some(a) = a {
            self.triplets.push((a, a, w));
        }
    }
}

/// Smallest axial interval count meeting the strip-resolution rule.
pub fn required_axial_intervals(profile: &StripProfile) -> usize {
    let (g_min, _) = profile.g.bounds();
    let half_width = profile.epsilon() * profile.eta * g_min;
    (MIN_NODES_PER_HALF_WIDTH * profile.height / half_width).ceil() as usize
}

/// `(128, 64N)` with the default grading, see [`mode_grid_for`].
pub fn default_mode_grid(profile: &StripProfile) -> ModeGrid {
    mode_grid_for(
        profile,
        DEFAULT_RADIAL_INTERVALS,
        DEFAULT_AXIAL_PER_STRIP,
        DEFAULT_RADIAL_GRADING,
    )
}

/// `(n_r, per_strip·N)`, with `n_x₃` raised to the next multiple of `N` when
/// narrow strips need more nodes.
pub fn mode_grid_for(profile: &StripProfile, n_r: usize, per_strip: usize, radial_grading: f64) -> ModeGrid {
    let n = profile.n_strips.max(1) as usize;
    let mut n_x3 = per_strip * n;
    let need = required_axial_intervals(profile);
    if n_x3 < need {
        n_x3 = need.div_ceil(n) * n;
    }
    ModeGrid {
        n_r,
        n_x3,
        radial_grading,
    }
}

fn check_resolution(profile: &StripProfile, n_x3: usize) -> Result<()> {
    let need = required_axial_intervals(profile);
    if n_x3 < need {
        return Err(Error::Resolution(format!(
            "n_x3 = {n_x3} puts fewer than {MIN_NODES_PER_HALF_WIDTH} nodes across the strip half-width; need n_x3 >= {need}"
        )));
    }
    Ok(())
}

fn check_grid(n_r: usize, n_x3: usize) -> Result<()> {
    if n_r < 2 || n_x3 < 2 {
        return Err(Error::domain(format!(
            "grid needs at least 2 intervals per direction, got ({n_r}, {n_x3})"
        )));
    }
    Ok(())
}

/// Angular harmonic `n` of the mixed problem with θ-independent strips.
pub fn build_mode_reduced(profile: &StripProfile, n: u32, grid: ModeGrid) -> Result<DiscreteOperator> {
    profile.validate()?;
    if !profile.g.is_constant() {
        return Err(Error::domain(
            "angular separation needs a theta-independent width; use build_full3d",
        ));
    }
    check_grid(grid.n_r, grid.n_x3)?;
    check_resolution(profile, grid.n_x3)?;
    let mask = StripMask::from_profile(profile, 1, grid.n_x3);
    build_mode_reduced_masked(&mask, profile.height, n, grid)
}

/// All-Dirichlet lateral surface: the limiting operator on the same grid.
pub fn limiting_operator(height: f64, n: u32, grid: ModeGrid) -> Result<DiscreteOperator> {
    check_grid(grid.n_r, grid.n_x3)?;
    let mask = StripMask::uniform(BoundaryTag::Dirichlet, 1, grid.n_x3);
    build_mode_reduced_masked(&mask, height, n, grid)
}

/// Mode-reduced operator for an explicit lateral mask (only column `k = 0`
/// of the mask is read).
pub fn build_mode_reduced_masked(mask: &StripMask, height: f64, n: u32, grid: ModeGrid) -> Result<DiscreteOperator> {
    let ModeGrid {
        n_r,
        n_x3,
        radial_grading,
    } = grid;
    check_grid(n_r, n_x3)?;
    let rg = RadialGrid::new(n_r, radial_grading)?;
    if mask.n_x3() != n_x3 {
        return Err(Error::domain("mask and grid disagree on n_x3"));
    }
    if !(height > 0.0) {
        return Err(Error::domain("height must be positive"));
    }
    let hz = height / n_x3 as f64;
    let i_min = usize::from(n > 0);
    let nn = (n as f64).powi(2);

    // z-major numbering keeps the half bandwidth at one radial line
    let mut index = vec![None; (n_r + 1) * (n_x3 + 1)];
    let mut nodes = Vec::new();
    let mut lateral_dirichlet = 0;
    for j in 0..n_x3 {
        for i in i_min..=n_r {
            if i == n_r && mask.is_dirichlet(0, j) {
                lateral_dirichlet += 1;
                continue;
            }
            index[j * (n_r + 1) + i] = Some(nodes.len());
            nodes.push(Node { i, k: 0, j });
        }
    }
    let at = |i: usize, j: usize| index[j * (n_r + 1) + i];

    let mut asm = Assembler {
        triplets: Vec::with_capacity(nodes.len() * 5),
    };
    let mut mass = Vec::with_capacity(nodes.len());
    for node in &nodes {
        mass.push(rg.volume(node.i) * axial_volume(node.j, hz));
    }
    for j in 0..n_x3 {
        let vz = axial_volume(j, hz);
        for i in 0..n_r {
            asm.edge(at(i, j), at(i + 1, j), rg.flux(i) * vz);
        }
        for i in 1..=n_r {
            asm.diag(at(i, j), nn * rg.extent(i) / rg.r[i] * vz);
        }
    }
    for j in 0..n_x3 {
        for i in 0..=n_r {
            asm.edge(at(i, j), at(i, j + 1), rg.volume(i) / hz);
        }
    }
    let stiffness = CsrMatrix::from_triplets(nodes.len(), asm.triplets);
    Ok(DiscreteOperator {
        stiffness,
        mass,
        meta: GridMeta::ModeReduced {
            n_r,
            n_x3,
            radial_grading,
            order: n,
        },
        nodes,
        lateral_dirichlet,
    })
}

/// Full polar-grid operator with a θ-dependent mask and the default cap.
pub fn build_full3d(profile: &StripProfile, grid: Full3dGrid) -> Result<DiscreteOperator> {
    build_full3d_with(profile, grid, FULL3D_UNKNOWN_CAP)
}

pub fn build_full3d_with(profile: &StripProfile, grid: Full3dGrid, cap: usize) -> Result<DiscreteOperator> {
    profile.validate()?;
    let Full3dGrid { n_r, n_theta, n_x3, .. } = grid;
    check_grid(n_r, n_x3)?;
    let rg = RadialGrid::new(n_r, grid.radial_grading)?;
    check_resolution(profile, n_x3)?;
    // the base period sets the rule; ExpCos is 2π/p-periodic
    let harmonic = match profile.g {
        WidthFunction::ExpCos { harmonic, .. } => harmonic as usize,
        _ => profile.g.fourier_index(),
    };
    if n_theta < 8 || (harmonic > 0 && n_theta < 8 * harmonic) {
        return Err(Error::Resolution(format!(
            "n_theta = {n_theta} gives fewer than 8 nodes per period of the width harmonic {harmonic}"
        )));
    }
    let unknowns = n_x3 * (1 + n_r * n_theta);
    if unknowns > cap {
        return Err(Error::MemoryGuard { unknowns, cap });
    }
    let mask = StripMask::from_profile(profile, n_theta, n_x3);
    Ok(assemble_full3d(&mask, &rg, profile.height, grid))
}

/// All-Dirichlet lateral surface on a full polar grid.
pub fn limiting_full3d(height: f64, grid: Full3dGrid) -> Result<DiscreteOperator> {
    check_grid(grid.n_r, grid.n_x3)?;
    let rg = RadialGrid::new(grid.n_r, grid.radial_grading)?;
    let mask = StripMask::uniform(BoundaryTag::Dirichlet, grid.n_theta, grid.n_x3);
    Ok(assemble_full3d(&mask, &rg, height, grid))
}

fn assemble_full3d(mask: &StripMask, rg: &RadialGrid, height: f64, grid: Full3dGrid) -> DiscreteOperator {
    let Full3dGrid {
        n_r,
        n_theta,
        n_x3,
        radial_grading,
    } = grid;
    let ht = TAU / n_theta as f64;
    let hz = height / n_x3 as f64;
    let layer = 1 + n_r * n_theta;
    let mut index = vec![None; layer * (n_x3 + 1)];
    let slot = |i: usize, k: usize| if i == 0 { 0 } else { 1 + (i - 1) * n_theta + k };
    let mut nodes = Vec::new();
    let mut lateral_dirichlet = 0;
    for j in 0..n_x3 {
        for i in 0..=n_r {
            let ks = if i == 0 { 1 } else { n_theta };
            for k in 0..ks {
                if i == n_r && mask.is_dirichlet(k, j) {
                    lateral_dirichlet += 1;
                    continue;
                }
                index[j * layer + slot(i, k)] = Some(nodes.len());
                nodes.push(Node { i, k, j });
            }
        }
    }
    let at = |i: usize, k: usize, j: usize| index[j * layer + slot(i, k)];
    let area = |i: usize| if i == 0 { TAU * rg.volume(0) } else { rg.volume(i) * ht };

    let mut asm = Assembler {
        triplets: Vec::with_capacity(nodes.len() * 7),
    };
    let mass: Vec<f64> = nodes.iter().map(|nd| area(nd.i) * axial_volume(nd.j, hz)).collect();
    for j in 0..n_x3 {
        let vz = axial_volume(j, hz);
        for k in 0..n_theta {
            asm.edge(at(0, 0, j), at(1, k, j), rg.flux(0) * ht * vz);
            for i in 1..n_r {
                asm.edge(at(i, k, j), at(i + 1, k, j), rg.flux(i) * ht * vz);
            }
            for i in 1..=n_r {
                let w = rg.extent(i) / (rg.r[i] * ht) * vz;
                asm.edge(at(i, k, j), at(i, (k + 1) % n_theta, j), w);
            }
        }
    }
    for j in 0..n_x3 {
        asm.edge(at(0, 0, j), at(0, 0, j + 1), area(0) / hz);
        for i in 1..=n_r {
            for k in 0..n_theta {
                asm.edge(at(i, k, j), at(i, k, j + 1), area(i) / hz);
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(nodes.len(), asm.triplets);
    DiscreteOperator {
        stiffness,
        mass,
        meta: GridMeta::Full3d {
            n_r,
            n_theta,
            n_x3,
            radial_grading,
        },
        nodes,
        lateral_dirichlet,
    }
}

/// Discrete limiting eigenvalue with its radial index `k ≥ 1` and axial
/// index `m ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitingEigenvalue {
    pub value: f64,
    pub k: u32,
    pub m: u32,
}

/// Radial factor of the limiting operator as a symmetric tridiagonal matrix
/// `M_r^{-1/2} K_r M_r^{-1/2}` on the rings `i_min..n_r`.
fn radial_tridiagonal(n: u32, rg: &RadialGrid) -> (Vec<f64>, Vec<f64>) {
    let n_r = rg.n_r();
    let i_min = usize::from(n > 0);
    let nn = (n as f64).powi(2);
    let rows: Vec<usize> = (i_min..n_r).collect();
    let mut diag = vec![0.0; rows.len()];
    let mut off = vec![0.0; rows.len().saturating_sub(1)];
    for (p, &i) in rows.iter().enumerate() {
        let mut d = rg.flux(i) / rg.volume(i);
        if i > 0 {
            d += rg.flux(i - 1) / rg.volume(i);
            d += nn * rg.extent(i) / rg.r[i] / rg.volume(i);
        }
        diag[p] = d;
        if p + 1 < rows.len() {
            off[p] = -rg.flux(i) / (rg.volume(i) * rg.volume(i + 1)).sqrt();
        }
    }
    (diag, off)
}

/// Axial factor: Neumann half cell at 0, Dirichlet at `H`; the discrete
/// cosines `cos((m+½)πx₃/H)` are exact eigenvectors.
fn axial_eigenvalue(m: u32, height: f64, n_x3: usize) -> f64 {
    let hz = height / n_x3 as f64;
    let w = (m as f64 + 0.5) * PI / height;
    (2.0 / hz * (0.5 * w * hz).sin()).powi(2)
}

/// The `count` smallest discrete limiting eigenvalues of harmonic `n`, using
/// the tensor structure `λ = μ_r(k) + μ_z(m)` of the all-Dirichlet operator.
pub fn solve_limiting_labelled(height: f64, n: u32, grid: ModeGrid, count: usize) -> Result<Vec<LimitingEigenvalue>> {
    check_grid(grid.n_r, grid.n_x3)?;
    if !(height > 0.0 && height.is_finite()) {
        return Err(Error::domain(format!("height must be positive, got {height}")));
    }
    let (diag, off) = radial_tridiagonal(n, &RadialGrid::new(grid.n_r, grid.radial_grading)?);
    let kmax = count.min(diag.len());
    let mmax = count.min(grid.n_x3);
    let radial: Vec<f64> = (1..=kmax).map(|k| tridiagonal_eigenvalue(&diag, &off, k)).collect();
    let axial: Vec<f64> = (0..mmax)
        .map(|m| axial_eigenvalue(m as u32, height, grid.n_x3))
        .collect();
    let mut all = Vec::with_capacity(kmax * mmax);
    for (k, mr) in radial.iter().enumerate() {
        for (m, mz) in axial.iter().enumerate() {
            all.push(LimitingEigenvalue {
                value: mr + mz,
                k: k as u32 + 1,
                m: m as u32,
            });
        }
    }
    all.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.k.cmp(&b.k)));
    all.truncate(count);
    Ok(all)
}

pub fn solve_limiting(height: f64, n: u32, grid: ModeGrid, count: usize) -> Result<Vec<f64>> {
    Ok(solve_limiting_labelled(height, n, grid, count)?
        .into_iter()
        .map(|e| e.value)
        .collect())
}
