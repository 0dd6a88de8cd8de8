//! Dirichlet/Neumann classification of the lateral boundary nodes.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::spectrum::StripProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

/// Tags of the `r = 1` nodes `(θ_k, x₃_j)`, `θ_k = 2πk/n_θ`, `x₃_j = jH/n_x₃`,
/// for `j = 0..=n_x₃`. Stored `j`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StripMask {
    n_theta: usize,
    n_x3: usize,
    tags: Vec<BoundaryTag>,
}

impl StripMask {
    /// Closed-strip rule: a node on a strip edge is Dirichlet.
    pub fn from_profile(profile: &StripProfile, n_theta: usize, n_x3: usize) -> Self {
        let n_theta = n_theta.max(1);
        let hz = profile.height / n_x3 as f64;
        let mut tags = Vec::with_capacity((n_x3 + 1) * n_theta);
        for j in 0..=n_x3 {
            for k in 0..n_theta {
                let theta = TAU * k as f64 / n_theta as f64;
                tags.push(if profile.on_strip(theta, j as f64 * hz) {
                    BoundaryTag::Dirichlet
                } else {
                    BoundaryTag::Neumann
                });
            }
        }
        StripMask { n_theta, n_x3, tags }
    }

    /// The same tag everywhere (the limiting problem is all Dirichlet).
    pub fn uniform(tag: BoundaryTag, n_theta: usize, n_x3: usize) -> Self {
        let n_theta = n_theta.max(1);
        StripMask {
            n_theta,
            n_x3,
            tags: vec![tag; (n_x3 + 1) * n_theta],
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_x3(&self) -> usize {
        self.n_x3
    }

    pub fn tag(&self, k: usize, j: usize) -> BoundaryTag {
        self.tags[j * self.n_theta + k]
    }

    pub fn is_dirichlet(&self, k: usize, j: usize) -> bool {
        self.tag(k, j) == BoundaryTag::Dirichlet
    }

    /// Share of Dirichlet nodes; tends to `(2η/π)·mean(g)` under refinement.
    pub fn dirichlet_fraction(&self) -> f64 {
        let d = self.tags.iter().filter(|&&t| t == BoundaryTag::Dirichlet).count();
        d as f64 / self.tags.len() as f64
    }
}
