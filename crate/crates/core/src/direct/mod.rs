//! Finite-volume discretisation of the mixed problem and of its Dirichlet
//! limit on the circular cylinder, and a shift-invert block eigensolver.
//!
//! Nodes sit on a uniform polar grid, `r_i = i h_r`, `x₃_j = j h_z`, so the
//! lateral surface and both ends are grid lines. Every node owns a control
//! volume (half cells on Neumann boundaries, a disk of radius `h_r/2` on the
//! axis). The stiffness matrix `K` collects face fluxes and is symmetric by
//! construction; the mass `M` is the diagonal of control volumes, so
//! `M⁻¹K` is symmetric after the similarity `M^{1/2}`. Dirichlet nodes are
//! removed after assembly: the mixed operator is a principal submatrix of the
//! Neumann one and contains the all-Dirichlet operator as a principal
//! submatrix, which gives `λ_ε^k ≤ λ₀^k` exactly on a shared grid.

mod dump;
mod eigen;
mod mask;
mod operator;

pub use dump::{read_eigenpairs, read_operator, write_eigenpairs, write_operator};
pub use eigen::{smallest_eigenpairs, smallest_eigenpairs_with, EigenOptions, EigenPair};
pub use mask::{BoundaryTag, StripMask};
pub use operator::{
    build_full3d, build_full3d_with, build_mode_reduced, build_mode_reduced_masked, default_mode_grid, limiting_full3d,
    limiting_operator, mode_grid_for, required_axial_intervals, solve_limiting, solve_limiting_labelled,
    DiscreteOperator, Full3dGrid, GridMeta, LimitingEigenvalue, ModeGrid, Node, DEFAULT_RADIAL_GRADING,
    DEFAULT_RADIAL_INTERVALS, FULL3D_UNKNOWN_CAP, MIN_NODES_PER_HALF_WIDTH,
};
