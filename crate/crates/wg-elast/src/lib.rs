//! Weak Galerkin finite element solver for the two-dimensional linear
//! elasticity interface problem on polygonal meshes.
//!
//! The displacement is approximated by weak functions `{v_0, v_b}`: a
//! vector polynomial of degree `k` inside each cell plus an independent
//! trace value on each edge. Element-local weak divergence, gradient and
//! strain operators turn the elasticity bilinear form into a sparse SPD
//! system over the free degrees of freedom. A square inclusion
//! `(1/4,3/4)^2` carries its own Lame coefficients; displacement and
//! traction jumps across the inclusion boundary enter through affine
//! constraints and edge load terms.
//!
//! The crate ships a manufactured-solution harness (`cases`, `analysis`,
//! `driver`) that reproduces the convergence behaviour of the method on
//! uniform rectangular and degenerate-octagon meshes, and a small CLI
//! (`wg-elast`) that runs mesh-refinement sweeps and writes CSV tables
//! and legacy VTK files.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cases;
pub mod dofmap;
pub mod driver;
pub mod error;
pub mod mesh;
pub mod projection;
pub mod quadrature;
pub mod solve;
pub mod vtk;
pub mod weak_ops;

pub use error::Error;

/// 2D point / vector in domain units.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2x2 matrix (gradients, stresses).
pub type Mat2 = nalgebra::Matrix2<f64>;
