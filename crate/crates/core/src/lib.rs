//! Hierarchical subspace iteration for the lowest eigenpairs of
//! Laplace–Beltrami and Hamiltonian operators on triangle meshes.

pub mod applications;
pub mod baselines;
pub mod basis;
pub mod dense;
pub mod factor;
pub mod geodesics;
pub mod matrix_market;
pub mod mesh;
pub mod operators;
pub mod sampling;
pub mod shapes;
pub mod solver;
pub mod sparse;
