//! Variational problems on boundary pairs of weighted reflexive polytopes:
//! exact lattice geometry, boundary sampling, discrete c-transforms, two
//! transport solvers, and structure analysis of the minimizer.

pub mod analysis;
pub mod ctransform;
pub mod instance;
pub mod linalg;
pub mod mesh;
pub mod polytope;
pub mod report;
pub mod solver;
