//! A 2D P1 finite-element engine for steady convection-diffusion-reaction
//! equations, with algebraically stabilized discretizations (BJK, MC, MUAS,
//! SMUAS, BBK), a residual-based a posteriori error estimator, and an
//! adaptive solve/estimate/mark/refine driver on red-green refined meshes.

pub mod adapt;
pub mod estimate;
pub mod geometry;
pub mod mesh;
pub mod nlsolve;
pub mod problems;
pub mod report;
pub mod space;
pub mod stabilize;

pub use geometry::Point2;
pub use mesh::{build_mesh, BoundaryKind, BoundarySpec, Mesh, MeshError};
