//! Small-strain finite elements on tetrahedral meshes.

mod assembly;
mod boundary;
mod integration;
mod mesh;
mod sparse;

pub use assembly::{solve_constrained, FeSpace, SOLVE_TOL};
pub use boundary::{traction_load, Axis, BoundaryConditions, Dirichlet, Plane};
pub use integration::{build_integration, IntegrationPoint};
pub use mesh::{box_mesh, quarter_plate, ElementOrder, Mesh, PlateSpec, EDGES, FACES};
pub use sparse::{
    available_solvers, linear_solver, reverse_cuthill_mckee, ConjugateGradient, CsrMatrix,
    LinearSolver, SkylineCholesky,
};
