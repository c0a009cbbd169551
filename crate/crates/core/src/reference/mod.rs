//! Classical elasto-plastic reference model and solver.

mod material;
mod plasticity;
mod solver;
mod uniaxial;

pub use material::{
    elastic_mandel, elastic_voigt, mandel_to_voigt, voigt_to_mandel, yield_prefactor, Material,
};
pub use plasticity::{return_map, yield_f, PlasticState, StressUpdate, YieldCriterion};
pub use solver::ReferenceSolver;
pub use uniaxial::{UniaxialDriver, UniaxialPoint};
