//! Synthetic measurement data: tension-torsion yield points, uniaxial
//! tensile paths and the increment set derived from them.

mod extended;
mod tensile;
mod torsion;

pub use extended::{build_extended, read_extended, write_extended, ExtDataPoint, ExtendedSet, Subset};
pub use tensile::{gen_tensile_paths, read_tensile, write_tensile, LoadingPlan, PathSegment, TensileRecord};
pub use torsion::{gen_tension_torsion, torsion_shear, TorsionYieldPoint};
