//! JSON run configuration. Every section rejects unknown keys, so a typo in
//! a config file fails before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::LoadingPlan;
use crate::error::{Error, Result};
use crate::fem::{box_mesh, quarter_plate, Axis, ElementOrder, Mesh, Plane, PlateSpec};
use crate::problem::{BoundarySpec, FaceDof, FaceTraction, LoadSegment, SolverOptions};
use crate::reference::Material;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSpec {
    Box {
        divisions: [usize; 3],
        size: [f64; 3],
        #[serde(default = "linear")]
        order: usize,
    },
    Plate {
        #[serde(default)]
        plate: PlateSpec,
        #[serde(default = "linear")]
        order: usize,
    },
    /// Mesh text file; the element order is taken from its header.
    File { path: PathBuf },
}

fn linear() -> usize {
    1
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec::Plate {
            plate: PlateSpec::default(),
            order: 1,
        }
    }
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        let with_order = |mesh: Mesh, order: usize| -> Result<Mesh> {
            match ElementOrder::from_degree(order)? {
                ElementOrder::Linear => Ok(mesh),
                ElementOrder::Quadratic => mesh.to_quadratic(),
            }
        };
        match self {
            MeshSpec::Box { divisions, size, order } => with_order(box_mesh(*divisions, *size)?, *order),
            MeshSpec::Plate { plate, order } => with_order(quarter_plate(plate)?, *order),
            MeshSpec::File { path } => Mesh::load(path),
        }
    }

    /// Short label used in study tables.
    pub fn label(&self, mesh: &Mesh) -> String {
        let kind = match self {
            MeshSpec::Box { .. } => "box",
            MeshSpec::Plate { .. } => "plate",
            MeshSpec::File { .. } => "file",
        };
        format!("{kind}-{}e-p{}", mesh.element_count(), mesh.order.degree())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSpec {
    /// Tension-torsion yield points.
    pub n1: usize,
    /// Records per tensile path.
    pub n2: usize,
    /// Tensile paths.
    pub n_p: usize,
    pub seed: u64,
    pub plan: LoadingPlan,
    /// Yield-surface interpolation: spline, linear or nearest.
    pub interpolation: String,
    /// Where `gen-data` writes and `run` reads the data files.
    pub dir: PathBuf,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            n1: 50,
            n2: 1000,
            n_p: 4,
            seed: 1,
            plan: LoadingPlan::default(),
            interpolation: "spline".into(),
            dir: PathBuf::from("data"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyGrid {
    pub n2: Vec<usize>,
    pub n_p: Vec<usize>,
    #[serde(default = "one_seed")]
    pub seeds: Vec<u64>,
}

fn one_seed() -> Vec<u64> {
    vec![1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub material: Material,
    pub mesh: MeshSpec,
    pub boundary: BoundarySpec,
    pub schedule: Vec<LoadSegment>,
    pub data: DataSpec,
    /// Sparse solver for the global systems: cholesky or cg.
    pub linear_solver: String,
    pub solver: String,
    pub options: SolverOptions,
    pub output: PathBuf,
    pub study: Option<StudyGrid>,
}

impl Default for RunConfig {
    /// The quarter plate with a hole: clamped symmetry faces, stretched along
    /// x and pressed on top, loaded, unloaded and reloaded.
    fn default() -> Self {
        let plate = PlateSpec::default();
        let face = |axis, at| Plane { axis, at };
        RunConfig {
            material: Material::default(),
            mesh: MeshSpec::default(),
            boundary: BoundarySpec {
                fixed: vec![
                    FaceDof { face: face(Axis::X, 0.0), dof: Axis::X },
                    FaceDof { face: face(Axis::Y, 0.0), dof: Axis::Y },
                    FaceDof { face: face(Axis::Z, 0.0), dof: Axis::Z },
                ],
                displacement: vec![FaceDof { face: face(Axis::X, plate.a), dof: Axis::X }],
                traction: vec![FaceTraction { face: face(Axis::Z, plate.c), direction: [0.0, 0.0, -1.0] }],
            },
            schedule: vec![
                LoadSegment { displacement: 0.03, traction: 3.0e7, steps: 20 },
                LoadSegment { displacement: 0.0, traction: 0.0, steps: 20 },
                LoadSegment { displacement: 0.04, traction: 3.5e7, steps: 20 },
            ],
            data: DataSpec::default(),
            linear_solver: "cholesky".into(),
            solver: "datadriven".into(),
            options: SolverOptions::default(),
            output: PathBuf::from("out"),
            study: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that need no file access or heavy computation.
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.schedule.is_empty() {
            return Err(Error::Config("the load schedule is empty".into()));
        }
        if let Some(s) = self.schedule.iter().find(|s| s.steps == 0) {
            return Err(Error::Config(format!("schedule segment {s:?} has zero steps")));
        }
        let d = &self.data;
        if d.n1 < 2 || d.n2 < 2 || d.n_p < 1 {
            return Err(Error::Config("need n1 >= 2, n2 >= 2 and n_p >= 1".into()));
        }
        if !crate::yield_surface::interp::available().contains(&d.interpolation.as_str()) {
            return Err(Error::UnknownStrategy {
                kind: "interpolation",
                name: d.interpolation.clone(),
                available: crate::yield_surface::interp::available().join(", "),
            });
        }
        if !crate::fem::available_solvers().contains(&self.linear_solver.as_str()) {
            return Err(Error::UnknownStrategy {
                kind: "linear solver",
                name: self.linear_solver.clone(),
                available: crate::fem::available_solvers().join(", "),
            });
        }
        if !crate::problem::available_solvers().contains(&self.solver.as_str()) {
            return Err(Error::UnknownStrategy {
                kind: "solver",
                name: self.solver.clone(),
                available: crate::problem::available_solvers().join(", "),
            });
        }
        let o = &self.options;
        if !(o.newton_tol > 0.0) || o.max_newton_iter == 0 {
            return Err(Error::Config("newton_tol and max_newton_iter must be positive".into()));
        }
        if let MeshSpec::Box { order, .. } | MeshSpec::Plate { order, .. } = &self.mesh {
            ElementOrder::from_degree(*order)?;
        }
        if let Some(g) = &self.study {
            if g.n2.is_empty() || g.n_p.is_empty() || g.seeds.is_empty() {
                return Err(Error::Config("every study axis needs at least one value".into()));
            }
            if g.n2.iter().any(|&n| n < 2) || g.n_p.contains(&0) {
                return Err(Error::Config("study needs n2 >= 2 and n_p >= 1".into()));
            }
        }
        Ok(())
    }
}
