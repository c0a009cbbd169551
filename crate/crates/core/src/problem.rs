//! Boundary-value problem setup: boundary selections, the load schedule and
//! the solver interface shared by the data-driven and reference solvers.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dd::{DataDrivenMaterial, DataDrivenSolver};
use crate::error::{Error, Result};
use crate::fem::{linear_solver, traction_load, Axis, BoundaryConditions, Dirichlet, FeSpace, LinearSolver, Mesh, Plane};
use crate::reference::{Material, ReferenceSolver};
use crate::tensor::SymTensor3;

/// One displacement component on every node of a face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceDof {
    pub face: Plane,
    pub dof: Axis,
}

/// Uniform traction `amplitude · direction` on a face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceTraction {
    pub face: Plane,
    pub direction: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    /// Components held at zero.
    #[serde(default)]
    pub fixed: Vec<FaceDof>,
    /// Components following the scheduled displacement amplitude.
    #[serde(default)]
    pub displacement: Vec<FaceDof>,
    /// Tractions following the scheduled traction amplitude.
    #[serde(default)]
    pub traction: Vec<FaceTraction>,
}

/// Linear ramp from the previous load level to this one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSegment {
    pub displacement: f64,
    #[serde(default)]
    pub traction: f64,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoadLevel {
    pub displacement: f64,
    pub traction: f64,
}

/// Load levels of steps `1..=T`, starting from the unloaded state.
pub fn expand_schedule(segments: &[LoadSegment]) -> Result<Vec<LoadLevel>> {
    if segments.is_empty() {
        return Err(Error::Config("the load schedule is empty".into()));
    }
    let mut out = Vec::new();
    let mut from = LoadLevel::default();
    for (i, s) in segments.iter().enumerate() {
        if s.steps == 0 {
            return Err(Error::Config(format!("schedule segment {i} has zero steps")));
        }
        for k in 1..=s.steps {
            let t = k as f64 / s.steps as f64;
            out.push(LoadLevel {
                displacement: from.displacement + t * (s.displacement - from.displacement),
                traction: from.traction + t * (s.traction - from.traction),
            });
        }
        from = LoadLevel {
            displacement: s.displacement,
            traction: s.traction,
        };
    }
    Ok(out)
}

/// Boundary data resolved to global dofs.
#[derive(Clone, Debug)]
pub struct Loading {
    fixed: Vec<usize>,
    driven: Vec<usize>,
    unit_force: Vec<f64>,
}

impl Loading {
    pub fn compile(mesh: &Mesh, spec: &BoundarySpec) -> Result<Self> {
        let mut role: BTreeMap<usize, bool> = BTreeMap::new();
        let mut mark = |list: &[FaceDof], driven: bool| -> Result<()> {
            for fd in list {
                let nodes = fd.face.nodes(mesh);
                if nodes.is_empty() {
                    return Err(Error::Boundary(format!(
                        "no nodes on the plane {:?} = {}",
                        fd.face.axis, fd.face.at
                    )));
                }
                for n in nodes {
                    let dof = 3 * n + fd.dof.index();
                    if let Some(&prev) = role.get(&dof) {
                        if prev != driven {
                            return Err(Error::Boundary(format!(
                                "node {n} dof {:?} is both fixed and driven",
                                fd.dof
                            )));
                        }
                    }
                    role.insert(dof, driven);
                }
            }
            Ok(())
        };
        mark(&spec.fixed, false)?;
        mark(&spec.displacement, true)?;
        let mut unit_force = vec![0.0; 3 * mesh.node_count()];
        for t in &spec.traction {
            let f = traction_load(mesh, &t.face, t.direction)?;
            unit_force.iter_mut().zip(f).for_each(|(a, b)| *a += b);
        }
        Ok(Loading {
            fixed: role.iter().filter(|(_, &d)| !d).map(|(&k, _)| k).collect(),
            driven: role.iter().filter(|(_, &d)| d).map(|(&k, _)| k).collect(),
            unit_force,
        })
    }

    pub fn at(&self, level: LoadLevel) -> BoundaryConditions {
        let mut dirichlet: Vec<Dirichlet> = self
            .fixed
            .iter()
            .map(|&g| Dirichlet { node: g / 3, dof: g % 3, value: 0.0 })
            .chain(self.driven.iter().map(|&g| Dirichlet {
                node: g / 3,
                dof: g % 3,
                value: level.displacement,
            }))
            .collect();
        dirichlet.sort_by_key(|d| d.global_dof());
        BoundaryConditions {
            dirichlet,
            force: self.unit_force.iter().map(|f| f * level.traction).collect(),
        }
    }
}

/// Everything a solver needs to march through the load schedule.
pub struct Problem {
    pub space: FeSpace,
    pub loading: Loading,
    pub levels: Vec<LoadLevel>,
    pub material: Material,
    pub linear: Box<dyn LinearSolver>,
}

impl Problem {
    pub fn new(
        mesh: Mesh,
        boundary: &BoundarySpec,
        schedule: &[LoadSegment],
        material: Material,
        linear: &str,
    ) -> Result<Self> {
        material.validate()?;
        let loading = Loading::compile(&mesh, boundary)?;
        Ok(Problem {
            space: FeSpace::new(mesh)?,
            loading,
            levels: expand_schedule(schedule)?,
            material,
            linear: linear_solver(linear)?,
        })
    }

    pub fn steps(&self) -> usize {
        self.levels.len()
    }
}

/// Converged fields after one load step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub step: usize,
    pub level: LoadLevel,
    pub displacement: Vec<f64>,
    pub strain: Vec<SymTensor3>,
    pub stress: Vec<SymTensor3>,
    /// Running yield multiplier per point.
    pub hardening: Vec<f64>,
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;
    /// Marches through all load levels, handing each converged step to `sink`.
    fn run(&self, problem: &Problem, sink: &mut dyn FnMut(StepOutput) -> Result<()>) -> Result<()>;
}

pub fn run_collect(solver: &dyn Solver, problem: &Problem) -> Result<Vec<StepOutput>> {
    let mut out = Vec::with_capacity(problem.steps());
    solver.run(problem, &mut |s| {
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Relative force-residual tolerance of the reference Newton loop.
    pub newton_tol: f64,
    pub max_newton_iter: usize,
    /// How often a failing reference step may be halved.
    pub max_bisections: usize,
    /// Re-run the constraint projection after each data-driven step and
    /// check that the displacement does not move.
    pub verify_fixed_point: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            newton_tol: 1e-8,
            max_newton_iter: 30,
            max_bisections: 8,
            verify_fixed_point: false,
        }
    }
}

pub struct SolverContext {
    pub options: SolverOptions,
    pub data: Option<Arc<DataDrivenMaterial>>,
}

type Builder = fn(&SolverContext) -> Result<Box<dyn Solver>>;

const REGISTRY: &[(&str, Builder)] = &[
    ("datadriven", |ctx| {
        let data = ctx
            .data
            .clone()
            .ok_or_else(|| Error::Config("the data-driven solver needs a data set".into()))?;
        Ok(Box::new(DataDrivenSolver::new(data, ctx.options.verify_fixed_point)))
    }),
    ("reference", |ctx| Ok(Box::new(ReferenceSolver::new(ctx.options)))),
];

pub fn available_solvers() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn build_solver(name: &str, ctx: &SolverContext) -> Result<Box<dyn Solver>> {
    let (_, b) = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "solver",
            name: name.to_string(),
            available: available_solvers().join(", "),
        })?;
    b(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::box_mesh;

    #[test]
    fn schedule_is_piecewise_linear() {
        let levels = expand_schedule(&[
            LoadSegment { displacement: 1.0, traction: 2.0, steps: 2 },
            LoadSegment { displacement: 0.0, traction: 0.0, steps: 4 },
        ])
        .unwrap();
        assert_eq!(levels.len(), 6);
        assert_eq!(levels[0], LoadLevel { displacement: 0.5, traction: 1.0 });
        assert_eq!(levels[1], LoadLevel { displacement: 1.0, traction: 2.0 });
        assert_eq!(levels[3], LoadLevel { displacement: 0.5, traction: 1.0 });
        assert_eq!(levels[5], LoadLevel::default());
        assert!(expand_schedule(&[]).is_err());
        assert!(expand_schedule(&[LoadSegment { displacement: 1.0, traction: 0.0, steps: 0 }]).is_err());
    }

    #[test]
    fn conflicting_faces_rejected() {
        let mesh = box_mesh([1, 1, 1], [1.0, 1.0, 1.0]).unwrap();
        let x0 = Plane { axis: Axis::X, at: 0.0 };
        let spec = BoundarySpec {
            fixed: vec![FaceDof { face: x0, dof: Axis::X }],
            displacement: vec![FaceDof { face: x0, dof: Axis::X }],
            traction: vec![],
        };
        assert!(Loading::compile(&mesh, &spec).is_err());
        let missing = BoundarySpec {
            fixed: vec![FaceDof { face: Plane { axis: Axis::X, at: 3.0 }, dof: Axis::X }],
            ..BoundarySpec::default()
        };
        assert!(Loading::compile(&mesh, &missing).is_err());
    }

    #[test]
    fn loading_scales_with_level() {
        let mesh = box_mesh([1, 1, 1], [1.0, 1.0, 1.0]).unwrap();
        let spec = BoundarySpec {
            fixed: vec![FaceDof { face: Plane { axis: Axis::X, at: 0.0 }, dof: Axis::X }],
            displacement: vec![FaceDof { face: Plane { axis: Axis::X, at: 1.0 }, dof: Axis::X }],
            traction: vec![FaceTraction { face: Plane { axis: Axis::Z, at: 1.0 }, direction: [0.0, 0.0, -1.0] }],
        };
        let loading = Loading::compile(&mesh, &spec).unwrap();
        let bc = loading.at(LoadLevel { displacement: 0.2, traction: 10.0 });
        assert_eq!(bc.dirichlet.len(), 8);
        assert_eq!(bc.dirichlet.iter().filter(|d| d.value == 0.2).count(), 4);
        let fz: f64 = bc.force.iter().skip(2).step_by(3).sum();
        assert!((fz + 10.0).abs() < 1e-12);
    }
}
