//! Full-field reference solution: global Newton iterations on the
//! consistent tangent, with recursive step halving when a step fails.

use nalgebra::Matrix6;
use rayon::prelude::*;

use super::material::Material;
use super::plasticity::{return_map, PlasticState, StressUpdate};
use crate::error::{Error, Result};
use crate::fem::solve_constrained;
use crate::problem::{LoadLevel, Problem, Solver, SolverOptions, StepOutput};
use crate::tensor::SymTensor3;

pub struct ReferenceSolver {
    options: SolverOptions,
}

impl ReferenceSolver {
    pub fn new(options: SolverOptions) -> Self {
        ReferenceSolver { options }
    }
}

/// Converged global state between load levels.
#[derive(Clone)]
struct Equilibrium {
    level: LoadLevel,
    u: Vec<f64>,
    states: Vec<PlasticState>,
    updates: Vec<StressUpdate>,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn lerp(a: LoadLevel, b: LoadLevel, t: f64) -> LoadLevel {
    LoadLevel {
        displacement: a.displacement + t * (b.displacement - a.displacement),
        traction: a.traction + t * (b.traction - a.traction),
    }
}

fn evaluate(problem: &Problem, u: &[f64], states: &[PlasticState], material: &Material) -> Result<Vec<StressUpdate>> {
    let strains = problem.space.strains(u);
    strains
        .par_iter()
        .zip(states.par_iter())
        .map(|(e, s)| return_map(e, s, material))
        .collect()
}

impl ReferenceSolver {
    /// Newton iterations from `from` to `target`; `None` when they stall.
    fn newton(&self, problem: &Problem, from: &Equilibrium, target: LoadLevel) -> Result<Option<Equilibrium>> {
        let bc = problem.loading.at(target);
        let prescribed = bc.prescribed();
        let mut is_fixed = vec![false; problem.space.ndof()];
        for &(d, _) in &prescribed {
            is_fixed[d] = true;
        }
        let f_ext_norm = norm(bc.force.iter().copied());

        let mut u = from.u.clone();
        let mut updates = from.updates.clone();
        for iter in 0..=self.options.max_newton_iter {
            let stresses: Vec<SymTensor3> = updates.iter().map(|p| p.stress).collect();
            let f_int = problem.space.integrate_stress(&stresses);
            let residual: Vec<f64> = bc.force.iter().zip(&f_int).map(|(f, i)| f - i).collect();
            let free_res = norm(residual.iter().zip(&is_fixed).filter(|(_, &f)| !f).map(|(r, _)| *r));
            let scale = f_ext_norm.max(norm(f_int.iter().copied()));
            if iter > 0 && free_res <= self.options.newton_tol * scale {
                return Ok(Some(Equilibrium {
                    level: target,
                    u,
                    states: updates.iter().map(|p| p.state).collect(),
                    updates,
                }));
            }
            if iter == self.options.max_newton_iter || !free_res.is_finite() {
                break;
            }
            let tangents: Vec<Matrix6<f64>> = updates.iter().map(|p| p.tangent).collect();
            let k = problem.space.stiffness(&tangents);
            // the first iteration carries the whole Dirichlet increment
            let increments: Vec<(usize, f64)> = prescribed
                .iter()
                .map(|&(d, v)| (d, if iter == 0 { v - u[d] } else { 0.0 }))
                .collect();
            let du = match solve_constrained(&k, &residual, &increments, problem.linear.as_ref()) {
                Ok(du) => du,
                Err(Error::SingularSystem(_)) | Err(Error::LinearSolverDiverged { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
            updates = match evaluate(problem, &u, &from.states, &problem.material) {
                Ok(p) => p,
                Err(Error::ReturnMapping(_)) | Err(Error::RootSolve(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
        }
        Ok(None)
    }

    fn advance(&self, problem: &Problem, from: &Equilibrium, target: LoadLevel, depth: usize) -> Result<Equilibrium> {
        if let Some(eq) = self.newton(problem, from, target)? {
            return Ok(eq);
        }
        if depth >= self.options.max_bisections {
            let bc = problem.loading.at(target);
            let f = norm(bc.force.iter().copied());
            return Err(Error::NewtonDiverged {
                step: 0,
                residual: f,
            });
        }
        let mid = lerp(from.level, target, 0.5);
        let half = self.advance(problem, from, mid, depth + 1)?;
        self.advance(problem, &half, target, depth + 1)
    }
}

impl Solver for ReferenceSolver {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn run(&self, problem: &Problem, sink: &mut dyn FnMut(StepOutput) -> Result<()>) -> Result<()> {
        let material = &problem.material;
        let n = problem.space.points().len();
        let states = vec![PlasticState::default(); n];
        let u = vec![0.0; problem.space.ndof()];
        let updates = evaluate(problem, &u, &states, material)?;
        let mut eq = Equilibrium {
            level: LoadLevel::default(),
            u,
            states,
            updates,
        };
        let sy0 = material.yield_stress(0.0)?;
        for (i, &level) in problem.levels.iter().enumerate() {
            let k = i + 1;
            eq = self.advance(problem, &eq, level, 0).map_err(|e| match e {
                Error::NewtonDiverged { residual, .. } => Error::NewtonDiverged { step: k, residual },
                e => e.at_step(k),
            })?;
            let hardening = eq
                .states
                .iter()
                .map(|s| material.yield_stress(s.eqps).map(|y| y / sy0))
                .collect::<Result<Vec<f64>>>()?;
            sink(StepOutput {
                step: k,
                level,
                displacement: eq.u.clone(),
                strain: problem.space.strains(&eq.u),
                stress: eq.updates.iter().map(|p| p.stress).collect(),
                hardening,
            })
            .map_err(|e| e.at_step(k))?;
        }
        Ok(())
    }
}
