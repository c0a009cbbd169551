//! Global assembly and the constrained linear solve.

use nalgebra::{DMatrix, DVector, Matrix6};
use rayon::prelude::*;

use super::boundary::BoundaryConditions;
use super::integration::{build_integration, IntegrationPoint};
use super::mesh::Mesh;
use super::sparse::{CsrMatrix, LinearSolver};
use crate::error::{Error, Result};
use crate::tensor::SymTensor3;

/// A mesh together with its quadrature points and stiffness sparsity.
#[derive(Clone, Debug)]
pub struct FeSpace {
    mesh: Mesh,
    points: Vec<IntegrationPoint>,
    pattern: CsrMatrix,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let points = build_integration(&mesh)?;
        let ndof = 3 * mesh.node_count();
        let mut groups: Vec<&[usize]> = Vec::new();
        let mut last = usize::MAX;
        for p in &points {
            if p.element != last {
                groups.push(&p.dofs);
                last = p.element;
            }
        }
        let pattern = CsrMatrix::from_couplings(ndof, groups);
        Ok(FeSpace {
            mesh,
            points,
            pattern,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn points(&self) -> &[IntegrationPoint] {
        &self.points
    }

    pub fn ndof(&self) -> usize {
        3 * self.mesh.node_count()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.weight).collect()
    }

    /// `Σ w Bᵀ C B` with one Voigt tangent per integration point.
    pub fn stiffness(&self, tangents: &[Matrix6<f64>]) -> CsrMatrix {
        assert_eq!(tangents.len(), self.points.len());
        let locals: Vec<DMatrix<f64>> = self
            .points
            .par_iter()
            .zip(tangents.par_iter())
            .map(|(p, c)| {
                let cb = DMatrix::from_fn(6, 6, |i, j| c[(i, j)]) * &p.b;
                p.b.transpose() * cb * p.weight
            })
            .collect();
        let mut k = self.pattern.clone();
        for (p, ke) in self.points.iter().zip(&locals) {
            for (a, &ga) in p.dofs.iter().enumerate() {
                for (b, &gb) in p.dofs.iter().enumerate() {
                    k.add(ga, gb, ke[(a, b)]);
                }
            }
        }
        k
    }

    /// `Σ w Bᵀ s` for one stress-like tensor per point.
    pub fn integrate_stress(&self, stresses: &[SymTensor3]) -> Vec<f64> {
        assert_eq!(stresses.len(), self.points.len());
        let mut f = vec![0.0; self.ndof()];
        for (p, s) in self.points.iter().zip(stresses) {
            let v = s.to_voigt_stress();
            let fe = p.b.transpose() * DVector::from_column_slice(v.as_slice()) * p.weight;
            for (a, &g) in p.dofs.iter().enumerate() {
                f[g] += fe[a];
            }
        }
        f
    }

    pub fn strains(&self, u: &[f64]) -> Vec<SymTensor3> {
        self.points.par_iter().map(|p| p.strain(u)).collect()
    }

    /// Solves `K u = f − Σ w Bᵀ(σ̂ − C ε̂)` with the Dirichlet values of `bc`.
    pub fn solve_linearized(
        &self,
        tangents: &[Matrix6<f64>],
        anchors: &[(SymTensor3, SymTensor3)],
        bc: &BoundaryConditions,
        solver: &dyn LinearSolver,
    ) -> Result<Vec<f64>> {
        bc.validate(self.ndof())?;
        let k = self.stiffness(tangents);
        let offsets: Vec<SymTensor3> = anchors
            .iter()
            .zip(tangents)
            .map(|((eps, sig), c)| {
                *sig - SymTensor3::from_voigt_stress(&(c * eps.to_voigt_strain()))
            })
            .collect();
        let pre = self.integrate_stress(&offsets);
        let rhs: Vec<f64> = bc.force.iter().zip(&pre).map(|(f, p)| f - p).collect();
        solve_constrained(&k, &rhs, &bc.prescribed(), solver)
    }
}

/// Relative residual accepted on the free equations.
pub const SOLVE_TOL: f64 = 1e-10;

/// Solves `K x = rhs` on the free dofs with `x` fixed on the prescribed ones.
pub fn solve_constrained(
    k: &CsrMatrix,
    rhs: &[f64],
    prescribed: &[(usize, f64)],
    solver: &dyn LinearSolver,
) -> Result<Vec<f64>> {
    let n = k.dim();
    let mut fixed = vec![None; n];
    for &(d, v) in prescribed {
        fixed[d] = Some(v);
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut x: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    if free.is_empty() {
        return Ok(x);
    }
    let kx = k.mul_vec(&x);
    let b: Vec<f64> = free.iter().map(|&i| rhs[i] - kx[i]).collect();
    let kff = k.submatrix(&free);
    let mut sol = solver.solve(&kff, &b)?;

    // one step of iterative refinement guards against round-off in
    // badly scaled systems
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = |s: &[f64]| -> Vec<f64> {
        kff.mul_vec(s).iter().zip(&b).map(|(a, c)| c - a).collect()
    };
    let mut r = residual(&sol);
    let mut rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rnorm > SOLVE_TOL * bnorm {
        let corr = solver.solve(&kff, &r)?;
        sol.iter_mut().zip(&corr).for_each(|(s, c)| *s += c);
        r = residual(&sol);
        rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    if rnorm > SOLVE_TOL * bnorm && bnorm > 0.0 {
        return Err(Error::LinearSolverDiverged {
            residual: rnorm / bnorm,
            iterations: 2,
        });
    }
    for (i, &g) in free.iter().enumerate() {
        x[g] = sol[i];
    }
    Ok(x)
}
