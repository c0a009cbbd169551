//! Data-driven solver: the constraint projection, the adapted data
//! projection in Haigh-Westergaard space and the load-step driver.
//!
//! Each material point carries a data anchor `(ε̂, σ̂)` and a tangent `C`.
//! The constraint projection solves the linearized equilibrium problem
//! around the anchors; the data projection then re-anchors every point at
//! its new state and picks the next tangent: elastic below the running yield
//! multiplier, softened along the yield-surface normal above it, with the
//! softening identified from the nearest tensile increment.

use std::sync::Arc;

use nalgebra::Matrix6;
use rayon::prelude::*;

use crate::data::{ExtDataPoint, ExtendedSet, Subset};
use crate::error::{Error, Result};
use crate::fem::{BoundaryConditions, FeSpace, LinearSolver};
use crate::problem::{Problem, Solver, StepOutput};
use crate::reference::elastic_voigt;
use crate::tensor::{haigh_westergaard, SymTensor3};
use crate::yield_surface::{yield_normal, FittedYield, YieldSurface};

/// Fitted yield surface, increment data and elastic constants.
#[derive(Debug)]
pub struct DataDrivenMaterial {
    pub surface: FittedYield,
    pub data: ExtendedSet,
    pub lambda: f64,
    pub mu: f64,
}

impl DataDrivenMaterial {
    pub fn new(surface: FittedYield, data: ExtendedSet, lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && 3.0 * lambda + 2.0 * mu > 0.0) {
            return Err(Error::InvalidParameter("elastic constants are not positive definite".into()));
        }
        Ok(DataDrivenMaterial {
            surface,
            data,
            lambda,
            mu,
        })
    }

    pub fn elastic(&self) -> Matrix6<f64> {
        elastic_voigt(self.lambda, self.mu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointState {
    pub strain: SymTensor3,
    pub stress: SymTensor3,
    pub anchor_strain: SymTensor3,
    pub anchor_stress: SymTensor3,
    /// Voigt tangent used by the next constraint projection.
    pub tangent: Matrix6<f64>,
    /// Running yield multiplier, at least 1.
    pub alpha_y: f64,
}

impl PointState {
    pub fn initial(elastic: Matrix6<f64>) -> Self {
        PointState {
            strain: SymTensor3::ZERO,
            stress: SymTensor3::ZERO,
            anchor_strain: SymTensor3::ZERO,
            anchor_stress: SymTensor3::ZERO,
            tangent: elastic,
            alpha_y: 1.0,
        }
    }
}

/// Identified plastic softening of one data increment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaFit {
    /// Accepted value, clamped to be non-negative.
    pub gamma: f64,
    /// Value before clamping.
    pub raw: f64,
    /// `‖R − (R:N) N‖ / ‖R‖`, zero when the data is consistent with the model.
    pub off_normal: f64,
}

impl GammaFit {
    pub fn clamped(&self) -> bool {
        self.raw < 0.0
    }
}

/// Least-squares `γ` in `Δσ̂ = C^el:Δε̂ − γ (N:Δε̂) N` for a unit normal `N`.
pub fn gamma_solve(
    deps: &SymTensor3,
    dsig: &SymTensor3,
    normal: &SymTensor3,
    lambda: f64,
    mu: f64,
) -> Result<GammaFit> {
    let elastic = lambda * deps.trace() * SymTensor3::IDENTITY + 2.0 * mu * *deps;
    let r = elastic - *dsig;
    let contraction = normal.ddot(deps);
    if contraction.abs() < 1e-14 * deps.norm() || deps.norm() == 0.0 {
        return Err(Error::IllPosedIdentification { contraction });
    }
    let rn = r.ddot(normal);
    let raw = rn / contraction;
    let rnorm = r.norm();
    let off_normal = if rnorm > 0.0 {
        (r - rn * *normal).norm() / rnorm
    } else {
        0.0
    };
    Ok(GammaFit {
        gamma: raw.max(0.0),
        raw,
        off_normal,
    })
}

/// `C^el − γ N⊗N` in Voigt form; rejected unless it stays positive definite.
pub fn softened_tangent(lambda: f64, mu: f64, gamma: f64, normal: &SymTensor3) -> Result<Matrix6<f64>> {
    let limit = 2.0 * mu;
    if !(gamma < limit) {
        return Err(Error::TangentNotPositive { gamma, limit });
    }
    let n = normal.to_voigt_stress();
    Ok(elastic_voigt(lambda, mu) - gamma * n * n.transpose())
}

/// Unit normal of a tensile data increment: the uniaxial deviator direction.
fn data_normal(material: &DataDrivenMaterial) -> Result<SymTensor3> {
    Ok(yield_normal(&SymTensor3::diag(1.0, 0.0, 0.0), &material.surface)?.tensor)
}

/// `γ` identified from one tensile increment.
pub fn identify(point: &ExtDataPoint, material: &DataDrivenMaterial) -> Result<GammaFit> {
    gamma_solve(
        &point.strain_increment(),
        &point.stress_increment(),
        &data_normal(material)?,
        material.lambda,
        material.mu,
    )
}

/// Counters reported by one data projection.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProjectionReport {
    pub yielding: usize,
    pub clamped: usize,
    /// Points above the yield level with no Lode angle, treated as elastic.
    pub degenerate: usize,
}

/// Updates strains and stresses from the linearized solve around the anchors.
pub fn project_c(
    space: &FeSpace,
    states: &mut [PointState],
    bc: &BoundaryConditions,
    solver: &dyn LinearSolver,
) -> Result<Vec<f64>> {
    let tangents: Vec<Matrix6<f64>> = states.iter().map(|s| s.tangent).collect();
    let anchors: Vec<(SymTensor3, SymTensor3)> =
        states.iter().map(|s| (s.anchor_strain, s.anchor_stress)).collect();
    let u = space.solve_linearized(&tangents, &anchors, bc, solver)?;
    let strains = space.strains(&u);
    states.par_iter_mut().zip(strains).for_each(|(s, eps)| {
        let d = (eps - s.anchor_strain).to_voigt_strain();
        s.strain = eps;
        s.stress = s.anchor_stress + SymTensor3::from_voigt_stress(&(s.tangent * d));
    });
    Ok(u)
}

fn project_point(state: &mut PointState, material: &DataDrivenMaterial, data_n: &SymTensor3) -> Result<ProjectionReport> {
    let mut report = ProjectionReport::default();
    let hw = haigh_westergaard(&state.stress);
    state.tangent = material.elastic();
    if !hw.degenerate {
        let alpha = hw.rho / material.surface.phi(hw.theta);
        if alpha > state.alpha_y {
            state.alpha_y = alpha;
            let closest = material.data.nearest(alpha, Subset::Inelastic)?;
            let fit = gamma_solve(
                &closest.strain_increment(),
                &closest.stress_increment(),
                data_n,
                material.lambda,
                material.mu,
            )?;
            let normal = yield_normal(&state.stress, &material.surface)?;
            state.tangent = softened_tangent(material.lambda, material.mu, fit.gamma, &normal.tensor)?;
            report.yielding = 1;
            report.clamped = fit.clamped() as usize;
        }
    } else if state.stress.max_abs() > 0.0 {
        report.degenerate = 1;
    }
    state.anchor_strain = state.strain;
    state.anchor_stress = state.stress;
    Ok(report)
}

/// Re-anchors every point at its current state and selects its next tangent.
pub fn project_d(states: &mut [PointState], material: &DataDrivenMaterial) -> Result<ProjectionReport> {
    let data_n = data_normal(material)?;
    states
        .par_iter_mut()
        .map(|s| project_point(s, material, &data_n))
        .try_reduce(ProjectionReport::default, |a, b| {
            Ok(ProjectionReport {
                yielding: a.yielding + b.yielding,
                clamped: a.clamped + b.clamped,
                degenerate: a.degenerate + b.degenerate,
            })
        })
}

/// Relative displacement change tolerated by the fixed-point check.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// Runs one load step: constraint projection, data projection and, when
/// `verify` is set, a second constraint projection that must not move `u`.
pub fn step(
    space: &FeSpace,
    states: &mut [PointState],
    material: &DataDrivenMaterial,
    bc: &BoundaryConditions,
    solver: &dyn LinearSolver,
    verify: bool,
) -> Result<(Vec<f64>, ProjectionReport, Option<f64>)> {
    let u = project_c(space, states, bc, solver)?;
    let report = project_d(states, material)?;
    let change = if verify {
        let mut probe = states.to_vec();
        let u2 = project_c(space, &mut probe, bc, solver)?;
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = u.iter().zip(&u2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Some(if norm > 0.0 { diff / norm } else { diff })
    } else {
        None
    };
    Ok((u, report, change))
}

pub struct DataDrivenSolver {
    material: Arc<DataDrivenMaterial>,
    verify: bool,
}

impl DataDrivenSolver {
    pub fn new(material: Arc<DataDrivenMaterial>, verify: bool) -> Self {
        DataDrivenSolver { material, verify }
    }
}

impl Solver for DataDrivenSolver {
    fn name(&self) -> &'static str {
        "datadriven"
    }

    fn run(&self, problem: &Problem, sink: &mut dyn FnMut(StepOutput) -> Result<()>) -> Result<()> {
        let mat = self.material.as_ref();
        let mut states = vec![PointState::initial(mat.elastic()); problem.space.points().len()];
        for (i, &level) in problem.levels.iter().enumerate() {
            let k = i + 1;
            let bc = problem.loading.at(level);
            let (u, _report, change) =
                step(&problem.space, &mut states, mat, &bc, problem.linear.as_ref(), self.verify)
                    .map_err(|e| e.at_step(k))?;
            if let Some(c) = change {
                if c > FIXED_POINT_TOL {
                    return Err(Error::FixedPointViolated { step: k, change: c });
                }
            }
            sink(StepOutput {
                step: k,
                level,
                displacement: u,
                strain: states.iter().map(|s| s.strain).collect(),
                stress: states.iter().map(|s| s.stress).collect(),
                hardening: states.iter().map(|s| s.alpha_y).collect(),
            })
            .map_err(|e| e.at_step(k))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_extended, gen_tensile_paths, LoadingPlan};
    use crate::reference::{Material, UniaxialDriver};
    use crate::yield_surface::{fit_yield, AnalyticYield};
    use approx::assert_relative_eq;

    fn von_mises_material(m: &Material, n2: usize) -> DataDrivenMaterial {
        let sy0 = m.initial_yield();
        let analytic = AnalyticYield::new(m.k, sy0).unwrap();
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_3 * (i as f64 + 0.5) / 20.0;
                (t, analytic.phi(t))
            })
            .collect();
        let surface = fit_yield(&pts, "spline").unwrap();
        let recs = gen_tensile_paths(n2, 1, m, &LoadingPlan::default()).unwrap();
        let data = build_extended(&recs, surface.phi(0.0)).unwrap();
        let (l, mu) = m.lame();
        DataDrivenMaterial::new(surface, data, l, mu).unwrap()
    }

    #[test]
    fn elastic_increment_gives_zero_gamma() {
        let (l, mu) = Material::default().lame();
        let deps = SymTensor3::diag(1e-4, -2e-5, -2e-5);
        let dsig = l * deps.trace() * SymTensor3::IDENTITY + 2.0 * mu * deps;
        let n = SymTensor3::diag(2.0, -1.0, -1.0) * (1.0 / 6f64.sqrt());
        let fit = gamma_solve(&deps, &dsig, &n, l, mu).unwrap();
        assert!(fit.gamma.abs() < 1e-6 * mu);
    }

    #[test]
    fn stiffer_than_elastic_is_clamped() {
        let (l, mu) = Material::default().lame();
        let deps = SymTensor3::diag(1e-4, -2e-5, -2e-5);
        let dsig = 1.5 * (l * deps.trace() * SymTensor3::IDENTITY + 2.0 * mu * deps);
        let n = SymTensor3::diag(2.0, -1.0, -1.0) * (1.0 / 6f64.sqrt());
        let fit = gamma_solve(&deps, &dsig, &n, l, mu).unwrap();
        assert!(fit.raw < 0.0);
        assert_eq!(fit.gamma, 0.0);
        assert!(fit.clamped());
    }

    #[test]
    fn orthogonal_increment_is_ill_posed() {
        let (l, mu) = Material::default().lame();
        let deps = SymTensor3::new(0.0, 0.0, 0.0, 1e-4, 0.0, 0.0);
        let n = SymTensor3::diag(2.0, -1.0, -1.0) * (1.0 / 6f64.sqrt());
        assert!(matches!(
            gamma_solve(&deps, &SymTensor3::ZERO, &n, l, mu),
            Err(Error::IllPosedIdentification { .. })
        ));
    }

    #[test]
    fn identified_tangent_reproduces_plastic_increments() {
        let m = Material::default();
        let mut driver = UniaxialDriver::new(m).unwrap();
        let mut prev = driver.advance(0.0).unwrap();
        let material = von_mises_material(&m, 50);
        for i in 1..=60 {
            let p = driver.advance(2.5e-4 * i as f64).unwrap();
            if driver.state().eqps > 0.0 && prev.sig11 >= m.k * m.initial_yield() {
                let deps = SymTensor3::diag(p.eps11 - prev.eps11, p.eps22 - prev.eps22, p.eps22 - prev.eps22);
                let dsig = SymTensor3::diag(p.sig11 - prev.sig11, 0.0, 0.0);
                let n = data_normal(&material).unwrap();
                let fit = gamma_solve(&deps, &dsig, &n, material.lambda, material.mu).unwrap();
                assert!(fit.gamma > 0.0);
                let c = softened_tangent(material.lambda, material.mu, fit.gamma, &n).unwrap();
                let pred = c * deps.to_voigt_strain();
                let err = (pred - dsig.to_voigt_stress()).norm() / dsig.norm();
                assert!(err <= 1e-6, "relative mismatch {err:e}");
            }
            prev = p;
        }
    }

    #[test]
    fn softening_beyond_shear_modulus_is_rejected() {
        let n = SymTensor3::diag(2.0, -1.0, -1.0) * (1.0 / 6f64.sqrt());
        assert!(softened_tangent(1.0, 1.0, 1.0, &n).is_ok());
        assert!(matches!(
            softened_tangent(1.0, 1.0, 2.0, &n),
            Err(Error::TangentNotPositive { .. })
        ));
        let c = softened_tangent(1.0, 1.0, 1.9, &n).unwrap();
        assert!(c.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
    }

    #[test]
    fn data_projection_rules() {
        let m = Material::default();
        let material = von_mises_material(&m, 200);
        let sy0 = m.initial_yield();
        let mut states = vec![PointState::initial(material.elastic()); 3];
        // inside, just beyond yield in tension, and hydrostatic
        states[0].stress = SymTensor3::diag(0.5 * m.k * sy0, 0.0, 0.0);
        states[1].stress = SymTensor3::diag(1.05 * m.k * sy0, 0.0, 0.0);
        states[2].stress = SymTensor3::diag(1e9, 1e9, 1e9);
        let report = project_d(&mut states, &material).unwrap();
        assert_eq!(report.yielding, 1);
        assert_eq!(states[0].tangent, material.elastic());
        assert_eq!(states[0].alpha_y, 1.0);
        assert_relative_eq!(states[1].alpha_y, 1.05, max_relative = 1e-3);
        assert!(states[1].tangent[(0, 0)] < material.elastic()[(0, 0)]);
        assert_eq!(states[2].tangent, material.elastic());
        for s in &states {
            assert_eq!(s.anchor_stress, s.stress);
        }
        // unloading below the running multiplier goes back to elastic
        states[1].stress = SymTensor3::diag(0.9 * m.k * sy0, 0.0, 0.0);
        project_d(&mut states, &material).unwrap();
        assert_eq!(states[1].tangent, material.elastic());
        assert_relative_eq!(states[1].alpha_y, 1.05, max_relative = 1e-3);
    }

    #[test]
    fn uniaxial_plastic_tangent_matches_consistent_tangent() {
        // just past yield with dense data the softened tangent reproduces the
        // reference uniaxial slope
        let m = Material { k: 1.0, ..Material::default() };
        let material = von_mises_material(&m, 4000);
        let mut driver = UniaxialDriver::new(m).unwrap();
        let mut last = driver.advance(0.0).unwrap();
        for i in 1..=300 {
            let p = driver.advance(1e-4 * i as f64).unwrap();
            if i == 300 {
                let mut state = PointState::initial(material.elastic());
                state.stress = SymTensor3::diag(p.sig11, 0.0, 0.0);
                project_d(std::slice::from_mut(&mut state), &material).unwrap();
                let compliance = state.tangent.try_inverse().unwrap();
                let dd_slope = 1.0 / compliance[(0, 0)];
                let ref_slope = (p.sig11 - last.sig11) / (p.eps11 - last.eps11);
                assert_relative_eq!(dd_slope, ref_slope, max_relative = 2e-2);
            }
            last = p;
        }
    }
}
