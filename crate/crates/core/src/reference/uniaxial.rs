//! Strain-driven uniaxial stress test: `ε11` is prescribed, the lateral
//! strains adjust so that the transverse stresses vanish.

use super::material::Material;
use super::plasticity::{return_map, PlasticState, StressUpdate};
use crate::error::{Error, Result};
use crate::tensor::SymTensor3;

/// One converged point of a uniaxial test.
#[derive(Clone, Copy, Debug)]
pub struct UniaxialPoint {
    pub eps11: f64,
    /// Lateral strain `ε22 = ε33`.
    pub eps22: f64,
    pub sig11: f64,
}

/// Material point under uniaxial stress, carried from step to step.
#[derive(Clone, Debug)]
pub struct UniaxialDriver {
    material: Material,
    state: PlasticState,
    lateral: f64,
}

impl UniaxialDriver {
    pub fn new(material: Material) -> Result<Self> {
        material.validate()?;
        Ok(UniaxialDriver {
            material,
            state: PlasticState::default(),
            lateral: 0.0,
        })
    }

    pub fn state(&self) -> &PlasticState {
        &self.state
    }

    /// Advances to axial strain `eps11` and commits the converged state.
    pub fn advance(&mut self, eps11: f64) -> Result<UniaxialPoint> {
        let m = &self.material;
        // elastic predictor for the lateral strain keeps Newton in range
        let mut lateral = self.lateral;
        let scale = m.sigma0;
        let mut update: Option<StressUpdate> = None;
        for _ in 0..50 {
            let eps = SymTensor3::diag(eps11, lateral, lateral);
            let up = return_map(&eps, &self.state, m)?;
            let r = 0.5 * (up.stress.0[1] + up.stress.0[2]);
            if r.abs() <= 1e-12 * scale {
                update = Some(up);
                break;
            }
            let slope = 0.5 * (up.tangent[(1, 1)] + up.tangent[(1, 2)] + up.tangent[(2, 1)] + up.tangent[(2, 2)]);
            if !(slope > 0.0) {
                return Err(Error::ReturnMapping(format!(
                    "non-positive lateral stiffness {slope:e} at axial strain {eps11:e}"
                )));
            }
            lateral -= r / slope;
        }
        let up = update.ok_or_else(|| {
            Error::ReturnMapping(format!("lateral equilibrium failed at axial strain {eps11:e}"))
        })?;
        self.state = up.state;
        self.lateral = lateral;
        Ok(UniaxialPoint {
            eps11,
            eps22: lateral,
            sig11: up.stress.0[0],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::brent;
    use approx::assert_relative_eq;

    /// Scalar tension model: `σ = E (ε − ε̄p / k)` and `σ = k σ_y(ε̄p)` once
    /// yielding, for monotone tension.
    fn scalar_tension(m: &Material, eps: f64) -> f64 {
        let elastic = m.young * eps;
        if elastic <= m.k * m.initial_yield() {
            return elastic;
        }
        let ep = brent(
            |ep| Ok(m.young * (eps - ep / m.k) - m.k * m.flow_stress(ep)),
            0.0,
            m.k * eps,
            0.0,
            1e-9,
            300,
        )
        .unwrap();
        m.k * m.flow_stress(ep)
    }

    #[test]
    fn elastic_path_is_hooke() {
        let m = Material::default();
        let mut d = UniaxialDriver::new(m).unwrap();
        for i in 1..=5 {
            let e = 1e-3 * i as f64;
            let p = d.advance(e).unwrap();
            assert_relative_eq!(p.sig11, m.young * e, max_relative = 1e-12);
            assert_relative_eq!(p.eps22, -m.poisson * e, max_relative = 1e-10);
        }
    }

    #[test]
    fn monotone_tension_matches_scalar_model() {
        for k in [0.75, 1.0] {
            let m = Material { k, ..Material::default() };
            let mut d = UniaxialDriver::new(m).unwrap();
            for i in 1..=40 {
                let e = 5e-4 * i as f64;
                let p = d.advance(e).unwrap();
                let oracle = scalar_tension(&m, e);
                assert_relative_eq!(p.sig11, oracle, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn unloading_is_elastic_with_permanent_set() {
        let m = Material::default();
        let mut d = UniaxialDriver::new(m).unwrap();
        let top = d.advance(0.015).unwrap();
        let down = d.advance(0.014).unwrap();
        assert_relative_eq!(top.sig11 - down.sig11, m.young * 0.001, max_relative = 1e-9);
        assert!(d.state().eqps > 0.0);
    }
}
