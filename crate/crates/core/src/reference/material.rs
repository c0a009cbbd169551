use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic elasto-plastic material with power-law isotropic hardening and
/// a tension/compression asymmetry ratio `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Material {
    /// Young's modulus.
    #[serde(rename = "E")]
    pub young: f64,
    #[serde(rename = "nu")]
    pub poisson: f64,
    /// Hardening modulus of the power law.
    #[serde(rename = "H")]
    pub hardening: f64,
    #[serde(rename = "sigma0")]
    pub sigma0: f64,
    /// Hardening exponent; the plastic strain enters as `ε̄p^(1/h)`.
    #[serde(rename = "h")]
    pub exponent: f64,
    /// Ratio of tensile to compressive yield stress.
    pub k: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            young: 3e10,
            poisson: 0.2,
            hardening: 2.5e9,
            sigma0: 3e8,
            exponent: 2.0,
            k: 0.75,
        }
    }
}

/// `1 − tan(30°)/3`, applied to the hardening law as is.
pub fn yield_prefactor() -> f64 {
    1.0 - (std::f64::consts::FRAC_PI_6).tan() / 3.0
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.young > 0.0 && self.young.is_finite()) {
            return bad("E must be positive");
        }
        if !(self.poisson > 0.0 && self.poisson < 0.5) {
            return bad("nu must lie in (0, 0.5)");
        }
        if !(self.hardening >= 0.0 && self.hardening.is_finite()) {
            return bad("H must be non-negative");
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad("sigma0 must be positive");
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return bad("h must be positive");
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad("k must be positive");
        }
        Ok(())
    }

    pub fn bulk(&self) -> f64 {
        self.young / (3.0 * (1.0 - 2.0 * self.poisson))
    }

    pub fn shear(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// Lamé constants `(λ, μ)`.
    pub fn lame(&self) -> (f64, f64) {
        let mu = self.shear();
        (self.bulk() - 2.0 * mu / 3.0, mu)
    }

    /// Current yield stress `σ_y(ε̄p)`.
    pub fn yield_stress(&self, eqps: f64) -> Result<f64> {
        if eqps < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "equivalent plastic strain must be non-negative, got {eqps:e}"
            )));
        }
        Ok(self.flow_stress(eqps))
    }

    pub(crate) fn flow_stress(&self, eqps: f64) -> f64 {
        let hardening = if self.hardening == 0.0 {
            0.0
        } else {
            self.hardening * eqps.max(0.0).powf(1.0 / self.exponent)
        };
        yield_prefactor() * (self.sigma0 + hardening)
    }

    /// `dσ_y/dε̄p`; infinite at zero plastic strain when `h > 1`.
    pub fn hardening_slope(&self, eqps: f64) -> f64 {
        if self.hardening == 0.0 {
            return 0.0;
        }
        let p = 1.0 / self.exponent;
        yield_prefactor() * self.hardening * p * eqps.max(0.0).powf(p - 1.0)
    }

    /// Initial yield stress `σ_y(0)`.
    pub fn initial_yield(&self) -> f64 {
        self.flow_stress(0.0)
    }
}

/// Isotropic elasticity `λ I⊗I + 2μ 𝕀` acting on Voigt strains.
pub fn elastic_voigt(lambda: f64, mu: f64) -> Matrix6<f64> {
    let mut c = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = lambda;
        }
        c[(i, i)] += 2.0 * mu;
        c[(i + 3, i + 3)] = mu;
    }
    c
}

/// The same operator in Mandel coordinates.
pub fn elastic_mandel(lambda: f64, mu: f64) -> Matrix6<f64> {
    let mut c = elastic_voigt(lambda, mu);
    for i in 3..6 {
        c[(i, i)] = 2.0 * mu;
    }
    c
}

/// Mandel shear weights `(1, 1, 1, √2, √2, √2)`.
pub(crate) const MANDEL_WEIGHTS: [f64; 6] = [
    1.0,
    1.0,
    1.0,
    std::f64::consts::SQRT_2,
    std::f64::consts::SQRT_2,
    std::f64::consts::SQRT_2,
];

/// Converts a stiffness from Mandel to Voigt (engineering-strain) form.
pub fn mandel_to_voigt(m: &Matrix6<f64>) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| m[(i, j)] / (MANDEL_WEIGHTS[i] * MANDEL_WEIGHTS[j]))
}

pub fn voigt_to_mandel(v: &Matrix6<f64>) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| v[(i, j)] * MANDEL_WEIGHTS[i] * MANDEL_WEIGHTS[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SymTensor3;
    use approx::assert_relative_eq;

    #[test]
    fn table_one_initial_yield() {
        let m = Material::default();
        assert_relative_eq!(yield_prefactor(), 0.807_549_910_270_125_6, epsilon = 1e-15);
        assert_relative_eq!(m.initial_yield(), 2.4226e8, max_relative = 1e-4);
        let hardened = m.yield_stress(0.01).unwrap();
        assert_relative_eq!(hardened, yield_prefactor() * (3e8 + 2.5e8), max_relative = 1e-14);
        assert!(m.yield_stress(-1e-3).is_err());
    }

    #[test]
    fn perfect_plasticity_is_flat() {
        let m = Material {
            hardening: 0.0,
            ..Material::default()
        };
        assert_eq!(m.yield_stress(0.5).unwrap(), m.initial_yield());
        assert_eq!(m.hardening_slope(0.5), 0.0);
    }

    #[test]
    fn hardening_slope_matches_difference() {
        let m = Material::default();
        let e = 0.004;
        let h = 1e-8;
        let fd = (m.flow_stress(e + h) - m.flow_stress(e - h)) / (2.0 * h);
        assert_relative_eq!(m.hardening_slope(e), fd, max_relative = 1e-6);
    }

    #[test]
    fn elastic_operator_is_hooke() {
        let m = Material::default();
        let (l, mu) = m.lame();
        let c = elastic_voigt(l, mu);
        // uniaxial stress strain state
        let eps = SymTensor3::diag(1e-3, -m.poisson * 1e-3, -m.poisson * 1e-3);
        let sig = c * eps.to_voigt_strain();
        assert_relative_eq!(sig[0], m.young * 1e-3, max_relative = 1e-12);
        assert!(sig[1].abs() < 1e-3);
        let shear = SymTensor3::new(0.0, 0.0, 0.0, 1e-3, 0.0, 0.0);
        let sig = c * shear.to_voigt_strain();
        assert_relative_eq!(sig[3], 2.0 * mu * 1e-3, max_relative = 1e-12);
        let back = mandel_to_voigt(&elastic_mandel(l, mu));
        assert_relative_eq!(back, c, max_relative = 1e-14);
        assert_relative_eq!(voigt_to_mandel(&c), elastic_mandel(l, mu), max_relative = 1e-14);
    }

    #[test]
    fn invalid_parameters_rejected() {
        for bad in [
            Material { young: 0.0, ..Material::default() },
            Material { poisson: 0.5, ..Material::default() },
            Material { hardening: -1.0, ..Material::default() },
            Material { exponent: 0.0, ..Material::default() },
            Material { k: 0.0, ..Material::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(Material::default().validate().is_ok());
    }
}
