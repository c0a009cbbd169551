//! Outward normal of the yield surface, first in principal stress space and
//! then rotated back to the Cartesian frame of the stress tensor.

use std::f64::consts::FRAC_PI_6;

use nalgebra::Vector3;

use super::YieldSurface;
use crate::error::{Error, Result};
use crate::tensor::{haigh_westergaard, principal_frame, PrincipalFrame, SymTensor3};

const SQRT_2_3: f64 = 0.816_496_580_927_726;

/// Tangents of the yield cylinder at Lode angle `theta`: the hydrostatic axis
/// `(1, 1, 1)` and the derivative of the deviatoric curve `s(θ)`.
pub fn octahedral_tangents(theta: f64, rho: f64, drho: f64) -> (Vector3<f64>, Vector3<f64>) {
    let t1 = Vector3::new(1.0, 1.0, 1.0);
    let two_thirds_pi = 2.0 * std::f64::consts::FRAC_PI_3;
    let w = Vector3::new(
        theta.cos(),
        (theta - two_thirds_pi).cos(),
        (theta + two_thirds_pi).cos(),
    );
    let dw = Vector3::new(
        -theta.sin(),
        -(theta - two_thirds_pi).sin(),
        -(theta + two_thirds_pi).sin(),
    );
    let t2 = SQRT_2_3 * (rho * dw + drho * w);
    (t1, t2)
}

/// Unit normal in principal stress space for a point with deviator `s`
/// (principal components) at radius `rho`, where `drho = dρ/dθ`.
pub fn normal_octahedral(theta: f64, rho: f64, drho: f64, s: &Vector3<f64>) -> Result<Vector3<f64>> {
    if !(rho > 0.0) {
        return Err(Error::DegenerateNormal);
    }
    let bend = Vector3::new(
        theta.sin(),
        -(FRAC_PI_6 - theta).cos(),
        (FRAC_PI_6 + theta).cos(),
    );
    let n = s + SQRT_2_3 * drho * bend;
    Ok(n / (rho * rho + drho * drho).sqrt())
}

/// `T · diag(N̂) · Tᵀ`.
pub fn normal_cartesian(n_hat: &Vector3<f64>, frame: &PrincipalFrame) -> SymTensor3 {
    frame.rotate_diagonal(n_hat)
}

#[derive(Clone, Copy, Debug)]
pub struct YieldNormal {
    /// Principal-space unit normal.
    pub principal: Vector3<f64>,
    /// Cartesian normal tensor, unit Frobenius norm.
    pub tensor: SymTensor3,
    pub theta: f64,
    /// Comparison stress of the state the normal was taken at.
    pub alpha: f64,
}

/// Normal to the yield surface scaled through the given stress state.
pub fn yield_normal(sigma: &SymTensor3, surface: &dyn YieldSurface) -> Result<YieldNormal> {
    let hw = haigh_westergaard(sigma);
    if hw.degenerate {
        return Err(Error::DegenerateNormal);
    }
    let frame = principal_frame(sigma);
    let mean = frame.values.iter().sum::<f64>() / 3.0;
    let s = Vector3::from(frame.values.map(|v| v - mean));
    let alpha = hw.rho / surface.phi(hw.theta);
    let drho = alpha * surface.dphi(hw.theta);
    let principal = normal_octahedral(hw.theta, hw.rho, drho, &s)?;
    Ok(YieldNormal {
        principal,
        tensor: normal_cartesian(&principal, &frame),
        theta: hw.theta,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::lode_direction;
    use crate::yield_surface::AnalyticYield;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_3;

    fn cross_oracle(theta: f64, rho: f64, drho: f64) -> Vector3<f64> {
        let (t1, t2) = octahedral_tangents(theta, rho, drho);
        let c = t1.cross(&t2);
        -c / c.norm()
    }

    #[test]
    fn von_mises_normal_is_deviator_direction() {
        let s = 2e8 * lode_direction(0.3);
        let n = normal_octahedral(0.3, 2e8, 0.0, &s).unwrap();
        assert_relative_eq!(n, s / 2e8, epsilon = 1e-14);
    }

    #[test]
    fn uniaxial_tension_von_mises() {
        let y = AnalyticYield::new(1.0, 3e8).unwrap();
        let n = yield_normal(&SymTensor3::diag(3e8, 0.0, 0.0), &y).unwrap();
        let r6 = 1.0 / 6f64.sqrt();
        assert_relative_eq!(n.principal, Vector3::new(2.0 * r6, -r6, -r6), epsilon = 1e-12);
        let expected = SymTensor3::diag(2.0 * r6, -r6, -r6);
        assert!((n.tensor - expected).norm() < 1e-12);
        assert_relative_eq!(n.alpha, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_radius_is_rejected() {
        assert!(matches!(
            normal_octahedral(0.0, 0.0, 0.0, &Vector3::zeros()),
            Err(Error::DegenerateNormal)
        ));
        let y = AnalyticYield::new(1.0, 3e8).unwrap();
        assert!(yield_normal(&SymTensor3::diag(1e8, 1e8, 1e8), &y).is_err());
    }

    #[test]
    fn identity_frame_gives_diagonal() {
        let frame = PrincipalFrame {
            values: [3.0, 2.0, 1.0],
            rotation: Matrix3::identity(),
        };
        let n = Vector3::new(0.5, -0.1, -0.4);
        assert_eq!(normal_cartesian(&n, &frame), SymTensor3::diag(0.5, -0.1, -0.4));
    }

    #[test]
    fn shear_state_normal_is_unit() {
        let y = AnalyticYield::new(0.75, 3e8).unwrap();
        let sigma = SymTensor3::new(1e8, 0.0, 0.0, 1.2e8, 0.0, 0.0);
        let n = yield_normal(&sigma, &y).unwrap();
        assert_relative_eq!(n.tensor.norm(), 1.0, epsilon = 1e-10);
        assert!(n.tensor.trace().abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn normal_matches_cross_product(theta in 1e-3..FRAC_PI_3 - 1e-3, alpha in 0.5f64..3.0) {
            let y = AnalyticYield::new(0.75, 3e8).unwrap();
            let rho = alpha * y.phi(theta);
            let drho = alpha * y.dphi(theta);
            let s = rho * lode_direction(theta);
            let n = normal_octahedral(theta, rho, drho, &s).unwrap();
            let oracle = cross_oracle(theta, rho, drho);
            prop_assert!((n - oracle).norm() < 1e-10);
            prop_assert!((n.norm() - 1.0).abs() < 1e-10);
            prop_assert!(n.sum().abs() < 1e-10);
            let (t1, t2) = octahedral_tangents(theta, rho, drho);
            let c = t1.cross(&t2).norm_squared();
            prop_assert!((c / (3.0 * (rho * rho + drho * drho)) - 1.0).abs() < 1e-9);
            prop_assert!(n.dot(&t1).abs() < 1e-9);
            prop_assert!((n.dot(&t2) / t2.norm()).abs() < 1e-9);
        }

        #[test]
        fn normal_orthogonal_to_finite_difference_tangent(theta in 1e-2..FRAC_PI_3 - 1e-2) {
            let y = AnalyticYield::new(0.75, 3e8).unwrap();
            let curve = |t: f64| y.phi(t) * lode_direction(t);
            let h = 1e-6;
            let tangent = (curve(theta + h) - curve(theta - h)) / (2.0 * h);
            let n = normal_octahedral(theta, y.phi(theta), y.dphi(theta), &curve(theta)).unwrap();
            prop_assert!((n.dot(&tangent) / tangent.norm()).abs() < 1e-7);
        }

        #[test]
        fn cartesian_normal_is_unit_and_traceless(
            c in proptest::array::uniform6(-3e8f64..3e8),
        ) {
            let sigma = SymTensor3(c);
            prop_assume!(haigh_westergaard(&sigma).rho > 1e6);
            let y = AnalyticYield::new(0.75, 3e8).unwrap();
            let n = yield_normal(&sigma, &y).unwrap();
            prop_assert!((n.tensor.norm() - 1.0).abs() < 1e-10);
            prop_assert!(n.tensor.trace().abs() < 1e-10);
        }
    }
}
