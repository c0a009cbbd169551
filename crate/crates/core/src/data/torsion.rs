//! Synthetic combined tension-torsion yield points.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::reference::YieldCriterion;
use crate::roots::brent;
use crate::tensor::{haigh_westergaard, SymTensor3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorsionYieldPoint {
    pub sig11: f64,
    pub sig23: f64,
    pub theta: f64,
    pub rho: f64,
}

impl TorsionYieldPoint {
    pub fn stress(&self) -> SymTensor3 {
        SymTensor3::new(self.sig11, 0.0, 0.0, self.sig23, 0.0, 0.0)
    }
}

/// Shear stress `σ23 ≥ 0` that puts `σ11` together with it on the initial
/// yield surface.
pub fn torsion_shear(sig11: f64, k: f64, sigma_y0: f64) -> Result<f64> {
    let crit = YieldCriterion::new(k);
    let g = |t: f64| Ok(crit.value(&SymTensor3::new(sig11, 0.0, 0.0, t, 0.0, 0.0)) - sigma_y0);
    let g0 = g(0.0)?;
    if g0 > 1e-12 * sigma_y0 {
        return Err(Error::RootSolve(format!(
            "axial stress {sig11:e} alone already exceeds the yield stress"
        )));
    }
    if g0 >= -1e-12 * sigma_y0 {
        return Ok(0.0);
    }
    let mut hi = sigma_y0;
    for _ in 0..60 {
        if g(hi)? > 0.0 {
            return brent(g, 0.0, hi, 0.0, 1e-13 * sigma_y0, 200);
        }
        hi *= 2.0;
    }
    Err(Error::RootSolve(format!("no shear root for axial stress {sig11:e}")))
}

const MAX_RESAMPLES: usize = 16;

/// `n` yield points with `σ11` drawn uniformly from `[−σ_y0, k σ_y0]`.
pub fn gen_tension_torsion(n: usize, k: f64, sigma_y0: f64, seed: u64) -> Result<Vec<TorsionYieldPoint>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 yield points, got {n}")));
    }
    if !(k > 0.0 && sigma_y0 > 0.0) {
        return Err(Error::InvalidParameter("k and the yield stress must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut last_err = None;
        let mut point = None;
        for _ in 0..MAX_RESAMPLES {
            let sig11 = rng.random_range(-sigma_y0..=k * sigma_y0);
            match torsion_shear(sig11, k, sigma_y0) {
                Ok(sig23) => {
                    point = Some((sig11, sig23));
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        let (sig11, sig23) = point.ok_or_else(|| last_err.expect("at least one attempt"))?;
        let hw = haigh_westergaard(&SymTensor3::new(sig11, 0.0, 0.0, sig23, 0.0, 0.0));
        out.push(TorsionYieldPoint {
            sig11,
            sig23,
            theta: hw.theta,
            rho: hw.rho,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::yield_f;
    use crate::yield_surface::{comparison_stress, AnalyticYield};
    use approx::assert_relative_eq;

    const SY: f64 = 3e8;

    #[test]
    fn meridian_end_points_have_no_shear() {
        assert_eq!(torsion_shear(0.75 * SY, 0.75, SY).unwrap(), 0.0);
        assert_eq!(torsion_shear(-SY, 0.75, SY).unwrap(), 0.0);
    }

    #[test]
    fn pure_shear_closed_form() {
        let k: f64 = 0.75;
        let t = torsion_shear(0.0, k, SY).unwrap();
        let expected = 2.0 * k * SY / (3f64.sqrt() * (1.0 + k));
        assert_relative_eq!(t, expected, max_relative = 1e-12);
        assert_relative_eq!(t, 1.4846e8, max_relative = 1e-4);
    }

    #[test]
    fn generated_points_lie_on_surface() {
        let pts = gen_tension_torsion(200, 0.75, SY, 7).unwrap();
        let surface = AnalyticYield::new(0.75, SY).unwrap();
        for p in &pts {
            assert!((yield_f(&p.stress(), 0.75) - SY).abs() <= 1e-6 * SY);
            assert!((comparison_stress(&p.stress(), &surface) - 1.0).abs() <= 1e-6);
            assert!((0.0..=std::f64::consts::FRAC_PI_3).contains(&p.theta));
            assert!(p.sig11 >= -SY && p.sig11 <= 0.75 * SY);
        }
    }

    #[test]
    fn seeding_is_reproducible() {
        let a = gen_tension_torsion(10, 0.75, SY, 42).unwrap();
        let b = gen_tension_torsion(10, 0.75, SY, 42).unwrap();
        let c = gen_tension_torsion(10, 0.75, SY, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(gen_tension_torsion(1, 0.75, SY, 0).is_err());
    }
}
