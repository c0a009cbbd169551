//! Yield criterion, associative return mapping and its consistent tangent.
//!
//! The criterion is written in stress invariants,
//! `F = a √J2 − b J3/J2` with `a = √3 (1 + 1/k)/2` and `b = 9 (1 − 1/k)/4`,
//! which equals the Lode-angle form `ρ √3/(2√2) (1 + 1/k − (1 − 1/k) cos 3θ)`
//! but has no branch point at the meridians. All local algebra runs in Mandel
//! coordinates and is converted to Voigt form on output.

use nalgebra::{Matrix6, Vector6};

use super::material::{elastic_mandel, elastic_voigt, mandel_to_voigt, Material};
use crate::error::{Error, Result};
use crate::roots::brent;
use crate::tensor::SymTensor3;

#[derive(Clone, Copy, Debug)]
pub struct YieldCriterion {
    a: f64,
    b: f64,
}

impl YieldCriterion {
    pub fn new(k: f64) -> Self {
        YieldCriterion {
            a: 3f64.sqrt() * (1.0 + 1.0 / k) / 2.0,
            b: 9.0 * (1.0 - 1.0 / k) / 4.0,
        }
    }

    /// Equivalent stress `F(σ)`; zero for hydrostatic states.
    pub fn value(&self, sigma: &SymTensor3) -> f64 {
        let s = sigma.deviator();
        let j2 = 0.5 * s.ddot(&s);
        if j2 <= 0.0 {
            return 0.0;
        }
        self.a * j2.sqrt() - self.b * s.det() / j2
    }

    /// Partial derivatives of `F` with respect to `J2` and `J3`.
    fn partials(&self, j2: f64, j3: f64) -> (f64, f64) {
        (
            self.a / (2.0 * j2.sqrt()) + self.b * j3 / (j2 * j2),
            -self.b / j2,
        )
    }

    /// Flow direction `∂F/∂σ`; `None` when the deviator vanishes.
    pub fn gradient(&self, sigma: &SymTensor3) -> Option<SymTensor3> {
        let s = sigma.deviator();
        let j2 = 0.5 * s.ddot(&s);
        if !(j2 > 0.0) {
            return None;
        }
        let (f2, f3) = self.partials(j2, s.det());
        Some(f2 * s + f3 * s.sym_product(&s).deviator())
    }

    /// `∂²F/∂σ²` as a symmetric Mandel matrix.
    pub fn hessian(&self, sigma: &SymTensor3) -> Option<Matrix6<f64>> {
        let s = sigma.deviator();
        let j2 = 0.5 * s.ddot(&s);
        if !(j2 > 0.0) {
            return None;
        }
        let j3 = s.det();
        let (f2, f3) = self.partials(j2, j3);
        let f22 = -self.a / (4.0 * j2.powf(1.5)) - 2.0 * self.b * j3 / j2.powi(3);
        let f23 = self.b / (j2 * j2);
        let s2 = s.sym_product(&s).deviator();
        let mut h = Matrix6::zeros();
        for j in 0..6 {
            let mut e = Vector6::zeros();
            e[j] = 1.0;
            let ds = SymTensor3::from_mandel(&e).deviator();
            let dj2 = s.ddot(&ds);
            let dj3 = s2.ddot(&ds);
            let df2 = f22 * dj2 + f23 * dj3;
            let df3 = f23 * dj2;
            let dt = (ds.sym_product(&s) + s.sym_product(&ds)).deviator();
            let dn = df2 * s + f2 * ds + df3 * s2 + f3 * dt;
            h.set_column(j, &dn.to_mandel());
        }
        Some(0.5 * (h + h.transpose()))
    }
}

pub fn yield_f(sigma: &SymTensor3, k: f64) -> f64 {
    YieldCriterion::new(k).value(sigma)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlasticState {
    pub plastic_strain: SymTensor3,
    /// Equivalent plastic strain `ε̄p`.
    pub eqps: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct StressUpdate {
    pub stress: SymTensor3,
    pub state: PlasticState,
    /// Consistent tangent, Voigt form.
    pub tangent: Matrix6<f64>,
    /// Plastic multiplier increment; zero for elastic steps.
    pub multiplier: f64,
}

const LOCAL_TOL: f64 = 1e-12;
const LOCAL_MAX_ITER: usize = 60;

/// Stress update for total strain `strain` from the converged `state`.
pub fn return_map(strain: &SymTensor3, state: &PlasticState, material: &Material) -> Result<StressUpdate> {
    let (lambda, mu) = material.lame();
    let ce = elastic_mandel(lambda, mu);
    let eps_e = *strain - state.plastic_strain;
    let trial = SymTensor3::from_mandel(&(ce * eps_e.to_mandel()));
    let crit = YieldCriterion::new(material.k);
    let f_trial = crit.value(&trial);
    let sy = material.flow_stress(state.eqps);
    if f_trial <= sy {
        return Ok(StressUpdate {
            stress: trial,
            state: *state,
            tangent: elastic_voigt(lambda, mu),
            multiplier: 0.0,
        });
    }

    let pressure = trial.trace() / 3.0;
    let s_trial = trial.deviator();
    let scale = s_trial.norm();
    let n_trial = crit.gradient(&trial).ok_or_else(|| {
        Error::ReturnMapping("trial state has no deviatoric part".into())
    })?;

    let mut last_s = s_trial;
    let residual = |dl: f64, last: &mut SymTensor3| -> Result<f64> {
        let s = deviator_for(&crit, &s_trial, 2.0 * mu * dl, last, scale)?;
        *last = s;
        Ok(crit.value(&s) - material.flow_stress(state.eqps + dl))
    };

    // perfectly plastic linearization brackets the root from above in most
    // cases; widen until the sign flips
    let mut lo = 0.0;
    let mut hi = (f_trial - sy) / (2.0 * mu * n_trial.ddot(&n_trial));
    let mut bracketed = false;
    for _ in 0..80 {
        let mut guess = s_trial;
        match residual(hi, &mut guess) {
            Ok(v) if v < 0.0 => {
                bracketed = true;
                break;
            }
            Ok(_) => {
                lo = hi;
                hi *= 1.5;
            }
            Err(_) => hi = 0.5 * (lo + hi),
        }
    }
    if !bracketed {
        return Err(Error::ReturnMapping(format!(
            "could not bracket the plastic multiplier (trial F = {f_trial:e}, sigma_y = {sy:e})"
        )));
    }
    let tol = LOCAL_TOL * material.sigma0;
    let dl = brent(|x| residual(x, &mut last_s), lo, hi, 0.0, tol, 200)
        .map_err(|e| Error::ReturnMapping(e.to_string()))?;
    let s = deviator_for(&crit, &s_trial, 2.0 * mu * dl, &mut last_s.clone(), scale)?;

    let stress = s + pressure * SymTensor3::IDENTITY;
    let n = crit
        .gradient(&stress)
        .ok_or_else(|| Error::ReturnMapping("returned onto the hydrostatic axis".into()))?;
    let hess = crit.hessian(&stress).expect("nonzero deviator");
    let eqps = state.eqps + dl;
    let state = PlasticState {
        plastic_strain: state.plastic_strain + dl * n,
        eqps,
    };

    let ce_inv = ce.try_inverse().expect("elastic operator is invertible");
    let xi = (ce_inv + dl * hess)
        .try_inverse()
        .ok_or_else(|| Error::ReturnMapping("singular algorithmic modulus".into()))?;
    let nm = n.to_mandel();
    let xn = xi * nm;
    let denom = nm.dot(&xn) + material.hardening_slope(eqps);
    let tangent = xi - xn * xn.transpose() / denom;

    Ok(StressUpdate {
        stress,
        state,
        tangent: mandel_to_voigt(&(0.5 * (tangent + tangent.transpose()))),
        multiplier: dl,
    })
}

/// Solves `s + c n(s) = s_trial` for the returned deviator by damped Newton,
/// starting from `guess`.
fn deviator_for(
    crit: &YieldCriterion,
    s_trial: &SymTensor3,
    c: f64,
    guess: &mut SymTensor3,
    scale: f64,
) -> Result<SymTensor3> {
    let target = s_trial.to_mandel();
    let eval = |s: &Vector6<f64>| -> Option<Vector6<f64>> {
        let t = SymTensor3::from_mandel(s);
        let n = crit.gradient(&t)?;
        Some(s + c * n.to_mandel() - target)
    };
    let mut s = guess.to_mandel();
    let mut r = match eval(&s) {
        Some(r) => r,
        None => {
            s = target;
            eval(&s).ok_or_else(|| Error::ReturnMapping("zero trial deviator".into()))?
        }
    };
    for _ in 0..LOCAL_MAX_ITER {
        let rn = r.norm();
        if rn <= LOCAL_TOL * scale {
            let out = SymTensor3::from_mandel(&s);
            *guess = out;
            return Ok(out);
        }
        let hess = crit
            .hessian(&SymTensor3::from_mandel(&s))
            .ok_or_else(|| Error::ReturnMapping("deviator collapsed".into()))?;
        let jac = Matrix6::identity() + c * hess;
        let step = jac
            .lu()
            .solve(&(-r))
            .ok_or_else(|| Error::ReturnMapping("singular local Jacobian".into()))?;
        let mut t = 1.0;
        loop {
            let cand = s + t * step;
            if let Some(rc) = eval(&cand) {
                if rc.norm() < rn || t < 1e-4 {
                    s = cand;
                    r = rc;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-4 {
                return Err(Error::ReturnMapping("line search failed".into()));
            }
        }
    }
    Err(Error::ReturnMapping(format!(
        "local Newton stalled at residual {:e}",
        r.norm() / scale
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::haigh_westergaard;
    use crate::yield_surface::{yield_normal, AnalyticYield};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_one() -> Material {
        Material::default()
    }

    #[test]
    fn criterion_examples() {
        assert_relative_eq!(yield_f(&SymTensor3::diag(2e8, 0.0, 0.0), 1.0), 2e8, max_relative = 1e-14);
        assert_relative_eq!(yield_f(&SymTensor3::diag(2.25e8, 0.0, 0.0), 0.75), 3e8, max_relative = 1e-14);
        assert_relative_eq!(yield_f(&SymTensor3::diag(-3e8, 0.0, 0.0), 0.75), 3e8, max_relative = 1e-14);
        assert_eq!(yield_f(&SymTensor3::diag(1e8, 1e8, 1e8), 0.75), 0.0);
    }

    proptest! {
        #[test]
        fn invariant_form_matches_lode_form(c in proptest::array::uniform6(-3e8f64..3e8), k in 0.6f64..1.5) {
            let sigma = SymTensor3(c);
            let hw = haigh_westergaard(&sigma);
            prop_assume!(!hw.degenerate);
            let lode = hw.rho * 3f64.sqrt() / (2.0 * 2f64.sqrt())
                * (1.0 + 1.0 / k - (1.0 - 1.0 / k) * (3.0 * hw.theta).cos());
            prop_assert!((yield_f(&sigma, k) - lode).abs() <= 1e-10 * lode);
        }

        #[test]
        fn gradient_parallel_to_octahedral_normal(c in proptest::array::uniform6(-3e8f64..3e8)) {
            let sigma = SymTensor3(c);
            prop_assume!(haigh_westergaard(&sigma).rho > 1e7);
            let n = YieldCriterion::new(0.75).gradient(&sigma).unwrap();
            let surface = AnalyticYield::new(0.75, 1.0).unwrap();
            let oracle = yield_normal(&sigma, &surface).unwrap().tensor;
            prop_assert!(((1.0 / n.norm()) * n - oracle).norm() < 1e-8);
        }

        #[test]
        fn hessian_matches_gradient_differences(c in proptest::array::uniform6(-3e8f64..3e8)) {
            let sigma = SymTensor3(c);
            prop_assume!(haigh_westergaard(&sigma).rho > 1e7);
            let crit = YieldCriterion::new(0.75);
            let h = crit.hessian(&sigma).unwrap();
            let step = 1e-6 * sigma.norm();
            for j in 0..6 {
                let mut e = Vector6::zeros();
                e[j] = step;
                let dp = SymTensor3::from_mandel(&e);
                let gp = crit.gradient(&(sigma + dp)).unwrap().to_mandel();
                let gm = crit.gradient(&(sigma - dp)).unwrap().to_mandel();
                let fd = (gp - gm) / (2.0 * step);
                prop_assert!((fd - h.column(j)).norm() <= 1e-5 * h.norm());
            }
        }
    }

    #[test]
    fn elastic_trial_is_returned_unchanged() {
        let m = table_one();
        let eps = SymTensor3::diag(1e-3, -2e-4, -2e-4);
        let up = return_map(&eps, &PlasticState::default(), &m).unwrap();
        assert_eq!(up.multiplier, 0.0);
        let (l, mu) = m.lame();
        let expected = elastic_voigt(l, mu) * eps.to_voigt_strain();
        assert_relative_eq!(up.stress.to_voigt_stress(), expected, max_relative = 1e-12);
    }

    #[test]
    fn plastic_update_lands_on_surface_with_deviatoric_flow() {
        let m = table_one();
        let eps = SymTensor3::new(0.012, -0.003, 0.001, 0.004, -0.002, 0.006);
        let up = return_map(&eps, &PlasticState::default(), &m).unwrap();
        assert!(up.multiplier > 0.0);
        let f = yield_f(&up.stress, m.k);
        let sy = m.yield_stress(up.state.eqps).unwrap();
        assert!((f - sy).abs() <= 1e-8 * m.sigma0);
        assert!(up.state.plastic_strain.trace().abs() < 1e-10);
        let (l, mu) = m.lame();
        // pressure is untouched by the return
        let p_trial = (3.0 * l + 2.0 * mu) * eps.trace() / 3.0;
        assert_relative_eq!(up.stress.trace() / 3.0, p_trial, max_relative = 1e-12);
    }

    #[test]
    fn von_mises_matches_radial_return() {
        let m = Material { k: 1.0, ..table_one() };
        let (l, mu) = m.lame();
        let eps = SymTensor3::new(0.01, -0.004, 0.002, 0.003, 0.0, -0.005);
        let state = PlasticState::default();
        let up = return_map(&eps, &state, &m).unwrap();

        // textbook radial return with a scalar root solve on Δλ
        let trial = SymTensor3::from_voigt_stress(&(elastic_voigt(l, mu) * eps.to_voigt_strain()));
        let s_tr = trial.deviator();
        let q_tr = (1.5 * s_tr.ddot(&s_tr)).sqrt();
        let dl = brent(
            |x| Ok(q_tr - 3.0 * mu * x - m.flow_stress(x)),
            0.0,
            q_tr / (3.0 * mu),
            0.0,
            1e-6,
            200,
        )
        .unwrap();
        let s = (1.0 - 3.0 * mu * dl / q_tr) * s_tr;
        let oracle = s + (trial.trace() / 3.0) * SymTensor3::IDENTITY;
        assert!((up.stress - oracle).norm() <= 1e-9 * oracle.norm());
        assert_relative_eq!(up.multiplier, dl, max_relative = 1e-9);
    }

    fn fd_tangent(eps: &SymTensor3, state: &PlasticState, m: &Material) -> Matrix6<f64> {
        let v = eps.to_voigt_strain();
        let h = 1e-8;
        let mut out = Matrix6::zeros();
        for j in 0..6 {
            let mut vp = v;
            vp[j] += h;
            let mut vm = v;
            vm[j] -= h;
            let sp = return_map(&SymTensor3::from_voigt_strain(&vp), state, m).unwrap();
            let sm = return_map(&SymTensor3::from_voigt_strain(&vm), state, m).unwrap();
            out.set_column(
                j,
                &((sp.stress.to_voigt_stress() - sm.stress.to_voigt_stress()) / (2.0 * h)),
            );
        }
        out
    }

    #[test]
    fn consistent_tangent_matches_finite_differences() {
        let m = table_one();
        let prior = PlasticState {
            plastic_strain: SymTensor3::new(0.002, -0.001, -0.001, 0.0, 0.0, 0.0005),
            eqps: 0.003,
        };
        for eps in [
            SymTensor3::new(0.012, -0.003, 0.001, 0.004, -0.002, 0.006),
            SymTensor3::new(-0.01, 0.002, 0.003, 0.0, 0.001, 0.0),
            SymTensor3::diag(0.02, -0.006, -0.006),
        ] {
            for state in [PlasticState::default(), prior] {
                let up = return_map(&eps, &state, &m).unwrap();
                assert!(up.multiplier > 0.0);
                let fd = fd_tangent(&eps, &state, &m);
                let err = (up.tangent - fd).norm() / fd.norm();
                assert!(err <= 1e-5, "tangent error {err:e}");
                assert_relative_eq!(up.tangent, up.tangent.transpose(), max_relative = 1e-10);
            }
        }
    }
}
