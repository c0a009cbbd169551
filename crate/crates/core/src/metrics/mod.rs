//! Energy-norm errors between two solutions and their root mean square over
//! the load history.

mod study;

use std::path::Path;

pub use study::{run_study, write_study, StudyCell, StudyReport, StudyRow};

use crate::error::{Error, Result};
use crate::output::{read_meta, read_step};
use crate::tensor::SymTensor3;

/// Strain and stress per integration point.
#[derive(Clone, Copy, Debug)]
pub struct StateField<'a> {
    pub strain: &'a [SymTensor3],
    pub stress: &'a [SymTensor3],
}

/// `½E‖ε‖² + ½E⁻¹‖σ‖²` with Frobenius norms.
pub fn energy_norm_sq(strain: &SymTensor3, stress: &SymTensor3, young: f64) -> f64 {
    let e = strain.norm();
    let s = stress.norm();
    0.5 * young * e * e + 0.5 * s * s / young
}

/// Weighted relative energy-norm distance of `z` from `reference`.
pub fn step_error(z: StateField, reference: StateField, weights: &[f64], young: f64) -> Result<f64> {
    let n = weights.len();
    if [z.strain.len(), z.stress.len(), reference.strain.len(), reference.stress.len()]
        .iter()
        .any(|&m| m != n)
    {
        return Err(Error::LayoutMismatch(format!(
            "{n} weights, {}/{} points in the solution, {}/{} in the reference",
            z.strain.len(),
            z.stress.len(),
            reference.strain.len(),
            reference.stress.len()
        )));
    }
    if !(young > 0.0) {
        return Err(Error::InvalidParameter("the norm stiffness must be positive".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let de = z.strain[i] - reference.strain[i];
        let ds = z.stress[i] - reference.stress[i];
        num += weights[i] * energy_norm_sq(&de, &ds, young);
        den += weights[i] * energy_norm_sq(&reference.strain[i], &reference.stress[i], young);
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Root mean square of the per-step errors.
pub fn rmsd(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// Errors of steps `1..=T`.
    pub per_step: Vec<f64>,
    pub rmsd: f64,
    pub young: f64,
}

impl ErrorReport {
    pub fn new(per_step: Vec<f64>, young: f64) -> Self {
        ErrorReport {
            rmsd: rmsd(&per_step),
            per_step,
            young,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["step", "error"])?;
        for (i, e) in self.per_step.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{e:e}")])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Compares run `a` against reference run `b`, both read from disk.
pub fn compare_runs(a: &Path, b: &Path) -> Result<ErrorReport> {
    let ma = read_meta(a)?;
    let mb = read_meta(b)?;
    if ma.steps != mb.steps || ma.points != mb.points || ma.nodes != mb.nodes {
        return Err(Error::LayoutMismatch(format!(
            "{} has {} steps, {} points, {} nodes; {} has {} steps, {} points, {} nodes",
            a.display(),
            ma.steps,
            ma.points,
            ma.nodes,
            b.display(),
            mb.steps,
            mb.points,
            mb.nodes
        )));
    }
    let mut errors = Vec::with_capacity(ma.steps);
    for k in 1..=ma.steps {
        let fa = read_step(a, &ma, k)?;
        let fb = read_step(b, &mb, k)?;
        let same_weights = fa
            .weights
            .iter()
            .zip(&fb.weights)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
        if !same_weights {
            return Err(Error::LayoutMismatch(format!("integration weights differ at step {k}")));
        }
        let e = step_error(
            StateField { strain: &fa.strain, stress: &fa.stress },
            StateField { strain: &fb.strain, stress: &fb.stress },
            &fb.weights,
            mb.young,
        )
        .map_err(|e| e.at_step(k))?;
        errors.push(e);
    }
    Ok(ErrorReport::new(errors, mb.young))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn field<'a>(e: &'a [SymTensor3], s: &'a [SymTensor3]) -> StateField<'a> {
        StateField { strain: e, stress: s }
    }

    #[test]
    fn identical_is_zero_and_zero_reference_fails() {
        let e = vec![SymTensor3::diag(1e-3, 0.0, 0.0); 3];
        let s = vec![SymTensor3::diag(3e7, 0.0, 0.0); 3];
        assert_eq!(step_error(field(&e, &s), field(&e, &s), &[1.0; 3], 3e10).unwrap(), 0.0);
        let z = vec![SymTensor3::ZERO; 3];
        assert!(matches!(
            step_error(field(&e, &s), field(&z, &z), &[1.0; 3], 3e10),
            Err(Error::ZeroReference)
        ));
        assert!(matches!(
            step_error(field(&e, &s), field(&e[..2], &s[..2]), &[1.0; 3], 3e10),
            Err(Error::LayoutMismatch(_))
        ));
    }

    #[test]
    fn two_point_hand_fixture() {
        // E = 2: point 1 has ‖ε‖² = 1, ‖σ‖² = 4 (norm² 1 + 1 = 2), weight 1;
        // point 2 has ‖ε‖² = 0, ‖σ‖² = 16 (norm² 4), weight 0.5.
        let re = [SymTensor3::diag(1.0, 0.0, 0.0), SymTensor3::ZERO];
        let rs = [SymTensor3::diag(2.0, 0.0, 0.0), SymTensor3::diag(0.0, 4.0, 0.0)];
        // offsets: point 1 strain off by 1 (norm² 1), point 2 stress off by 2 (norm² 1)
        let ze = [SymTensor3::diag(2.0, 0.0, 0.0), SymTensor3::ZERO];
        let zs = [rs[0], SymTensor3::diag(0.0, 6.0, 0.0)];
        let err = step_error(field(&ze, &zs), field(&re, &rs), &[1.0, 0.5], 2.0).unwrap();
        // (1·1 + 0.5·1) / (1·2 + 0.5·4) = 1.5 / 4
        assert_relative_eq!(err, (1.5f64 / 4.0).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn rmsd_is_root_mean_square() {
        assert_eq!(rmsd(&[]), 0.0);
        assert_relative_eq!(rmsd(&[3.0, 4.0]), (12.5f64).sqrt());
        let r = ErrorReport::new(vec![0.1, 0.2, 0.2], 1.0);
        let recomputed = (r.per_step.iter().map(|e| e * e).sum::<f64>() / 3.0).sqrt();
        assert_eq!(r.rmsd, recomputed);
    }

    proptest! {
        #[test]
        fn scaled_stress_error(delta in 1e-4f64..0.5, s1 in 1e6f64..1e9, e1 in 1e-5f64..1e-2) {
            let young = 3e10;
            let e = [SymTensor3::diag(e1, 0.0, 0.0)];
            let s = [SymTensor3::diag(s1, 0.0, 0.0)];
            let scaled = [s[0] * (1.0 + delta)];
            let err = step_error(field(&e, &scaled), field(&e, &s), &[1.0], young).unwrap();
            let stress_part = 0.5 * s1 * s1 / young;
            let fraction = stress_part / (stress_part + 0.5 * young * e1 * e1);
            prop_assert!((err - delta * fraction.sqrt()).abs() <= 1e-12 * err.max(1e-300));
        }
    }
}
