//! Simulated uniaxial tensile tests along prescribed strain paths.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::{Material, UniaxialDriver};
use crate::tensor::SymTensor3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensileRecord {
    pub path: usize,
    pub step: usize,
    pub eps11: f64,
    /// Lateral strain, equal in both transverse directions.
    pub eps22: f64,
    pub sig11: f64,
}

impl TensileRecord {
    pub fn strain(&self) -> SymTensor3 {
        SymTensor3::diag(self.eps11, self.eps22, self.eps22)
    }

    pub fn stress(&self) -> SymTensor3 {
        SymTensor3::diag(self.sig11, 0.0, 0.0)
    }
}

/// Strain-controlled segment: move `ε11` linearly to `target` in `steps`
/// increments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSegment {
    pub target: f64,
    pub steps: usize,
}

/// How the loading paths of a tensile data set are laid out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LoadingPlan {
    /// Path `j` of `n_p` loads to `strain_max (j + 1)/n_p`, unloads
    /// elastically by the initial yield strain and reloads to `strain_max`.
    Staggered { strain_max: f64 },
    /// Explicit segments per path; `n2` is ignored for these.
    Explicit { paths: Vec<Vec<PathSegment>> },
}

impl Default for LoadingPlan {
    fn default() -> Self {
        LoadingPlan::Staggered { strain_max: 0.04 }
    }
}

/// Splits `total` steps over segments in proportion to their lengths, with
/// at least one step each.
fn allocate(total: usize, lengths: &[f64]) -> Vec<usize> {
    let n = lengths.len();
    debug_assert!(total >= n);
    let sum: f64 = lengths.iter().sum();
    let spare = (total - n) as f64;
    let ideal: Vec<f64> = lengths.iter().map(|l| spare * l / sum).collect();
    let mut steps: Vec<usize> = ideal.iter().map(|x| 1 + x.floor() as usize).collect();
    let mut left = total - steps.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        steps[i] += 1;
        left -= 1;
    }
    steps
}

fn staggered(n2: usize, n_p: usize, strain_max: f64, material: &Material) -> Vec<Vec<PathSegment>> {
    let back = material.k * material.initial_yield() / material.young;
    (0..n_p)
        .map(|j| {
            let peak = strain_max * (j + 1) as f64 / n_p as f64;
            let increments = n2 - 1;
            if increments < 3 || back >= peak {
                return vec![PathSegment { target: peak, steps: increments }];
            }
            let targets = [peak, peak - back, strain_max];
            let lengths = [peak, back, strain_max - peak + back];
            allocate(increments, &lengths)
                .into_iter()
                .zip(targets)
                .map(|(steps, target)| PathSegment { target, steps })
                .collect()
        })
        .collect()
}

/// Uniaxial records, `n2` per path (the unloaded origin included) for the
/// staggered plan. Paths are generated in parallel and returned in order.
pub fn gen_tensile_paths(
    n2: usize,
    n_p: usize,
    material: &Material,
    plan: &LoadingPlan,
) -> Result<Vec<TensileRecord>> {
    material.validate()?;
    let paths = match plan {
        LoadingPlan::Staggered { strain_max } => {
            if n2 < 2 || n_p < 1 {
                return Err(Error::InvalidParameter(format!(
                    "need n2 >= 2 and n_p >= 1, got n2 = {n2}, n_p = {n_p}"
                )));
            }
            if !(*strain_max > 0.0) {
                return Err(Error::InvalidParameter("strain_max must be positive".into()));
            }
            staggered(n2, n_p, *strain_max, material)
        }
        LoadingPlan::Explicit { paths } => {
            if paths.is_empty() || paths.iter().any(|p| p.iter().map(|s| s.steps).sum::<usize>() == 0) {
                return Err(Error::InvalidParameter("every explicit path needs at least one step".into()));
            }
            paths.clone()
        }
    };
    use rayon::prelude::*;
    let per_path: Vec<Vec<TensileRecord>> = paths
        .par_iter()
        .enumerate()
        .map(|(path, segments)| run_path(path, segments, material))
        .collect::<Result<_>>()?;
    Ok(per_path.into_iter().flatten().collect())
}

fn run_path(path: usize, segments: &[PathSegment], material: &Material) -> Result<Vec<TensileRecord>> {
    let mut driver = UniaxialDriver::new(*material)?;
    let mut out = vec![TensileRecord {
        path,
        step: 0,
        eps11: 0.0,
        eps22: 0.0,
        sig11: 0.0,
    }];
    let mut from = 0.0;
    for seg in segments {
        for i in 1..=seg.steps {
            let e = from + (seg.target - from) * i as f64 / seg.steps as f64;
            let p = driver.advance(e)?;
            out.push(TensileRecord {
                path,
                step: out.len(),
                eps11: p.eps11,
                eps22: p.eps22,
                sig11: p.sig11,
            });
        }
        from = seg.target;
    }
    Ok(out)
}

pub fn write_tensile<W: Write>(writer: W, records: &[TensileRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<tensile data>", e))?;
    Ok(())
}

pub fn read_tensile<R: Read>(reader: R) -> Result<Vec<TensileRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if headers != ["path", "step", "eps11", "eps22", "sig11"] {
        return Err(Error::Parse(format!(
            "tensile header must be 'path,step,eps11,eps22,sig11', got '{}'",
            headers.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
