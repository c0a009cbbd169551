//! Increment data set with hardening variables and nearest-neighbour search.

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::tensile::TensileRecord;
use crate::error::{Error, Result};
use crate::tensor::SymTensor3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Elastic,
    Inelastic,
}

impl Subset {
    fn label(self) -> &'static str {
        match self {
            Subset::Elastic => "elastic",
            Subset::Inelastic => "inelastic",
        }
    }
}

/// One tensile increment, attached to the record that closes it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtDataPoint {
    pub path: usize,
    pub step: usize,
    pub deps11: f64,
    pub deps22: f64,
    pub dsig11: f64,
    /// Hardening variable of the closing record.
    pub alpha: f64,
    pub subset: Subset,
}

impl ExtDataPoint {
    pub fn strain_increment(&self) -> SymTensor3 {
        SymTensor3::diag(self.deps11, self.deps22, self.deps22)
    }

    pub fn stress_increment(&self) -> SymTensor3 {
        SymTensor3::diag(self.dsig11, 0.0, 0.0)
    }

    fn key_cmp(&self, other: &ExtDataPoint) -> Ordering {
        self.alpha
            .total_cmp(&other.alpha)
            .then(self.path.cmp(&other.path))
            .then(self.step.cmp(&other.step))
    }
}

/// Extended data set: points in record order plus per-subset indices
/// sorted by `(alpha, path, step)`.
#[derive(Clone, Debug)]
pub struct ExtendedSet {
    points: Vec<ExtDataPoint>,
    elastic: Vec<usize>,
    inelastic: Vec<usize>,
}

impl ExtendedSet {
    pub fn from_points(points: Vec<ExtDataPoint>) -> Self {
        let sorted = |subset: Subset| {
            let mut idx: Vec<usize> = (0..points.len()).filter(|&i| points[i].subset == subset).collect();
            idx.sort_by(|&a, &b| points[a].key_cmp(&points[b]));
            idx
        };
        let elastic = sorted(Subset::Elastic);
        let inelastic = sorted(Subset::Inelastic);
        ExtendedSet {
            points,
            elastic,
            inelastic,
        }
    }

    pub fn points(&self) -> &[ExtDataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn subset_len(&self, subset: Subset) -> usize {
        self.index(subset).len()
    }

    fn index(&self, subset: Subset) -> &[usize] {
        match subset {
            Subset::Elastic => &self.elastic,
            Subset::Inelastic => &self.inelastic,
        }
    }

    /// Point of `subset` whose hardening variable is closest to `alpha`;
    /// ties go to the lowest path, then the lowest step.
    pub fn nearest(&self, alpha: f64, subset: Subset) -> Result<&ExtDataPoint> {
        let idx = self.index(subset);
        if idx.is_empty() {
            return Err(Error::NoAdmissibleData(subset.label()));
        }
        let at = |k: usize| &self.points[idx[k]];
        // first group at or above alpha, and the group just below it
        let hi = idx.partition_point(|&i| self.points[i].alpha < alpha);
        let first_of_group = |k: usize| {
            let a = at(k).alpha;
            idx.partition_point(|&i| self.points[i].alpha < a)
        };
        let above = (hi < idx.len()).then_some(hi);
        let below = (hi > 0).then(|| first_of_group(hi - 1));
        let pick = match (below, above) {
            (Some(b), Some(a)) => {
                let db = alpha - at(b).alpha;
                let da = at(a).alpha - alpha;
                match db.total_cmp(&da) {
                    Ordering::Less => b,
                    Ordering::Greater => a,
                    Ordering::Equal => {
                        if (at(b).path, at(b).step) <= (at(a).path, at(a).step) {
                            b
                        } else {
                            a
                        }
                    }
                }
            }
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => unreachable!("non-empty subset"),
        };
        Ok(at(pick))
    }
}

/// Builds increments path by path; `phi0` is the yield radius on the tensile
/// meridian. An increment is inelastic when its closing record pushes the
/// hardening variable above the largest value seen on the path so far,
/// starting from the initial yield level 1.
pub fn build_extended(records: &[TensileRecord], phi0: f64) -> Result<ExtendedSet> {
    if !(phi0 > 0.0) {
        return Err(Error::InvalidParameter(format!("Phi(0) must be positive, got {phi0:e}")));
    }
    let scale = (2.0f64 / 3.0).sqrt() / phi0;
    let mut points = Vec::with_capacity(records.len());
    let mut seen_paths = std::collections::BTreeSet::new();
    let mut start = 0;
    while start < records.len() {
        let path = records[start].path;
        if !seen_paths.insert(path) {
            return Err(Error::InvalidParameter(format!(
                "records of path {path} are not contiguous"
            )));
        }
        let mut end = start + 1;
        while end < records.len() && records[end].path == path {
            if records[end].step <= records[end - 1].step {
                return Err(Error::InvalidParameter(format!(
                    "steps of path {path} are not increasing at step {}",
                    records[end].step
                )));
            }
            end += 1;
        }
        let mut running = 1.0_f64;
        for w in records[start..end].windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let alpha = scale * b.sig11.abs();
            let subset = if alpha > running {
                Subset::Inelastic
            } else {
                Subset::Elastic
            };
            running = running.max(alpha);
            points.push(ExtDataPoint {
                path,
                step: b.step,
                deps11: b.eps11 - a.eps11,
                deps22: b.eps22 - a.eps22,
                dsig11: b.sig11 - a.sig11,
                alpha,
                subset,
            });
        }
        start = end;
    }
    Ok(ExtendedSet::from_points(points))
}

pub fn write_extended<W: Write>(writer: W, set: &ExtendedSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in set.points() {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<extended data>", e))?;
    Ok(())
}

pub fn read_extended<R: Read>(reader: R) -> Result<ExtendedSet> {
    let mut r = csv::Reader::from_reader(reader);
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if headers != ["path", "step", "deps11", "deps22", "dsig11", "alpha", "subset"] {
        return Err(Error::Parse(format!(
            "extended-set header must be 'path,step,deps11,deps22,dsig11,alpha,subset', got '{}'",
            headers.join(",")
        )));
    }
    let points: Vec<ExtDataPoint> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(ExtendedSet::from_points(points))
}
