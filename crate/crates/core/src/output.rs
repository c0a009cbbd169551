//! On-disk layout of a solver run.
//!
//! ```text
//! DIR/run.json                      solver, Young's modulus, counts, mesh label
//! DIR/steps/step_0001_nodes.csv     node,ux,uy,uz
//! DIR/steps/step_0001_points.csv    point,weight,eps11..eps12,sig11..sig12,alpha_y
//! ```
//!
//! Strains are written as tensor components (no engineering shear).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::StepOutput;
use crate::tensor::SymTensor3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub solver: String,
    /// Stiffness scale of the error norm.
    pub young: f64,
    pub steps: usize,
    pub points: usize,
    pub nodes: usize,
    pub mesh: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    node: usize,
    ux: f64,
    uy: f64,
    uz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRow {
    point: usize,
    weight: f64,
    eps11: f64,
    eps22: f64,
    eps33: f64,
    eps23: f64,
    eps13: f64,
    eps12: f64,
    sig11: f64,
    sig22: f64,
    sig33: f64,
    sig23: f64,
    sig13: f64,
    sig12: f64,
    alpha_y: f64,
}

/// Fields of one step as read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFields {
    pub displacement: Vec<f64>,
    pub weights: Vec<f64>,
    pub strain: Vec<SymTensor3>,
    pub stress: Vec<SymTensor3>,
    pub hardening: Vec<f64>,
}

fn step_path(dir: &Path, step: usize, what: &str) -> PathBuf {
    dir.join("steps").join(format!("step_{step:04}_{what}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Writes steps as they arrive and the metadata on `finish`.
pub struct RunWriter {
    dir: PathBuf,
    weights: Vec<f64>,
    written: usize,
}

impl RunWriter {
    pub fn create(dir: &Path, weights: Vec<f64>) -> Result<Self> {
        let steps = dir.join("steps");
        if steps.exists() {
            fs::remove_dir_all(&steps).map_err(|e| Error::io(&steps, e))?;
        }
        fs::create_dir_all(&steps).map_err(|e| Error::io(&steps, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            weights,
            written: 0,
        })
    }

    pub fn write_step(&mut self, out: &StepOutput) -> Result<()> {
        if out.strain.len() != self.weights.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} points in step {}, {} weights",
                out.strain.len(),
                out.step,
                self.weights.len()
            )));
        }
        let path = step_path(&self.dir, out.step, "nodes");
        let mut w = csv::Writer::from_writer(create(&path)?);
        for (node, u) in out.displacement.chunks_exact(3).enumerate() {
            w.serialize(NodeRow { node, ux: u[0], uy: u[1], uz: u[2] })?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = step_path(&self.dir, out.step, "points");
        let mut w = csv::Writer::from_writer(create(&path)?);
        for (point, (((e, s), a), wt)) in out
            .strain
            .iter()
            .zip(&out.stress)
            .zip(&out.hardening)
            .zip(&self.weights)
            .enumerate()
        {
            let [eps11, eps22, eps33, eps23, eps13, eps12] = e.0;
            let [sig11, sig22, sig33, sig23, sig13, sig12] = s.0;
            w.serialize(PointRow {
                point,
                weight: *wt,
                eps11,
                eps22,
                eps33,
                eps23,
                eps13,
                eps12,
                sig11,
                sig22,
                sig33,
                sig23,
                sig13,
                sig12,
                alpha_y: *a,
            })?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(self, meta: &RunMeta) -> Result<()> {
        if meta.steps != self.written {
            return Err(Error::LayoutMismatch(format!(
                "metadata claims {} steps, {} written",
                meta.steps, self.written
            )));
        }
        let path = self.dir.join("run.json");
        let text = serde_json::to_string_pretty(meta)?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn read_meta(dir: &Path) -> Result<RunMeta> {
    let path = dir.join("run.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads step `step` of the run in `dir`, checking it against `meta`.
pub fn read_step(dir: &Path, meta: &RunMeta, step: usize) -> Result<StepFields> {
    let path = step_path(dir, step, "nodes");
    let mut displacement = Vec::with_capacity(3 * meta.nodes);
    for (i, row) in csv::Reader::from_reader(open(&path)?).deserialize::<NodeRow>().enumerate() {
        let row = row?;
        if row.node != i {
            return Err(Error::LayoutMismatch(format!("{}: node {} out of order", path.display(), row.node)));
        }
        displacement.extend([row.ux, row.uy, row.uz]);
    }
    if displacement.len() != 3 * meta.nodes {
        return Err(Error::LayoutMismatch(format!(
            "{}: {} nodes, expected {}",
            path.display(),
            displacement.len() / 3,
            meta.nodes
        )));
    }

    let path = step_path(dir, step, "points");
    let mut f = StepFields {
        displacement,
        weights: Vec::with_capacity(meta.points),
        strain: Vec::with_capacity(meta.points),
        stress: Vec::with_capacity(meta.points),
        hardening: Vec::with_capacity(meta.points),
    };
    for (i, row) in csv::Reader::from_reader(open(&path)?).deserialize::<PointRow>().enumerate() {
        let r = row?;
        if r.point != i {
            return Err(Error::LayoutMismatch(format!("{}: point {} out of order", path.display(), r.point)));
        }
        f.weights.push(r.weight);
        f.strain.push(SymTensor3([r.eps11, r.eps22, r.eps33, r.eps23, r.eps13, r.eps12]));
        f.stress.push(SymTensor3([r.sig11, r.sig22, r.sig33, r.sig23, r.sig13, r.sig12]));
        f.hardening.push(r.alpha_y);
    }
    if f.weights.len() != meta.points {
        return Err(Error::LayoutMismatch(format!(
            "{}: {} points, expected {}",
            path.display(),
            f.weights.len(),
            meta.points
        )));
    }
    Ok(f)
}
