//! Convergence study over data-set sizes: one reference solution, one
//! data-driven run per grid cell, RMSD per cell.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{rmsd, step_error, StateField};
use crate::config::RunConfig;
use crate::dd::DataDrivenSolver;
use crate::error::{Error, Result};
use crate::problem::{run_collect, Problem, Solver, StepOutput};
use crate::reference::ReferenceSolver;
use crate::workflow::{build_problem, data_material, Measurements};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StudyCell {
    pub n2: usize,
    pub n_p: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub n2: usize,
    pub n_p: usize,
    pub seed: u64,
    /// Empty when the cell failed.
    pub rmsd: Option<f64>,
    pub steps: usize,
    pub mesh: String,
    pub wallclock_s: f64,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: StudyCell,
    pub outcome: std::result::Result<Vec<f64>, String>,
    pub wallclock_s: f64,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub mesh: String,
    pub steps: usize,
    pub n1: usize,
    pub young: f64,
    /// In grid order: n2 outermost, then n_p, then seed.
    pub cells: Vec<CellResult>,
}

impl StudyReport {
    pub fn rows(&self) -> Vec<StudyRow> {
        self.cells
            .iter()
            .map(|c| StudyRow {
                n2: c.cell.n2,
                n_p: c.cell.n_p,
                seed: c.cell.seed,
                rmsd: c.outcome.as_ref().ok().map(|e| rmsd(e)),
                steps: self.steps,
                mesh: self.mesh.clone(),
                wallclock_s: c.wallclock_s,
            })
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }
}

fn cell_errors(cfg: &RunConfig, problem: &Problem, reference: &[StepOutput], cell: StudyCell) -> Result<Vec<f64>> {
    let d = &cfg.data;
    let m = Measurements::generate(&cfg.material, d.n1, cell.n2, cell.n_p, cell.seed, &d.plan)?;
    let material = data_material(&cfg.material, &m.polar(), &m.tensile, &d.interpolation)?;
    let solver = DataDrivenSolver::new(Arc::new(material), cfg.options.verify_fixed_point);
    let weights = problem.space.weights();
    let mut errors = Vec::with_capacity(problem.steps());
    solver.run(problem, &mut |s| {
        let r = &reference[s.step - 1];
        let e = step_error(
            StateField { strain: &s.strain, stress: &s.stress },
            StateField { strain: &r.strain, stress: &r.stress },
            &weights,
            cfg.material.young,
        )?;
        errors.push(e);
        Ok(())
    })?;
    Ok(errors)
}

/// Runs every cell of the study grid of `cfg`. Failing cells are recorded
/// and do not stop the others; failures of the shared setup are returned.
pub fn run_study(cfg: &RunConfig) -> Result<StudyReport> {
    let grid = cfg
        .study
        .as_ref()
        .ok_or_else(|| Error::Config("the config has no study section".into()))?;
    let (problem, mesh) = build_problem(cfg)?;
    let reference = run_collect(&ReferenceSolver::new(cfg.options), &problem)?;
    let cells: Vec<StudyCell> = grid
        .n2
        .iter()
        .flat_map(|&n2| {
            grid.n_p
                .iter()
                .flat_map(move |&n_p| grid.seeds.iter().map(move |&seed| StudyCell { n2, n_p, seed }))
        })
        .collect();
    let results = cells
        .par_iter()
        .map(|&cell| {
            let start = Instant::now();
            let outcome = cell_errors(cfg, &problem, &reference, cell).map_err(|e| e.to_string());
            CellResult {
                cell,
                outcome,
                wallclock_s: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    Ok(StudyReport {
        mesh,
        steps: problem.steps(),
        n1: cfg.data.n1,
        young: cfg.material.young,
        cells: results,
    })
}

/// Writes `study.csv`, `study_steps.csv` (per-step errors) and
/// `study_status.csv` into `dir`.
pub fn write_study(dir: &Path, report: &StudyReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let open = |name: &str| -> Result<csv::Writer<std::fs::File>> {
        let path = dir.join(name);
        Ok(csv::Writer::from_writer(std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?))
    };
    let mut w = open("study.csv")?;
    for row in report.rows() {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("study.csv"), e))?;

    let mut w = open("study_steps.csv")?;
    w.write_record(["n2", "n_p", "seed", "step", "error"])?;
    for c in &report.cells {
        if let Ok(errors) = &c.outcome {
            for (i, e) in errors.iter().enumerate() {
                w.write_record([
                    c.cell.n2.to_string(),
                    c.cell.n_p.to_string(),
                    c.cell.seed.to_string(),
                    (i + 1).to_string(),
                    format!("{e:e}"),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(dir.join("study_steps.csv"), e))?;

    let mut w = open("study_status.csv")?;
    w.write_record(["n2", "n_p", "seed", "status", "message"])?;
    for c in &report.cells {
        let (status, msg) = match &c.outcome {
            Ok(_) => ("ok", String::new()),
            Err(m) => ("failed", m.clone()),
        };
        w.write_record([
            c.cell.n2.to_string(),
            c.cell.n_p.to_string(),
            c.cell.seed.to_string(),
            status.to_string(),
            msg,
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("study_status.csv"), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{MeshSpec, StudyGrid};
    use crate::problem::LoadSegment;

    fn config(grid: StudyGrid) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.mesh = MeshSpec::Box { divisions: [1, 1, 1], size: [5.0, 5.0, 2.0], order: 1 };
        cfg.boundary.traction.clear();
        cfg.schedule = vec![
            LoadSegment { displacement: 0.06, traction: 0.0, steps: 4 },
            LoadSegment { displacement: 0.0, traction: 0.0, steps: 2 },
        ];
        cfg.study = Some(grid);
        cfg
    }

    #[test]
    fn grid_rows_in_order_and_deterministic() {
        let cfg = config(StudyGrid { n2: vec![10, 40, 10], n_p: vec![1, 2], seeds: vec![5] });
        let report = run_study(&cfg).unwrap();
        let rows = report.rows();
        assert_eq!(rows.len(), 6);
        let order: Vec<_> = rows.iter().map(|r| (r.n2, r.n_p)).collect();
        assert_eq!(order, vec![(10, 1), (10, 2), (40, 1), (40, 2), (10, 1), (10, 2)]);
        assert_eq!(report.failures(), 0);
        assert!(rows.iter().all(|r| r.seed == 5 && r.steps == 6 && r.rmsd.is_some()));
        assert_eq!(rows[0].rmsd, rows[4].rmsd);
        assert_eq!(report.cells[0].outcome, report.cells[4].outcome);

        let dir = tempfile::tempdir().unwrap();
        write_study(dir.path(), &report).unwrap();
        let text = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
        assert!(text.starts_with("n2,n_p,seed,rmsd,steps,mesh,wallclock_s\n"));
        assert_eq!(text.lines().count(), 7);
        let steps = std::fs::read_to_string(dir.path().join("study_steps.csv")).unwrap();
        assert_eq!(steps.lines().count(), 1 + 6 * 6);
    }

    #[test]
    fn single_cell_matches_direct_rmsd() {
        let cfg = config(StudyGrid { n2: vec![30], n_p: vec![2], seeds: vec![1] });
        let report = run_study(&cfg).unwrap();
        let errors = report.cells[0].outcome.clone().unwrap();
        let direct = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
        assert_eq!(report.rows()[0].rmsd, Some(direct));
    }

    #[test]
    fn failing_cell_is_recorded() {
        // a single-record path has no increments, so that cell cannot run
        let mut cfg = config(StudyGrid { n2: vec![20], n_p: vec![1], seeds: vec![1] });
        cfg.data.plan = crate::data::LoadingPlan::Staggered { strain_max: 1e-6 };
        let report = run_study(&cfg).unwrap();
        assert_eq!(report.failures(), 1);
        let dir = tempfile::tempdir().unwrap();
        write_study(dir.path(), &report).unwrap();
        let status = std::fs::read_to_string(dir.path().join("study_status.csv")).unwrap();
        assert!(status.contains(",failed,"));
        assert!(std::fs::read_to_string(dir.path().join("study.csv")).unwrap().contains("20,1,1,,6,"));
    }
}
