//! Glue between a [`RunConfig`] and the library: data generation, loading
//! data from disk, problem setup and running a solver into an output
//! directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::RunConfig;
use crate::data::{
    build_extended, gen_tension_torsion, gen_tensile_paths, read_tensile, write_extended, write_tensile,
    ExtendedSet, LoadingPlan, TensileRecord, TorsionYieldPoint,
};
use crate::dd::DataDrivenMaterial;
use crate::error::{Error, Result};
use crate::output::{RunMeta, RunWriter};
use crate::problem::{build_solver, Problem, SolverContext, StepOutput};
use crate::reference::Material;
use crate::tensor::principal_frame;
use crate::yield_surface::{fit_yield, load_yield_points, write_yield_points, YieldSurface};

pub const YIELD_FILE: &str = "yield_points.csv";
pub const TENSILE_FILE: &str = "tensile.csv";
pub const EXTENDED_FILE: &str = "extended.csv";

/// Synthetic measurements of one seed.
#[derive(Clone, Debug)]
pub struct Measurements {
    pub yield_points: Vec<TorsionYieldPoint>,
    pub tensile: Vec<TensileRecord>,
}

impl Measurements {
    pub fn generate(
        material: &Material,
        n1: usize,
        n2: usize,
        n_p: usize,
        seed: u64,
        plan: &LoadingPlan,
    ) -> Result<Self> {
        Ok(Measurements {
            yield_points: gen_tension_torsion(n1, material.k, material.initial_yield(), seed)?,
            tensile: gen_tensile_paths(n2, n_p, material, plan)?,
        })
    }

    pub fn polar(&self) -> Vec<(f64, f64)> {
        self.yield_points.iter().map(|p| (p.theta, p.rho)).collect()
    }
}

/// Fits the yield surface and builds the increment set. The elastic
/// constants are taken from `material`.
pub fn data_material(
    material: &Material,
    yield_points: &[(f64, f64)],
    tensile: &[TensileRecord],
    interpolation: &str,
) -> Result<DataDrivenMaterial> {
    let surface = fit_yield(yield_points, interpolation)?;
    let data: ExtendedSet = build_extended(tensile, surface.phi(0.0))?;
    let (lambda, mu) = material.lame();
    DataDrivenMaterial::new(surface, data, lambda, mu)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataSummary {
    pub yield_points: usize,
    pub tensile_records: usize,
    pub increments: usize,
    pub inelastic: usize,
    pub phi0: f64,
    pub seed: u64,
}

fn write_file(path: &Path, write: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
    write(fs::File::create(path).map_err(|e| Error::io(path, e))?)
}

/// Generates the measurements of `cfg` and writes them into `dir`.
pub fn generate_data_files(cfg: &RunConfig, dir: &Path) -> Result<DataSummary> {
    let d = &cfg.data;
    let m = Measurements::generate(&cfg.material, d.n1, d.n2, d.n_p, d.seed, &d.plan)?;
    let dm = data_material(&cfg.material, &m.polar(), &m.tensile, &d.interpolation)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(YIELD_FILE), |f| write_yield_points(f, &m.polar()))?;
    write_file(&dir.join(TENSILE_FILE), |f| write_tensile(f, &m.tensile))?;
    write_file(&dir.join(EXTENDED_FILE), |f| write_extended(f, &dm.data))?;
    Ok(DataSummary {
        yield_points: m.yield_points.len(),
        tensile_records: m.tensile.len(),
        increments: dm.data.len(),
        inelastic: dm.data.subset_len(crate::data::Subset::Inelastic),
        phi0: dm.surface.phi(0.0),
        seed: d.seed,
    })
}

/// Reads the yield points and tensile records written by [`generate_data_files`].
pub fn load_data_material(dir: &Path, material: &Material, interpolation: &str) -> Result<DataDrivenMaterial> {
    let points = load_yield_points(&dir.join(YIELD_FILE))?;
    let path = dir.join(TENSILE_FILE);
    let tensile = read_tensile(fs::File::open(&path).map_err(|e| Error::io(&path, e))?)?;
    data_material(material, &points, &tensile, interpolation)
}

/// The mesh label and the problem described by `cfg`.
pub fn build_problem(cfg: &RunConfig) -> Result<(Problem, String)> {
    let mesh = cfg.mesh.build()?;
    let label = cfg.mesh.label(&mesh);
    let problem = Problem::new(mesh, &cfg.boundary, &cfg.schedule, cfg.material, &cfg.linear_solver)?;
    Ok((problem, label))
}

/// Final-step quantities printed after a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub max_displacement: f64,
    pub max_principal_stress: f64,
    pub max_alpha_y: f64,
}

impl RunSummary {
    pub fn of(out: &StepOutput) -> Self {
        let max_displacement = out
            .displacement
            .chunks_exact(3)
            .map(|u| (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt())
            .fold(0.0, f64::max);
        let max_principal_stress = out
            .stress
            .iter()
            .map(|s| principal_frame(s).values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::NEG_INFINITY, f64::max);
        RunSummary {
            steps: out.step,
            max_displacement,
            max_principal_stress,
            max_alpha_y: out.hardening.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Runs solver `name` on `cfg`, writing every step into `out`.
pub fn run_to_dir(cfg: &RunConfig, name: &str, out: &Path) -> Result<RunSummary> {
    let data = if name == "datadriven" {
        Some(Arc::new(load_data_material(&cfg.data.dir, &cfg.material, &cfg.data.interpolation)?))
    } else {
        None
    };
    let solver = build_solver(name, &SolverContext { options: cfg.options, data })?;
    let (problem, label) = build_problem(cfg)?;
    let mut writer = RunWriter::create(out, problem.space.weights())?;
    let mut summary = RunSummary::default();
    solver.run(&problem, &mut |step| {
        writer.write_step(&step)?;
        summary = RunSummary::of(&step);
        Ok(())
    })?;
    writer.finish(&RunMeta {
        solver: name.to_string(),
        young: cfg.material.young,
        steps: problem.steps(),
        points: problem.space.points().len(),
        nodes: problem.space.mesh().node_count(),
        mesh: label,
    })?;
    Ok(summary)
}

/// Data directory of `cfg`, or `over` when given.
pub fn data_dir(cfg: &RunConfig, over: Option<&Path>) -> PathBuf {
    over.map(Path::to_path_buf).unwrap_or_else(|| cfg.data.dir.clone())
}
