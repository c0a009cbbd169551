//! Initial yield surface `Φ(θ)` in the octahedral plane.
//!
//! A yield surface is the deviatoric radius of the initial yield locus as a
//! function of the Lode angle. Isotropy makes it symmetric about `θ = 0` and
//! periodic with period `2π/3`, so evaluation at any angle folds back into the
//! principal sector `[0, π/3]`.

pub mod interp;
mod normal;

use std::f64::consts::FRAC_PI_3;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use normal::{
    normal_cartesian, normal_octahedral, octahedral_tangents, yield_normal, YieldNormal,
};

use crate::error::{Error, Result};
use crate::tensor::{haigh_westergaard, SymTensor3};
use interp::{Interpolant, PeriodicSamples};

const PERIOD: f64 = 2.0 * FRAC_PI_3;

pub trait YieldSurface: Send + Sync {
    fn phi(&self, theta: f64) -> f64;
    fn dphi(&self, theta: f64) -> f64;
}

/// Maps any angle into `[0, π/3]`; the second value is the sign picked up by
/// the derivative.
pub fn fold_theta(theta: f64) -> (f64, f64) {
    let t = theta.rem_euclid(PERIOD);
    if t > FRAC_PI_3 {
        (PERIOD - t, -1.0)
    } else {
        (t, 1.0)
    }
}

/// Closed-form surface of the k-parameterized yield criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticYield {
    pub k: f64,
    /// Initial yield stress `σ_y(0)`.
    pub sigma_y0: f64,
}

impl AnalyticYield {
    pub fn new(k: f64, sigma_y0: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
        }
        if !(sigma_y0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial yield stress must be positive, got {sigma_y0}"
            )));
        }
        Ok(AnalyticYield { k, sigma_y0 })
    }

    fn shape(&self, theta: f64) -> (f64, f64) {
        let c = 3f64.sqrt() / (2.0 * 2f64.sqrt());
        let a = 1.0 + 1.0 / self.k;
        let b = 1.0 - 1.0 / self.k;
        let g = c * (a - b * (3.0 * theta).cos());
        let dg = c * 3.0 * b * (3.0 * theta).sin();
        (g, dg)
    }
}

impl YieldSurface for AnalyticYield {
    fn phi(&self, theta: f64) -> f64 {
        self.sigma_y0 / self.shape(theta).0
    }

    fn dphi(&self, theta: f64) -> f64 {
        let (g, dg) = self.shape(theta);
        -self.sigma_y0 * dg / (g * g)
    }
}

/// `Φ(θ)` for the k-criterion; `k ≤ 0` is rejected.
pub fn phi_analytic(theta: f64, k: f64, sigma_y0: f64) -> Result<f64> {
    Ok(AnalyticYield::new(k, sigma_y0)?.phi(theta))
}

/// Yield surface interpolated from `(θ, ρ)` samples on the initial locus.
///
/// Samples are mirrored about `θ = π/3` before interpolation, so the
/// interpolant is periodic with period `2π/3` and even about both sector
/// ends: `Φ'(0) = Φ'(π/3) = 0` holds for the spline and linear kinds.
#[derive(Debug)]
pub struct FittedYield {
    points: Vec<(f64, f64)>,
    interpolant: Box<dyn Interpolant>,
}

/// Samples closer than this in θ count as duplicates.
const DUPLICATE_TOL: f64 = 1e-12;

impl FittedYield {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn kind(&self) -> &'static str {
        self.interpolant.name()
    }
}

impl YieldSurface for FittedYield {
    fn phi(&self, theta: f64) -> f64 {
        self.interpolant.value(theta)
    }

    fn dphi(&self, theta: f64) -> f64 {
        self.interpolant.derivative(theta)
    }
}

pub fn fit_yield(points: &[(f64, f64)], kind: &str) -> Result<FittedYield> {
    if points.len() < 2 {
        return Err(Error::YieldFit(format!(
            "need at least 2 yield points, got {}",
            points.len()
        )));
    }
    let mut sorted = points.to_vec();
    for &(theta, rho) in &sorted {
        if !(-DUPLICATE_TOL..=FRAC_PI_3 + DUPLICATE_TOL).contains(&theta) {
            return Err(Error::YieldFit(format!("theta {theta} outside [0, pi/3]")));
        }
        if !(rho > 0.0) {
            return Err(Error::YieldFit(format!("rho must be positive, got {rho}")));
        }
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = sorted.windows(2).find(|w| w[1].0 - w[0].0 <= DUPLICATE_TOL) {
        return Err(Error::YieldFit(format!("duplicate theta {}", w[0].0)));
    }

    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(2 * sorted.len());
    for &(theta, rho) in &sorted {
        let theta = theta.clamp(0.0, FRAC_PI_3);
        knots.push((theta, rho));
        let mirror = PERIOD - theta;
        // sector ends are their own mirror images
        if theta > DUPLICATE_TOL && (FRAC_PI_3 - theta) > DUPLICATE_TOL {
            knots.push((mirror, rho));
        }
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let samples = PeriodicSamples {
        x: knots.iter().map(|k| k.0).collect(),
        y: knots.iter().map(|k| k.1).collect(),
        period: PERIOD,
    };
    let interpolant = interp::build(kind, samples)?;
    Ok(FittedYield {
        points: sorted,
        interpolant,
    })
}

/// Comparison stress `α = ρ / Φ(θ)`; zero for hydrostatic states.
pub fn comparison_stress(sigma: &SymTensor3, surface: &dyn YieldSurface) -> f64 {
    let hw = haigh_westergaard(sigma);
    if hw.degenerate {
        return 0.0;
    }
    hw.rho / surface.phi(hw.theta)
}

#[derive(Debug, Serialize, Deserialize)]
struct YieldPointRow {
    theta: f64,
    rho: f64,
}

pub fn write_yield_points<W: Write>(writer: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for &(theta, rho) in points {
        w.serialize(YieldPointRow { theta, rho })?;
    }
    w.flush().map_err(|e| Error::io("<yield points>", e))?;
    Ok(())
}

pub fn read_yield_points<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta", "rho"] {
        return Err(Error::Parse(format!(
            "yield-point header must be 'theta,rho', got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize::<YieldPointRow>()
        .map(|row| row.map(|p| (p.theta, p.rho)).map_err(Error::from))
        .collect()
}

pub fn load_yield_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_yield_points(file)
}
