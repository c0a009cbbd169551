//! Periodic one-dimensional interpolants used to represent a fitted yield
//! surface, registered by name.

use std::fmt::Debug;

use crate::error::{Error, Result};

/// Strictly increasing abscissae in `[0, period)` with their values. The
/// interpolant is periodic: the last knot connects back to the first one.
#[derive(Clone, Debug)]
pub struct PeriodicSamples {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub period: f64,
}

impl PeriodicSamples {
    fn len(&self) -> usize {
        self.x.len()
    }

    /// Index `i` of the interval `[x_i, x_{i+1})` (cyclic) containing `t`, and
    /// the offset of `t` from `x_i`. `t` must already be reduced to one period.
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.len();
        let k = self.x.partition_point(|&xi| xi <= t);
        if k == 0 {
            // before the first knot: in the wrap-around interval
            (n - 1, t + self.period - self.x[n - 1])
        } else {
            (k - 1, t - self.x[k - 1])
        }
    }

    fn width(&self, i: usize) -> f64 {
        let n = self.len();
        if i + 1 < n {
            self.x[i + 1] - self.x[i]
        } else {
            self.x[0] + self.period - self.x[n - 1]
        }
    }

    fn reduce(&self, t: f64) -> f64 {
        let r = t.rem_euclid(self.period);
        if r >= self.period {
            0.0
        } else {
            r
        }
    }
}

pub trait Interpolant: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

type Builder = fn(PeriodicSamples) -> Result<Box<dyn Interpolant>>;

const REGISTRY: &[(&str, Builder)] = &[
    ("spline", |s| Ok(Box::new(PeriodicSpline::new(s)?))),
    ("linear", |s| Ok(Box::new(PiecewiseLinear(s)))),
    ("nearest", |s| Ok(Box::new(Nearest(s)))),
];

pub fn available() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn build(name: &str, samples: PeriodicSamples) -> Result<Box<dyn Interpolant>> {
    let (_, builder) = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "interpolation",
            name: name.to_string(),
            available: available().join(", "),
        })?;
    builder(samples)
}

/// Periodic cubic spline with analytic first derivative.
#[derive(Debug)]
pub struct PeriodicSpline {
    samples: PeriodicSamples,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(samples: PeriodicSamples) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::YieldFit("spline needs at least 2 knots".into()));
        }
        let h: Vec<f64> = (0..n).map(|i| samples.width(i)).collect();
        let y = &samples.y;
        // row i: h_{i-1} M_{i-1} + 2 (h_{i-1} + h_i) M_i + h_i M_{i+1} = rhs_i
        let prev = |i: usize| (i + n - 1) % n;
        let next = |i: usize| (i + 1) % n;
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                6.0 * ((y[next(i)] - y[i]) / h[i] - (y[i] - y[prev(i)]) / h[prev(i)])
            })
            .collect();
        let m = if n < 3 {
            let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                a[(i, i)] += 2.0 * (h[prev(i)] + h[i]);
                a[(i, prev(i))] += h[prev(i)];
                a[(i, next(i))] += h[i];
            }
            let b = nalgebra::DVector::from_vec(rhs);
            let sol = a
                .lu()
                .solve(&b)
                .ok_or_else(|| Error::YieldFit("singular spline system".into()))?;
            sol.iter().copied().collect()
        } else {
            let lower: Vec<f64> = (0..n).map(|i| h[prev(i)]).collect();
            let diag: Vec<f64> = (0..n).map(|i| 2.0 * (h[prev(i)] + h[i])).collect();
            let upper: Vec<f64> = h.clone();
            solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs)
        };
        Ok(PeriodicSpline { samples, m })
    }
}

impl Interpolant for PeriodicSpline {
    fn name(&self) -> &'static str {
        "spline"
    }

    fn value(&self, x: f64) -> f64 {
        let s = &self.samples;
        let (i, t) = s.locate(s.reduce(x));
        let j = (i + 1) % s.len();
        let h = s.width(i);
        let (mi, mj) = (self.m[i], self.m[j]);
        let u = h - t;
        mi * u.powi(3) / (6.0 * h)
            + mj * t.powi(3) / (6.0 * h)
            + (s.y[i] / h - mi * h / 6.0) * u
            + (s.y[j] / h - mj * h / 6.0) * t
    }

    fn derivative(&self, x: f64) -> f64 {
        let s = &self.samples;
        let (i, t) = s.locate(s.reduce(x));
        let j = (i + 1) % s.len();
        let h = s.width(i);
        let (mi, mj) = (self.m[i], self.m[j]);
        let u = h - t;
        -mi * u * u / (2.0 * h) + mj * t * t / (2.0 * h) + (s.y[j] - s.y[i]) / h
            - (mj - mi) * h / 6.0
    }
}

/// Sherman-Morrison reduction of a cyclic tridiagonal system to two Thomas
/// solves. `lower[0]` couples row 0 to the last unknown, `upper[n-1]` couples
/// the last row to unknown 0.
fn solve_cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let x = thomas(lower, &b, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(lower, &b, upper, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[derive(Debug)]
pub struct PiecewiseLinear(PeriodicSamples);

impl Interpolant for PiecewiseLinear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn value(&self, x: f64) -> f64 {
        let s = &self.0;
        let (i, t) = s.locate(s.reduce(x));
        let j = (i + 1) % s.x.len();
        s.y[i] + (s.y[j] - s.y[i]) * t / s.width(i)
    }

    fn derivative(&self, x: f64) -> f64 {
        let s = &self.0;
        let (i, _) = s.locate(s.reduce(x));
        let j = (i + 1) % s.x.len();
        (s.y[j] - s.y[i]) / s.width(i)
    }
}

/// Piecewise constant; the derivative is zero everywhere.
#[derive(Debug)]
pub struct Nearest(PeriodicSamples);

impl Interpolant for Nearest {
    fn name(&self) -> &'static str {
        "nearest"
    }

    fn value(&self, x: f64) -> f64 {
        let s = &self.0;
        let (i, t) = s.locate(s.reduce(x));
        let j = (i + 1) % s.x.len();
        // ties go to the left knot
        if t <= s.width(i) - t {
            s.y[i]
        } else {
            s.y[j]
        }
    }

    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }
}
