//! Symmetric second-rank tensors, Voigt packing, stress invariants and
//! Haigh-Westergaard coordinates.
//!
//! Voigt convention used throughout the crate: component order
//! `(11, 22, 33, 23, 13, 12)`. Stress-like tensors are packed raw, strain-like
//! tensors carry engineering shear (off-diagonals doubled), so that
//! `voigt_stress(σ) · voigt_strain(ε) = σ : ε` and 6×6 stiffness matrices act
//! on strain vectors without extra scaling.

use std::f64::consts::{FRAC_PI_3, PI};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, Vector3, Vector6};

/// Voigt-packed symmetric tensor, see the module docs for the convention.
pub type Voigt6 = Vector6<f64>;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Symmetric 3×3 tensor stored as its six independent components
/// `(11, 22, 33, 23, 13, 12)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor3(pub [f64; 6]);

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3([0.0; 6]);
    pub const IDENTITY: SymTensor3 = SymTensor3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);

    pub fn new(c11: f64, c22: f64, c33: f64, c23: f64, c13: f64, c12: f64) -> Self {
        SymTensor3([c11, c22, c33, c23, c13, c12])
    }

    pub fn diag(d1: f64, d2: f64, d3: f64) -> Self {
        SymTensor3([d1, d2, d3, 0.0, 0.0, 0.0])
    }

    /// Component `(i, j)` with zero-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[Self::slot(i, j)]
    }

    fn slot(i: usize, j: usize) -> usize {
        match (i.min(j), i.max(j)) {
            (0, 0) => 0,
            (1, 1) => 1,
            (2, 2) => 2,
            (1, 2) => 3,
            (0, 2) => 4,
            (0, 1) => 5,
            _ => panic!("tensor index out of range: ({i}, {j})"),
        }
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Double contraction `a : b`.
    pub fn ddot(&self, other: &SymTensor3) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    /// Frobenius norm of the full 3×3 tensor.
    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn deviator(&self) -> SymTensor3 {
        let m = self.trace() / 3.0;
        let c = self.0;
        SymTensor3([c[0] - m, c[1] - m, c[2] - m, c[3], c[4], c[5]])
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        // | a f e |
        // | f b d |
        // | e d c |
        a * (b * c - d * d) - f * (f * c - d * e) + e * (f * d - b * e)
    }

    /// Symmetric part of `self · other`.
    pub fn sym_product(&self, other: &SymTensor3) -> SymTensor3 {
        let p = self.to_matrix() * other.to_matrix();
        SymTensor3::from_matrix(&(0.5 * (p + p.transpose())))
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let [a, b, c, d, e, f] = self.0;
        Matrix3::new(a, f, e, f, b, d, e, d, c)
    }

    /// Packs the symmetric part of `m`.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        SymTensor3([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(1, 2)] + m[(2, 1)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(0, 1)] + m[(1, 0)]),
        ])
    }

    pub fn to_voigt_stress(&self) -> Voigt6 {
        Voigt6::from_column_slice(&self.0)
    }

    pub fn to_voigt_strain(&self) -> Voigt6 {
        let c = self.0;
        Voigt6::new(c[0], c[1], c[2], 2.0 * c[3], 2.0 * c[4], 2.0 * c[5])
    }

    pub fn from_voigt_stress(v: &Voigt6) -> Self {
        SymTensor3([v[0], v[1], v[2], v[3], v[4], v[5]])
    }

    pub fn from_voigt_strain(v: &Voigt6) -> Self {
        SymTensor3([v[0], v[1], v[2], 0.5 * v[3], 0.5 * v[4], 0.5 * v[5]])
    }

    /// Mandel packing (shear scaled by √2): an orthonormal coordinate system
    /// for symmetric tensors, so that `a : b` is the plain dot product.
    pub fn to_mandel(&self) -> Voigt6 {
        let c = self.0;
        Voigt6::new(c[0], c[1], c[2], SQRT_2 * c[3], SQRT_2 * c[4], SQRT_2 * c[5])
    }

    pub fn from_mandel(v: &Voigt6) -> Self {
        SymTensor3([v[0], v[1], v[2], v[3] / SQRT_2, v[4] / SQRT_2, v[5] / SQRT_2])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(mut self, rhs: SymTensor3) -> SymTensor3 {
        self += rhs;
        self
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, rhs: SymTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(mut self, rhs: SymTensor3) -> SymTensor3 {
        self -= rhs;
        self
    }
}

impl SubAssign for SymTensor3 {
    fn sub_assign(&mut self, rhs: SymTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    fn mul(self, rhs: SymTensor3) -> SymTensor3 {
        SymTensor3(rhs.0.map(|c| self * c))
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(self, rhs: f64) -> SymTensor3 {
        rhs * self
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        -1.0 * self
    }
}

/// Stress invariants `J1 = tr σ`, `J2 = ½ s:s`, `J3 = det s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Invariants {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

pub fn invariants(sigma: &SymTensor3) -> Invariants {
    let s = sigma.deviator();
    Invariants {
        j1: sigma.trace(),
        j2: 0.5 * s.ddot(&s),
        j3: s.det(),
    }
}

pub fn deviator(sigma: &SymTensor3) -> SymTensor3 {
    sigma.deviator()
}

/// Cylindrical coordinates in principal stress space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HwCoords {
    pub xi: f64,
    pub rho: f64,
    /// Lode angle in `[0, π/3]`; zero when `degenerate` is set.
    pub theta: f64,
    /// Set for purely hydrostatic states, where the Lode angle is undefined.
    pub degenerate: bool,
}

/// Relative threshold below which the deviatoric radius counts as zero.
const DEGENERATE_RHO: f64 = 1e-13;

pub fn haigh_westergaard(sigma: &SymTensor3) -> HwCoords {
    let inv = invariants(sigma);
    let xi = inv.j1 / 3f64.sqrt();
    let rho = (2.0 * inv.j2.max(0.0)).sqrt();
    let scale = sigma.max_abs();
    if rho <= DEGENERATE_RHO * scale || rho == 0.0 {
        return HwCoords {
            xi,
            rho,
            theta: 0.0,
            degenerate: true,
        };
    }
    let arg = 1.5 * 3f64.sqrt() * inv.j3 / inv.j2.powf(1.5);
    HwCoords {
        xi,
        rho,
        theta: arg.clamp(-1.0, 1.0).acos() / 3.0,
        degenerate: false,
    }
}

/// Unit direction `(cos θ, cos(θ − 2π/3), cos(θ + 2π/3))` scaled by √(2/3):
/// the principal deviator of unit radius at Lode angle θ.
pub fn lode_direction(theta: f64) -> Vector3<f64> {
    let c = (2.0 / 3.0_f64).sqrt();
    Vector3::new(
        c * theta.cos(),
        c * (theta - 2.0 * PI / 3.0).cos(),
        c * (theta + 2.0 * PI / 3.0).cos(),
    )
}

/// Principal stresses `σ1 ≥ σ2 ≥ σ3` from Haigh-Westergaard coordinates.
pub fn reconstruct_principal(c: &HwCoords) -> [f64; 3] {
    debug_assert!(c.rho >= 0.0);
    let p = c.xi / 3f64.sqrt();
    let d = c.rho * lode_direction(c.theta.clamp(0.0, FRAC_PI_3));
    [p + d[0], p + d[1], p + d[2]]
}

/// Eigen-decomposition `σ = T · diag(σ1, σ2, σ3) · Tᵀ` with descending
/// eigenvalues and a proper rotation `T` (columns are eigenvectors).
#[derive(Clone, Copy, Debug)]
pub struct PrincipalFrame {
    pub values: [f64; 3],
    pub rotation: Matrix3<f64>,
}

impl PrincipalFrame {
    /// `T · diag(d) · Tᵀ`.
    pub fn rotate_diagonal(&self, d: &Vector3<f64>) -> SymTensor3 {
        let t = &self.rotation;
        let m = t * Matrix3::from_diagonal(d) * t.transpose();
        SymTensor3::from_matrix(&m)
    }

    pub fn reconstruct(&self) -> SymTensor3 {
        self.rotate_diagonal(&Vector3::from(self.values))
    }
}

/// Cyclic Jacobi eigen-solver for a symmetric 3×3 matrix.
pub fn principal_frame(sigma: &SymTensor3) -> PrincipalFrame {
    let mut a = sigma.to_matrix();
    let mut v = Matrix3::<f64>::identity();
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        for _sweep in 0..64 {
            let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let mut rot = Matrix3::<f64>::identity();
                rot[(p, p)] = c;
                rot[(q, q)] = c;
                rot[(p, q)] = s;
                rot[(q, p)] = -s;
                a = rot.transpose() * a * rot;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                v *= rot;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.map(|i| a[(i, i)]);
    let mut rotation = Matrix3::from_columns(&order.map(|i| v.column(i).into_owned()));
    if rotation.determinant() < 0.0 {
        rotation.set_column(2, &(-rotation.column(2)));
    }
    PrincipalFrame { values, rotation }
}
