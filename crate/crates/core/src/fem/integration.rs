//! Quadrature points with their weights and strain-displacement operators.

use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use rayon::prelude::*;

use super::mesh::{ElementOrder, Mesh, EDGES};
use crate::error::{Error, Result};
use crate::tensor::SymTensor3;

#[derive(Clone, Debug)]
pub struct IntegrationPoint {
    pub element: usize,
    /// Quadrature index within the element.
    pub local: usize,
    /// Quadrature weight times the Jacobian determinant.
    pub weight: f64,
    /// Maps element displacements (x, y, z per node) to Voigt strain.
    pub b: DMatrix<f64>,
    /// Global degrees of freedom of the element, in the column order of `b`.
    pub dofs: Vec<usize>,
}

impl IntegrationPoint {
    pub fn strain(&self, u: &[f64]) -> SymTensor3 {
        let local = DVector::from_iterator(self.dofs.len(), self.dofs.iter().map(|&d| u[d]));
        let v = &self.b * local;
        SymTensor3::from_voigt_strain(&nalgebra::Vector6::from_column_slice(v.as_slice()))
    }
}

/// Symmetric 4-point rule for tetrahedra, exact for quadratics.
const QUAD4_A: f64 = 0.585_410_196_624_968_5;
const QUAD4_B: f64 = 0.138_196_601_125_010_5;

fn quadrature(order: ElementOrder) -> Vec<(Vector4<f64>, f64)> {
    match order {
        ElementOrder::Linear => vec![(Vector4::repeat(0.25), 1.0)],
        ElementOrder::Quadratic => (0..4)
            .map(|i| {
                let mut l = Vector4::repeat(QUAD4_B);
                l[i] = QUAD4_A;
                (l, 0.25)
            })
            .collect(),
    }
}

/// Gradients of the shape functions at barycentric point `l`, given the
/// gradients of the four barycentric coordinates.
fn shape_gradients(order: ElementOrder, l: &Vector4<f64>, grad_l: &[Vector3<f64>; 4]) -> Vec<Vector3<f64>> {
    match order {
        ElementOrder::Linear => grad_l.to_vec(),
        ElementOrder::Quadratic => {
            let mut g: Vec<Vector3<f64>> = (0..4).map(|i| (4.0 * l[i] - 1.0) * grad_l[i]).collect();
            for &(a, b) in &EDGES {
                g.push(4.0 * (l[a] * grad_l[b] + l[b] * grad_l[a]));
            }
            g
        }
    }
}

fn b_matrix(grads: &[Vector3<f64>]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(6, 3 * grads.len());
    for (a, g) in grads.iter().enumerate() {
        let c = 3 * a;
        b[(0, c)] = g[0];
        b[(1, c + 1)] = g[1];
        b[(2, c + 2)] = g[2];
        b[(3, c + 1)] = g[2];
        b[(3, c + 2)] = g[1];
        b[(4, c)] = g[2];
        b[(4, c + 2)] = g[0];
        b[(5, c)] = g[1];
        b[(5, c + 1)] = g[0];
    }
    b
}

fn element_points(mesh: &Mesh, e: usize) -> Result<Vec<IntegrationPoint>> {
    let jac = mesh.corner_jacobian(e);
    let det = jac.determinant();
    if !(det > 0.0) {
        return Err(Error::InvertedElement { element: e, det });
    }
    let inv = jac
        .try_inverse()
        .ok_or(Error::InvertedElement { element: e, det })?;
    // rows of J⁻¹ are the gradients of L1, L2, L3
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    let grad_l = [-(g1 + g2 + g3), g1, g2, g3];
    let volume = det / 6.0;
    let conn = &mesh.elements[e];
    let dofs: Vec<usize> = conn.iter().flat_map(|&n| [3 * n, 3 * n + 1, 3 * n + 2]).collect();
    Ok(quadrature(mesh.order)
        .into_iter()
        .enumerate()
        .map(|(q, (l, w))| IntegrationPoint {
            element: e,
            local: q,
            weight: w * volume,
            b: b_matrix(&shape_gradients(mesh.order, &l, &grad_l)),
            dofs: dofs.clone(),
        })
        .collect())
}

/// All quadrature points of the mesh, ordered by element then local index.
pub fn build_integration(mesh: &Mesh) -> Result<Vec<IntegrationPoint>> {
    let per_element: Vec<Vec<IntegrationPoint>> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| element_points(mesh, e))
        .collect::<Result<_>>()?;
    Ok(per_element.into_iter().flatten().collect())
}
