//! Boundary selections, Dirichlet constraints and consistent traction loads.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::mesh::{ElementOrder, Mesh, EDGES, FACES};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Coordinate plane `x_axis = at`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plane {
    pub axis: Axis,
    pub at: f64,
}

fn plane_tolerance(mesh: &Mesh) -> f64 {
    let (lo, hi) = mesh.bounds();
    let size = (0..3).map(|d| hi[d] - lo[d]).fold(0.0_f64, f64::max);
    1e-9 * size.max(1e-300)
}

impl Plane {
    fn contains(&self, p: &[f64; 3], tol: f64) -> bool {
        (p[self.axis.index()] - self.at).abs() <= tol
    }

    /// Nodes lying on the plane, ascending.
    pub fn nodes(&self, mesh: &Mesh) -> Vec<usize> {
        let tol = plane_tolerance(mesh);
        (0..mesh.node_count())
            .filter(|&i| self.contains(&mesh.nodes[i], tol))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dirichlet {
    pub node: usize,
    /// 0, 1 or 2 for the x, y and z displacement.
    pub dof: usize,
    pub value: f64,
}

impl Dirichlet {
    pub fn global_dof(&self) -> usize {
        3 * self.node + self.dof
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryConditions {
    pub dirichlet: Vec<Dirichlet>,
    /// External nodal forces, one entry per global dof.
    pub force: Vec<f64>,
}

impl BoundaryConditions {
    pub fn validate(&self, ndof: usize) -> Result<()> {
        if self.force.len() != ndof {
            return Err(Error::Boundary(format!(
                "force vector has {} entries, expected {ndof}",
                self.force.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for d in &self.dirichlet {
            if d.dof > 2 || d.global_dof() >= ndof {
                return Err(Error::Boundary(format!(
                    "constraint on node {} dof {} is out of range",
                    d.node, d.dof
                )));
            }
            if !seen.insert(d.global_dof()) {
                return Err(Error::Boundary(format!(
                    "node {} dof {} is constrained twice",
                    d.node, d.dof
                )));
            }
        }
        Ok(())
    }

    /// `(global dof, value)` pairs.
    pub fn prescribed(&self) -> Vec<(usize, f64)> {
        self.dirichlet.iter().map(|d| (d.global_dof(), d.value)).collect()
    }
}

/// Boundary faces (corner triples plus, for quadratic meshes, their three
/// midside nodes) of the mesh that lie on `plane`.
fn faces_on(mesh: &Mesh, plane: &Plane) -> Vec<(Vec<usize>, f64)> {
    let tol = plane_tolerance(mesh);
    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    for conn in &mesh.elements {
        for f in &FACES {
            let mut key = [conn[f[0]], conn[f[1]], conn[f[2]]];
            key.sort_unstable();
            *count.entry(key).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for conn in &mesh.elements {
        for f in &FACES {
            let corners = [conn[f[0]], conn[f[1]], conn[f[2]]];
            let mut key = corners;
            key.sort_unstable();
            if count[&key] != 1 || !corners.iter().all(|&n| plane.contains(&mesh.nodes[n], tol)) {
                continue;
            }
            let p = corners.map(|n| mesh.node(n));
            let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            let mut nodes = corners.to_vec();
            if mesh.order == ElementOrder::Quadratic {
                for (e, &(a, b)) in EDGES.iter().enumerate() {
                    if f.contains(&a) && f.contains(&b) {
                        nodes.push(conn[4 + e]);
                    }
                }
            }
            out.push((nodes, area));
        }
    }
    out
}

/// Consistent nodal forces of a uniform traction (force per area) on the
/// boundary faces lying on `plane`.
pub fn traction_load(mesh: &Mesh, plane: &Plane, traction: [f64; 3]) -> Result<Vec<f64>> {
    let faces = faces_on(mesh, plane);
    if faces.is_empty() {
        return Err(Error::Boundary(format!(
            "no boundary faces on the plane {:?} = {}",
            plane.axis, plane.at
        )));
    }
    let mut f = vec![0.0; 3 * mesh.node_count()];
    for (nodes, area) in faces {
        // linear faces share the load equally between corners; quadratic
        // faces put all of it on the midside nodes
        let share: Vec<(usize, f64)> = match mesh.order {
            ElementOrder::Linear => nodes.iter().map(|&n| (n, area / 3.0)).collect(),
            ElementOrder::Quadratic => nodes[3..].iter().map(|&n| (n, area / 3.0)).collect(),
        };
        for (n, w) in share {
            for d in 0..3 {
                f[3 * n + d] += w * traction[d];
            }
        }
    }
    Ok(f)
}
