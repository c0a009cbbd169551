//! Tetrahedral meshes, their text format and a few structured generators.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementOrder {
    /// 4-node linear tetrahedron.
    #[serde(rename = "1")]
    Linear,
    /// 10-node quadratic tetrahedron.
    #[serde(rename = "2")]
    Quadratic,
}

impl ElementOrder {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementOrder::Linear => 4,
            ElementOrder::Quadratic => 10,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            ElementOrder::Linear => 1,
            ElementOrder::Quadratic => 2,
        }
    }

    pub fn from_degree(p: usize) -> Result<Self> {
        match p {
            1 => Ok(ElementOrder::Linear),
            2 => Ok(ElementOrder::Quadratic),
            _ => Err(Error::InvalidMesh(format!("unsupported element order {p}"))),
        }
    }
}

/// Edge list of a quadratic tetrahedron: midside node `4 + i` sits on
/// `EDGES[i]`.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3)];

/// Faces of a tetrahedron, by corner index, each opposite one corner.
pub const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 3]>,
    /// Connectivity: 4 corners, then 6 midside nodes for quadratic elements.
    pub elements: Vec<Vec<usize>>,
    pub order: ElementOrder,
}

impl Mesh {
    pub fn new(nodes: Vec<[f64; 3]>, elements: Vec<Vec<usize>>, order: ElementOrder) -> Result<Self> {
        let mesh = Mesh {
            nodes,
            elements,
            order,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let nen = self.order.nodes_per_element();
        if self.elements.is_empty() {
            return Err(Error::InvalidMesh("no elements".into()));
        }
        for (e, conn) in self.elements.iter().enumerate() {
            if conn.len() != nen {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has {} nodes, expected {nen}",
                    conn.len()
                )));
            }
            if let Some(&n) = conn.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element {e} references node {n} but the mesh has {} nodes",
                    self.nodes.len()
                )));
            }
            let det = self.corner_jacobian(e).determinant();
            if !(det > 0.0) {
                return Err(Error::InvertedElement { element: e, det });
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn node(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.nodes[i])
    }

    /// Columns are the edge vectors from corner 0 to corners 1, 2 and 3.
    pub fn corner_jacobian(&self, e: usize) -> Matrix3<f64> {
        let c = &self.elements[e];
        let x0 = self.node(c[0]);
        Matrix3::from_columns(&[self.node(c[1]) - x0, self.node(c[2]) - x0, self.node(c[3]) - x0])
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        self.corner_jacobian(e).determinant() / 6.0
    }

    pub fn volume(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_volume(e)).sum()
    }

    /// Smallest box containing all nodes, as `(min, max)`.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.nodes {
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Quadratic version of a linear mesh with straight-sided edges.
    pub fn to_quadratic(&self) -> Result<Mesh> {
        if self.order == ElementOrder::Quadratic {
            return Ok(self.clone());
        }
        let mut nodes = self.nodes.clone();
        let mut midside: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut elements = Vec::with_capacity(self.elements.len());
        for conn in &self.elements {
            let mut q = conn.clone();
            for &(a, b) in &EDGES {
                let key = (conn[a].min(conn[b]), conn[a].max(conn[b]));
                let id = *midside.entry(key).or_insert_with(|| {
                    let (pa, pb) = (self.nodes[key.0], self.nodes[key.1]);
                    nodes.push([
                        0.5 * (pa[0] + pb[0]),
                        0.5 * (pa[1] + pb[1]),
                        0.5 * (pa[2] + pb[2]),
                    ]);
                    nodes.len() - 1
                });
                q.push(id);
            }
            elements.push(q);
        }
        Mesh::new(nodes, elements, ElementOrder::Quadratic)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "nodes {} elements {} order {}",
            self.nodes.len(),
            self.elements.len(),
            self.order.degree()
        );
        for p in &self.nodes {
            let _ = writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2]);
        }
        for conn in &self.elements {
            let line: Vec<String> = conn.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "nodes" || h[2] != "elements" || h[4] != "order" {
            return Err(Error::Parse(format!(
                "mesh header must read 'nodes N elements M order P', got '{header}'"
            )));
        }
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad count '{s}': {e}")))
        };
        let (n, m, order) = (count(h[1])?, count(h[3])?, ElementOrder::from_degree(count(h[5])?)?);

        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing coordinate line {i}")))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("node {i}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != 3 {
                return Err(Error::Parse(format!("node {i}: expected 3 coordinates")));
            }
            nodes.push([v[0], v[1], v[2]]);
        }
        let mut elements = Vec::with_capacity(m);
        for e in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing connectivity line {e}")))?;
            let conn: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|err| Error::Parse(format!("element {e}: {err}"))))
                .collect::<Result<_>>()?;
            elements.push(conn);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after connectivity".into()));
        }
        Mesh::new(nodes, elements, order)
    }

    pub fn load(path: &Path) -> Result<Mesh> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Mesh::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Splits a logically structured hexahedral grid into tetrahedra. `coord`
/// maps grid indices to positions; every hexahedron is cut into six tets
/// along its main diagonal, which keeps neighbouring cells conforming.
fn structured_tets<F>(n: [usize; 3], coord: F) -> Result<Mesh>
where
    F: Fn(usize, usize, usize) -> [f64; 3],
{
    let [nx, ny, nz] = n;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidParameter("grid divisions must be positive".into()));
    }
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(coord(i, j, k));
            }
        }
    }
    const PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for path in PATHS {
                    let mut at = [i, j, k];
                    let mut tet = vec![id(at[0], at[1], at[2])];
                    for axis in path {
                        at[axis] += 1;
                        tet.push(id(at[0], at[1], at[2]));
                    }
                    elements.push(tet);
                }
            }
        }
    }
    let mut mesh = Mesh {
        nodes,
        elements,
        order: ElementOrder::Linear,
    };
    for e in 0..mesh.elements.len() {
        if mesh.corner_jacobian(e).determinant() < 0.0 {
            mesh.elements[e].swap(2, 3);
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Box `[0, lx] × [0, ly] × [0, lz]` with the given divisions per side.
pub fn box_mesh(divisions: [usize; 3], size: [f64; 3]) -> Result<Mesh> {
    if size.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter("box dimensions must be positive".into()));
    }
    let [nx, ny, nz] = divisions;
    structured_tets(divisions, |i, j, k| {
        [
            size[0] * i as f64 / nx as f64,
            size[1] * j as f64 / ny as f64,
            size[2] * k as f64 / nz as f64,
        ]
    })
}

/// Quarter of a rectangular plate `[0, a] × [0, b] × [0, c]` with a circular
/// hole of radius `r` centred on the z axis.
///
/// The plane region is one structured block whose arc index runs from the
/// x axis to the y axis; its first half maps to the edge `x = a`, its second
/// half to the edge `y = b`, meeting on the ray through the corner `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    /// Cells along each half of the hole arc.
    pub arc: usize,
    /// Cells from the hole to the outer edge.
    pub radial: usize,
    /// Cells through the thickness.
    pub thickness: usize,
}

impl Default for PlateSpec {
    fn default() -> Self {
        PlateSpec {
            a: 5.0,
            b: 5.0,
            c: 2.0,
            r: 1.0,
            arc: 4,
            radial: 4,
            thickness: 2,
        }
    }
}

pub fn quarter_plate(spec: &PlateSpec) -> Result<Mesh> {
    let PlateSpec { a, b, c, r, arc, radial, thickness } = *spec;
    if !(a > 0.0 && b > 0.0 && c > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter("plate dimensions must be positive".into()));
    }
    if r >= a.min(b) {
        return Err(Error::InvalidParameter(format!(
            "hole radius {r} does not fit inside a {a} x {b} plate"
        )));
    }
    let corner = b.atan2(a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    structured_tets([2 * arc, radial, thickness], |i, j, k| {
        let (phi, outer) = if i <= arc {
            let s = i as f64 / arc as f64;
            (s * corner, [a, s * b])
        } else {
            let s = (i - arc) as f64 / arc as f64;
            (corner + s * (half_pi - corner), [a * (1.0 - s), b])
        };
        let t = j as f64 / radial as f64;
        let inner = [r * phi.cos(), r * phi.sin()];
        [
            (1.0 - t) * inner[0] + t * outer[0],
            (1.0 - t) * inner[1] + t * outer[1],
            c * k as f64 / thickness as f64,
        ]
    })
}
