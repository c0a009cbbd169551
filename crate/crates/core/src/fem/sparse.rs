//! Compressed sparse row storage for symmetric stiffness matrices and the
//! linear solvers that act on it.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the sparsity of the given element couplings: every
    /// pair of dofs sharing an element gets an entry.
    pub fn from_couplings<'a, I>(n: usize, groups: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for g in groups {
            for &i in g {
                rows[i].extend(g.iter().copied());
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows {
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let values = vec![0.0; cols.len()];
        CsrMatrix {
            n,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn from_dense(a: &nalgebra::DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    cols.push(j);
                    values.push(a[(i, j)]);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds to an existing entry; panics outside the sparsity pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Principal submatrix on `keep` (ascending global indices).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for &old in keep {
            for (j, v) in self.row(old) {
                if map[j] != usize::MAX {
                    cols.push(map[j]);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n: keep.len(),
            row_ptr,
            cols,
            values,
        }
    }
}

pub trait LinearSolver: Send + Sync {
    fn name(&self) -> &'static str;
    /// Solves `a x = b` for symmetric positive definite `a`.
    fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>>;
}

type Builder = fn() -> Box<dyn LinearSolver>;

const REGISTRY: &[(&str, Builder)] = &[
    ("cholesky", || Box::new(SkylineCholesky)),
    ("cg", || Box::new(ConjugateGradient::default())),
];

pub fn available_solvers() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn linear_solver(name: &str) -> Result<Box<dyn LinearSolver>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, b)| b())
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "linear solver",
            name: name.to_string(),
            available: available_solvers().join(", "),
        })
}

/// Reverse Cuthill-McKee ordering of the matrix graph; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factorization after a bandwidth-reducing
/// reordering.
#[derive(Clone, Copy, Debug)]
pub struct SkylineCholesky;

struct Envelope {
    first: Vec<usize>,
    /// Row `i` holds columns `first[i]..=i`, starting at `start[i]`.
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Envelope {
    fn at(&self, i: usize, j: usize) -> f64 {
        if j < self.first[i] {
            0.0
        } else {
            self.data[self.start[i] + j - self.first[i]]
        }
    }
}

impl LinearSolver for SkylineCholesky {
    fn name(&self) -> &'static str {
        "cholesky"
    }

    fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.dim();
        if n == 0 {
            return Ok(Vec::new());
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            first[new] = a.row(old).map(|(j, _)| inv[j]).filter(|&j| j <= new).min().unwrap_or(new);
        }
        let mut start = Vec::with_capacity(n);
        let mut len = 0;
        for i in 0..n {
            start.push(len);
            len += i - first[i] + 1;
        }
        let mut env = Envelope {
            first,
            start,
            data: vec![0.0; len],
        };
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn <= new {
                    let k = env.start[new] + jn - env.first[new];
                    env.data[k] = v;
                }
            }
        }
        let max_diag = (0..n).map(|i| env.at(i, i).abs()).fold(0.0_f64, f64::max);
        for i in 0..n {
            let fi = env.first[i];
            for j in fi..i {
                let lo = fi.max(env.first[j]);
                let mut s = env.at(i, j);
                let (ri, rj) = (env.start[i] - fi, env.start[j] - env.first[j]);
                for k in lo..j {
                    s -= env.data[ri + k] * env.data[rj + k];
                }
                env.data[ri + j] = s / env.data[rj + j];
            }
            let ri = env.start[i] - fi;
            let mut d = env.data[ri + i];
            for k in fi..i {
                d -= env.data[ri + k] * env.data[ri + k];
            }
            if !(d > 1e-13 * max_diag) {
                return Err(Error::SingularSystem(format!(
                    "non-positive pivot {d:e} in row {} (unconstrained rigid motion?)",
                    perm[i]
                )));
            }
            env.data[ri + i] = d.sqrt();
        }
        // forward and back substitution in the permuted numbering
        let mut y: Vec<f64> = perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = env.first[i];
            let ri = env.start[i] - fi;
            let mut s = y[i];
            for k in fi..i {
                s -= env.data[ri + k] * y[k];
            }
            y[i] = s / env.data[ri + i];
        }
        for i in (0..n).rev() {
            let fi = env.first[i];
            let ri = env.start[i] - fi;
            y[i] /= env.data[ri + i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= env.data[ri + k] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

/// Jacobi-preconditioned conjugate gradients.
#[derive(Clone, Copy, Debug)]
pub struct ConjugateGradient {
    pub rel_tol: f64,
    pub max_iter_factor: usize,
}

impl Default for ConjugateGradient {
    fn default() -> Self {
        ConjugateGradient {
            rel_tol: 1e-13,
            max_iter_factor: 20,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinearSolver for ConjugateGradient {
    fn name(&self) -> &'static str {
        "cg"
    }

    fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.dim();
        let bnorm = dot(b, b).sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::SingularSystem(format!("non-positive diagonal at row {i}")));
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let max_iter = self.max_iter_factor * n.max(10);
        for it in 0..max_iter {
            let ap = a.mul_vec(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::SingularSystem(format!(
                    "matrix not positive definite along search direction (iteration {it})"
                )));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rnorm = dot(&r, &r).sqrt();
            if rnorm <= self.rel_tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let rnorm = dot(&r, &r).sqrt();
        Err(Error::LinearSolverDiverged {
            residual: rnorm / bnorm,
            iterations: max_iter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn laplacian_like(n: usize, seed: u64) -> DMatrix<f64> {
        // banded SPD matrix with an irregular pattern
        let mut a = DMatrix::zeros(n, n);
        let mut s = seed;
        for i in 0..n {
            a[(i, i)] = 4.0;
            for &off in &[1usize, 3, 7] {
                if i + off < n {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let v = -((s >> 33) as f64 / (1u64 << 31) as f64) * 0.6;
                    a[(i, i + off)] = v;
                    a[(i + off, i)] = v;
                }
            }
        }
        a
    }

    proptest! {
        #[test]
        fn solvers_match_dense(n in 1usize..60, seed in any::<u64>()) {
            let a = laplacian_like(n, seed);
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let oracle = a.clone().cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b.clone()));
            let csr = CsrMatrix::from_dense(&a);
            for name in available_solvers() {
                let x = linear_solver(name).unwrap().solve(&csr, &b).unwrap();
                for i in 0..n {
                    prop_assert!((x[i] - oracle[i]).abs() < 1e-9 * (1.0 + oracle[i].abs()), "{name}");
                }
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let err = SkylineCholesky.solve(&CsrMatrix::from_dense(&a), &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::SingularSystem(_)));
    }

    #[test]
    fn pattern_and_submatrix() {
        let groups: Vec<Vec<usize>> = vec![vec![0, 1], vec![1, 2]];
        let mut m = CsrMatrix::from_couplings(3, groups.iter().map(|g| g.as_slice()));
        assert_eq!(m.nnz(), 7);
        m.add(0, 1, 2.0);
        m.add(1, 0, 2.0);
        m.add(2, 2, 5.0);
        assert_eq!(m.get(0, 2), 0.0);
        assert_eq!(m.asymmetry(), 0.0);
        let s = m.submatrix(&[0, 2]);
        assert_eq!(s.get(1, 1), 5.0);
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn unknown_solver_is_rejected() {
        assert!(matches!(linear_solver("lu"), Err(Error::UnknownStrategy { .. })));
    }
}
