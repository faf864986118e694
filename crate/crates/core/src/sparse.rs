//! Compressed sparse row storage, symmetric Dirichlet elimination and the
//! linear solvers used by the subdomain problems.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Relative residual every solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Square CSR matrix with sorted, duplicate-free column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed in input
    /// order so the result is deterministic.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |A_ij - A_ji| over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        // Symmetric, so the CSR arrays read as CSC describe the same matrix.
        let entries: Vec<_> = self.triplets().map(|(r, c, v)| Triplet::new(c, r, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &entries)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Matrix and load vector of one linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Symmetric elimination of a fixed set of prescribed DOFs.
///
/// The eliminated matrix keeps the free-free block, puts ones on the
/// constrained diagonal and zeros elsewhere in constrained rows and columns.
/// The free-constrained coupling is kept so right-hand sides can be adjusted
/// for any prescribed values without touching the matrix again.
#[derive(Debug, Clone)]
pub struct DirichletElimination {
    constrained: Vec<bool>,
    /// (free row, constrained column, A_rc)
    coupling: Vec<(usize, usize, f64)>,
    matrix: SparseMatrix,
}

impl DirichletElimination {
    pub fn new(matrix: &SparseMatrix, constrained_dofs: &[usize]) -> Result<Self> {
        let n = matrix.size();
        let mut constrained = vec![false; n];
        for &d in constrained_dofs {
            if d >= n {
                return Err(Error::NodeOutOfRange { index: d / 2, count: n / 2 });
            }
            constrained[d] = true;
        }
        let mut coupling = Vec::new();
        let mut triplets = Vec::with_capacity(matrix.nnz());
        for (r, c, v) in matrix.triplets() {
            match (constrained[r], constrained[c]) {
                (false, false) => triplets.push((r, c, v)),
                (false, true) => coupling.push((r, c, v)),
                _ => {}
            }
        }
        triplets.extend((0..n).filter(|&d| constrained[d]).map(|d| (d, d, 1.0)));
        Ok(DirichletElimination { constrained, coupling, matrix: SparseMatrix::from_triplets(n, triplets) })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Right-hand side of the eliminated system. `prescribed` is a full-length
    /// vector of which only constrained entries are read.
    pub fn adjust_rhs(&self, rhs: &[f64], prescribed: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> =
            rhs.iter().zip(&self.constrained).zip(prescribed).map(|((&b, &c), &g)| if c { g } else { b }).collect();
        for &(r, c, v) in &self.coupling {
            out[r] -= v * prescribed[c];
        }
        out
    }
}

/// Pins the DOFs of the given nodes to `values` by symmetric elimination.
pub fn apply_dirichlet(
    sys: &SparseSystem,
    constrained_nodes: &[usize],
    values: &[nalgebra::Vector2<f64>],
) -> Result<SparseSystem> {
    let n_nodes = sys.matrix.size() / 2;
    if values.len() != constrained_nodes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} constrained nodes",
            values.len(),
            constrained_nodes.len()
        )));
    }
    let mut dofs = Vec::with_capacity(2 * constrained_nodes.len());
    let mut prescribed = vec![0.0; sys.matrix.size()];
    for (&v, g) in constrained_nodes.iter().zip(values) {
        if v >= n_nodes {
            return Err(Error::NodeOutOfRange { index: v, count: n_nodes });
        }
        dofs.extend([2 * v, 2 * v + 1]);
        prescribed[2 * v] = g.x;
        prescribed[2 * v + 1] = g.y;
    }
    let elim = DirichletElimination::new(&sys.matrix, &dofs)?;
    Ok(SparseSystem { rhs: elim.adjust_rhs(&sys.rhs, &prescribed), matrix: elim.matrix })
}

/// Sparse Cholesky factorization, reusable across right-hand sides.
pub struct CholeskySolver {
    matrix: SparseMatrix,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl std::fmt::Debug for CholeskySolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CholeskySolver").field("size", &self.matrix.size()).finish_non_exhaustive()
    }
}

impl CholeskySolver {
    pub fn new(matrix: SparseMatrix) -> Result<Self> {
        let llt = matrix.to_faer()?.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(CholeskySolver { matrix, llt })
    }

    /// Solves and verifies the residual, with up to two refinement sweeps.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.size();
        assert_eq!(rhs.len(), n);
        let b_norm = norm(rhs);
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        for sweep in 0..3 {
            let mut dx = Mat::from_fn(n, 1, |i, _| r[i]);
            self.llt.solve_in_place(dx.as_mut());
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += dx[(i, 0)];
            }
            let ax = self.matrix.mul_vec(&x);
            r = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let rel = norm(&r) / b_norm;
            if rel <= SOLVE_TOLERANCE {
                return Ok(x);
            }
            if sweep == 2 || !rel.is_finite() {
                return Err(Error::SolveFailed { residual: rel, iterations: sweep + 1 });
            }
        }
        unreachable!()
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(matrix: &SparseMatrix, rhs: &[f64], x0: Option<&[f64]>, max_iter: usize) -> Result<Vec<f64>> {
    let n = matrix.size();
    let b_norm = norm(rhs);
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag: Vec<f64> = matrix.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let ax = matrix.mul_vec(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 0..max_iter {
        let rel = norm(&r) / b_norm;
        if rel <= SOLVE_TOLERANCE {
            return Ok(x);
        }
        let ap = matrix.mul_vec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::SolveFailed { residual: rel, iterations: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / b_norm;
    if rel <= SOLVE_TOLERANCE {
        Ok(x)
    } else {
        Err(Error::SolveFailed { residual: rel, iterations: max_iter })
    }
}

/// Factors and solves a system that has had Dirichlet elimination applied.
pub fn solve(sys: &SparseSystem) -> Result<Vec<f64>> {
    CholeskySolver::new(sys.matrix.clone())?.solve(&sys.rhs)
}
