//! Dense and sparse matrices, static condensation and the solver interface.

use crate::error::{Error, Result};
use crate::forms::{BlockLayout, BlockSystem};
use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] += v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                self.data[i * self.ncols..(i + 1) * self.ncols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for l in 0..self.ncols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[l * other.ncols..(l + 1) * other.ncols];
                let dst = &mut out.data[i * other.ncols..(i + 1) * other.ncols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.nrows {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<DenseLu> {
        DenseLu::new(self)
    }
}

/// Dense LU factors `P A = L U` stored in place.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::InvalidArgument(format!(
                "LU of a {}x{} matrix",
                a.nrows, a.ncols
            )));
        }
        let n = a.nrows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        if n > 0 && scale == 0.0 {
            return Err(Error::SingularMatrix("zero matrix".into()));
        }
        let tol = scale * 1e-15;
        for col in 0..n {
            let mut piv = col;
            let mut best = lu[col * n + col].abs();
            for r in col + 1..n {
                let v = lu[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best > tol) {
                return Err(Error::SingularMatrix(format!("zero pivot in column {col}")));
            }
            if piv != col {
                for j in 0..n {
                    lu.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            let d = lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                lu[r * n + col] = f;
                for j in col + 1..n {
                    lu[r * n + j] -= f * lu[col * n + j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(b.nrows, b.ncols);
        let mut col = vec![0.0; b.nrows];
        for j in 0..b.ncols {
            for i in 0..b.nrows {
                col[i] = b.get(i, j);
            }
            let x = self.solve(&col);
            for i in 0..b.nrows {
                out.set(i, j, x[i]);
            }
        }
        out
    }
}

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

/// Alias kept for readability at call sites that only deal with CSR storage.
pub type SparseMatrix = CsrMatrix;

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &t {
            if r >= nrows || c >= ncols {
                return Err(Error::OutOfRange {
                    kind: "matrix entry",
                    id: r.max(c),
                    count: nrows.max(ncols),
                });
            }
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a zero-valued matrix from per-row sorted unique column lists.
    pub fn from_pattern(ncols: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows {
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Storage position of entry `(i, j)` if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].binary_search(&j).ok().map(|p| s + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|p| self.values[p] * x[self.col_idx[p]])
                    .sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                d.add(i, self.col_idx[p], self.values[p]);
            }
        }
        d
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|p| self.values[p].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// True when both matrices share dimensions and sparsity pattern.
    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }
}

fn norm_inf_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Relative residual `|Ax - b| / (|A| |x| + |b|)` in the infinity norm.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let denom = a.norm_inf() * norm_inf_vec(x) + norm_inf_vec(b);
    if denom == 0.0 {
        norm_inf_vec(&r)
    } else {
        norm_inf_vec(&r) / denom
    }
}

/// Tolerance every accepted skeleton solve must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Checks a computed solution against [`RESIDUAL_TOLERANCE`].
pub fn check_solution(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix("non-finite solution".into()));
    }
    let rel = relative_residual(a, x, b);
    if !(rel <= RESIDUAL_TOLERANCE) {
        return Err(Error::SolveFailed(format!(
            "relative residual {rel:.3e} exceeds {RESIDUAL_TOLERANCE:.0e}"
        )));
    }
    Ok(rel)
}

/// Solver for the condensed skeleton system.
///
/// Implementations may cache symbolic data between calls with an identical
/// sparsity pattern, hence `&mut self`.
pub trait LinearSolver {
    fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>>;
}

impl<S: LinearSolver + ?Sized> LinearSolver for Box<S> {
    fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        (**self).solve(a, b)
    }
}

/// Dense LU fallback for small systems.
#[derive(Debug, Default, Clone, Copy)]
pub struct DenseLuSolver;

impl LinearSolver for DenseLuSolver {
    fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        if a.nrows != a.ncols || b.len() != a.nrows {
            return Err(Error::InvalidArgument(format!(
                "system {}x{} with rhs of length {}",
                a.nrows,
                a.ncols,
                b.len()
            )));
        }
        if a.nrows == 0 {
            return Ok(Vec::new());
        }
        let x = a.to_dense().lu()?.solve(b);
        check_solution(a, &x, b)?;
        Ok(x)
    }
}

/// Per-element data kept for interior recovery.
#[derive(Debug, Clone)]
pub struct ElementRecovery {
    pub lu: DenseLu,
    pub a_is: DenseMatrix,
    pub b_i: Vec<f64>,
}

/// Skeleton Schur complement with reduced right-hand side.
#[derive(Debug, Clone)]
pub struct CondensedSystem<'a> {
    pub layout: &'a BlockLayout,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub recovery: Vec<ElementRecovery>,
}

/// Eliminates element-interior unknowns:
/// `S = A_SS - sum A_SI A_II^-1 A_IS`, `g = b_S - sum A_SI A_II^-1 b_I`.
pub fn condense(system: BlockSystem<'_>) -> Result<CondensedSystem<'_>> {
    let layout = system.layout;
    let mut matrix = system.a_ss;
    let mut rhs = system.b_s;
    let ns = layout.skeleton_local().len();
    let mut recovery = Vec::with_capacity(system.elements.len());
    for (e, blk) in system.elements.into_iter().enumerate() {
        let lu = blk
            .a_ii
            .lu()
            .map_err(|_| Error::SingularInteriorBlock { element: e })?;
        if blk.a_ii.nrows > 0 {
            let x_is = lu.solve_matrix(&blk.a_is);
            let x_b = lu.solve(&blk.b_i);
            let update = blk.a_si.matmul(&x_is);
            let g_upd = blk.a_si.matvec(&x_b);
            let map = layout.skeleton_global(e);
            let scatter = layout.scatter(e);
            for a in 0..ns {
                let Some(ga) = map[a] else { continue };
                rhs[ga] -= g_upd[a];
                for b in 0..ns {
                    let p = scatter[a * ns + b];
                    if p != usize::MAX {
                        matrix.values[p] -= update.get(a, b);
                    }
                }
            }
        }
        recovery.push(ElementRecovery {
            lu,
            a_is: blk.a_is,
            b_i: blk.b_i,
        });
    }
    Ok(CondensedSystem {
        layout,
        matrix,
        rhs,
        recovery,
    })
}

impl CondensedSystem<'_> {
    /// Solves the skeleton system with the given solver.
    pub fn solve(&self, solver: &mut dyn LinearSolver) -> Result<Vec<f64>> {
        solver.solve(&self.matrix, &self.rhs)
    }

    /// Interior unknowns `x_I = A_II^-1 (b_I - A_IS x_S)` for every element,
    /// concatenated in interior numbering.
    pub fn recover(&self, skeleton_solution: &[f64]) -> Result<Vec<f64>> {
        if skeleton_solution.len() != self.matrix.nrows {
            return Err(Error::InvalidArgument(format!(
                "skeleton solution of length {} for {} unknowns",
                skeleton_solution.len(),
                self.matrix.nrows
            )));
        }
        if self.recovery.len() != self.layout.n_elements() {
            return Err(Error::InvalidArgument("recovery data does not cover every element".into()));
        }
        let mut out = vec![0.0; self.layout.n_interior()];
        for (e, rec) in self.recovery.iter().enumerate() {
            let ni = rec.lu.dim();
            if ni == 0 {
                continue;
            }
            let xs: Vec<f64> = self
                .layout
                .skeleton_global(e)
                .iter()
                .map(|g| g.map_or(0.0, |g| skeleton_solution[g]))
                .collect();
            let coupling = rec.a_is.matvec(&xs);
            let r: Vec<f64> = rec.b_i.iter().zip(&coupling).map(|(b, c)| b - c).collect();
            let off = self.layout.interior_offset(e);
            out[off..off + ni].copy_from_slice(&rec.lu.solve(&r));
        }
        Ok(out)
    }

    /// Solves and returns `[interior, skeleton]`.
    pub fn solve_full(&self, solver: &mut dyn LinearSolver) -> Result<Vec<f64>> {
        let xs = self.solve(solver)?;
        let mut x = self.recover(&xs)?;
        x.extend_from_slice(&xs);
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_lu_solves() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]][i][j]);
        let lu = a.lu().unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip([3.0, 2.0, 4.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
        assert!(DenseMatrix::zeros(2, 2).lu().is_err());
        let sing = DenseMatrix::from_fn(2, 2, |i, _| i as f64 + 1.0);
        assert!(sing.lu().is_err());
    }

    #[test]
    fn csr_from_triplets_sums_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (1, 0, -1.0)]).unwrap();
        assert_eq!(m.row_ptr, vec![0, 1, 3]);
        assert_eq!(m.col_idx, vec![0, 0, 2]);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 1), 0.0);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn identity_system() {
        let a = CsrMatrix::identity(4);
        let b = [1.0, -2.0, 3.5, 0.0];
        let x = DenseLuSolver.solve(&a, &b).unwrap();
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn poisson_1d_matches_analytic_inverse() {
        // tridiag(-1, 2, -1) of size n has inverse entries
        // min(i,j) (n + 1 - max(i,j)) / (n + 1) with 1-based indices.
        let n = 9;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = DenseLuSolver.solve(&a, &b).unwrap();
        for i in 0..n {
            let mut xi = 0.0;
            for j in 0..n {
                let (ii, jj) = (i + 1, j + 1);
                xi += (ii.min(jj) * (n + 1 - ii.max(jj))) as f64 / (n + 1) as f64 * b[j];
            }
            assert!((x[i] - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_is_singular() {
        let a = CsrMatrix::from_pattern(3, &[vec![0], vec![1], vec![2]]);
        assert!(matches!(
            DenseLuSolver.solve(&a, &[1.0, 1.0, 1.0]),
            Err(Error::SingularMatrix(_))
        ));
    }
}
