//! Sparse direct backend for the condensed skeleton systems.

use chns_core::linalg::{check_solution, relative_residual, CsrMatrix, LinearSolver, RESIDUAL_TOLERANCE};
use chns_core::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{MatMut, Par, Side};

/// Sets the thread count used inside the sparse factorization.
/// `1` (or `0`) selects sequential execution.
pub fn set_threads(n: usize) {
    match std::num::NonZeroUsize::new(n) {
        Some(n) if n.get() > 1 => faer::set_global_parallelism(Par::Rayon(n)),
        _ => faer::set_global_parallelism(Par::Seq),
    }
}

const MAX_REFINEMENTS: usize = 3;
const SYMMETRY_TOLERANCE: f64 = 1e-13;

/// Sparse direct solver with equilibration and iterative refinement.
///
/// Symmetric matrices with a positive diagonal are tried with a sparse
/// Cholesky factorization first, falling back to LU if it breaks down.
/// Other matrices use LU: the CSR input is read as the CSC storage of its
/// transpose, factorized, and solved with the transposed factors. Symbolic
/// analyses are reused while the sparsity pattern is unchanged.
#[derive(Default)]
pub struct FaerLu {
    pattern: Option<(Vec<usize>, Vec<usize>)>,
    symbolic: Option<SymbolicLu<usize>>,
    symbolic_llt: Option<SymbolicLlt<usize>>,
    factorizations: usize,
    analyses: usize,
    cholesky: usize,
}

impl FaerLu {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of numeric and symbolic factorizations performed so far.
    pub fn counts(&self) -> (usize, usize) {
        (self.factorizations, self.analyses)
    }

    /// Number of numeric factorizations that used Cholesky.
    pub fn cholesky_count(&self) -> usize {
        self.cholesky
    }

    fn update_pattern(&mut self, a: &CsrMatrix) {
        let same = matches!(&self.pattern, Some((r, c)) if *r == a.row_ptr && *c == a.col_idx);
        if !same {
            self.pattern = Some((a.row_ptr.clone(), a.col_idx.clone()));
            self.symbolic = None;
            self.symbolic_llt = None;
        }
    }

    fn symbolic_lu(&mut self, a: &CsrMatrix) -> Result<SymbolicLu<usize>> {
        if self.symbolic.is_none() {
            let s = SymbolicSparseColMat::new_checked(a.ncols, a.nrows, a.row_ptr.clone(), None, a.col_idx.clone());
            let sym = SymbolicLu::try_new(s.as_ref())
                .map_err(|e| Error::SolveFailed(format!("symbolic factorization: {e:?}")))?;
            self.symbolic = Some(sym);
            self.analyses += 1;
        }
        Ok(self.symbolic.clone().expect("symbolic factorization present"))
    }

    fn symbolic_llt(&mut self, a: &CsrMatrix) -> Option<SymbolicLlt<usize>> {
        if self.symbolic_llt.is_none() {
            let s = SymbolicSparseColMat::new_checked(a.ncols, a.nrows, a.row_ptr.clone(), None, a.col_idx.clone());
            self.symbolic_llt = Some(SymbolicLlt::try_new(s.as_ref(), Side::Lower).ok()?);
            self.analyses += 1;
        }
        self.symbolic_llt.clone()
    }

    fn try_cholesky(&mut self, a: &CsrMatrix) -> Option<(Llt<usize, f64>, Vec<f64>)> {
        let d = symmetric_scales(a)?;
        let n = a.nrows;
        let mut vals = a.values.clone();
        for i in 0..n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                vals[p] *= d[i] * d[a.col_idx[p]];
            }
        }
        let sym = self.symbolic_llt(a)?;
        let s = SymbolicSparseColMat::new_checked(n, n, a.row_ptr.clone(), None, a.col_idx.clone());
        let m = SparseColMat::new(s, vals);
        let llt = Llt::try_new_with_symbolic(sym, m.as_ref(), Side::Lower).ok()?;
        Some((llt, d))
    }
}

/// Jacobi scaling `1/sqrt(a_ii)` if `a` is numerically symmetric with a
/// positive diagonal.
fn symmetric_scales(a: &CsrMatrix) -> Option<Vec<f64>> {
    let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    let mut d = vec![0.0; a.nrows];
    for i in 0..a.nrows {
        for p in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[p];
            if j == i {
                d[i] = a.values[p];
            } else if j > i {
                let q = a.position(j, i)?;
                if (a.values[p] - a.values[q]).abs() > SYMMETRY_TOLERANCE * scale {
                    return None;
                }
            }
        }
    }
    d.iter().map(|&v| (v > 0.0).then(|| 1.0 / v.sqrt())).collect()
}

fn row_scales(a: &CsrMatrix) -> Result<Vec<f64>> {
    (0..a.nrows)
        .map(|i| {
            let m = a.values[a.row_ptr[i]..a.row_ptr[i + 1]]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 && m.is_finite() {
                Ok(1.0 / m)
            } else {
                Err(Error::SingularMatrix(format!("row {i} is zero or non-finite")))
            }
        })
        .collect()
}

enum Factor {
    Lu(Lu<usize, f64>, Vec<f64>),
    Llt(Llt<usize, f64>, Vec<f64>),
}

impl Factor {
    fn solve(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        match self {
            Factor::Lu(lu, d) => {
                let mut x: Vec<f64> = r.iter().zip(d).map(|(r, d)| r * d).collect();
                lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
                x
            }
            Factor::Llt(llt, d) => {
                let mut x: Vec<f64> = r.iter().zip(d).map(|(r, d)| r * d).collect();
                llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
                x.iter_mut().zip(d).for_each(|(x, d)| *x *= d);
                x
            }
        }
    }
}

impl LinearSolver for FaerLu {
    fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.nrows;
        if a.ncols != n || b.len() != n {
            return Err(Error::InvalidArgument(format!("system {}x{} with rhs of length {}", a.nrows, a.ncols, b.len())));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        self.update_pattern(a);
        let factor = match self.try_cholesky(a) {
            Some((llt, d)) => {
                self.cholesky += 1;
                Factor::Llt(llt, d)
            }
            None => {
                let d = row_scales(a)?;
                let mut vals = a.values.clone();
                for i in 0..n {
                    for v in &mut vals[a.row_ptr[i]..a.row_ptr[i + 1]] {
                        *v *= d[i];
                    }
                }
                let sym = self.symbolic_lu(a)?;
                let s = SymbolicSparseColMat::new_checked(n, n, a.row_ptr.clone(), None, a.col_idx.clone());
                let at = SparseColMat::new(s, vals);
                let lu = Lu::try_new_with_symbolic(sym, at.as_ref())
                    .map_err(|e| Error::SingularMatrix(format!("sparse LU: {e:?}")))?;
                Factor::Lu(lu, d)
            }
        };
        self.factorizations += 1;
        let solve = |r: &[f64]| factor.solve(r);
        let mut x = solve(b);
        for _ in 0..MAX_REFINEMENTS {
            if x.iter().any(|v| !v.is_finite()) || relative_residual(a, &x, b) <= 0.01 * RESIDUAL_TOLERANCE {
                break;
            }
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            let dx = solve(&r);
            for (x, dx) in x.iter_mut().zip(dx) {
                *x += dx;
            }
        }
        check_solution(a, &x, b)?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chns_core::linalg::DenseLuSolver;

    fn laplacian(n: usize, scale_last: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let s = if i == n - 1 { scale_last } else { 1.0 };
            t.push((i, i, 2.5 * s));
            if i > 0 {
                t.push((i, i - 1, -1.0 * s));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.2 * s));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn matches_dense_lu_on_a_nonsymmetric_system() {
        let a = laplacian(40, 1e-9);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = FaerLu::new().solve(&a, &b).unwrap();
        let y = DenseLuSolver.solve(&a, &b).unwrap();
        for (x, y) in x.iter().zip(&y) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn reuses_symbolic_analysis_for_equal_patterns() {
        let mut s = FaerLu::new();
        let a = laplacian(10, 1.0);
        let b = vec![1.0; 10];
        s.solve(&a, &b).unwrap();
        let mut a2 = a.clone();
        a2.values.iter_mut().for_each(|v| *v *= 3.0);
        s.solve(&a2, &b).unwrap();
        assert_eq!(s.counts(), (2, 1));
        s.solve(&laplacian(12, 1.0), &vec![1.0; 12]).unwrap();
        assert_eq!(s.counts(), (3, 2));
    }

    #[test]
    fn uses_cholesky_for_spd_systems() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        t.push((0, n - 1, 0.5));
        t.push((n - 1, 0, 0.5));
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut s = FaerLu::new();
        let x = s.solve(&a, &b).unwrap();
        assert_eq!(s.cholesky_count(), 1);
        let y = DenseLuSolver.solve(&a, &b).unwrap();
        for (x, y) in x.iter().zip(&y) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        s.solve(&a, &b).unwrap();
        assert_eq!(s.counts(), (2, 1));
    }

    #[test]
    fn falls_back_to_lu_for_symmetric_indefinite_systems() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0), (2, 2, 3.0)]).unwrap();
        let mut s = FaerLu::new();
        let x = s.solve(&a, &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(s.cholesky_count(), 0);
        for (x, y) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_systems() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        assert!(FaerLu::new().solve(&a, &[1.0, 1.0]).is_err());
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(FaerLu::new().solve(&a, &[1.0, 0.0]).is_err());
        assert!(FaerLu::new().solve(&a, &[1.0]).is_err());
    }
}
