//! Compressed sparse row matrices and linear solvers.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseRowMat, SymbolicSparseRowMat};
use faer::{Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

type SolveFn = dyn Fn(&[f64]) -> Vec<f64>;

/// A sparse matrix in CSR format with sorted, unique column indices and no
/// explicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(self) -> Result<CsrMatrix> {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl CsrMatrix {
    /// Sums duplicates and drops zeros. Entries are sorted by row, column,
    /// and value before summation, so the result does not depend on the
    /// input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut offsets = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        let mut i = 0;
        while i < triplets.len() {
            let (r, c, _) = triplets[i];
            let mut s = 0.0;
            while i < triplets.len() && triplets[i].0 == r && triplets[i].1 == c {
                s += triplets[i].2;
                i += 1;
            }
            if s != 0.0 {
                cols.push(c);
                vals.push(s);
                offsets[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            offsets[r + 1] += offsets[r];
        }
        Ok(Self {
            nrows,
            ncols,
            offsets,
            cols,
            vals,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            offsets: vec![0; nrows + 1],
            cols: vec![],
            vals: vec![],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            offsets: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.offsets[r], self.offsets[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::Shape(format!(
                "vector of length {} for {}x{} matrix",
                x.len(),
                self.nrows,
                self.ncols
            )));
        }
        Ok((0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut cols = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                let pos = next[c];
                cols[pos] = r;
                vals[pos] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            offsets: counts,
            cols,
            vals,
        }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::Shape(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut offsets = vec![0usize; self.nrows + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched = Vec::new();
        for r in 0..self.nrows {
            touched.clear();
            let (ac, av) = self.row(r);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&c, &b) in bc.iter().zip(bv) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != 0.0 {
                    cols.push(c);
                    vals.push(acc[c]);
                }
            }
            offsets[r + 1] = cols.len();
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            offsets,
            cols,
            vals,
        })
    }

    /// `P^T A P`, with entries below `1e-14 max|entry|` removed.
    pub fn triple_product(p: &CsrMatrix, a: &CsrMatrix) -> Result<Self> {
        let ap = a.matmul(p)?;
        p.transpose().matmul(&ap).map(|m| m.prune(1e-14))
    }

    /// Removes entries with magnitude below `rel * max|entry|`.
    pub fn prune(mut self, rel: f64) -> Self {
        let tol = rel * self.max_abs();
        let mut offsets = vec![0usize; self.nrows + 1];
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                if v.abs() > tol {
                    cols.push(c);
                    vals.push(v);
                }
            }
            offsets[r + 1] = cols.len();
        }
        self.offsets = offsets;
        self.cols = cols;
        self.vals = vals;
        self
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.vals.iter_mut().for_each(|v| *v *= s);
        if s == 0.0 {
            return Self::zeros(self.nrows, self.ncols);
        }
        self
    }

    pub fn add(&self, other: &CsrMatrix) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Shape("matrix sum with different shapes".into()));
        }
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().chain(other.triplets()).collect(),
        )
    }

    /// Block matrix from `(block row, block col, matrix)` entries; the block
    /// sizes are given explicitly so that empty block rows are allowed.
    pub fn from_blocks(
        row_sizes: &[usize],
        col_sizes: &[usize],
        blocks: &[(usize, usize, &CsrMatrix)],
    ) -> Result<Self> {
        let offsets = |sizes: &[usize]| {
            let mut o = vec![0];
            for s in sizes {
                o.push(o.last().unwrap() + s);
            }
            o
        };
        let (ro, co) = (offsets(row_sizes), offsets(col_sizes));
        let mut t = Vec::new();
        for &(bi, bj, m) in blocks {
            if m.nrows != row_sizes[bi] || m.ncols != col_sizes[bj] {
                return Err(Error::Shape(format!(
                    "block ({bi}, {bj}) is {}x{}, expected {}x{}",
                    m.nrows, m.ncols, row_sizes[bi], col_sizes[bj]
                )));
            }
            t.extend(m.triplets().map(|(r, c, v)| (r + ro[bi], c + co[bj], v)));
        }
        Self::from_triplets(ro[row_sizes.len()], co[col_sizes.len()], t)
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut colmap = vec![usize::MAX; self.ncols];
        for (j, &c) in cols.iter().enumerate() {
            colmap[c] = j;
        }
        let mut t = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                if colmap[c] != usize::MAX {
                    t.push((i, colmap[c], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t).expect("indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut m: f64 = 0.0;
        for (r, c, v) in self.triplets() {
            m = m.max((v - t.get(r, c)).abs());
        }
        for (r, c, v) in t.triplets() {
            m = m.max((v - self.get(r, c)).abs());
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            m / scale
        }
    }

    /// MatrixMarket coordinate format.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{} {} {:.17e}", r + 1, c + 1, v);
        }
        s
    }

    fn to_faer(&self) -> Result<SparseRowMat<usize, f64>> {
        let sym = SymbolicSparseRowMat::new_checked(
            self.nrows,
            self.ncols,
            self.offsets.clone(),
            None,
            self.cols.clone(),
        );
        Ok(SparseRowMat::new(sym, self.vals.clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    DirectLu,
    /// Sparse Cholesky; succeeds exactly when all pivots are positive.
    DirectLdlt,
    ConjugateGradient,
}

#[derive(Clone, Copy, Debug)]
pub struct LinearSolver {
    pub kind: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
}

/// Diagnostics from one solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl LinearSolver {
    pub fn lu() -> Self {
        Self {
            kind: SolverKind::DirectLu,
            tol: 1e-10,
            max_iter: 0,
        }
    }
    pub fn ldlt() -> Self {
        Self {
            kind: SolverKind::DirectLdlt,
            tol: 1e-10,
            max_iter: 0,
        }
    }
    pub fn cg(tol: f64, max_iter: usize) -> Self {
        Self {
            kind: SolverKind::ConjugateGradient,
            tol,
            max_iter,
        }
    }

    pub fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
        if a.nrows != a.ncols || b.len() != a.nrows {
            return Err(Error::Shape(format!(
                "solve with {}x{} matrix and rhs of length {}",
                a.nrows,
                a.ncols,
                b.len()
            )));
        }
        let n = a.nrows;
        if n == 0 {
            return Ok((vec![], SolveInfo::default()));
        }
        let x = match self.kind {
            SolverKind::DirectLu | SolverKind::DirectLdlt => {
                let m = a.to_faer()?;
                let fail = |e: &dyn std::fmt::Debug| Error::Factorization(format!("{e:?}"));
                let solve: Box<SolveFn> = if self.kind == SolverKind::DirectLu {
                    let lu = m.sp_lu().map_err(|e| fail(&e))?;
                    Box::new(move |r: &[f64]| {
                        let sol = lu.solve(Mat::from_fn(n, 1, |i, _| r[i]));
                        (0..n).map(|i| sol[(i, 0)]).collect()
                    })
                } else {
                    let llt = m.sp_cholesky(Side::Lower).map_err(|e| fail(&e))?;
                    Box::new(move |r: &[f64]| {
                        let sol = llt.solve(Mat::from_fn(n, 1, |i, _| r[i]));
                        (0..n).map(|i| sol[(i, 0)]).collect()
                    })
                };
                let mut x = solve(b);
                // iterative refinement with the same factors
                let mut res = relative_residual(a, &x, b);
                for _ in 0..3 {
                    if !(res > 1e-15) {
                        break;
                    }
                    let ax = a.spmv(&x)?;
                    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
                    let dx = solve(&r);
                    let cand: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
                    let res_c = relative_residual(a, &cand, b);
                    if !(res_c < res) {
                        break;
                    }
                    x = cand;
                    res = res_c;
                }
                x
            }
            SolverKind::ConjugateGradient => {
                let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
                let (x, info) = conjugate_gradient(
                    |v| a.spmv(v).expect("shape checked"),
                    b,
                    &diag,
                    false,
                    self.tol,
                    self.max_iter,
                )?;
                return Ok((x, info));
            }
        };
        let info = SolveInfo {
            iterations: 1,
            relative_residual: relative_residual(a, &x, b),
        };
        if !info.relative_residual.is_finite() || info.relative_residual > self.tol.max(1e-8) {
            return Err(Error::Factorization(format!(
                "relative residual {:e} after direct solve",
                info.relative_residual
            )));
        }
        Ok((x, info))
    }
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).expect("shape checked");
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Jacobi-preconditioned conjugate gradients. With `singular = true` the
/// operator is assumed to have the constant vector as its kernel; the right
/// hand side and iterates are kept orthogonal to it.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[f64],
    diag: &[f64],
    singular: bool,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveInfo)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut rhs = b.to_vec();
    if singular {
        project_mean(&mut rhs);
    }
    let nb = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, SolveInfo::default()));
    }
    let precond = |r: &[f64]| -> Vec<f64> {
        let mut z: Vec<f64> = r
            .iter()
            .zip(diag)
            .map(|(v, d)| if *d != 0.0 { v / d } else { *v })
            .collect();
        if singular {
            project_mean(&mut z);
        }
        z
    };
    let mut r = rhs.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Factorization(
                "operator is not positive definite".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / nb;
        if res <= tol {
            if singular {
                project_mean(&mut x);
            }
            return Ok((
                x,
                SolveInfo {
                    iterations: it,
                    relative_residual: res,
                },
            ));
        }
        z = precond(&r);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / nb;
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_sparse(rng: &mut StdRng, n: usize, m: usize, density: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for r in 0..n {
            for c in 0..m {
                if rng.gen::<f64>() < density {
                    t.push((r, c, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CsrMatrix::from_triplets(n, m, t).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
        let z = CsrMatrix::from_triplets(3, 3, vec![]).unwrap();
        assert_eq!(z.nnz(), 0);
        assert!(CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        let c = CsrMatrix::from_triplets(1, 1, vec![(0, 0, 1.0), (0, 0, -1.0)]).unwrap();
        assert_eq!(c.nnz(), 0);
    }

    #[test]
    fn random_triplets_match_dense_accumulation() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut t = Vec::new();
        let mut dense = DMatrix::zeros(5, 5);
        for _ in 0..40 {
            let (r, c, v) = (
                rng.gen_range(0..5),
                rng.gen_range(0..5),
                rng.gen_range(-1.0..1.0),
            );
            t.push((r, c, v));
            dense[(r, c)] += v;
        }
        let m = CsrMatrix::from_triplets(5, 5, t).unwrap();
        assert!((m.to_dense() - dense).abs().max() < 1e-14);
    }

    #[test]
    fn products_match_dense() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = random_sparse(&mut rng, 8, 8, 0.3);
        let p = random_sparse(&mut rng, 8, 8, 0.3);
        let rap = CsrMatrix::triple_product(&p, &a).unwrap();
        let dense = p.to_dense().transpose() * a.to_dense() * p.to_dense();
        assert!((rap.to_dense() - dense).abs().max() < 1e-13);
        let id = CsrMatrix::identity(8);
        assert_eq!(CsrMatrix::triple_product(&id, &a).unwrap(), a);
        let blk = CsrMatrix::from_blocks(&[8, 2], &[8, 8], &[(0, 0, &a), (0, 1, &id)]).unwrap();
        assert_eq!(blk.nrows(), 10);
        assert_eq!(blk.get(3, 11), 1.0);
        assert_eq!(
            blk.submatrix(&(0..8).collect::<Vec<_>>(), &(0..8).collect::<Vec<_>>()),
            a
        );
        assert_eq!(a.transpose().transpose(), a);
        assert!(a.matmul(&random_sparse(&mut rng, 7, 2, 0.5)).is_err());
    }

    #[test]
    fn direct_and_iterative_solves() {
        let id = CsrMatrix::identity(4);
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let (x, _) = LinearSolver::lu().solve(&id, &b).unwrap();
        assert_eq!(x, b);
        let d = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let (x, _) = LinearSolver::lu().solve(&d, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);

        let mut rng = StdRng::seed_from_u64(11);
        let g = DMatrix::from_fn(20, 20, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &g * g.transpose() + DMatrix::identity(20, 20) * 20.0;
        let rhs: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let oracle = spd
            .clone()
            .lu()
            .solve(&nalgebra::DVector::from_vec(rhs.clone()))
            .unwrap();
        let a = CsrMatrix::from_dense(&spd);
        for solver in [
            LinearSolver::lu(),
            LinearSolver::ldlt(),
            LinearSolver::cg(1e-13, 500),
        ] {
            let (x, _) = solver.solve(&a, &rhs).unwrap();
            for i in 0..20 {
                assert!((x[i] - oracle[i]).abs() < 1e-10, "{:?}", solver.kind);
            }
        }
        // Cholesky rejects an indefinite matrix
        let indef = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(LinearSolver::ldlt().solve(&indef, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn singular_cg_projects_constants() {
        // path-graph Laplacian
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([
                (i, i, 1.0),
                (i + 1, i + 1, 1.0),
                (i, i + 1, -1.0),
                (i + 1, i, -1.0),
            ]);
        }
        let a = CsrMatrix::from_triplets(n, n, t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 4.5).collect();
        let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        let (x, _) =
            conjugate_gradient(|v| a.spmv(v).unwrap(), &b, &diag, true, 1e-12, 100).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-10);
        assert!(x.iter().sum::<f64>().abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn assembly_is_order_independent(
            entries in prop::collection::vec((0usize..6, 0usize..6, -1.0f64..1.0), 0..60),
            seed in 0u64..1000,
        ) {
            let a = CsrMatrix::from_triplets(6, 6, entries.clone()).unwrap();
            let mut shuffled = entries;
            let mut rng = StdRng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.gen_range(0..=i));
            }
            let b = CsrMatrix::from_triplets(6, 6, shuffled).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn transpose_is_an_involution(
            entries in prop::collection::vec((0usize..5, 0usize..7, -1.0f64..1.0), 0..40),
        ) {
            let a = CsrMatrix::from_triplets(5, 7, entries).unwrap();
            prop_assert_eq!(a.transpose().transpose(), a.clone());
            let x: Vec<f64> = (0..7).map(|i| i as f64).collect();
            let y: Vec<f64> = (0..5).map(|i| 1.0 - i as f64).collect();
            let ax = a.spmv(&x).unwrap();
            let aty = a.transpose().spmv(&y).unwrap();
            let l: f64 = ax.iter().zip(&y).map(|(p, q)| p * q).sum();
            let r: f64 = aty.iter().zip(&x).map(|(p, q)| p * q).sum();
            prop_assert!((l - r).abs() < 1e-12);
        }
    }
}
