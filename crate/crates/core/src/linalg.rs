//! Block-banded kernels shared by the finite-section operators.
//!
//! A [`BandedRows`] matrix `K` has row blocks touching one or two consecutive
//! column blocks, so `S = K Kᵀ` is block tridiagonal. Solves, smallest
//! singular values and inertia counts all go through `S`.

use nalgebra::{DMatrix, DVector};

/// `‖M‖₂` via the largest eigenvalue of the smaller Gram matrix.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() { m * m.transpose() } else { m.transpose() * m };
    let top = gram.symmetric_eigenvalues().max();
    top.max(0.0).sqrt()
}

pub(crate) fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    let lo = sv.min();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / lo
    }
}

/// Thin SVD `m = U diag(s) Vᵀ`, singular values in descending order.
///
/// One-sided Jacobi on the columns of the taller orientation. nalgebra's
/// bidiagonal SVD returns wrong factors for some nearly rank-one blocks.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn svd(m: &DMatrix<f64>) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let (n, p) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(p, p);
    for _ in 0..80 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let (x, y) = (mat[(r, i)], mat[(r, j)]);
                        mat[(r, i)] = c * x - s * y;
                        mat[(r, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    let norms: Vec<f64> = (0..p).map(|j| a.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let s = DVector::from_iterator(p, order.iter().map(|&j| norms[j]));
    let u = DMatrix::from_fn(n, p, |r, c| {
        let j = order[c];
        if norms[j] > 0.0 { a[(r, j)] / norms[j] } else { 0.0 }
    });
    let v = DMatrix::from_fn(p, p, |r, c| v[(r, order[c])]);
    Svd { u, s, v }
}

pub(crate) fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    svd(m).s
}

/// Orthonormal basis (columns) for the range of `m`, dropping singular values below `tol·σ_max`.
pub(crate) fn range_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let d = svd(m);
    let top = d.s.max();
    let cols: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] > tol * top && top > 0.0).collect();
    DMatrix::from_fn(m.nrows(), cols.len(), |r, c| d.u[(r, cols[c])])
}

/// Orthonormal basis for the kernel of a square matrix `m`, using `tol·σ_max` as cut.
pub(crate) fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let d = svd(m);
    let top = d.s.max();
    let cols: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] <= tol * top || top == 0.0).collect();
    DMatrix::from_fn(n, cols.len(), |r, c| d.v[(r, cols[c])])
}

#[derive(Clone, Debug)]
pub(crate) struct BlockTridiag {
    pub diag: Vec<DMatrix<f64>>,
    /// `upper[k] = S_{k,k+1}`.
    pub upper: Vec<DMatrix<f64>>,
}

pub(crate) struct BlockCholesky {
    diag: Vec<DMatrix<f64>>,
    /// `sub[k] = L_{k+1,k}`.
    sub: Vec<DMatrix<f64>>,
}

impl BlockTridiag {
    pub fn cholesky(&self) -> Option<BlockCholesky> {
        let mut diag = Vec::with_capacity(self.diag.len());
        let mut sub = Vec::with_capacity(self.upper.len());
        let mut schur = self.diag[0].clone();
        for k in 0..self.diag.len() {
            if schur.nrows() == 0 {
                diag.push(schur.clone());
            } else {
                let l = schur.clone().cholesky()?.l();
                diag.push(l);
            }
            if k + 1 < self.diag.len() {
                let lkk = &diag[k];
                // L_{k+1,k} = S_{k,k+1}ᵀ L_kk^{-T}, i.e. L_kk X = S_{k,k+1}, L_{k+1,k} = Xᵀ
                let x = if lkk.nrows() == 0 {
                    DMatrix::zeros(0, self.upper[k].ncols())
                } else {
                    lkk.solve_lower_triangular(&self.upper[k])?
                };
                let lsub = x.transpose();
                schur = &self.diag[k + 1] - &lsub * lsub.transpose();
                sub.push(lsub);
            }
        }
        Some(BlockCholesky { diag, sub })
    }

    /// Number of eigenvalues strictly below `sigma` (block LDLᵀ inertia).
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut prev_inv: Option<DMatrix<f64>> = None;
        for k in 0..self.diag.len() {
            let n = self.diag[k].nrows();
            let mut f = &self.diag[k] - DMatrix::identity(n, n) * sigma;
            if let Some(inv) = &prev_inv {
                let e = &self.upper[k - 1];
                f -= e.transpose() * inv * e;
            }
            if n == 0 {
                prev_inv = Some(DMatrix::zeros(0, 0));
                continue;
            }
            let f = (&f + f.transpose()) * 0.5;
            let eig = f.symmetric_eigen();
            let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
            let tiny = scale * 1e-280;
            let mut inv_vals = eig.eigenvalues.clone();
            for v in inv_vals.iter_mut() {
                if *v < 0.0 {
                    count += 1;
                }
                let guarded = if v.abs() < tiny { if *v < 0.0 { -tiny } else { tiny } } else { *v };
                *v = 1.0 / guarded;
            }
            let q = &eig.eigenvectors;
            prev_inv = Some(q * DMatrix::from_diagonal(&inv_vals) * q.transpose());
        }
        count
    }

    pub fn gershgorin_upper(&self) -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..self.diag.len() {
            for r in 0..self.diag[k].nrows() {
                let mut s: f64 = self.diag[k].row(r).iter().map(|v| v.abs()).sum();
                if k > 0 {
                    s += self.upper[k - 1].column(r).iter().map(|v| v.abs()).sum::<f64>();
                }
                if k + 1 < self.diag.len() {
                    s += self.upper[k].row(r).iter().map(|v| v.abs()).sum::<f64>();
                }
                best = best.max(s);
            }
        }
        best
    }

    /// Smallest eigenvalue of the (positive semidefinite) matrix, to relative accuracy `rtol`.
    /// Returns 0 when it falls below `floor·λ_upper`.
    pub fn min_eigenvalue(&self, rtol: f64, floor: f64) -> f64 {
        let top = self.gershgorin_upper();
        if top == 0.0 {
            return 0.0;
        }
        let mut hi = top * (1.0 + 1e-12);
        let mut lo = hi;
        loop {
            lo *= 1e-2;
            if lo < top * floor {
                if self.count_below(top * floor) > 0 {
                    return 0.0;
                }
                lo = top * floor;
                break;
            }
            if self.count_below(lo) == 0 {
                break;
            }
            hi = lo;
        }
        while hi / lo - 1.0 > rtol {
            let mid = (lo * hi).sqrt();
            if self.count_below(mid) > 0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo * hi).sqrt()
    }
}

impl BlockCholesky {
    pub fn solve(&self, rhs: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let nb = self.diag.len();
        let mut z: Vec<DVector<f64>> = Vec::with_capacity(nb);
        for k in 0..nb {
            let mut b = rhs[k].clone();
            if k > 0 {
                b -= &self.sub[k - 1] * &z[k - 1];
            }
            let zk = if b.is_empty() { b } else { self.diag[k].solve_lower_triangular(&b).expect("nonzero pivots") };
            z.push(zk);
        }
        let mut x = vec![DVector::zeros(0); nb];
        for k in (0..nb).rev() {
            let mut b = z[k].clone();
            if k + 1 < nb {
                b -= self.sub[k].transpose() * &x[k + 1];
            }
            x[k] = if b.is_empty() { b } else { self.diag[k].tr_solve_lower_triangular(&b).expect("nonzero pivots") };
        }
        x
    }

    /// Cheap lower bound on the 2-norm condition number of `S`.
    pub fn condition_lower_bound(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for d in &self.diag {
            for i in 0..d.nrows() {
                let v = d[(i, i)].abs();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            (hi / lo).powi(2)
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct RowBlock {
    /// First column block touched.
    pub first: usize,
    /// One or two blocks, `blocks[j]` acting on column block `first + j`.
    pub blocks: Vec<DMatrix<f64>>,
}

impl RowBlock {
    pub fn rows(&self) -> usize {
        self.blocks[0].nrows()
    }
}

/// Block matrix whose row blocks are ordered by their first column and touch at most two
/// consecutive column blocks; all column blocks share the width `width`.
#[derive(Clone, Debug)]
pub(crate) struct BandedRows {
    pub col_blocks: usize,
    pub width: usize,
    pub rows: Vec<RowBlock>,
}

impl BandedRows {
    pub fn nrows(&self) -> usize {
        self.rows.iter().map(|r| r.rows()).sum()
    }

    pub fn ncols(&self) -> usize {
        self.col_blocks * self.width
    }

    pub fn apply(&self, x: &[DVector<f64>]) -> Vec<DVector<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut out = DVector::zeros(r.rows());
                for (j, b) in r.blocks.iter().enumerate() {
                    out += b * &x[r.first + j];
                }
                out
            })
            .collect()
    }

    pub fn apply_t(&self, w: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut out = vec![DVector::zeros(self.width); self.col_blocks];
        for (r, wr) in self.rows.iter().zip(w) {
            for (j, b) in r.blocks.iter().enumerate() {
                out[r.first + j] += b.transpose() * wr;
            }
        }
        out
    }

    /// `S = K Kᵀ`, block tridiagonal over the row blocks.
    pub fn normal(&self) -> BlockTridiag {
        let nr = self.rows.len();
        let mut diag = Vec::with_capacity(nr);
        let mut upper = Vec::with_capacity(nr.saturating_sub(1));
        for (i, r) in self.rows.iter().enumerate() {
            let mut d = DMatrix::zeros(r.rows(), r.rows());
            for b in &r.blocks {
                d += b * b.transpose();
            }
            diag.push(d);
            if i + 1 < nr {
                let s = &self.rows[i + 1];
                let mut e = DMatrix::zeros(r.rows(), s.rows());
                for (j, b) in r.blocks.iter().enumerate() {
                    let col = r.first + j;
                    if col >= s.first && col < s.first + s.blocks.len() {
                        e += b * s.blocks[col - s.first].transpose();
                    }
                }
                upper.push(e);
            }
        }
        debug_assert!(self.rows.windows(3).all(|w| w[2].first >= w[0].first + w[0].blocks.len()));
        BlockTridiag { diag, upper }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        let mut r0 = 0;
        for r in &self.rows {
            for (j, b) in r.blocks.iter().enumerate() {
                let c0 = (r.first + j) * self.width;
                m.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
            }
            r0 += r.rows();
        }
        m
    }
}

pub(crate) fn flatten(blocks: &[DVector<f64>]) -> DVector<f64> {
    let n = blocks.iter().map(|b| b.len()).sum();
    let mut out = DVector::zeros(n);
    let mut i = 0;
    for b in blocks {
        out.rows_mut(i, b.len()).copy_from(b);
        i += b.len();
    }
    out
}
