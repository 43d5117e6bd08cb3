//! Finite sections of the admissibility operator and the `B(z)` family.
//!
//! ```text
//! (T x)_n    = x_n - A_{n-1} x_{n-1}
//! (B(z) x)_n = c_n x_n - A_{n-1} x_{n-1},   c_n = z (n ≤ pivot), 1/z (n > pivot)
//! ```
//!
//! All solves run in weighted coordinates `x̃_n = R_n x_n`, where the norm at
//! index `n` is `|R_n ·|`. The section matrix `K` is block bidiagonal and is
//! handled through `K Kᵀ` (see `linalg`). Which equations enter `K` is set by
//! the [`Boundary`] policy.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{verify_certificate, Cocycle, DichotomyCertificate, ResidualReport, Window};
use crate::error::{Error, Result};
use crate::linalg::{flatten, range_basis, BandedRows, BlockCholesky, RowBlock};
use crate::seqspace::SequenceSpace;
use crate::Tolerances;

const Z_CAP: f64 = 1e6;

/// Which equations of the finite section are imposed.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    /// Square section with `x_{n_min-1} = 0`: all rows `n_min ..= n_max`.
    Zero,
    /// Rows `n_min+1 ..= n_max` only; `x_{n_min}` is left free and solves are minimum-norm.
    Free,
    /// Free rows plus `P(x_{n_min} - y_{n_min}) = 0` on the left and `Q x_{n_max} = 0` on the right,
    /// with the given projections. For `z = 1` and exact projections this reproduces the
    /// bi-infinite solution on the window.
    Projected { left: DMatrix<f64>, right: DMatrix<f64> },
}

/// Sequence of vectors `x_n`, `n ∈ [start, start + len - 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    pub start: i64,
    pub blocks: Vec<DVector<f64>>,
}

impl BlockVector {
    pub fn zeros(window: Window, dim: usize) -> Self {
        Self { start: window.start, blocks: vec![DVector::zeros(dim); window.len()] }
    }

    /// `δ_n ⊗ v` on `window`.
    pub fn impulse(window: Window, n: i64, v: DVector<f64>) -> Self {
        let mut out = Self::zeros(window, v.len());
        out.blocks[window.pos(n)] = v;
        out
    }

    pub fn random(window: Window, dim: usize, rng: &mut impl Rng) -> Self {
        let blocks = (0..window.len()).map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))).collect();
        Self { start: window.start, blocks }
    }

    pub fn window(&self) -> Window {
        Window::new(self.start, self.start + self.blocks.len() as i64 - 1)
    }

    pub fn get(&self, n: i64) -> Option<&DVector<f64>> {
        if n < self.start {
            return None;
        }
        self.blocks.get((n - self.start) as usize)
    }

    /// `‖(‖x_n‖_n)_n‖_B`, with fiber norms from `c`.
    pub fn norm(&self, space: &SequenceSpace, c: &Cocycle) -> f64 {
        let vals: Vec<f64> = self.blocks.iter().enumerate().map(|(i, b)| c.norms().norm(self.start + i as i64, b)).collect();
        space.norm_of(&vals)
    }

    /// Largest `|x_n - y_n|` (Euclidean) over the union of the supports.
    pub fn max_diff(&self, other: &BlockVector) -> f64 {
        let w = self.window();
        let v = other.window();
        let (lo, hi) = (w.start.min(v.start), w.end.max(v.end));
        let mut best: f64 = 0.0;
        for n in lo..=hi {
            let d = match (self.get(n), other.get(n)) {
                (Some(a), Some(b)) => (a - b).norm(),
                (Some(a), None) => a.norm(),
                (None, Some(b)) => b.norm(),
                (None, None) => 0.0,
            };
            best = best.max(d);
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct WindowedOperator {
    cocycle: Cocycle,
    space: SequenceSpace,
    z: f64,
    pivot: i64,
    boundary: Boundary,
}

/// Finite section of `B(z)` (of `T` when `z = 1`) over `window`, with [`Boundary::Free`].
pub fn assemble(c: &Cocycle, space: &SequenceSpace, window: Window, z: f64, pivot: i64) -> Result<WindowedOperator> {
    if !c.window().contains_window(&window) || window.len() < 2 {
        return Err(Error::Usage(format!("window {window} must lie inside cocycle window {} with at least two indices", c.window())));
    }
    if !(z.is_finite() && z >= 1.0) {
        return Err(Error::Usage(format!("z must be >= 1, got {z}")));
    }
    if !window.contains(pivot) {
        return Err(Error::Usage(format!("pivot {pivot} outside window {window}")));
    }
    Ok(WindowedOperator { cocycle: c.restrict(window)?, space: space.clone(), z, pivot, boundary: Boundary::Free })
}

/// Everything needed to solve repeatedly with one operator.
pub struct Factorization {
    rows: BandedRows,
    chol: BlockCholesky,
    /// Row index of the first dynamic equation (`n_min` or `n_min + 1`).
    first_row: i64,
    left_rows: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: BlockVector,
    /// `‖K x̃ - ỹ‖ / ‖ỹ‖` over the imposed equations, in weighted coordinates.
    pub residual: f64,
}

impl WindowedOperator {
    pub fn with_boundary(mut self, boundary: Boundary) -> Result<Self> {
        if let Boundary::Projected { left, right } = &boundary {
            let d = self.dim();
            if left.shape() != (d, d) || right.shape() != (d, d) {
                return Err(Error::Usage(format!("boundary projections must be {d}x{d}")));
            }
        }
        self.boundary = boundary;
        Ok(self)
    }

    pub fn window(&self) -> Window {
        self.cocycle.window()
    }

    pub fn dim(&self) -> usize {
        self.cocycle.dim()
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn pivot(&self) -> i64 {
        self.pivot
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn space(&self) -> &SequenceSpace {
        &self.space
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    /// `c_n`.
    pub fn coefficient(&self, n: i64) -> f64 {
        if n <= self.pivot {
            self.z
        } else {
            1.0 / self.z
        }
    }

    /// `(B(z) x)_n` for every `n` in the window, with `x_{n_min-1} = 0`.
    pub fn apply(&self, x: &BlockVector) -> Result<BlockVector> {
        let w = self.window();
        if !w.contains_window(&x.window()) {
            return Err(Error::Usage(format!("vector on {} not inside window {w}", x.window())));
        }
        let d = self.dim();
        let zero = DVector::zeros(d);
        let at = |n: i64| x.get(n).unwrap_or(&zero);
        let blocks = w
            .indices()
            .map(|n| {
                let mut out = at(n) * self.coefficient(n);
                if n > w.start {
                    out -= self.cocycle.map(n - 1) * at(n - 1);
                }
                out
            })
            .collect();
        Ok(BlockVector { start: w.start, blocks })
    }

    fn first_row(&self) -> i64 {
        match self.boundary {
            Boundary::Zero => self.window().start,
            _ => self.window().start + 1,
        }
    }

    fn banded(&self) -> (BandedRows, Option<DMatrix<f64>>) {
        let w = self.window();
        let d = self.dim();
        let norms = self.cocycle.norms();
        let mut rows = Vec::with_capacity(w.len() + 1);
        let mut left_rows = None;
        if let Boundary::Projected { left, .. } = &self.boundary {
            let basis = range_basis(&left.transpose(), 1e-8).transpose();
            if basis.nrows() > 0 {
                rows.push(RowBlock { first: 0, blocks: vec![&basis * norms.inv_factor(w.start)] });
                left_rows = Some(basis);
            }
        }
        for n in self.first_row()..=w.end {
            let j = w.pos(n);
            let diag = DMatrix::identity(d, d) * self.coefficient(n);
            if n == w.start {
                rows.push(RowBlock { first: j, blocks: vec![diag] });
            } else {
                let sub = -norms.transport(n, n - 1, self.cocycle.map(n - 1));
                rows.push(RowBlock { first: j - 1, blocks: vec![sub, diag] });
            }
        }
        if let Boundary::Projected { right, .. } = &self.boundary {
            let q = DMatrix::identity(d, d) - right;
            let basis = range_basis(&q.transpose(), 1e-8).transpose();
            if basis.nrows() > 0 {
                rows.push(RowBlock { first: w.len() - 1, blocks: vec![&basis * norms.inv_factor(w.end)] });
            }
        }
        (BandedRows { col_blocks: w.len(), width: d, rows }, left_rows)
    }

    /// Weighted section matrix `K` as a dense matrix (for small windows and tests).
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        self.banded().0.dense()
    }

    pub fn factorize(&self, tol: &Tolerances) -> Result<Factorization> {
        let (rows, left_rows) = self.banded();
        let chol = rows.normal().cholesky().ok_or(Error::Singular { condition: f64::INFINITY })?;
        let cond = chol.condition_lower_bound().sqrt();
        if !(cond <= tol.inv_cond_max) {
            return Err(Error::Singular { condition: cond });
        }
        Ok(Factorization { rows, chol, first_row: self.first_row(), left_rows })
    }

    fn weighted_rhs(&self, fac: &Factorization, y: &BlockVector) -> Result<Vec<DVector<f64>>> {
        let w = self.window();
        if !w.contains_window(&y.window()) {
            return Err(Error::Usage(format!("right-hand side on {} not inside window {w}", y.window())));
        }
        let d = self.dim();
        let zero = DVector::zeros(d);
        let norms = self.cocycle.norms();
        let mut out = Vec::with_capacity(fac.rows.rows.len());
        if let Some(basis) = &fac.left_rows {
            out.push(basis * y.get(w.start).unwrap_or(&zero));
        } else if fac.first_row > w.start {
            if let Some(v) = y.get(w.start) {
                if v.iter().any(|e| *e != 0.0) {
                    return Err(Error::Usage(format!("free boundary imposes no equation at index {}", w.start)));
                }
            }
        }
        for n in fac.first_row..=w.end {
            out.push(norms.weigh(n, y.get(n).unwrap_or(&zero)));
        }
        while out.len() < fac.rows.rows.len() {
            out.push(DVector::zeros(fac.rows.rows[out.len()].rows()));
        }
        Ok(out)
    }

    /// Minimum-norm least-squares solve of the imposed equations.
    pub fn solve_with(&self, fac: &Factorization, y: &BlockVector) -> Result<Solution> {
        let rhs = self.weighted_rhs(fac, y)?;
        let w = fac.chol.solve(&rhs);
        let xt = fac.rows.apply_t(&w);
        let back = fac.rows.apply(&xt);
        let num = flatten(&back) - flatten(&rhs);
        let den = flatten(&rhs).norm();
        let residual = if den > 0.0 { num.norm() / den } else { num.norm() };
        let win = self.window();
        let norms = self.cocycle.norms();
        let blocks = xt.iter().enumerate().map(|(i, v)| norms.unweigh(win.start + i as i64, v)).collect();
        Ok(Solution { x: BlockVector { start: win.start, blocks }, residual })
    }

    pub fn solve(&self, y: &BlockVector, tol: &Tolerances) -> Result<Solution> {
        let fac = self.factorize(tol)?;
        self.solve_with(&fac, y)
    }

    fn dynamic(&self) -> WindowedOperator {
        let mut op = self.clone();
        if matches!(op.boundary, Boundary::Projected { .. }) {
            op.boundary = Boundary::Free;
        }
        op
    }
}

pub fn solve(op: &WindowedOperator, y: &BlockVector, tol: &Tolerances) -> Result<Solution> {
    op.solve(y, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ExactL2Svd,
    ExactL1LinfInverse,
    IterativeEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvertibilityReport {
    pub invertible: bool,
    /// `+∞` when the section is singular.
    #[serde(with = "finite_or_null")]
    pub inverse_norm: f64,
    pub method: NormMethod,
    pub threshold_used: f64,
}

/// `f64` with `±∞`/NaN written as `null` and read back as `+∞`.
pub mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

const RESOLVABLE: f64 = 64.0 * f64::EPSILON;

/// Norm of the (pseudo-)inverse of the section in the weighted space `Y_B`.
///
/// `ℓ²`: `1/σ_min(K)`. `ℓ¹`/`ℓ^∞`: block column/row sums of `‖G_{nm}‖₂` for the explicit
/// inverse `G`; exact for `d = 1`, an upper bound otherwise. Other spaces: the largest ratio
/// `‖Gy‖/‖y‖` over impulses and power iterates, a lower bound.
/// A [`Boundary::Projected`] operator is measured with its free rows only. A section whose
/// normal matrix is singular to working precision reports an infinite norm.
pub fn inverse_norm(op: &WindowedOperator, space: &SequenceSpace, tol: &Tolerances) -> InvertibilityReport {
    let op = op.dynamic();
    let method = match space.exponent() {
        Some(2.0) => NormMethod::ExactL2Svd,
        Some(p) if p == 1.0 || p.is_infinite() => NormMethod::ExactL1LinfInverse,
        _ => NormMethod::IterativeEstimate,
    };
    let singular = InvertibilityReport { invertible: false, inverse_norm: f64::INFINITY, method, threshold_used: tol.inv_norm_max };
    let Ok(fac) = op.factorize(tol) else {
        return singular;
    };
    // eigenvalues of S = K Kᵀ below this are rounding noise, so σ_min(K) is unresolved
    let s = fac.rows.normal();
    let top = s.gershgorin_upper();
    if s.count_below(RESOLVABLE * top) > 0 {
        return singular;
    }
    let value = match method {
        NormMethod::ExactL2Svd => {
            let floor = (1.0 / tol.inv_norm_max).powi(2) * 1e-4;
            let lmin = s.min_eigenvalue(1e-10, floor / top.max(1e-300));
            if lmin > 0.0 {
                1.0 / lmin.sqrt()
            } else {
                f64::INFINITY
            }
        }
        NormMethod::ExactL1LinfInverse => block_sum_norm(&fac, space.exponent() == Some(1.0)),
        NormMethod::IterativeEstimate => iterative_estimate(&fac, space, tol),
    };
    InvertibilityReport { invertible: value.is_finite() && value < tol.inv_norm_max, inverse_norm: value, method, threshold_used: tol.inv_norm_max }
}

fn unit_rhs(rows: &BandedRows, block: usize, comp: usize) -> Vec<DVector<f64>> {
    let mut e: Vec<DVector<f64>> = rows.rows.iter().map(|r| DVector::zeros(r.rows())).collect();
    e[block][comp] = 1.0;
    e
}

fn block_sum_norm(fac: &Factorization, column_sums: bool) -> f64 {
    let rows = &fac.rows;
    let nb = rows.col_blocks;
    let d = rows.width;
    // g[r][n]: d x rows(r) block of the inverse
    let g: Vec<Vec<DMatrix<f64>>> = (0..rows.rows.len())
        .into_par_iter()
        .map(|r| {
            let k = rows.rows[r].rows();
            let mut blocks = vec![DMatrix::zeros(d, k); nb];
            for comp in 0..k {
                let x = rows.apply_t(&fac.chol.solve(&unit_rhs(rows, r, comp)));
                for (n, xn) in x.iter().enumerate() {
                    blocks[n].set_column(comp, xn);
                }
            }
            blocks
        })
        .collect();
    let norms: Vec<Vec<f64>> = g.iter().map(|col| col.iter().map(crate::linalg::spectral_norm).collect()).collect();
    if column_sums {
        norms.iter().map(|col| col.iter().sum::<f64>()).fold(0.0, f64::max)
    } else {
        (0..nb).map(|n| norms.iter().map(|col| col[n]).sum::<f64>()).fold(0.0, f64::max)
    }
}

fn iterative_estimate(fac: &Factorization, space: &SequenceSpace, tol: &Tolerances) -> f64 {
    let rows = &fac.rows;
    let ratio = |y: &[DVector<f64>]| -> (f64, Vec<DVector<f64>>) {
        let w = fac.chol.solve(y);
        let x = rows.apply_t(&w);
        let xs: Vec<f64> = x.iter().map(|v| v.norm()).collect();
        let ys: Vec<f64> = y.iter().map(|v| v.norm()).collect();
        (space.norm_of(&xs) / space.norm_of(&ys), w)
    };
    let mut best: f64 = 0.0;
    for r in 0..rows.rows.len() {
        for comp in 0..rows.rows[r].rows() {
            best = best.max(ratio(&unit_rhs(rows, r, comp)).0);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tol.seed);
    let mut y: Vec<DVector<f64>> = rows.rows.iter().map(|r| DVector::from_fn(r.rows(), |_, _| rng.gen_range(-1.0..1.0))).collect();
    for _ in 0..tol.estimate_iters {
        let (q, w) = ratio(&y);
        best = best.max(q);
        // power step on S^{-1} = (K^+)ᵀ K^+
        let scale = flatten(&w).norm();
        if !(scale > 0.0) {
            break;
        }
        y = w.into_iter().map(|v| v / scale).collect();
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub invertible: bool,
    #[serde(with = "finite_or_null")]
    pub inverse_norm: f64,
    pub half_window: Window,
    #[serde(with = "finite_or_null")]
    pub half_inverse_norm: f64,
    #[serde(with = "finite_or_null")]
    pub growth: f64,
    pub method: NormMethod,
    pub threshold_used: f64,
    pub growth_threshold: f64,
}

/// Window-doubling test: `B(z)` on `window` is classified invertible when its inverse norm
/// is below `inv_norm_max` and grows by less than `growth_threshold` relative to the
/// half-size window around the pivot.
pub fn classify(c: &Cocycle, space: &SequenceSpace, window: Window, z: f64, pivot: i64, tol: &Tolerances) -> Result<Classification> {
    let full = inverse_norm(&assemble(c, space, window, z, pivot)?, space, tol);
    let half = Window::new(pivot - (pivot - window.start) / 2, pivot + (window.end - pivot) / 2);
    let half = if half.len() < 2 { Window::new(pivot, pivot + 1).min_with(window) } else { half };
    let part = inverse_norm(&assemble(c, space, half, z, pivot.min(half.end))?, space, tol);
    let growth = if part.inverse_norm.is_finite() { full.inverse_norm / part.inverse_norm } else { f64::INFINITY };
    Ok(Classification {
        invertible: full.invertible && part.invertible && growth < tol.growth_threshold,
        inverse_norm: full.inverse_norm,
        half_window: half,
        half_inverse_norm: part.inverse_norm,
        growth,
        method: full.method,
        threshold_used: tol.inv_norm_max,
        growth_threshold: tol.growth_threshold,
    })
}

impl Window {
    fn min_with(self, outer: Window) -> Window {
        Window::new(self.start.max(outer.start), self.end.min(outer.end))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub z_star: f64,
    pub lambda_hat: f64,
    pub mu_hat: f64,
    /// Guaranteed constant `N² D'/t` at `z_D = 1 + 1/(4‖T^{-1}‖)`.
    #[serde(rename = "D_hat")]
    pub d_hat: f64,
    /// `t = 1/z_D`; the certificate `(D_hat, t, 1/t)` is the guaranteed one.
    pub t: f64,
    #[serde(rename = "D_prime")]
    pub d_prime: f64,
    pub inverse_norm: f64,
    /// `1 + 1/‖T^{-1}‖`: every smaller `z` keeps `B(z)` invertible.
    pub z_guaranteed: f64,
    pub pivots: Vec<i64>,
    /// `⌈log(proj_tol/D_hat)/log λ̂⌉`.
    pub margin: i64,
    /// `z*` hit the search cap.
    pub capped: bool,
}

/// `⌈log(proj_tol/D)/log λ⌉`, at least 1.
pub fn margin(d: f64, lambda: f64, proj_tol: f64) -> i64 {
    ((proj_tol / d).ln() / lambda.ln()).ceil().max(1.0) as i64
}

fn invertible_at(c: &Cocycle, space: &SequenceSpace, window: Window, z: f64, pivots: &[i64], tol: &Tolerances) -> Result<bool> {
    let results: Vec<Result<bool>> = pivots.par_iter().map(|&p| classify(c, space, window, z, p, tol).map(|r| r.invertible)).collect();
    for r in results {
        if !r? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn search(c: &Cocycle, space: &SequenceSpace, window: Window, pivots: &[i64], start: f64, hint: Option<f64>, tol: &Tolerances) -> Result<(f64, bool)> {
    let mut lo = start;
    while !invertible_at(c, space, window, lo, pivots, tol)? {
        lo = 1.0 + (lo - 1.0) / 2.0;
        if lo - 1.0 < 1e-12 {
            return Ok((1.0, false));
        }
    }
    let mut hi = None;
    if let Some(h) = hint.filter(|h| *h > lo) {
        if invertible_at(c, space, window, h, pivots, tol)? {
            lo = h;
        } else {
            hi = Some(h);
        }
    }
    let mut hi = match hi {
        Some(h) => h,
        None => loop {
            let cand = 1.0 + 2.0 * (lo - 1.0);
            if cand > Z_CAP {
                return Ok((lo, true));
            }
            if invertible_at(c, space, window, cand, pivots, tol)? {
                lo = cand;
            } else {
                break cand;
            }
        },
    };
    while hi / lo - 1.0 > tol.rate_tol {
        let mid = (lo * hi).sqrt();
        if invertible_at(c, space, window, mid, pivots, tol)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, false))
}

/// Largest `z` keeping `B(z)` invertible at every pivot, by bracketing from the guaranteed
/// radius and bisection. Pivots default to `{n_min + M, mid, n_max - M}`, with `M` the
/// margin of a first pass at the mid pivot, clamped to `[len/8, len/2]`.
pub fn extract_rates(c: &Cocycle, space: &SequenceSpace, window: Window, pivots: Option<&[i64]>, tol: &Tolerances) -> Result<Rates> {
    let base = classify(c, space, window, 1.0, window.mid(), tol)?;
    if !base.invertible {
        return Err(Error::Precondition(format!(
            "T is not invertible on {window} (inverse norm {:.3e}, growth {:.3})",
            base.inverse_norm, base.growth
        )));
    }
    let g = base.inverse_norm;
    let n = space.shift_constant();
    let z_guaranteed = 1.0 + 1.0 / g;
    let z_d = 1.0 + 1.0 / (4.0 * g);
    let t = 1.0 / z_d;
    let d_prime = 1.0 / (1.0 / g - (1.0 / t - 1.0));
    let d_hat = n * n * d_prime / t;
    let start = 1.0 + 0.999 / g;

    let (pivots, z_star, capped) = match pivots {
        Some(p) => {
            if let Some(bad) = p.iter().find(|p| !window.contains(**p)) {
                return Err(Error::Usage(format!("pivot {bad} outside window {window}")));
            }
            let (z, capped) = search(c, space, window, p, start, None, tol)?;
            (p.to_vec(), z, capped)
        }
        None => {
            let (z1, capped1) = search(c, space, window, &[window.mid()], start, None, tol)?;
            let len = window.len() as i64;
            let m = margin(d_hat, 1.0 / z1, tol.proj_tol).clamp((len / 8).max(1), (len / 2).max(1));
            let mut p = vec![window.start + m, window.mid(), window.end - m];
            p.sort_unstable();
            p.dedup();
            p.retain(|q| window.contains(*q));
            let hint = if capped1 { None } else { Some(z1 * (1.0 + 2.0 * tol.rate_tol)) };
            let (z, capped) = search(c, space, window, &p, start, hint, tol)?;
            (p, z.min(z1 * (1.0 + 2.0 * tol.rate_tol)), capped)
        }
    };
    let lambda_hat = 1.0 / z_star;
    Ok(Rates {
        z_star,
        lambda_hat,
        mu_hat: z_star,
        d_hat,
        t,
        d_prime,
        inverse_norm: g,
        z_guaranteed,
        pivots,
        margin: margin(d_hat, lambda_hat, tol.proj_tol),
        capped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredProjections {
    pub core: Window,
    #[serde(with = "crate::serde_mat::vec")]
    pub projections: Vec<DMatrix<f64>>,
    pub idempotence: f64,
    pub intertwining: f64,
    pub rank: usize,
    pub rank_constant: bool,
}

/// `P_n v = x_n` where `T x = δ_n ⊗ v`, for every `n` in `core` and basis vector `v`.
pub fn recover_projections(op: &WindowedOperator, core: Window, tol: &Tolerances) -> Result<RecoveredProjections> {
    if op.z() != 1.0 {
        return Err(Error::Usage("projection recovery needs z = 1".into()));
    }
    let w = op.window();
    if core.is_empty() || core.start <= w.start || !w.contains_window(&core) {
        return Err(Error::Usage(format!("core {core} must lie strictly inside window {w}")));
    }
    let fac = op.factorize(tol).map_err(|e| Error::Precondition(format!("T is not invertible: {e}")))?;
    let d = op.dim();
    let projections: Vec<DMatrix<f64>> = core
        .indices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&n| {
            let mut p = DMatrix::zeros(d, d);
            for i in 0..d {
                let y = BlockVector::impulse(w, n, DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 }));
                let sol = op.solve_with(&fac, &y)?;
                p.set_column(i, sol.x.get(n).expect("n in window"));
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;
    let norms = op.cocycle().norms();
    let mut idempotence: f64 = 0.0;
    let mut intertwining: f64 = 0.0;
    for (i, p) in projections.iter().enumerate() {
        let n = core.start + i as i64;
        idempotence = idempotence.max(norms.op_norm(n, n, &(p * p - p)));
        if let Some(p1) = projections.get(i + 1) {
            let a = op.cocycle().map(n);
            intertwining = intertwining.max(norms.op_norm(n + 1, n, &(a * p - p1 * a)));
        }
    }
    let ranks: Vec<usize> = projections.iter().map(|p| p.trace().round().max(0.0) as usize).collect();
    let rank_constant = ranks.windows(2).all(|r| r[0] == r[1]);
    let rec = RecoveredProjections { core, projections, idempotence, intertwining, rank: ranks[0], rank_constant };
    if idempotence > tol.proj_tol || intertwining > tol.proj_tol || !rank_constant {
        return Err(Error::RecoveryFailed(format!(
            "idempotence {idempotence:.3e}, intertwining {intertwining:.3e}, rank constant {rank_constant} (tolerance {:.1e})",
            tol.proj_tol
        )));
    }
    Ok(rec)
}

/// Series solver built from a verified certificate:
///
/// ```text
/// x¹_n =  Σ_{m≥0} 𝒜(n, n-m) P_{n-m} y_{n-m}
/// x²_n = -Σ_{m≥1} 𝒜(n, n+m) Q_{n+m} y_{n+m}
/// ```
///
/// evaluated by the recursions `x¹_n = P_n(A_{n-1} x¹_{n-1} + y_n)` and
/// `x²_n = 𝒜(n, n+1)(x²_{n+1} - Q_{n+1} y_{n+1})`, so that for `y` supported in the
/// core the sums are exact.
pub struct GreenSolver<'a> {
    cocycle: &'a Cocycle,
    cert: &'a DichotomyCertificate,
    back: Vec<DMatrix<f64>>,
    pub residuals: ResidualReport,
}

impl<'a> GreenSolver<'a> {
    pub fn new(c: &'a Cocycle, cert: &'a DichotomyCertificate, tol: &Tolerances) -> Result<Self> {
        let residuals = verify_certificate(c, cert, tol)?;
        if !residuals.passes {
            return Err(Error::Precondition(format!("certificate fails verification: {residuals:?}")));
        }
        let core = cert.core;
        let d = c.dim();
        let mut back = Vec::with_capacity(core.len().saturating_sub(1));
        for n in core.start..core.end {
            back.push(c.propagate(n, n + 1, Some(cert), tol)?);
        }
        let _ = d;
        Ok(Self { cocycle: c, cert, back, residuals })
    }

    /// Solution on the certificate core; `y` must be supported there.
    pub fn solve(&self, y: &BlockVector) -> Result<BlockVector> {
        let core = self.cert.core;
        if !core.contains_window(&y.window()) {
            return Err(Error::Usage(format!("right-hand side on {} not inside core {core}", y.window())));
        }
        let d = self.cocycle.dim();
        let zero = DVector::zeros(d);
        let yv = |n: i64| y.get(n).unwrap_or(&zero).clone();
        let p = |n: i64| self.cert.projection(n).expect("index in core");
        let mut x1: Vec<DVector<f64>> = Vec::with_capacity(core.len());
        for n in core.indices() {
            let mut v = yv(n);
            if n > core.start {
                v += self.cocycle.map(n - 1) * &x1[core.pos(n - 1)];
            }
            x1.push(p(n) * v);
        }
        let mut x2 = vec![DVector::zeros(d); core.len()];
        for n in (core.start..core.end).rev() {
            let q_y = &yv(n + 1) - p(n + 1) * yv(n + 1);
            x2[core.pos(n)] = &self.back[core.pos(n)] * (&x2[core.pos(n + 1)] - q_y);
        }
        let blocks = x1.into_iter().zip(x2).map(|(a, b)| a + b).collect();
        Ok(BlockVector { start: core.start, blocks })
    }
}

pub fn green_solve(c: &Cocycle, cert: &DichotomyCertificate, y: &BlockVector, tol: &Tolerances) -> Result<BlockVector> {
    GreenSolver::new(c, cert, tol)?.solve(y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectCheck {
    pub certificate: ResidualReport,
    pub trials: usize,
    /// Largest `‖x_direct - x_green‖ / ‖x_green‖` (weighted `ℓ²` over the core).
    pub max_relative_difference: f64,
    /// Largest `‖T x_green - y‖ / ‖y‖` over the core equations.
    pub max_green_residual: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverseCheck {
    pub rates: Rates,
    pub core: Window,
    pub idempotence: f64,
    pub intertwining: f64,
    /// Verification of `(D_hat, t, 1/t)` with the recovered projections.
    pub residuals: ResidualReport,
    /// Verification of `(D_hat·d_slack, λ̂(1+rate_tol), μ̂(1-rate_tol))`.
    pub sharp_residuals: ResidualReport,
    pub certificate: DichotomyCertificate,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub window: Window,
    pub classification: Classification,
    pub direct: Option<DirectCheck>,
    pub converse: Option<ConverseCheck>,
    pub notes: Vec<String>,
    pub passes: bool,
}

fn relative_l2(a: &BlockVector, b: &BlockVector, c: &Cocycle) -> f64 {
    let diff = BlockVector { start: a.start, blocks: a.blocks.iter().zip(&b.blocks).map(|(x, y)| x - y).collect() };
    let l2 = SequenceSpace::l2();
    let den = b.norm(&l2, c);
    let num = diff.norm(&l2, c);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Certificate at the searched rates: `(D_hat·d_slack, λ̂(1+rate_tol), μ̂(1-rate_tol))`.
pub fn sharp_certificate(rates: &Rates, core: Window, projections: Vec<DMatrix<f64>>, tol: &Tolerances) -> DichotomyCertificate {
    DichotomyCertificate {
        core,
        projections,
        d: rates.d_hat * tol.d_slack,
        lambda: (rates.lambda_hat * (1.0 + tol.rate_tol)).min(1.0 - 1e-12),
        mu: (rates.mu_hat * (1.0 - tol.rate_tol)).max(1.0 + 1e-12),
    }
}

/// Runs both directions of the equivalence between dichotomy and invertibility on `window`.
///
/// (a) With a known certificate: the section must be invertible and the Green series must
/// agree with a direct solve (projected boundary at the core ends) on `trials` random data.
/// (b) If the section is invertible: rates, margin, projections and the guaranteed
/// certificate are recovered and verified.
pub fn check_equivalence(
    c: &Cocycle,
    space: &SequenceSpace,
    window: Window,
    known: Option<&DichotomyCertificate>,
    trials: usize,
    tol: &Tolerances,
) -> Result<EquivalenceReport> {
    let classification = classify(c, space, window, 1.0, window.mid(), tol)?;
    let mut notes = Vec::new();

    let direct = match known {
        None => None,
        Some(cert) => Some(direct_check(c, cert, trials, tol, &mut notes)?),
    };

    let converse = if classification.invertible {
        match converse_check(c, space, window, tol) {
            Ok(cc) => Some(cc),
            Err(e) => {
                notes.push(format!("converse direction failed: {e}"));
                None
            }
        }
    } else {
        notes.push(format!(
            "T classified not invertible on {window}: inverse norm {:.3e}, growth {:.3}",
            classification.inverse_norm, classification.growth
        ));
        None
    };

    if let Some(d) = direct.as_ref().filter(|d| !d.passes && d.trials > 0) {
        notes.push(format!("green vs direct: relative difference {:.3e}, residual {:.3e}", d.max_relative_difference, d.max_green_residual));
    }
    if let Some(cc) = converse.as_ref().filter(|c| !c.passes) {
        notes.push(format!("recovered certificate fails verification: {:?}", cc.residuals));
    }
    let mut passes = direct.is_some() || converse.is_some();
    if let Some(d) = &direct {
        passes &= d.passes && classification.invertible;
    }
    if classification.invertible {
        passes &= converse.as_ref().is_some_and(|c| c.passes);
    }
    Ok(EquivalenceReport { window, classification, direct, converse, notes, passes })
}

fn direct_check(c: &Cocycle, cert: &DichotomyCertificate, trials: usize, tol: &Tolerances, notes: &mut Vec<String>) -> Result<DirectCheck> {
    let core = cert.core;
    let solver = match GreenSolver::new(c, cert, tol) {
        Ok(s) => s,
        Err(e) => {
            notes.push(format!("supplied certificate rejected: {e}"));
            let certificate = verify_certificate(c, cert, tol)?;
            return Ok(DirectCheck { certificate, trials: 0, max_relative_difference: f64::NAN, max_green_residual: f64::NAN, passes: false });
        }
    };
    let l2 = SequenceSpace::l2();
    let boundary = Boundary::Projected {
        left: cert.projection(core.start).expect("core start").clone(),
        right: cert.projection(core.end).expect("core end").clone(),
    };
    let op = assemble(c, &l2, core, 1.0, core.mid())?.with_boundary(boundary)?;
    let fac = op.factorize(tol)?;
    let t = assemble(c, &l2, core, 1.0, core.mid())?.with_boundary(Boundary::Zero)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tol.seed);
    let mut max_rel: f64 = 0.0;
    let mut max_res: f64 = 0.0;
    for _ in 0..trials {
        let y = BlockVector::random(core, c.dim(), &mut rng);
        let green = solver.solve(&y)?;
        let direct = op.solve_with(&fac, &y)?;
        max_rel = max_rel.max(relative_l2(&direct.x, &green, c));
        // interior equations n > core.start are exact for the series
        let ty = t.apply(&green)?;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for n in core.start + 1..=core.end {
            num += (ty.get(n).unwrap() - y.get(n).unwrap()).norm_squared();
            den += y.get(n).unwrap().norm_squared();
        }
        max_res = max_res.max((num / den.max(f64::MIN_POSITIVE)).sqrt());
    }
    let passes = max_rel <= tol.series_tol && max_res <= tol.series_tol;
    Ok(DirectCheck { certificate: solver.residuals.clone(), trials, max_relative_difference: max_rel, max_green_residual: max_res, passes })
}

fn converse_check(c: &Cocycle, space: &SequenceSpace, window: Window, tol: &Tolerances) -> Result<ConverseCheck> {
    let rates = extract_rates(c, space, window, None, tol)?;
    let core = window.shrink(rates.margin);
    if core.len() < 2 {
        return Err(Error::ShortWindow { required: window.len() + 2 * (rates.margin as usize) , available: window.len() });
    }
    let op = assemble(c, space, window, 1.0, window.mid())?;
    let rec = recover_projections(&op, core, tol)?;
    let certificate = DichotomyCertificate { core, projections: rec.projections.clone(), d: rates.d_hat, lambda: rates.t, mu: 1.0 / rates.t };
    let residuals = verify_certificate(c, &certificate, tol)?;
    let sharp = sharp_certificate(&rates, core, rec.projections.clone(), tol);
    let sharp_residuals = verify_certificate(c, &sharp, tol)?;
    let passes = residuals.passes;
    Ok(ConverseCheck { rates, core, idempotence: rec.idempotence, intertwining: rec.intertwining, residuals, sharp_residuals, certificate, passes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{generate_example, ExampleKind};
    use crate::seqspace::{geometric_convolve, Direction, WindowedSequence};

    fn scalar(a: f64, w: Window) -> Cocycle {
        Cocycle::constant(w, DMatrix::from_element(1, 1, a)).unwrap()
    }

    fn e(d: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 })
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn apply_examples() {
        let w = Window::new(0, 2);
        let c = scalar(0.5, w);
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let x = BlockVector { start: 0, blocks: vec![DVector::from_element(1, 1.0); 3] };
        let y = op.apply(&x).unwrap();
        let got: Vec<f64> = y.blocks.iter().map(|b| b[0]).collect();
        assert_eq!(got, vec![1.0, 0.5, 0.5]);

        let w = Window::new(-2, 2);
        let c = scalar(0.5, w);
        let op = assemble(&c, &SequenceSpace::l2(), w, 2.0, 0).unwrap();
        let y = op.apply(&BlockVector::impulse(w, 0, DVector::from_element(1, 1.0))).unwrap();
        assert_eq!(y.get(0).unwrap()[0], 2.0);
        assert_eq!(y.get(1).unwrap()[0], -0.5);

        let c = generate_example(&ExampleKind::Catmap, Window::new(0, 4)).unwrap();
        let op = assemble(&c, &SequenceSpace::l2(), c.window(), 1.0, 2).unwrap();
        let v = DVector::from_vec(vec![0.3, -1.0]);
        let y = op.apply(&BlockVector::impulse(c.window(), 1, v.clone())).unwrap();
        assert_eq!(y.get(1).unwrap(), &v);
        assert_eq!(y.get(2).unwrap(), &(-c.map(1) * &v));
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let c = scalar(0.5, Window::new(0, 4));
        assert!(assemble(&c, &SequenceSpace::l2(), Window::new(0, 5), 1.0, 0).is_err());
        assert!(assemble(&c, &SequenceSpace::l2(), Window::new(0, 4), 0.5, 0).is_err());
        assert!(assemble(&c, &SequenceSpace::l2(), Window::new(0, 4), 1.0, 7).is_err());
    }

    #[test]
    fn stable_scalar_green_function() {
        let w = Window::symmetric(32);
        let c = scalar(0.5, w);
        let y = BlockVector::impulse(w, 0, DVector::from_element(1, 1.0));
        let (oracle, _) = geometric_convolve(&SequenceSpace::l2(), &WindowedSequence::impulse(0), 0.5, Direction::Causal, 1e-16).unwrap();
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap().with_boundary(Boundary::Zero).unwrap();
        let sol = op.solve(&y, &tol()).unwrap();
        for n in w.indices() {
            assert!((sol.x.get(n).unwrap()[0] - oracle.get(n)).abs() <= 1e-12, "n={n}");
        }
        assert!(sol.residual < 1e-14);
        // the free section carries a stable homogeneous component of size λ^{32}·(4/3) at most
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let sol = op.solve(&y, &tol()).unwrap();
        let bound = 0.5_f64.powi(32) * 4.0 / 3.0;
        for n in w.indices() {
            assert!((sol.x.get(n).unwrap()[0] - oracle.get(n)).abs() <= bound, "n={n}");
        }
    }

    #[test]
    fn unstable_scalar_green_function() {
        let w = Window::symmetric(32);
        let c = scalar(2.0, w);
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let sol = op.solve(&BlockVector::impulse(w, 0, DVector::from_element(1, 1.0)), &tol()).unwrap();
        for n in w.indices() {
            let expect = if n < 0 { -(2.0_f64).powi(n as i32) } else { 0.0 };
            assert!((sol.x.get(n).unwrap()[0] - expect).abs() <= 1e-9, "n={n}");
        }
    }

    #[test]
    fn zero_rhs_and_zero_boundary() {
        let w = Window::symmetric(8);
        let c = generate_example(&ExampleKind::diagonal(0.5, 2.0), w).unwrap();
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let sol = op.solve(&BlockVector::zeros(w, 2), &tol()).unwrap();
        assert_eq!(sol.x.max_abs(), 0.0);
        // square Dirichlet section is causal and reproduces apply
        let op = op.with_boundary(Boundary::Zero).unwrap();
        let x = BlockVector::random(w, 2, &mut ChaCha8Rng::seed_from_u64(1));
        let y = op.apply(&x).unwrap();
        let back = op.solve(&y, &tol()).unwrap();
        assert!(back.x.max_diff(&x) < 1e-9);
    }

    #[test]
    fn free_boundary_rejects_data_at_left_end() {
        let w = Window::symmetric(4);
        let op = assemble(&scalar(0.5, w), &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let y = BlockVector::impulse(w, w.start, DVector::from_element(1, 1.0));
        assert!(matches!(op.solve(&y, &tol()), Err(Error::Usage(_))));
    }

    #[test]
    fn inverse_norm_examples() {
        let w = Window::symmetric(64);
        let c = scalar(0.5, w);
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let rep = inverse_norm(&op, &SequenceSpace::l2(), &tol());
        assert_eq!(rep.method, NormMethod::ExactL2Svd);
        assert!(rep.invertible && (rep.inverse_norm - 2.0).abs() < 0.04, "{rep:?}");

        let c = scalar(0.0, w);
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let rep = inverse_norm(&op, &SequenceSpace::l2(), &tol());
        assert!((rep.inverse_norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn past_threshold_is_not_invertible_on_long_windows() {
        let w = Window::symmetric(256);
        let c = generate_example(&ExampleKind::diagonal(0.1, 4.69), w).unwrap();
        let l2 = SequenceSpace::l2();
        assert!(classify(&c, &l2, w, 4.6, w.mid(), &tol()).unwrap().invertible);
        for z in [4.8, 6.0, 9.0] {
            assert!(!classify(&c, &l2, w, z, w.mid(), &tol()).unwrap().invertible, "z = {z}");
        }
    }

    #[test]
    fn l2_inverse_norm_matches_dense_svd() {
        let w = Window::symmetric(6);
        let c = generate_example(&ExampleKind::Perturbed { base: Box::new(ExampleKind::Catmap), delta: 0.1, seed: 4 }, w).unwrap();
        let c = c.with_norms(crate::NormSequence::exponential(w, 2, 0.05)).unwrap();
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.3, 1).unwrap();
        let dense = op.dense_matrix();
        let oracle = 1.0 / dense.singular_values().min();
        let rep = inverse_norm(&op, &SequenceSpace::l2(), &tol());
        assert!((rep.inverse_norm / oracle - 1.0).abs() < 1e-8);
    }

    #[test]
    fn l1_linf_norms_match_dense_inverse_in_scalar_case() {
        let w = Window::symmetric(10);
        let c = Cocycle::new(
            w,
            (0..w.len() - 1).map(|i| DMatrix::from_element(1, 1, 0.3 + 0.05 * i as f64)).collect(),
            crate::NormSequence::flat(w, 1),
        )
        .unwrap();
        let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, 0).unwrap();
        let pinv = op.dense_matrix().pseudo_inverse(1e-14).unwrap();
        let col = (0..pinv.ncols()).map(|j| pinv.column(j).abs().sum()).fold(0.0, f64::max);
        let row = (0..pinv.nrows()).map(|i| pinv.row(i).abs().sum()).fold(0.0, f64::max);
        let r1 = inverse_norm(&op, &SequenceSpace::l1(), &tol());
        let rinf = inverse_norm(&op, &SequenceSpace::linf(), &tol());
        assert!((r1.inverse_norm - col).abs() < 1e-10);
        assert!((rinf.inverse_norm - row).abs() < 1e-10);
    }

    #[test]
    fn identity_norm_grows_with_window() {
        let l2 = SequenceSpace::l2();
        let norms: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&w| {
                let win = Window::symmetric(w);
                let c = generate_example(&ExampleKind::Identity { dim: 1 }, win).unwrap();
                inverse_norm(&assemble(&c, &l2, win, 1.0, 0).unwrap(), &l2, &tol()).inverse_norm
            })
            .collect();
        assert!(norms.windows(2).all(|p| p[1] / p[0] > 1.9), "{norms:?}");
    }

    #[test]
    fn diagonal_rates() {
        let l2 = SequenceSpace::l2();
        for (a, b, expect) in [(0.5, 2.0, 2.0), (0.25, 8.0, 4.0)] {
            let w = Window::symmetric(64);
            let c = generate_example(&ExampleKind::diagonal(a, b), w).unwrap();
            let r = extract_rates(&c, &l2, w, None, &tol()).unwrap();
            assert!((r.z_star / expect - 1.0).abs() < 0.02, "{r:?}");
            assert!(r.z_guaranteed < r.z_star);
        }
    }

    #[test]
    fn projections_of_diagonal_and_catmap() {
        let l2 = SequenceSpace::l2();
        let w = Window::symmetric(64);
        let c = generate_example(&ExampleKind::diagonal(0.5, 2.0), w).unwrap();
        let op = assemble(&c, &l2, w, 1.0, 0).unwrap();
        let rec = recover_projections(&op, w.shrink(30), &tol()).unwrap();
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(rec.projections.iter().all(|q| (q - &p).amax() < 1e-8));

        let c = generate_example(&ExampleKind::Catmap, w).unwrap();
        let op = assemble(&c, &l2, w, 1.0, 0).unwrap();
        let rec = recover_projections(&op, w.shrink(30), &tol()).unwrap();
        let eig = c.map(0).clone().symmetric_eigen();
        let i = if eig.eigenvalues[0] < eig.eigenvalues[1] { 0 } else { 1 };
        let v = eig.eigenvectors.column(i).into_owned();
        let spectral = &v * v.transpose();
        assert!(rec.projections.iter().all(|q| (q - &spectral).amax() < 1e-6));
    }

    #[test]
    fn green_series_examples() {
        let w = Window::symmetric(20);
        let c = generate_example(&ExampleKind::diagonal(0.5, 2.0), w).unwrap();
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let cert = DichotomyCertificate::constant(w, p, 1.0, 0.5, 2.0);
        let x = green_solve(&c, &cert, &BlockVector::impulse(w, 0, e(2, 0)), &tol()).unwrap();
        for n in w.indices() {
            let expect = if n >= 0 { 0.5_f64.powi(n as i32) } else { 0.0 };
            assert!((x.get(n).unwrap() - e(2, 0) * expect).amax() < 1e-15);
        }
        let x = green_solve(&c, &cert, &BlockVector::impulse(w, 0, e(2, 1)), &tol()).unwrap();
        for n in w.indices() {
            let expect = if n < 0 { -(2.0_f64).powi(n as i32) } else { 0.0 };
            assert!((x.get(n).unwrap() - e(2, 1) * expect).amax() < 1e-15);
        }
        let x = green_solve(&c, &cert, &BlockVector::zeros(w, 2), &tol()).unwrap();
        assert_eq!(x.max_abs(), 0.0);
        let bad = DichotomyCertificate::constant(w, DMatrix::identity(2, 2), 1.0, 0.5, 2.0);
        assert!(matches!(green_solve(&c, &bad, &BlockVector::zeros(w, 2), &tol()), Err(Error::Precondition(_))));
    }

    #[test]
    fn equivalence_diagonal_and_identity() {
        let l2 = SequenceSpace::l2();
        let w = Window::symmetric(64);
        let c = generate_example(&ExampleKind::diagonal(0.5, 2.0), w).unwrap();
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let cert = DichotomyCertificate::constant(w, p, 1.0, 0.5, 2.0);
        let rep = check_equivalence(&c, &l2, w, Some(&cert), 5, &tol()).unwrap();
        assert!(rep.passes, "{rep:#?}");
        assert!(rep.direct.as_ref().unwrap().max_relative_difference <= 1e-8);
        assert!(rep.converse.as_ref().unwrap().sharp_residuals.passes);

        let c = generate_example(&ExampleKind::Identity { dim: 2 }, w).unwrap();
        let rep = check_equivalence(&c, &l2, w, None, 5, &tol()).unwrap();
        assert!(!rep.classification.invertible && rep.converse.is_none() && !rep.passes);
    }
}
