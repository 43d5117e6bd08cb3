//! Finite windows of linear cocycles with per-index norms.
//!
//! ```text
//! 𝒜(n,m) = A_{n-1} ⋯ A_m      (n > m),   𝒜(m,m) = Id
//! 𝒜(n,m) = (𝒜(m,n)|ker P_n)^{-1} Q_m     (n < m)
//! ```
//!
//! A dichotomy certificate `(P_n, D, λ, μ)` holds when
//!
//! ```text
//! ‖𝒜(n,m) P_m‖_{m→n} ≤ D λ^{n-m}   (n ≥ m)
//! ‖𝒜(n,m) Q_m‖_{m→n} ≤ D μ^{n-m}   (n ≤ m)
//! A_m P_m = P_{m+1} A_m
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition, kernel_basis, spectral_norm};
use crate::Tolerances;

/// Inclusive integer interval `[start, end]`, serialized as `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl From<[i64; 2]> for Window {
    fn from(w: [i64; 2]) -> Self {
        Window { start: w[0], end: w[1] }
    }
}

impl From<Window> for [i64; 2] {
    fn from(w: Window) -> Self {
        [w.start, w.end]
    }
}

impl Window {
    pub fn new(start: i64, end: i64) -> Self {
        Window { start, end }
    }

    /// `[-w, w]`.
    pub fn symmetric(w: i64) -> Self {
        Window { start: -w, end: w }
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.start && n <= self.end
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.is_empty() || (self.contains(other.start) && self.contains(other.end))
    }

    pub fn shrink(&self, margin: i64) -> Window {
        Window { start: self.start + margin, end: self.end - margin }
    }

    pub fn mid(&self) -> i64 {
        self.start + (self.end - self.start) / 2
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.start..=self.end
    }

    /// Offset of `n` from the start.
    pub fn pos(&self, n: i64) -> usize {
        debug_assert!(self.contains(n));
        (n - self.start) as usize
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    Flat,
    /// `‖v‖_n = g_n |v|`.
    Scalar(Vec<f64>),
    /// `‖v‖_n = sqrt(vᵀ W_n v)`.
    Spd(Vec<DMatrix<f64>>),
}

/// Per-index norms on ℝ^d, each an inner-product norm `‖v‖_n = |R_n v|`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSequence {
    window: Window,
    dim: usize,
    weights: Weights,
    /// Upper-triangular `R_n` with `W_n = R_nᵀ R_n` (SPD case only).
    factors: Vec<DMatrix<f64>>,
    inv_factors: Vec<DMatrix<f64>>,
}

impl NormSequence {
    pub fn flat(window: Window, dim: usize) -> Self {
        Self { window, dim, weights: Weights::Flat, factors: vec![], inv_factors: vec![] }
    }

    pub fn scalar(window: Window, dim: usize, g: Vec<f64>) -> Result<Self> {
        if g.len() != window.len() {
            return Err(Error::Config(format!("expected {} scalar weights, got {}", window.len(), g.len())));
        }
        if let Some(bad) = g.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Config(format!("scalar weights must be finite and positive, got {bad}")));
        }
        Ok(Self { window, dim, weights: Weights::Scalar(g), factors: vec![], inv_factors: vec![] })
    }

    /// `g_n = e^{ε|n|}`.
    pub fn exponential(window: Window, dim: usize, epsilon: f64) -> Self {
        let g = window.indices().map(|n| (epsilon * n.abs() as f64).exp()).collect();
        Self::scalar(window, dim, g).expect("exponential weights are positive")
    }

    pub fn spd(window: Window, weights: Vec<DMatrix<f64>>, eig_tol: f64) -> Result<Self> {
        if weights.len() != window.len() {
            return Err(Error::Config(format!("expected {} SPD weights, got {}", window.len(), weights.len())));
        }
        let dim = weights.first().map_or(0, |w| w.nrows());
        let mut factors = Vec::with_capacity(weights.len());
        let mut inv_factors = Vec::with_capacity(weights.len());
        let mut sym = Vec::with_capacity(weights.len());
        for (i, w) in weights.iter().enumerate() {
            let n = window.start + i as i64;
            if w.nrows() != dim || w.ncols() != dim {
                return Err(Error::Config(format!("weight at index {n} is not {dim}x{dim}")));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("weight at index {n} has non-finite entries")));
            }
            let scale = w.amax().max(1.0);
            if (w - w.transpose()).amax() > 1e-10 * scale {
                return Err(Error::Config(format!("weight at index {n} is not symmetric")));
            }
            let s = (w + w.transpose()) * 0.5;
            let low = s.clone().symmetric_eigenvalues().min();
            if low <= eig_tol {
                return Err(Error::Config(format!("weight at index {n} is not positive definite (min eigenvalue {low:.3e})")));
            }
            let l = s.clone().cholesky().ok_or_else(|| Error::Config(format!("weight at index {n} failed Cholesky")))?.l();
            let r = l.transpose();
            let rinv = r.clone().try_inverse().ok_or_else(|| Error::Config(format!("weight at index {n} is singular")))?;
            factors.push(r);
            inv_factors.push(rinv);
            sym.push(s);
        }
        Ok(Self { window, dim, weights: Weights::Spd(sym), factors, inv_factors })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.weights, Weights::Flat)
    }

    /// `R_n` with `‖v‖_n = |R_n v|`.
    pub fn factor(&self, n: i64) -> DMatrix<f64> {
        match &self.weights {
            Weights::Flat => DMatrix::identity(self.dim, self.dim),
            Weights::Scalar(g) => DMatrix::identity(self.dim, self.dim) * g[self.window.pos(n)],
            Weights::Spd(_) => self.factors[self.window.pos(n)].clone(),
        }
    }

    pub fn inv_factor(&self, n: i64) -> DMatrix<f64> {
        match &self.weights {
            Weights::Flat => DMatrix::identity(self.dim, self.dim),
            Weights::Scalar(g) => DMatrix::identity(self.dim, self.dim) / g[self.window.pos(n)],
            Weights::Spd(_) => self.inv_factors[self.window.pos(n)].clone(),
        }
    }

    /// Gram matrix `W_n`.
    pub fn gram(&self, n: i64) -> DMatrix<f64> {
        match &self.weights {
            Weights::Flat => DMatrix::identity(self.dim, self.dim),
            Weights::Scalar(g) => DMatrix::identity(self.dim, self.dim) * g[self.window.pos(n)].powi(2),
            Weights::Spd(w) => w[self.window.pos(n)].clone(),
        }
    }

    pub fn weigh(&self, n: i64, v: &DVector<f64>) -> DVector<f64> {
        match &self.weights {
            Weights::Flat => v.clone(),
            Weights::Scalar(g) => v * g[self.window.pos(n)],
            Weights::Spd(_) => &self.factors[self.window.pos(n)] * v,
        }
    }

    pub fn unweigh(&self, n: i64, v: &DVector<f64>) -> DVector<f64> {
        match &self.weights {
            Weights::Flat => v.clone(),
            Weights::Scalar(g) => v / g[self.window.pos(n)],
            Weights::Spd(_) => &self.inv_factors[self.window.pos(n)] * v,
        }
    }

    pub fn norm(&self, n: i64, v: &DVector<f64>) -> f64 {
        self.weigh(n, v).norm()
    }

    /// `R_n M R_m^{-1}`.
    pub fn transport(&self, n: i64, m: i64, mat: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.weights {
            Weights::Flat => mat.clone(),
            Weights::Scalar(g) => mat * (g[self.window.pos(n)] / g[self.window.pos(m)]),
            Weights::Spd(_) => &self.factors[self.window.pos(n)] * mat * &self.inv_factors[self.window.pos(m)],
        }
    }

    /// Operator norm of `M` from `(ℝ^d, ‖·‖_m)` to `(ℝ^d, ‖·‖_n)`.
    pub fn op_norm(&self, n: i64, m: i64, mat: &DMatrix<f64>) -> f64 {
        spectral_norm(&self.transport(n, m, mat))
    }

    pub fn restrict(&self, window: Window) -> Result<Self> {
        if !self.window.contains_window(&window) {
            return Err(Error::Usage(format!("window {window} not inside norm window {}", self.window)));
        }
        let a = self.window.pos(window.start);
        let b = a + window.len();
        Ok(match &self.weights {
            Weights::Flat => Self::flat(window, self.dim),
            Weights::Scalar(g) => Self { window, dim: self.dim, weights: Weights::Scalar(g[a..b].to_vec()), factors: vec![], inv_factors: vec![] },
            Weights::Spd(w) => Self {
                window,
                dim: self.dim,
                weights: Weights::Spd(w[a..b].to_vec()),
                factors: self.factors[a..b].to_vec(),
                inv_factors: self.inv_factors[a..b].to_vec(),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cocycle {
    window: Window,
    dim: usize,
    maps: Vec<DMatrix<f64>>,
    norms: NormSequence,
}

impl Cocycle {
    /// `maps[i]` is `A_{start+i}`, for indices `start ..= end-1`.
    pub fn new(window: Window, maps: Vec<DMatrix<f64>>, norms: NormSequence) -> Result<Self> {
        if window.len() < 2 {
            return Err(Error::Config(format!("cocycle window {window} needs at least two indices")));
        }
        if maps.len() != window.len() - 1 {
            return Err(Error::Config(format!("window {window} needs {} maps, got {}", window.len() - 1, maps.len())));
        }
        let dim = maps[0].nrows();
        for (i, a) in maps.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::Config(format!("map A_{} is not {dim}x{dim}", window.start + i as i64)));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("map A_{} has non-finite entries", window.start + i as i64)));
            }
        }
        if norms.window() != window || norms.dim() != dim {
            return Err(Error::Config(format!("norm sequence over {} (d={}) does not match cocycle over {window} (d={dim})", norms.window(), norms.dim())));
        }
        Ok(Self { window, dim, maps, norms })
    }

    pub fn constant(window: Window, a: DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        let maps = vec![a; window.len().saturating_sub(1)];
        Self::new(window, maps, NormSequence::flat(window, dim))
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norms(&self) -> &NormSequence {
        &self.norms
    }

    pub fn maps(&self) -> &[DMatrix<f64>] {
        &self.maps
    }

    /// `A_n`.
    pub fn map(&self, n: i64) -> &DMatrix<f64> {
        &self.maps[self.window.pos(n)]
    }

    pub fn with_norms(self, norms: NormSequence) -> Result<Self> {
        Self::new(self.window, self.maps, norms)
    }

    pub fn restrict(&self, window: Window) -> Result<Self> {
        if !self.window.contains_window(&window) {
            return Err(Error::Usage(format!("window {window} not inside cocycle window {}", self.window)));
        }
        let a = self.window.pos(window.start);
        let maps = self.maps[a..a + window.len() - 1].to_vec();
        Self::new(window, maps, self.norms.restrict(window)?)
    }

    /// `𝒜(n,m)` for `n ≥ m`.
    pub fn product(&self, n: i64, m: i64) -> DMatrix<f64> {
        assert!(n >= m, "product needs n >= m");
        let mut out = DMatrix::identity(self.dim, self.dim);
        for k in m..n {
            out = self.map(k) * out;
        }
        out
    }

    /// `𝒜(n,m)`; backward (`n < m`) needs the projections of a certificate.
    pub fn propagate(&self, n: i64, m: i64, cert: Option<&DichotomyCertificate>, tol: &Tolerances) -> Result<DMatrix<f64>> {
        if !self.window.contains(n) || !self.window.contains(m) {
            return Err(Error::Usage(format!("indices ({n}, {m}) outside window {}", self.window)));
        }
        if n >= m {
            return Ok(self.product(n, m));
        }
        let cert = cert.ok_or_else(|| Error::Usage("backward propagation needs a certificate".into()))?;
        let p_n = cert.projection(n).ok_or_else(|| Error::Usage(format!("index {n} outside certificate core {}", cert.core)))?;
        let p_m = cert.projection(m).ok_or_else(|| Error::Usage(format!("index {m} outside certificate core {}", cert.core)))?;
        backward(&self.product(m, n), p_n, p_m, tol)
    }
}

/// `(F|ker P_n)^{-1} Q_m` for a forward map `F = 𝒜(m,n)`.
fn backward(forward: &DMatrix<f64>, p_n: &DMatrix<f64>, p_m: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let d = forward.nrows();
    let u = kernel_basis(p_n, 1e-8);
    if u.ncols() == 0 {
        return Ok(DMatrix::zeros(d, d));
    }
    let img = forward * &u;
    let cond = condition(&img);
    if !(cond <= tol.inv_cond_max) {
        return Err(Error::Singular { condition: cond });
    }
    let pinv = img.pseudo_inverse(0.0).map_err(|_| Error::Singular { condition: f64::INFINITY })?;
    let q_m = DMatrix::identity(d, d) - p_m;
    Ok(u * pinv * q_m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyCertificate {
    pub core: Window,
    #[serde(with = "crate::serde_mat::vec")]
    pub projections: Vec<DMatrix<f64>>,
    #[serde(rename = "D")]
    pub d: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl DichotomyCertificate {
    pub fn constant(core: Window, p: DMatrix<f64>, d: f64, lambda: f64, mu: f64) -> Self {
        Self { core, projections: vec![p; core.len()], d, lambda, mu }
    }

    pub fn projection(&self, n: i64) -> Option<&DMatrix<f64>> {
        if self.core.contains(n) {
            self.projections.get(self.core.pos(n))
        } else {
            None
        }
    }

    pub fn rank(&self, n: i64) -> Option<usize> {
        self.projection(n).map(|p| p.trace().round().max(0.0) as usize)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub intertwining: f64,
    pub stable_excess: f64,
    pub unstable_excess: f64,
    pub idempotence: f64,
    /// Largest condition number of `A_m` restricted to `ker P_m`.
    pub kernel_condition: f64,
    pub rank_constant: bool,
    pub passes: bool,
}

/// Checks a certificate against every index pair of its core window.
///
/// Products are formed with re-projection at each step (`P_{k+1} A_k ⋯`),
/// which equals the plain product whenever the intertwining relation holds;
/// that relation is reported separately.
pub fn verify_certificate(c: &Cocycle, cert: &DichotomyCertificate, tol: &Tolerances) -> Result<ResidualReport> {
    let core = cert.core;
    if !c.window().contains_window(&core) || cert.projections.len() != core.len() {
        return Err(Error::Usage(format!("certificate core {core} not inside cocycle window {}", c.window())));
    }
    let d = c.dim();
    let id = DMatrix::<f64>::identity(d, d);
    let norms = c.norms();
    let proj: Vec<&DMatrix<f64>> = cert.projections.iter().collect();

    let mut rep = ResidualReport::default();
    for (i, p) in proj.iter().enumerate() {
        let n = core.start + i as i64;
        rep.idempotence = rep.idempotence.max(norms.op_norm(n, n, &(*p * *p - *p)));
    }
    let ranks: Vec<usize> = core.indices().map(|n| cert.rank(n).unwrap_or(0)).collect();
    rep.rank_constant = ranks.windows(2).all(|w| w[0] == w[1]);

    // one-step backward maps on the unstable part, and kernel conditions
    let mut back_steps = Vec::with_capacity(core.len().saturating_sub(1));
    for m in core.start..core.end {
        let a = c.map(m);
        let (p, p1) = (proj[core.pos(m)], proj[core.pos(m + 1)]);
        rep.intertwining = rep.intertwining.max(norms.op_norm(m + 1, m, &(a * p - p1 * a)));
        let u = kernel_basis(p, 1e-8);
        if u.ncols() > 0 {
            rep.kernel_condition = rep.kernel_condition.max(condition(&(a * &u)));
        }
        back_steps.push(backward(a, p, p1, tol).unwrap_or_else(|_| DMatrix::from_element(d, d, f64::NAN)));
    }

    let (stable, unstable): (Vec<f64>, Vec<f64>) = core
        .indices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&m| {
            // products are carried divided by λ^{n-m} (resp. μ^{n-m}) so they stay O(1)
            let mut stable: f64 = 0.0;
            let mut fwd = proj[core.pos(m)].clone();
            for n in m..=core.end {
                if n > m {
                    fwd = proj[core.pos(n)] * (c.map(n - 1) * &fwd) / cert.lambda;
                }
                let ratio = norms.op_norm(n, m, &fwd) / cert.d;
                stable = stable.max(if ratio.is_nan() { f64::INFINITY } else { ratio - 1.0 });
            }
            let mut unstable: f64 = 0.0;
            let mut bwd = &id - proj[core.pos(m)];
            for n in (core.start..=m).rev() {
                if n < m {
                    bwd = &back_steps[core.pos(n)] * &bwd * cert.mu;
                }
                let ratio = norms.op_norm(n, m, &bwd) / cert.d;
                unstable = unstable.max(if ratio.is_nan() { f64::INFINITY } else { ratio - 1.0 });
            }
            (stable.max(0.0), unstable.max(0.0))
        })
        .unzip();
    rep.stable_excess = stable.into_iter().fold(0.0, f64::max);
    rep.unstable_excess = unstable.into_iter().fold(0.0, f64::max);
    rep.passes = rep.intertwining <= tol.verify_tol
        && rep.stable_excess <= tol.verify_tol
        && rep.unstable_excess <= tol.verify_tol
        && rep.idempotence <= tol.verify_tol
        && rep.kernel_condition <= tol.inv_cond_max
        && rep.rank_constant;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExampleKind {
    /// `A_n ≡ diag(entries)`.
    Diagonal { entries: Vec<f64> },
    Identity { dim: usize },
    /// `A_n = e^{-2ε(|n+1|-|n|)} diag(λ, μ)`.
    NonuniformScalarPair { lambda: f64, mu: f64, epsilon: f64 },
    /// `A_n ≡ [[2,1],[1,1]]`.
    Catmap,
    /// Base cocycle plus i.i.d. entries uniform in `[-δ, δ]`.
    Perturbed { base: Box<ExampleKind>, delta: f64, seed: u64 },
}

impl ExampleKind {
    pub fn diagonal(a: f64, b: f64) -> Self {
        ExampleKind::Diagonal { entries: vec![a, b] }
    }
}

/// Builds one of the test families over `window` with flat norms.
pub fn generate_example(kind: &ExampleKind, window: Window) -> Result<Cocycle> {
    if window.len() < 2 {
        return Err(Error::Config(format!("window {window} needs at least two indices")));
    }
    let count = window.len() - 1;
    let maps: Vec<DMatrix<f64>> = match kind {
        ExampleKind::Diagonal { entries } => {
            if entries.is_empty() || entries.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("diagonal entries must be finite and nonempty".into()));
            }
            vec![DMatrix::from_diagonal(&DVector::from_vec(entries.clone())); count]
        }
        ExampleKind::Identity { dim } => {
            if *dim == 0 {
                return Err(Error::Config("identity needs dim >= 1".into()));
            }
            vec![DMatrix::identity(*dim, *dim); count]
        }
        ExampleKind::NonuniformScalarPair { lambda, mu, epsilon } => {
            if !(*lambda > 0.0 && *lambda < 1.0 && *mu > 1.0 && mu.is_finite() && *epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(Error::Config(format!("need 0 < lambda < 1 < mu and epsilon >= 0, got ({lambda}, {mu}, {epsilon})")));
            }
            window
                .indices()
                .take(count)
                .map(|n| {
                    let s = (-2.0 * epsilon * ((n + 1).abs() - n.abs()) as f64).exp();
                    DMatrix::from_diagonal(&DVector::from_vec(vec![lambda * s, mu * s]))
                })
                .collect()
        }
        ExampleKind::Catmap => vec![DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]); count],
        ExampleKind::Perturbed { base, delta, seed } => {
            if !(delta.is_finite() && *delta >= 0.0) {
                return Err(Error::Config(format!("perturbation size must be >= 0, got {delta}")));
            }
            let base = generate_example(base, window)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            base.maps
                .iter()
                .map(|a| {
                    let mut a = a.clone();
                    for r in 0..a.nrows() {
                        for c in 0..a.ncols() {
                            a[(r, c)] += if *delta > 0.0 { rng.gen_range(-delta..=*delta) } else { 0.0 };
                        }
                    }
                    a
                })
                .collect()
        }
    };
    let dim = maps[0].nrows();
    Cocycle::new(window, maps, NormSequence::flat(window, dim))
}
