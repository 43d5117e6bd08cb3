//! Adapted norms and splittings along sampled trajectories.
//!
//! A trajectory is a window of derivatives `D_n = d_{x_n} f` with fiber norms
//! `‖·‖_{x_n}`. Given a splitting `E^s ⊕ E^u` and rates `λ < 1 < μ`, the adapted
//! norm at `x = x_k` is `max(‖v^s‖^ε, ‖v^u‖^ε)` with
//!
//! ```text
//! ‖v‖^ε = sup_{n≥0} λ^{-n} e^{-εn} ‖Φ(k+n,k) v‖ + sup_{n<0} e^{εn} A^n ‖Φ(k+n,k) v‖   (v ∈ E^s)
//! ‖v‖^ε = sup_{n≤0} μ^{-n} e^{εn}  ‖Φ(k+n,k) v‖ + sup_{n>0} A^{-n} e^{-εn} ‖Φ(k+n,k) v‖ (v ∈ E^u)
//! ```
//!
//! where every sup runs over the indices where the splitting is known. Products
//! are formed with re-projection onto the propagated subspace at each step.
//!
//! ```text
//! Z       = 2A(e^{ε₀}+1) / (μe^{-ε₀} - λe^{ε₀})
//! D_theory = Z (1/(1-λe^{ε₀}) + 1/(μe^{-ε₀}-1))
//! G(x)    = (C(x)+1)/K(x)
//! ```

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{generate_example, Cocycle, ExampleKind, NormSequence, Window};
use crate::dichotomy::{assemble, classify, extract_rates, BlockVector, Classification, Rates, WindowedOperator};
use crate::error::{Error, Result};
use crate::linalg::{condition, range_basis, singular_values, spectral_norm};
use crate::seqspace::SequenceSpace;
use crate::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryData {
    window: Window,
    points: Vec<Vec<f64>>,
    derivs: Vec<DMatrix<f64>>,
    inverses: Vec<DMatrix<f64>>,
    inner: NormSequence,
    global_bound: f64,
}

impl TrajectoryData {
    /// `derivs[i] = d_{x_{start+i}} f`; `points` may be empty (labels only).
    pub fn new(window: Window, derivs: Vec<DMatrix<f64>>, inner: NormSequence, points: Vec<Vec<f64>>, a_bound: Option<f64>, tol: &Tolerances) -> Result<Self> {
        let c = Cocycle::new(window, derivs, inner)?;
        if !points.is_empty() && points.len() != window.len() {
            return Err(Error::Config(format!("expected {} orbit points, got {}", window.len(), points.len())));
        }
        let mut inverses = Vec::with_capacity(c.maps().len());
        let mut bound: f64 = 1.0;
        for (i, d) in c.maps().iter().enumerate() {
            let n = window.start + i as i64;
            let cond = condition(d);
            if !(cond <= tol.inv_cond_max) {
                return Err(Error::Config(format!("derivative at index {n} is not invertible (condition {cond:.3e})")));
            }
            let inv = d.clone().try_inverse().ok_or_else(|| Error::Config(format!("derivative at index {n} is singular")))?;
            bound = bound.max(c.norms().op_norm(n + 1, n, d)).max(c.norms().op_norm(n, n + 1, &inv));
            inverses.push(inv);
        }
        if let Some(a) = a_bound {
            if !(a.is_finite() && a >= 1.0) {
                return Err(Error::Config(format!("A_bound must be >= 1, got {a}")));
            }
            bound = bound.max(a);
        }
        let (window, derivs, inner) = (c.window(), c.maps().to_vec(), c.norms().clone());
        Ok(Self { window, points, derivs, inverses, inner, global_bound: bound })
    }

    pub fn from_cocycle(c: &Cocycle, tol: &Tolerances) -> Result<Self> {
        Self::new(c.window(), c.maps().to_vec(), c.norms().clone(), vec![], None, tol)
    }

    /// Orbit of `(x, y) ↦ (2x + y, x + y) mod 1` from `x0`, with Euclidean fibers.
    pub fn catmap_orbit(window: Window, x0: [f64; 2], tol: &Tolerances) -> Result<Self> {
        let c = generate_example(&ExampleKind::Catmap, window)?;
        let step = |p: [f64; 2]| [(2.0 * p[0] + p[1]).rem_euclid(1.0), (p[0] + p[1]).rem_euclid(1.0)];
        let back = |p: [f64; 2]| [(p[0] - p[1]).rem_euclid(1.0), (2.0 * p[1] - p[0]).rem_euclid(1.0)];
        let mut pts = vec![[0.0; 2]; window.len()];
        let zero = (0i64).clamp(window.start, window.end);
        let mut p = x0;
        for _ in 0..zero.max(0) {
            p = step(p);
        }
        for _ in 0..(-zero).max(0) {
            p = back(p);
        }
        pts[window.pos(zero)] = p;
        for n in zero + 1..=window.end {
            pts[window.pos(n)] = step(pts[window.pos(n - 1)]);
        }
        for n in (window.start..zero).rev() {
            pts[window.pos(n)] = back(pts[window.pos(n + 1)]);
        }
        Self::new(window, c.maps().to_vec(), c.norms().clone(), pts.iter().map(|p| p.to_vec()).collect(), None, tol)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn derivs(&self) -> &[DMatrix<f64>] {
        &self.derivs
    }

    pub fn inner(&self) -> &NormSequence {
        &self.inner
    }

    /// `A ≥ 1` bounding `‖D_n‖` and `‖D_n^{-1}‖` over the window (and any supplied bound).
    pub fn global_bound(&self) -> f64 {
        self.global_bound
    }

    pub fn deriv(&self, n: i64) -> &DMatrix<f64> {
        &self.derivs[self.window.pos(n)]
    }

    pub fn inverse(&self, n: i64) -> &DMatrix<f64> {
        &self.inverses[self.window.pos(n)]
    }

    pub fn as_cocycle(&self) -> Cocycle {
        Cocycle::new(self.window, self.derivs.clone(), self.inner.clone()).expect("validated on construction")
    }
}

/// `E^s(x_k)`, `E^u(x_k)` on a core window, with rates, `ε` and the functions `C`, `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityData {
    pub core: Window,
    /// Euclidean-orthonormal bases of `E^s(x_k)`.
    #[serde(with = "crate::serde_mat::vec")]
    pub stable: Vec<DMatrix<f64>>,
    #[serde(with = "crate::serde_mat::vec")]
    pub unstable: Vec<DMatrix<f64>>,
    pub lambda: f64,
    pub mu: f64,
    pub epsilon: f64,
    #[serde(rename = "Cfun")]
    pub c_fun: Vec<f64>,
    #[serde(rename = "Kfun")]
    pub k_fun: Vec<f64>,
}

impl HyperbolicityData {
    /// Splitting read off projections `P_k` (range `E^s`, kernel `E^u`); `C`, `K` left empty.
    pub fn from_projections(core: Window, projections: &[DMatrix<f64>], lambda: f64, mu: f64, epsilon: f64) -> Result<Self> {
        if projections.len() != core.len() {
            return Err(Error::Config(format!("expected {} projections, got {}", core.len(), projections.len())));
        }
        if !(lambda > 0.0 && lambda < 1.0 && mu > 1.0) {
            return Err(Error::Domain(format!("need 0 < lambda < 1 < mu, got ({lambda}, {mu})")));
        }
        let d = projections[0].nrows();
        let mut stable = Vec::with_capacity(core.len());
        let mut unstable = Vec::with_capacity(core.len());
        for (i, p) in projections.iter().enumerate() {
            let s = range_basis(p, 1e-6);
            let u = range_basis(&(DMatrix::identity(d, d) - p), 1e-6);
            if s.ncols() + u.ncols() != d {
                return Err(Error::RecoveryFailed(format!("splitting at index {} has dimensions {} + {} != {d}", core.start + i as i64, s.ncols(), u.ncols())));
            }
            stable.push(s);
            unstable.push(u);
        }
        let h = Self { core, stable, unstable, lambda, mu, epsilon, c_fun: vec![], k_fun: vec![] };
        for k in core.indices() {
            if condition(&h.basis(k)) > 1e12 {
                return Err(Error::RecoveryFailed(format!("E^s and E^u are not complementary at index {k}")));
            }
        }
        Ok(h)
    }

    /// The same projection at every index of `core`.
    pub fn constant(core: Window, p: &DMatrix<f64>, lambda: f64, mu: f64, epsilon: f64) -> Result<Self> {
        Self::from_projections(core, &vec![p.clone(); core.len()], lambda, mu, epsilon)
    }

    fn basis(&self, k: i64) -> DMatrix<f64> {
        let i = self.core.pos(k);
        let (s, u) = (&self.stable[i], &self.unstable[i]);
        let mut b = DMatrix::zeros(s.nrows(), s.ncols() + u.ncols());
        b.columns_mut(0, s.ncols()).copy_from(s);
        b.columns_mut(s.ncols(), u.ncols()).copy_from(u);
        b
    }

    /// Projection onto `E^s(x_k)` along `E^u(x_k)`.
    pub fn projection(&self, k: i64) -> DMatrix<f64> {
        let b = self.basis(k);
        let ks = self.stable[self.core.pos(k)].ncols();
        let inv = b.clone().try_inverse().expect("complementary subspaces");
        let mut sel = DMatrix::zeros(b.ncols(), b.ncols());
        for i in 0..ks {
            sel[(i, i)] = 1.0;
        }
        &b * sel * inv
    }

    pub fn stable_dim(&self) -> usize {
        self.stable[0].ncols()
    }

    /// Largest sine of the principal angles between the splittings of `self` and `other`
    /// over their common indices.
    pub fn max_angle_to(&self, other: &HyperbolicityData) -> f64 {
        let lo = self.core.start.max(other.core.start);
        let hi = self.core.end.min(other.core.end);
        let mut worst: f64 = 0.0;
        for k in lo..=hi {
            let (i, j) = (self.core.pos(k), other.core.pos(k));
            worst = worst.max(subspace_sine(&self.stable[i], &other.stable[j]));
            worst = worst.max(subspace_sine(&self.unstable[i], &other.unstable[j]));
        }
        worst
    }
}

/// Sine of the largest principal angle between the column spans of orthonormal `a`, `b`.
pub fn subspace_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    let proj = a * a.transpose();
    spectral_norm(&(b - proj * b))
}

/// `b (bᵀ G b)^{-1/2}`: basis of the same span, orthonormal for `⟨u, v⟩ = uᵀ G v`.
fn metric_orthonormal(b: &DMatrix<f64>, gram: &DMatrix<f64>) -> DMatrix<f64> {
    let m = b.transpose() * gram * b;
    let eig = m.symmetric_eigen();
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    b * (&eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Stable,
    Unstable,
}

/// Projections `P_k` (or `Q_k`) over `h.core`.
fn part_projections(h: &HyperbolicityData, part: Part) -> Vec<DMatrix<f64>> {
    h.core
        .indices()
        .map(|k| {
            let p = h.projection(k);
            match part {
                Part::Stable => p,
                Part::Unstable => DMatrix::identity(p.nrows(), p.nrows()) - p,
            }
        })
        .collect()
}

/// `R_{k+n} Φ(k+n,k) b` for `n = 0, ±1, …` up to the end of `h.core` in the given direction.
fn orbit_terms(t: &TrajectoryData, h: &HyperbolicityData, proj: &[DMatrix<f64>], k: i64, b: &DMatrix<f64>, forward: bool) -> Vec<DMatrix<f64>> {
    let core = h.core;
    let mut out = Vec::new();
    let mut m = b.clone();
    let mut j = k;
    loop {
        out.push(&t.inner().factor(j) * &m);
        if forward {
            if j == core.end {
                break;
            }
            m = &proj[core.pos(j + 1)] * (t.deriv(j) * &m);
            j += 1;
        } else {
            if j == core.start {
                break;
            }
            m = &proj[core.pos(j - 1)] * (t.inverse(j - 1) * &m);
            j -= 1;
        }
    }
    out
}

/// `max_n |first_n α| + max_n |second_n α|`, with rigorous bounds `lower|α| ≤ · ≤ upper|α|`.
#[derive(Clone, Debug)]
struct PartNorm {
    first: Vec<DMatrix<f64>>,
    second: Vec<DMatrix<f64>>,
    upper: f64,
    lower: f64,
}

impl PartNorm {
    fn eval(&self, alpha: &DVector<f64>) -> f64 {
        if alpha.is_empty() {
            return 0.0;
        }
        let sup = |fam: &[DMatrix<f64>]| fam.iter().map(|m| (m * alpha).norm()).fold(0.0, f64::max);
        sup(&self.first) + sup(&self.second)
    }

    fn new(first: Vec<DMatrix<f64>>, second: Vec<DMatrix<f64>>) -> Self {
        let top = |fam: &[DMatrix<f64>]| fam.iter().map(spectral_norm).fold(0.0, f64::max);
        let low = |fam: &[DMatrix<f64>]| fam.iter().map(|m| if m.ncols() == 0 { 0.0 } else { singular_values(m).min() }).fold(0.0, f64::max);
        let upper = top(&first) + top(&second);
        let lower = low(&first) + low(&second);
        Self { first, second, upper, lower }
    }
}

/// Index of the largest term and its ratio `last/max`; `None` for an empty family.
fn family_profile(fam: &[DMatrix<f64>]) -> Option<(usize, f64)> {
    let norms: Vec<f64> = fam.iter().map(spectral_norm).collect();
    let mut best = 0;
    for (i, v) in norms.iter().enumerate() {
        if *v > norms[best] * (1.0 + 1e-12) {
            best = i;
        }
    }
    let top = norms.get(best).copied()?;
    Some((best, if top > 0.0 { norms[norms.len() - 1] / top } else { 0.0 }))
}

#[derive(Clone, Debug)]
struct AdaptedPoint {
    projection: DMatrix<f64>,
    coord_s: DMatrix<f64>,
    coord_u: DMatrix<f64>,
    stable: PartNorm,
    unstable: PartNorm,
}

#[derive(Clone, Debug)]
pub struct AdaptedNorm {
    epsilon: f64,
    eps0: f64,
    lambda: f64,
    mu: f64,
    a_bound: f64,
    core: Window,
    sup_window: Window,
    points: Vec<AdaptedPoint>,
    g_fun: Vec<f64>,
    slack: f64,
}

/// `ε₀ = min(-ln λ, ln μ)/2`.
pub fn default_eps0(lambda: f64, mu: f64) -> f64 {
    0.5 * (-lambda.ln()).min(mu.ln())
}

/// `Z = 2A(e^{ε₀}+1)/(μe^{-ε₀} - λe^{ε₀})`.
pub fn projection_bound_z(lambda: f64, mu: f64, eps0: f64, a: f64) -> Result<f64> {
    let den = mu * (-eps0).exp() - lambda * eps0.exp();
    if !(den > 0.0) {
        return Err(Error::Domain(format!("spectral gap closed: mu e^-eps0 - lambda e^eps0 = {den:.3e}")));
    }
    if !(a >= 1.0) {
        return Err(Error::Domain(format!("A must be >= 1, got {a}")));
    }
    Ok(2.0 * a * (eps0.exp() + 1.0) / den)
}

/// `Z (1/(1-λe^{ε₀}) + 1/(μe^{-ε₀}-1))`.
pub fn d_theory(lambda: f64, mu: f64, eps0: f64, a: f64) -> Result<f64> {
    let (s, u) = (lambda * eps0.exp(), mu * (-eps0).exp());
    if !(s < 1.0 && u > 1.0) {
        return Err(Error::Domain(format!("need lambda e^eps0 < 1 < mu e^-eps0, got {s:.4} and {u:.4}")));
    }
    Ok(projection_bound_z(lambda, mu, eps0, a)? * (1.0 / (1.0 - s) + 1.0 / (u - 1.0)))
}

fn check_epsilon(lambda: f64, mu: f64, epsilon: f64, eps0: f64) -> Result<()> {
    if !(lambda * eps0.exp() < 1.0 && mu * (-eps0).exp() > 1.0 && eps0 > 0.0) {
        return Err(Error::Domain(format!("eps0 = {eps0} violates lambda e^eps0 < 1 < mu e^-eps0 (lambda = {lambda}, mu = {mu})")));
    }
    if !(epsilon > 0.0 && epsilon < eps0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, eps0) with eps0 = {eps0:.6}")));
    }
    Ok(())
}

/// Adapted norm at the points of `core`, with sups over `h.core`.
///
/// Fails with [`Error::ShortWindow`] when some sup is attained at the last available index
/// (or a family is empty); `ε₀` defaults to [`default_eps0`].
pub fn build_adapted_norm(t: &TrajectoryData, h: &HyperbolicityData, epsilon: f64, core: Window, eps0: Option<f64>) -> Result<AdaptedNorm> {
    let (lambda, mu) = (h.lambda, h.mu);
    let eps0 = eps0.unwrap_or_else(|| default_eps0(lambda, mu));
    check_epsilon(lambda, mu, epsilon, eps0)?;
    if !h.core.contains_window(&core) || core.is_empty() || !t.window().contains_window(&h.core) {
        return Err(Error::Usage(format!("norm core {core} must lie inside splitting core {} within trajectory {}", h.core, t.window())));
    }
    if h.c_fun.len() != h.core.len() || h.k_fun.len() != h.core.len() {
        return Err(Error::Usage("hyperbolicity data lacks C and K; run estimate_ck first".into()));
    }
    let a = t.global_bound().max(1.0 / lambda).max(mu);
    let proj_s = part_projections(h, Part::Stable);
    let proj_u = part_projections(h, Part::Unstable);

    let built: Vec<Result<(AdaptedPoint, f64)>> = core
        .indices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let i = h.core.pos(k);
            let gram = t.inner().gram(k);
            let so = metric_orthonormal(&h.stable[i], &gram);
            let uo = metric_orthonormal(&h.unstable[i], &gram);
            let p = h.projection(k);
            let q = DMatrix::identity(p.nrows(), p.nrows()) - &p;
            let weigh = |terms: Vec<DMatrix<f64>>, w: &dyn Fn(i64) -> f64, skip_first: bool, sign: i64| -> Vec<DMatrix<f64>> {
                terms.into_iter().enumerate().skip(skip_first as usize).map(|(n, m)| m * w(sign * n as i64)).collect()
            };
            let s_fwd = weigh(orbit_terms(t, h, &proj_s, k, &so, true), &|n| (-(n as f64) * (lambda.ln() + epsilon)).exp(), false, 1);
            let s_bwd = weigh(orbit_terms(t, h, &proj_s, k, &so, false), &|n| ((n as f64) * (epsilon + a.ln())).exp(), true, -1);
            let u_bwd = weigh(orbit_terms(t, h, &proj_u, k, &uo, false), &|n| ((n as f64) * (epsilon - mu.ln())).exp(), false, -1);
            let u_fwd = weigh(orbit_terms(t, h, &proj_u, k, &uo, true), &|n| (-(n as f64) * (a.ln() + epsilon)).exp(), true, 1);
            let mut slack: f64 = 0.0;
            for fam in [&s_fwd, &s_bwd, &u_bwd, &u_fwd] {
                if fam.first().is_some_and(|m| m.ncols() == 0) {
                    continue;
                }
                match family_profile(fam) {
                    Some((best, ratio)) if best + 1 < fam.len() => slack = slack.max(ratio),
                    _ => {
                        return Err(Error::ShortWindow { required: 2 * h.core.len(), available: h.core.len() });
                    }
                }
            }
            let point = AdaptedPoint {
                coord_s: so.transpose() * &gram * &p,
                coord_u: uo.transpose() * &gram * &q,
                projection: p,
                stable: PartNorm::new(s_fwd, s_bwd),
                unstable: PartNorm::new(u_bwd, u_fwd),
            };
            Ok((point, slack))
        })
        .collect();
    let mut points = Vec::with_capacity(core.len());
    let mut slack: f64 = 0.0;
    for r in built {
        let (p, s) = r?;
        points.push(p);
        slack = slack.max(s);
    }
    let g_fun = core.indices().map(|k| (h.c_fun[h.core.pos(k)] + 1.0) / h.k_fun[h.core.pos(k)]).collect();
    Ok(AdaptedNorm { epsilon, eps0, lambda, mu, a_bound: a, core, sup_window: h.core, points, g_fun, slack })
}

impl AdaptedNorm {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Normalized `A = max(A_data, 1/λ, μ)`.
    pub fn a_bound(&self) -> f64 {
        self.a_bound
    }

    /// Points where the norm is available.
    pub fn core(&self) -> Window {
        self.core
    }

    /// Indices over which the sups are taken.
    pub fn sup_window(&self) -> Window {
        self.sup_window
    }

    /// Largest ratio between the last term and the sup over all families: how much the
    /// truncation of the sups could matter.
    pub fn slack(&self) -> f64 {
        self.slack
    }

    fn point(&self, k: i64) -> &AdaptedPoint {
        &self.points[self.core.pos(k)]
    }

    /// `G(x_k) = (C(x_k)+1)/K(x_k)`.
    pub fn g(&self, k: i64) -> f64 {
        self.g_fun[self.core.pos(k)]
    }

    pub fn g_fun(&self) -> &[f64] {
        &self.g_fun
    }

    pub fn projection(&self, k: i64) -> &DMatrix<f64> {
        &self.point(k).projection
    }

    /// `‖P v‖^ε`.
    pub fn stable_norm(&self, k: i64, v: &DVector<f64>) -> f64 {
        let p = self.point(k);
        p.stable.eval(&(&p.coord_s * v))
    }

    /// `‖Q v‖^ε`.
    pub fn unstable_norm(&self, k: i64, v: &DVector<f64>) -> f64 {
        let p = self.point(k);
        p.unstable.eval(&(&p.coord_u * v))
    }

    /// `‖v‖^ε_{x_k} = max(‖v^s‖^ε, ‖v^u‖^ε)`.
    pub fn norm(&self, k: i64, v: &DVector<f64>) -> f64 {
        self.stable_norm(k, v).max(self.unstable_norm(k, v))
    }

    /// Ratio `upper/lower` of the quadratic surrogate at `x_k` (1 when both parts are lines).
    pub fn kappa(&self, k: i64) -> f64 {
        let p = self.point(k);
        let r = |part: &PartNorm| if part.lower > 0.0 { part.upper / part.lower } else { 1.0 };
        r(&p.stable).max(r(&p.unstable))
    }

    /// Gram matrix of the surrogate `q(v)² = upper_s²|α_s|² + upper_u²|α_u|²`, which satisfies
    /// `‖v‖^ε ≤ q(v) ≤ √2 κ ‖v‖^ε`.
    pub fn quad(&self, k: i64) -> DMatrix<f64> {
        let p = self.point(k);
        (p.coord_s.transpose() * &p.coord_s) * p.stable.upper.powi(2) + (p.coord_u.transpose() * &p.coord_u) * p.unstable.upper.powi(2)
    }

    pub fn quad_norms(&self, window: Window, eig_tol: f64) -> Result<NormSequence> {
        if !self.core.contains_window(&window) {
            return Err(Error::Usage(format!("window {window} outside adapted-norm core {}", self.core)));
        }
        NormSequence::spd(window, window.indices().map(|k| self.quad(k)).collect(), eig_tol)
    }
}

/// `R_x` on `window` in the (surrogate) adapted norms.
pub fn assemble_rx(t: &TrajectoryData, norm: &AdaptedNorm, space: &SequenceSpace, window: Window, tol: &Tolerances) -> Result<WindowedOperator> {
    let c = rx_cocycle(t, norm, window, tol)?;
    assemble(&c, space, window, 1.0, window.mid())
}

fn rx_cocycle(t: &TrajectoryData, norm: &AdaptedNorm, window: Window, tol: &Tolerances) -> Result<Cocycle> {
    if !t.window().contains_window(&window) {
        return Err(Error::Usage(format!("window {window} outside trajectory {}", t.window())));
    }
    let maps = window.indices().take(window.len() - 1).map(|n| t.deriv(n).clone()).collect();
    Cocycle::new(window, maps, norm.quad_norms(window, tol.eig_tol)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCertificate {
    pub window: Window,
    pub classification: Classification,
    pub invertible: bool,
    /// `‖R_x^{-1}‖` in the surrogate norms.
    #[serde(with = "crate::dichotomy::finite_or_null")]
    pub inverse_norm: f64,
    /// `√2 κ · inverse_norm`, an upper bound in the adapted norms.
    #[serde(with = "crate::dichotomy::finite_or_null")]
    pub inverse_norm_upper: f64,
    pub kappa: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "D_theory")]
    pub d_theory: f64,
    pub d_slack: f64,
    #[serde(rename = "D_bound_ok")]
    pub d_bound_ok: bool,
    pub passes: bool,
}

/// Invertibility of `R_x` on `window` and the bound `‖R_x^{-1}‖ ≤ d_slack · D_theory`.
pub fn certify_trajectory(t: &TrajectoryData, norm: &AdaptedNorm, space: &SequenceSpace, window: Window, tol: &Tolerances) -> Result<TrajectoryCertificate> {
    let c = rx_cocycle(t, norm, window, tol)?;
    let classification = classify(&c, space, window, 1.0, window.mid(), tol)?;
    let kappa = window.indices().map(|k| norm.kappa(k)).fold(1.0, f64::max);
    let inverse_norm = classification.inverse_norm;
    let upper = std::f64::consts::SQRT_2 * kappa * inverse_norm;
    let z = projection_bound_z(norm.lambda, norm.mu, norm.eps0, norm.a_bound)?;
    let dt = d_theory(norm.lambda, norm.mu, norm.eps0, norm.a_bound)?;
    let d_bound_ok = upper.is_finite() && upper <= tol.d_slack * dt;
    let invertible = classification.invertible;
    Ok(TrajectoryCertificate {
        window,
        classification,
        invertible,
        inverse_norm,
        inverse_norm_upper: upper,
        kappa,
        z,
        d_theory: dt,
        d_slack: tol.d_slack,
        d_bound_ok,
        passes: invertible && d_bound_ok,
    })
}

/// Fiber norms used by [`recover_splitting`].
#[derive(Clone, Copy)]
pub enum SplittingNorms<'a> {
    Riemannian,
    Adapted(&'a AdaptedNorm),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    pub window: Window,
    pub core: Window,
    pub rates: Rates,
    /// Largest `|v^s + v^u - v|` over basis vectors.
    pub decomposition_residual: f64,
    pub idempotence: f64,
    /// Largest sine between `D_k E(x_k)` and `E(x_{k+1})`.
    pub invariance_residual: f64,
    /// With adapted norms: the bound `D` used and the largest observed
    /// `‖v^s‖^ε/‖v‖^ε` and `‖v^u‖^ε/‖v‖^ε` over basis and sample vectors.
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub stable_ratio: Option<f64>,
    pub unstable_ratio: Option<f64>,
    pub projection_bounds_ok: Option<bool>,
}

/// Splitting from impulse responses of `R_x`: `v^s = ξ_k`, `v^u = -D_{k-1} ξ_{k-1}` where
/// `R_x ξ = δ_k ⊗ v`. Rates come from the `B(z)` search unless `nominal = Some((λ, μ))`;
/// `C` and `K` are filled by [`estimate_ck`] at `epsilon`.
pub fn recover_splitting(
    t: &TrajectoryData,
    norms: SplittingNorms<'_>,
    space: &SequenceSpace,
    window: Window,
    epsilon: f64,
    nominal: Option<(f64, f64)>,
    tol: &Tolerances,
) -> Result<(HyperbolicityData, SplittingReport)> {
    let c = match norms {
        SplittingNorms::Riemannian => t.as_cocycle().restrict(window)?,
        SplittingNorms::Adapted(n) => rx_cocycle(t, n, window, tol)?,
    };
    let rates = extract_rates(&c, space, window, None, tol)?;
    let core = window.shrink(rates.margin);
    if core.len() < 3 {
        return Err(Error::ShortWindow { required: window.len() + 2 * rates.margin as usize, available: window.len() });
    }
    let op = assemble(&c, space, window, 1.0, window.mid())?;
    let fac = op.factorize(tol).map_err(|e| Error::Precondition(format!("R_x is not invertible: {e}")))?;
    let d = t.dim();
    let solved: Vec<Result<(DMatrix<f64>, f64)>> = core
        .indices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let mut p = DMatrix::zeros(d, d);
            let mut resid: f64 = 0.0;
            for i in 0..d {
                let e = DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 });
                let xi = op.solve_with(&fac, &BlockVector::impulse(window, k, e.clone()))?.x;
                let vs = xi.get(k).expect("in window").clone();
                let vu = -(t.deriv(k - 1) * xi.get(k - 1).expect("in window"));
                resid = resid.max((&vs + &vu - &e).norm());
                p.set_column(i, &vs);
            }
            Ok((p, resid))
        })
        .collect();
    let mut projections = Vec::with_capacity(core.len());
    let mut decomposition_residual: f64 = 0.0;
    for r in solved {
        let (p, res) = r?;
        projections.push(p);
        decomposition_residual = decomposition_residual.max(res);
    }
    let idempotence = projections.iter().map(|p| spectral_norm(&(p * p - p))).fold(0.0, f64::max);
    let (lambda, mu) = nominal.unwrap_or((rates.lambda_hat, rates.mu_hat));
    let mut h = HyperbolicityData::from_projections(core, &projections, lambda, mu, epsilon)?;
    let mut invariance_residual: f64 = 0.0;
    for k in core.start..core.end {
        let (i, j) = (core.pos(k), core.pos(k + 1));
        for (now, next) in [(&h.stable[i], &h.stable[j]), (&h.unstable[i], &h.unstable[j])] {
            if now.ncols() == 0 {
                continue;
            }
            let img = range_basis(&(t.deriv(k) * now), 1e-12);
            invariance_residual = invariance_residual.max(subspace_sine(next, &img));
        }
    }
    let limit = tol.proj_tol.max(tol.split_tol);
    if idempotence > limit || invariance_residual > limit {
        return Err(Error::RecoveryFailed(format!("idempotence {idempotence:.3e}, invariance {invariance_residual:.3e} (tolerance {limit:.1e})")));
    }
    let ck = estimate_ck(t, &h, epsilon, None)?;
    h.c_fun = ck.c_fun;
    h.k_fun = ck.k_fun;

    let (mut d_used, mut stable_ratio, mut unstable_ratio, mut ok) = (None, None, None, None);
    if let SplittingNorms::Adapted(n) = norms {
        let kappa = window.indices().map(|k| n.kappa(k)).fold(1.0, f64::max);
        let dd = std::f64::consts::SQRT_2 * kappa * rates.inverse_norm;
        let (mut rs, mut ru): (f64, f64) = (0.0, 0.0);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(tol.seed);
        for k in core.indices() {
            let p = &projections[core.pos(k)];
            let mut samples: Vec<DVector<f64>> = (0..d).map(|i| DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
            samples.extend((0..16).map(|_| DVector::from_fn(d, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0))));
            for v in samples {
                let nv = n.norm(k, &v);
                let vs = p * &v;
                let vu = &v - &vs;
                rs = rs.max(n.norm(k, &vs) / nv);
                ru = ru.max(n.norm(k, &vu) / nv);
            }
        }
        d_used = Some(dd);
        stable_ratio = Some(rs);
        unstable_ratio = Some(ru);
        ok = Some(rs <= dd * (1.0 + 1e-9) && ru <= (1.0 + dd) * (1.0 + 1e-9));
    }
    let report = SplittingReport {
        window,
        core,
        rates,
        decomposition_residual,
        idempotence,
        invariance_residual,
        d: d_used,
        stable_ratio,
        unstable_ratio,
        projection_bounds_ok: ok,
    };
    Ok((h, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperedReport {
    /// Rate used in the checks (`2ε` by default).
    pub rate: f64,
    pub c_violations: usize,
    pub k_violations: usize,
    /// Largest `C(x_j) / (C(x_i) e^{rate|j-i|})` and `K(x_i) e^{-rate|j-i|} / K(x_j)`.
    pub worst_c_ratio: f64,
    pub worst_k_ratio: f64,
    /// Largest `|ln(v_j/v_i)|/|j-i|` over pairs.
    pub observed_c_rate: f64,
    pub observed_k_rate: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkReport {
    pub core: Window,
    #[serde(rename = "Cfun")]
    pub c_fun: Vec<f64>,
    #[serde(rename = "Kfun")]
    pub k_fun: Vec<f64>,
    /// Minimal principal angle between `E^s` and `E^u`, in the fiber metric.
    pub angles: Vec<f64>,
    pub tempered: TemperedReport,
}

/// Checks `C(x_j) ≤ C(x_i) e^{rate|j-i|}` and `K(x_j) ≥ K(x_i) e^{-rate|j-i|}` over all pairs.
pub fn check_tempered(c_fun: &[f64], k_fun: &[f64], rate: f64) -> TemperedReport {
    let n = c_fun.len();
    let mut rep = TemperedReport {
        rate,
        c_violations: 0,
        k_violations: 0,
        worst_c_ratio: 0.0,
        worst_k_ratio: 0.0,
        observed_c_rate: 0.0,
        observed_k_rate: 0.0,
        passes: true,
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let gap = (j as f64 - i as f64).abs();
            let grow = (rate * gap).exp();
            let rc = c_fun[j] / (c_fun[i] * grow);
            let rk = k_fun[i] / (k_fun[j] * grow);
            rep.worst_c_ratio = rep.worst_c_ratio.max(rc);
            rep.worst_k_ratio = rep.worst_k_ratio.max(rk);
            rep.c_violations += (rc > 1.0 + 1e-9) as usize;
            rep.k_violations += (rk > 1.0 + 1e-9) as usize;
            rep.observed_c_rate = rep.observed_c_rate.max((c_fun[j] / c_fun[i]).ln().abs() / gap);
            rep.observed_k_rate = rep.observed_k_rate.max((k_fun[j] / k_fun[i]).ln().abs() / gap);
        }
    }
    rep.passes = rep.c_violations == 0 && rep.k_violations == 0;
    rep
}

/// Minimal `C(x_k)` for the growth bounds at rates `λ e^ε`, `μ e^{-ε}` over `window`
/// (default `h.core`), `K(x_k) = sin ∠(E^s, E^u)`, and the tempered checks at `2ε`.
pub fn estimate_ck(t: &TrajectoryData, h: &HyperbolicityData, epsilon: f64, window: Option<Window>) -> Result<CkReport> {
    let sub = match window {
        Some(w) if h.core.contains_window(&w) && !w.is_empty() => HyperbolicityData {
            core: w,
            stable: h.stable[h.core.pos(w.start)..=h.core.pos(w.end)].to_vec(),
            unstable: h.unstable[h.core.pos(w.start)..=h.core.pos(w.end)].to_vec(),
            c_fun: vec![],
            k_fun: vec![],
            ..h.clone()
        },
        Some(w) => return Err(Error::Usage(format!("window {w} outside splitting core {}", h.core))),
        None => h.clone(),
    };
    let h = &sub;
    let (lambda, mu) = (h.lambda, h.mu);
    let proj_s = part_projections(h, Part::Stable);
    let proj_u = part_projections(h, Part::Unstable);
    let rows: Vec<(f64, f64, f64)> = h
        .core
        .indices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let i = h.core.pos(k);
            let gram = t.inner().gram(k);
            let so = metric_orthonormal(&h.stable[i], &gram);
            let uo = metric_orthonormal(&h.unstable[i], &gram);
            let mut c: f64 = 0.0;
            if so.ncols() > 0 {
                for (n, m) in orbit_terms(t, h, &proj_s, k, &so, true).iter().enumerate() {
                    c = c.max(spectral_norm(m) * (-(n as f64) * (lambda.ln() + epsilon)).exp());
                }
            }
            if uo.ncols() > 0 {
                for (n, m) in orbit_terms(t, h, &proj_u, k, &uo, false).iter().enumerate() {
                    c = c.max(spectral_norm(m) * ((n as f64) * (mu.ln() - epsilon)).exp());
                }
            }
            let cos = if so.ncols() == 0 || uo.ncols() == 0 { 0.0 } else { spectral_norm(&(so.transpose() * &gram * &uo)).min(1.0) };
            let angle = cos.acos();
            (c, angle.sin(), angle)
        })
        .collect();
    let c_fun: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let k_fun: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let angles = rows.iter().map(|r| r.2).collect();
    let tempered = check_tempered(&c_fun, &k_fun, 2.0 * epsilon);
    Ok(CkReport { core: h.core, c_fun, k_fun, angles, tempered })
}

/// Synthetic nonuniform trajectory: derivatives of the `nonuniform_scalar_pair` family with
/// Euclidean fibers.
pub fn nonuniform_trajectory(window: Window, lambda: f64, mu: f64, epsilon: f64, tol: &Tolerances) -> Result<TrajectoryData> {
    let c = generate_example(&ExampleKind::NonuniformScalarPair { lambda, mu, epsilon }, window)?;
    TrajectoryData::from_cocycle(&c, tol)
}
