//! Admissible Banach sequence spaces on finitely supported real sequences.
//!
//! Three families are supported: `ℓ^p` (`1 ≤ p < ∞`), `ℓ^∞` and Orlicz spaces
//! with the Luxemburg norm
//!
//! ```text
//! ‖s‖ = inf { c > 0 : Σ ψ(|s_n| / c) ≤ 1 },   ψ(t) = ∫₀ᵗ φ(r) dr
//! ```
//!
//! Every space carries its shift constant `N` and `α = ‖χ_{0}‖`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAIL_TOL: f64 = 1e-12;

/// Young function derivative `φ` of an Orlicz space.
///
/// `Knots` is a piecewise-linear table `(t_i, φ_i)`; `φ` is held at `φ_0` on
/// `[0, t_0]` and continues with the slope of the last segment past the end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phi {
    Knots(Vec<[f64; 2]>),
    /// `φ(t) = p t^{p-1}`, so `ψ(t) = t^p`.
    Power(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceKind {
    Lp { p: f64 },
    Linf,
    Orlicz { phi: Phi },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceKind", into = "SpaceKind")]
pub struct SequenceSpace {
    kind: SpaceKind,
    young: Option<Young>,
    shift_constant: f64,
    char_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Young {
    Power(f64),
    Table { t: Vec<f64>, phi: Vec<f64>, psi: Vec<f64>, tail_slope: f64 },
}

impl Young {
    fn new(phi: &Phi) -> Result<Self> {
        match phi {
            Phi::Power(p) => {
                if !(p.is_finite() && *p > 1.0) {
                    return Err(Error::Config(format!("power Young function needs p > 1, got {p}")));
                }
                Ok(Young::Power(*p))
            }
            Phi::Knots(knots) => {
                if knots.is_empty() {
                    return Err(Error::Config("empty phi table".into()));
                }
                let t: Vec<f64> = knots.iter().map(|k| k[0]).collect();
                let phi: Vec<f64> = knots.iter().map(|k| k[1]).collect();
                if t.iter().chain(phi.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Config("phi table must be finite".into()));
                }
                if t[0] < 0.0 || phi[0] < 0.0 {
                    return Err(Error::Config("phi table must start at t >= 0 with phi >= 0".into()));
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("phi knots must be strictly increasing in t".into()));
                }
                if phi.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::Config("phi must be nondecreasing".into()));
                }
                let k = t.len();
                let tail_slope = if k >= 2 { (phi[k - 1] - phi[k - 2]) / (t[k - 1] - t[k - 2]) } else { 0.0 };
                if phi[k - 1] == phi[0] && tail_slope == 0.0 {
                    return Err(Error::Config("phi must be nonconstant".into()));
                }
                let mut psi = vec![phi[0] * t[0]];
                for i in 1..k {
                    let seg = 0.5 * (t[i] - t[i - 1]) * (phi[i] + phi[i - 1]);
                    psi.push(psi[i - 1] + seg);
                }
                Ok(Young::Table { t, phi, psi, tail_slope })
            }
        }
    }

    fn psi(&self, x: f64) -> f64 {
        match self {
            Young::Power(p) => x.powf(*p),
            Young::Table { t, phi, psi, tail_slope } => {
                if x <= t[0] {
                    return phi[0] * x;
                }
                let k = t.len();
                if x >= t[k - 1] {
                    let h = x - t[k - 1];
                    return psi[k - 1] + phi[k - 1] * h + 0.5 * tail_slope * h * h;
                }
                let i = t.partition_point(|&ti| ti <= x);
                let h = x - t[i - 1];
                let slope = (phi[i] - phi[i - 1]) / (t[i] - t[i - 1]);
                psi[i - 1] + phi[i - 1] * h + 0.5 * slope * h * h
            }
        }
    }
}

impl TryFrom<SpaceKind> for SequenceSpace {
    type Error = Error;

    fn try_from(kind: SpaceKind) -> Result<Self> {
        SequenceSpace::new(kind)
    }
}

impl From<SequenceSpace> for SpaceKind {
    fn from(s: SequenceSpace) -> Self {
        s.kind
    }
}

impl SequenceSpace {
    pub fn new(kind: SpaceKind) -> Result<Self> {
        match &kind {
            SpaceKind::Lp { p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::Config(format!("l^p needs finite p >= 1, got {p}")));
                }
                Ok(Self { kind, young: None, shift_constant: 1.0, char_norm: 1.0 })
            }
            SpaceKind::Linf => Ok(Self { kind, young: None, shift_constant: 1.0, char_norm: 1.0 }),
            SpaceKind::Orlicz { phi } => {
                let young = Young::new(phi)?;
                let mut space = Self { kind, young: Some(young), shift_constant: 1.0, char_norm: 1.0 };
                space.char_norm = space.norm(&WindowedSequence::impulse(0));
                Ok(space)
            }
        }
    }

    pub fn lp(p: f64) -> Result<Self> {
        Self::new(SpaceKind::Lp { p })
    }

    pub fn l1() -> Self {
        Self::new(SpaceKind::Lp { p: 1.0 }).expect("p = 1 is valid")
    }

    pub fn l2() -> Self {
        Self::new(SpaceKind::Lp { p: 2.0 }).expect("p = 2 is valid")
    }

    pub fn linf() -> Self {
        Self::new(SpaceKind::Linf).expect("linf is valid")
    }

    pub fn orlicz(phi: Phi) -> Result<Self> {
        Self::new(SpaceKind::Orlicz { phi })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Uniform bound `N` on the shift operators.
    pub fn shift_constant(&self) -> f64 {
        self.shift_constant
    }

    /// `α = ‖χ_{0}‖`.
    pub fn char_norm(&self) -> f64 {
        self.char_norm
    }

    /// `Some(p)` for `ℓ^p`, `Some(∞)` for `ℓ^∞`, `None` for Orlicz spaces.
    pub fn exponent(&self) -> Option<f64> {
        match self.kind {
            SpaceKind::Lp { p } => Some(p),
            SpaceKind::Linf => Some(f64::INFINITY),
            SpaceKind::Orlicz { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            SpaceKind::Lp { p } if *p == 1.0 => "l1".into(),
            SpaceKind::Lp { p } if *p == 2.0 => "l2".into(),
            SpaceKind::Lp { p } => format!("lp:{p}"),
            SpaceKind::Linf => "linf".into(),
            SpaceKind::Orlicz { .. } => "orlicz".into(),
        }
    }

    pub fn norm(&self, s: &WindowedSequence) -> f64 {
        self.norm_of(&s.values)
    }

    /// Norm of the sequence whose nonzero entries are `values` (position is irrelevant).
    pub fn norm_of(&self, values: &[f64]) -> f64 {
        match (&self.kind, &self.young) {
            (SpaceKind::Lp { p }, _) => lp_norm(values, *p),
            (SpaceKind::Linf, _) => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            (SpaceKind::Orlicz { .. }, Some(young)) => luxemburg(young, values),
            (SpaceKind::Orlicz { .. }, None) => unreachable!("orlicz space without Young function"),
        }
    }

    /// Orlicz modular `Σ ψ(|s_n|)`; `None` for `ℓ^p` and `ℓ^∞`.
    pub fn modular(&self, values: &[f64]) -> Option<f64> {
        self.young.as_ref().map(|y| values.iter().map(|v| y.psi(v.abs())).sum())
    }
}

fn lp_norm(values: &[f64], p: f64) -> f64 {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return scale * values.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
    }
    scale * values.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn luxemburg(young: &Young, values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let modular = |c: f64| values.iter().map(|v| young.psi(v.abs() / c)).sum::<f64>();
    let mut hi = scale;
    while modular(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while modular(lo) <= 1.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return 0.0;
        }
    }
    // bisect to adjacent floats; this is well inside the 1e-12 relative tolerance
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Real sequence on ℤ, zero outside `[offset, offset + len - 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedSequence {
    pub offset: i64,
    pub values: Vec<f64>,
}

impl WindowedSequence {
    pub fn new(offset: i64, values: Vec<f64>) -> Self {
        Self { offset, values }
    }

    pub fn zeros(offset: i64, len: usize) -> Self {
        Self { offset, values: vec![0.0; len] }
    }

    pub fn impulse(n: i64) -> Self {
        Self { offset: n, values: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last index of the support window.
    pub fn end(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> f64 {
        if n < self.offset {
            return 0.0;
        }
        self.values.get((n - self.offset) as usize).copied().unwrap_or(0.0)
    }

    /// `(S^m s)_n = s_{n-m}`.
    pub fn shift(&self, m: i64) -> Self {
        Self { offset: self.offset + m, values: self.values.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Causal,
    Anticausal,
}

/// Geometric convolution `s¹_n = Σ_{m≥0} λ^m s_{n-m}` (causal) or
/// `s²_n = Σ_{m≥1} λ^m s_{n+m}` (anticausal), with its a-priori bound
/// `N/(1-λ)‖s‖` resp. `Nλ/(1-λ)‖s‖`.
pub fn geometric_convolve(
    space: &SequenceSpace,
    s: &WindowedSequence,
    lambda: f64,
    direction: Direction,
    tail_tol: f64,
) -> Result<(WindowedSequence, f64)> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0,1), got {lambda}")));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::Domain(format!("tail_tol must lie in (0,1), got {tail_tol}")));
    }
    let n_norm = space.shift_constant();
    let s_norm = space.norm(s);
    let bound = match direction {
        Direction::Causal => n_norm / (1.0 - lambda) * s_norm,
        Direction::Anticausal => n_norm * lambda / (1.0 - lambda) * s_norm,
    };
    if s.is_empty() {
        return Ok((WindowedSequence::zeros(s.offset, 0), bound));
    }
    let extra = (tail_tol.ln() / lambda.ln()).ceil().max(1.0) as usize;
    let len = s.len() + extra;
    let mut out = vec![0.0; len];
    match direction {
        Direction::Causal => {
            let mut acc = 0.0;
            for (i, o) in out.iter_mut().enumerate() {
                acc = lambda * acc + s.values.get(i).copied().unwrap_or(0.0);
                *o = acc;
            }
            Ok((WindowedSequence::new(s.offset, out), bound))
        }
        Direction::Anticausal => {
            // out[i] holds index offset - extra + i, for indices up to s.end() - 1
            let start = s.offset - extra as i64;
            let last = len - 1;
            let mut acc = 0.0;
            for i in (0..last).rev() {
                let next = start + i as i64 + 1;
                acc = lambda * (acc + s.get(next));
                out[i] = acc;
            }
            out.truncate(last);
            Ok((WindowedSequence::new(start, out), bound))
        }
    }
}
