//! File formats, reports and the `analyze` / `certify` / `generate` driver.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 negative mathematical result
//! (no dichotomy, certification failed). Reports contain no wall-clock data unless
//! `--timings` is passed, so identical inputs give byte-identical output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{generate_example, Cocycle, ExampleKind, NormSequence, ResidualReport, Weights, Window};
use crate::dichotomy::{assemble, check_equivalence, sharp_certificate, BlockVector, Classification, Rates};
use crate::error::{Error, Result};
use crate::nonuniform::{
    build_adapted_norm, certify_trajectory, default_eps0, estimate_ck, recover_splitting, CkReport, HyperbolicityData, SplittingNorms, SplittingReport,
    TrajectoryCertificate, TrajectoryData,
};
use crate::seqspace::{Phi, SequenceSpace};
use crate::Tolerances;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "DICHOTOMY_KIT_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum NormsFile {
    Flat,
    Scalar(Vec<f64>),
    #[serde(with = "crate::serde_mat::vec")]
    Spd(Vec<DMatrix<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleFile {
    pub dim: usize,
    pub window: Window,
    /// `A_n` for `n = n_min ..= n_max - 1`, row-major.
    #[serde(with = "crate::serde_mat::vec")]
    pub maps: Vec<DMatrix<f64>>,
    pub norms: NormsFile,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

impl CocycleFile {
    pub fn from_cocycle(c: &Cocycle, meta: serde_json::Value) -> Self {
        let norms = match c.norms().weights() {
            Weights::Flat => NormsFile::Flat,
            Weights::Scalar(g) => NormsFile::Scalar(g.clone()),
            Weights::Spd(w) => NormsFile::Spd(w.clone()),
        };
        Self { dim: c.dim(), window: c.window(), maps: c.maps().to_vec(), norms, meta }
    }

    pub fn to_cocycle(&self, tol: &Tolerances) -> Result<Cocycle> {
        check_dims("maps", &self.maps, self.dim)?;
        let norms = match &self.norms {
            NormsFile::Flat => NormSequence::flat(self.window, self.dim),
            NormsFile::Scalar(g) => NormSequence::scalar(self.window, self.dim, g.clone())?,
            NormsFile::Spd(w) => {
                check_dims("norms.data", w, self.dim)?;
                NormSequence::spd(self.window, w.clone(), tol.eig_tol)?
            }
        };
        Cocycle::new(self.window, self.maps.clone(), norms)
    }
}

fn check_dims(what: &str, ms: &[DMatrix<f64>], dim: usize) -> Result<()> {
    match ms.iter().position(|m| m.nrows() != dim || m.ncols() != dim) {
        Some(i) => Err(Error::Config(format!("{what}[{i}] is not {dim}x{dim}"))),
        None => Ok(()),
    }
}

/// Fiber inner products of an orbit: `"euclidean"` or one SPD matrix per point.
#[derive(Clone, Debug, PartialEq)]
pub enum InnerSpec {
    Euclidean,
    Spd(Vec<DMatrix<f64>>),
}

impl Serialize for InnerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InnerSpec::Euclidean => s.serialize_str("euclidean"),
            InnerSpec::Spd(w) => crate::serde_mat::vec::serialize(w, s),
        }
    }
}

impl<'de> Deserialize<'de> for InnerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Mats(Vec<Vec<Vec<f64>>>),
        }
        match Raw::deserialize(d)? {
            Raw::Name(n) if n == "euclidean" => Ok(InnerSpec::Euclidean),
            Raw::Name(n) => Err(serde::de::Error::custom(format!("unknown inner product {n:?}, expected \"euclidean\" or SPD matrices"))),
            Raw::Mats(ms) => ms
                .iter()
                .map(|r| crate::serde_mat::from_rows(r))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(InnerSpec::Spd)
                .map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitFile {
    pub dim: usize,
    pub window: Window,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    /// `d_{x_n} f` for `n = n_min ..= n_max - 1`.
    #[serde(with = "crate::serde_mat::vec")]
    pub derivs: Vec<DMatrix<f64>>,
    pub inner: InnerSpec,
    #[serde(rename = "A_bound", default, skip_serializing_if = "Option::is_none")]
    pub a_bound: Option<f64>,
    /// Known rates `[λ, μ]`; when absent they are estimated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

impl OrbitFile {
    pub fn from_trajectory(t: &TrajectoryData, rates: Option<[f64; 2]>, meta: serde_json::Value) -> Self {
        let inner = match t.inner().weights() {
            Weights::Flat => InnerSpec::Euclidean,
            _ => InnerSpec::Spd(t.window().indices().map(|n| t.inner().gram(n)).collect()),
        };
        Self {
            dim: t.dim(),
            window: t.window(),
            points: t.points().to_vec(),
            derivs: t.derivs().to_vec(),
            inner,
            a_bound: Some(t.global_bound()),
            rates,
            meta,
        }
    }

    pub fn to_trajectory(&self, tol: &Tolerances) -> Result<TrajectoryData> {
        check_dims("derivs", &self.derivs, self.dim)?;
        let inner = match &self.inner {
            InnerSpec::Euclidean => NormSequence::flat(self.window, self.dim),
            InnerSpec::Spd(w) => {
                check_dims("inner", w, self.dim)?;
                NormSequence::spd(self.window, w.clone(), tol.eig_tol)?
            }
        };
        if let Some([l, m]) = self.rates {
            if !(l > 0.0 && l < 1.0 && m > 1.0 && m.is_finite()) {
                return Err(Error::Config(format!("rates must satisfy 0 < lambda < 1 < mu, got [{l}, {m}]")));
            }
        }
        TrajectoryData::new(self.window, self.derivs.clone(), inner, self.points.clone(), self.a_bound, tol)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline. Floats use the shortest representation that
/// reads back to the same bits.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `l1`, `l2`, `linf`, `lp:<p>` or `orlicz:<file>` where the file holds
/// `{"knots": [[t, φ], …]}` or `{"power": p}`.
pub fn parse_space(spec: &str) -> Result<SequenceSpace> {
    match spec {
        "l1" => Ok(SequenceSpace::l1()),
        "l2" => Ok(SequenceSpace::l2()),
        "linf" => Ok(SequenceSpace::linf()),
        _ => {
            if let Some(p) = spec.strip_prefix("lp:") {
                let p: f64 = p.parse().map_err(|_| Error::Usage(format!("bad exponent in {spec:?}")))?;
                SequenceSpace::lp(p)
            } else if let Some(file) = spec.strip_prefix("orlicz:") {
                let phi: Phi = read_json(Path::new(file))?;
                SequenceSpace::orlicz(phi)
            } else {
                Err(Error::Usage(format!("unknown space {spec:?}; expected l1, l2, linf, lp:<p> or orlicz:<file>")))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    fn current() -> Self {
        Self { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub path: String,
    pub dim: usize,
    pub window: Window,
    pub norms: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    /// `"sharp"` (searched rates) or `"guaranteed"` (rates `t`, `1/t`).
    pub kind: String,
    pub core: Window,
    #[serde(rename = "D")]
    pub d: f64,
    pub lambda: f64,
    pub mu: f64,
    pub residuals: ResidualReport,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_mats")]
    pub projections: Option<Vec<DMatrix<f64>>>,
}

mod opt_mats {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<DMatrix<f64>>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|ms| ms.iter().map(crate::serde_mat::to_rows).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<DMatrix<f64>>>, D::Error> {
        let raw = Option::<Vec<Vec<Vec<f64>>>>::deserialize(d)?;
        raw.map(|ms| ms.iter().map(|r| crate::serde_mat::from_rows(r).map_err(serde::de::Error::custom)).collect()).transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub tool: ToolInfo,
    pub inputs: InputEcho,
    pub space: SequenceSpace,
    pub window: Window,
    pub tolerances: Tolerances,
    pub invertibility: Classification,
    pub rates: Option<Rates>,
    pub certificate: Option<CertificateSummary>,
    pub notes: Vec<String>,
    pub dichotomy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptedNormSummary {
    pub core: Window,
    pub epsilon: f64,
    pub eps0: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub inputs: InputEcho,
    pub window: Window,
    pub epsilon: f64,
    pub eps0: Option<f64>,
    pub riemannian_splitting: Option<SplittingReport>,
    pub adapted_norm: Option<AdaptedNormSummary>,
    pub certificate: Option<TrajectoryCertificate>,
    pub adapted_splitting: Option<SplittingReport>,
    /// Largest sine between the splittings recovered with the two norm families.
    pub splitting_agreement: Option<f64>,
    #[serde(rename = "CK")]
    pub ck: Option<CkReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitting: Option<HyperbolicityData>,
    pub error: Option<String>,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub tool: ToolInfo,
    pub space: SequenceSpace,
    pub tolerances: Tolerances,
    pub trajectories: Vec<TrajectoryReport>,
    pub passes: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Parser, Debug)]
#[command(name = "dichotomy-kit", version, about = "Exponential dichotomies via admissibility")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Invertibility, rates, projections and a verified certificate for a cocycle file.
    Analyze(AnalyzeArgs),
    /// Adapted norms, R_x certification and splitting recovery along orbits.
    Certify(CertifyArgs),
    /// Write a test cocycle or orbit.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Default)]
pub struct TolArgs {
    #[arg(long)]
    pub verify_tol: Option<f64>,
    #[arg(long)]
    pub proj_tol: Option<f64>,
    #[arg(long)]
    pub inv_cond_max: Option<f64>,
    #[arg(long)]
    pub eig_tol: Option<f64>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub inv_norm_max: Option<f64>,
    #[arg(long)]
    pub rate_tol: Option<f64>,
    #[arg(long)]
    pub estimate_iters: Option<usize>,
    #[arg(long)]
    pub growth_threshold: Option<f64>,
    #[arg(long)]
    pub series_tol: Option<f64>,
    #[arg(long)]
    pub split_tol: Option<f64>,
    #[arg(long)]
    pub d_slack: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Tolerances {
        let mut t = Tolerances::default();
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { t.$f = v; })* };
        }
        set!(verify_tol, proj_tol, inv_cond_max, eig_tol, tail_tol, inv_norm_max, rate_tol, estimate_iters, growth_threshold, series_tol, split_tol, d_slack, seed);
        t
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "l2")]
    pub space: String,
    /// Half-width: analyze on `[-W, W]` (default: the whole file window).
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long)]
    pub report: PathBuf,
    /// Per-index `‖x_n‖_n` of the impulse responses at the window midpoint.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Include the recovered projections in the report.
    #[arg(long)]
    pub projections: bool,
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// One or more orbit files; several are certified concurrently.
    #[arg(long, num_args = 1.., required = true)]
    pub orbit: Vec<PathBuf>,
    #[arg(long)]
    pub epsilon: f64,
    /// Defaults to `min(-ln λ, ln μ)/2`.
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long, default_value = "l2")]
    pub space: String,
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long)]
    pub report: PathBuf,
    /// Per-point `G`, `C`, `K` and splitting angle.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Include the recovered splitting in the report.
    #[arg(long)]
    pub splitting: bool,
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Diagonal,
    Identity,
    Catmap,
    NonuniformScalarPair,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Diagonal entries, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub entries: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Add i.i.d. perturbations uniform in `[-δ, δ]`.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Half-width of the window `[-W, W]`.
    #[arg(long, default_value_t = 64)]
    pub window: i64,
    /// `flat` or `exp:<ε>` for `g_n = e^{ε|n|}`.
    #[arg(long, default_value = "flat")]
    pub weights: String,
    /// Write an orbit file instead of a cocycle file.
    #[arg(long)]
    pub orbit: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let jobs = match &cli.command {
        Command::Analyze(a) => a.jobs,
        Command::Certify(a) => a.jobs,
        Command::Generate(_) => None,
    };
    let pool = match thread_pool(jobs) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let outcome = pool.install(|| match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Certify(a) => certify(&a),
        Command::Generate(a) => generate(&a).map(|_| Outcome::Success),
    });
    match outcome {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::Negative(msg)) => {
            eprintln!("{msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum Outcome {
    Success,
    Negative(String),
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?),
        Err(_) => None,
    };
    let mut n = jobs.unwrap_or(0);
    if let Some(c) = cap.filter(|c| *c > 0) {
        n = if n == 0 { c } else { n.min(c) };
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Usage(e.to_string()))
}

fn analysis_window(file_window: Window, half: Option<i64>) -> Result<Window> {
    match half {
        None => Ok(file_window),
        Some(w) => {
            let win = Window::symmetric(w);
            if w < 1 || !file_window.contains_window(&win) {
                return Err(Error::Usage(format!("window {win} is not inside the file window {file_window}")));
            }
            Ok(win)
        }
    }
}

fn norms_label(n: &NormSequence) -> String {
    match n.weights() {
        Weights::Flat => "flat",
        Weights::Scalar(_) => "scalar",
        Weights::Spd(_) => "spd",
    }
    .into()
}

fn analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let clock = Instant::now();
    let tol = a.tol.resolve();
    let space = parse_space(&a.space)?;
    let file: CocycleFile = read_json(&a.input)?;
    let c = file.to_cocycle(&tol)?;
    let window = analysis_window(c.window(), a.window)?;
    let eq = check_equivalence(&c, &space, window, None, 0, &tol)?;
    let mut notes = eq.notes.clone();
    let (rates, certificate, dichotomy) = match &eq.converse {
        Some(cc) => {
            let sharp = sharp_certificate(&cc.rates, cc.core, cc.certificate.projections.clone(), &tol);
            let (kind, cert, residuals) = if cc.sharp_residuals.passes {
                ("sharp", sharp, cc.sharp_residuals.clone())
            } else {
                notes.push("sharp-rate certificate did not verify; reporting the guaranteed one".into());
                ("guaranteed", cc.certificate.clone(), cc.residuals.clone())
            };
            let summary = CertificateSummary {
                kind: kind.into(),
                core: cert.core,
                d: cert.d,
                lambda: cert.lambda,
                mu: cert.mu,
                residuals: residuals.clone(),
                projections: a.projections.then(|| cert.projections.clone()),
            };
            (Some(cc.rates.clone()), Some(summary), cc.passes && residuals.passes)
        }
        None => (None, None, false),
    };
    if let Some(path) = &a.csv {
        std::fs::write(path, impulse_csv(&c, &space, window, &tol)?)?;
    }
    let report = AnalyzeReport {
        tool: ToolInfo::current(),
        inputs: InputEcho { path: a.input.display().to_string(), dim: c.dim(), window: c.window(), norms: norms_label(c.norms()), meta: file.meta.clone() },
        space,
        window,
        tolerances: tol,
        invertibility: eq.classification.clone(),
        rates,
        certificate,
        notes,
        dichotomy,
        timings: a.timings.then(|| Timings { total_seconds: clock.elapsed().as_secs_f64() }),
    };
    write_json(&a.report, &report)?;
    if dichotomy {
        Ok(Outcome::Success)
    } else if !eq.classification.invertible {
        Ok(Outcome::Negative(format!("not invertible on {window}: no exponential dichotomy detected")))
    } else {
        Ok(Outcome::Negative("invertible, but the recovered certificate did not verify".into()))
    }
}

/// `n, ‖x^{(1)}_n‖_n, …` for `T x^{(i)} = δ_mid ⊗ e_i`.
fn impulse_csv(c: &Cocycle, space: &SequenceSpace, window: Window, tol: &Tolerances) -> Result<String> {
    let op = assemble(c, space, window, 1.0, window.mid())?;
    let mut out = String::from("n");
    let d = c.dim();
    for i in 0..d {
        let _ = write!(out, ",impulse_e{}", i + 1);
    }
    out.push('\n');
    let fac = match op.factorize(tol) {
        Ok(f) => f,
        Err(_) => return Ok(out),
    };
    let mut cols = Vec::with_capacity(d);
    for i in 0..d {
        let e = DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 });
        cols.push(op.solve_with(&fac, &BlockVector::impulse(window, window.mid(), e))?.x);
    }
    for n in window.indices() {
        let _ = write!(out, "{n}");
        for x in &cols {
            let _ = write!(out, ",{:e}", c.norms().norm(n, x.get(n).expect("in window")));
        }
        out.push('\n');
    }
    Ok(out)
}

struct Loaded {
    path: PathBuf,
    file: OrbitFile,
    traj: TrajectoryData,
}

fn certify(a: &CertifyArgs) -> Result<Outcome> {
    let clock = Instant::now();
    let tol = a.tol.resolve();
    let space = parse_space(&a.space)?;
    let mut loaded = Vec::with_capacity(a.orbit.len());
    for path in &a.orbit {
        let file: OrbitFile = read_json(path)?;
        let traj = file.to_trajectory(&tol)?;
        if let Some([l, m]) = file.rates {
            check_epsilon_arg(a.epsilon, a.eps0.unwrap_or_else(|| default_eps0(l, m)), path)?;
        }
        loaded.push(Loaded { path: path.clone(), file, traj });
    }
    let results: Vec<Result<(TrajectoryReport, String)>> = loaded.par_iter().map(|l| certify_one(l, a, &space, &tol)).collect();
    let mut trajectories = Vec::with_capacity(results.len());
    let mut csv = String::from("orbit,n,G,C,K,angle\n");
    for (i, r) in results.into_iter().enumerate() {
        let (rep, rows) = r?;
        for line in rows.lines() {
            let _ = writeln!(csv, "{i},{line}");
        }
        trajectories.push(rep);
    }
    let passes = trajectories.iter().all(|t| t.passes);
    let report = CertifyReport {
        tool: ToolInfo::current(),
        space,
        tolerances: tol,
        trajectories,
        passes,
        timings: a.timings.then(|| Timings { total_seconds: clock.elapsed().as_secs_f64() }),
    };
    write_json(&a.report, &report)?;
    if let Some(path) = &a.csv {
        std::fs::write(path, csv)?;
    }
    if passes {
        Ok(Outcome::Success)
    } else {
        let failed: Vec<String> = report.trajectories.iter().filter(|t| !t.passes).map(|t| t.inputs.path.clone()).collect();
        Ok(Outcome::Negative(format!("certification failed for {}", failed.join(", "))))
    }
}

fn check_epsilon_arg(epsilon: f64, eps0: f64, path: &Path) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < eps0) {
        return Err(Error::Usage(format!("{}: epsilon = {epsilon} is outside (0, eps0) with eps0 = {eps0:.6}", path.display())));
    }
    Ok(())
}

/// Riemannian splitting → adapted norm → `R_x` certificate → adapted splitting → `C`, `K`.
/// Usage errors (including `ε ≥ ε₀`) propagate; mathematical failures are recorded.
fn certify_one(l: &Loaded, a: &CertifyArgs, space: &SequenceSpace, tol: &Tolerances) -> Result<(TrajectoryReport, String)> {
    let t = &l.traj;
    let window = analysis_window(t.window(), a.window)?;
    let nominal = l.file.rates.map(|[x, y]| (x, y));
    let mut rep = TrajectoryReport {
        inputs: InputEcho { path: l.path.display().to_string(), dim: t.dim(), window: t.window(), norms: norms_label(t.inner()), meta: l.file.meta.clone() },
        window,
        epsilon: a.epsilon,
        eps0: None,
        riemannian_splitting: None,
        adapted_norm: None,
        certificate: None,
        adapted_splitting: None,
        splitting_agreement: None,
        ck: None,
        splitting: None,
        error: None,
        passes: false,
    };
    let mut csv = String::new();
    let fail = |mut rep: TrajectoryReport, e: Error| -> Result<(TrajectoryReport, String)> {
        match e {
            Error::Usage(_) | Error::Parse { .. } | Error::Io(_) => Err(e),
            other => {
                rep.error = Some(other.to_string());
                Ok((rep, String::new()))
            }
        }
    };
    let (h, split) = match recover_splitting(t, SplittingNorms::Riemannian, space, window, a.epsilon, nominal, tol) {
        Ok(v) => v,
        Err(e) => return fail(rep, e),
    };
    let eps0 = a.eps0.unwrap_or_else(|| default_eps0(h.lambda, h.mu));
    rep.eps0 = Some(eps0);
    rep.riemannian_splitting = Some(split);
    check_epsilon_arg(a.epsilon, eps0, &l.path)?;
    let norm_core = h.core.shrink((h.core.len() as i64 / 8).max(2));
    let norm = match build_adapted_norm(t, &h, a.epsilon, norm_core, Some(eps0)) {
        Ok(n) => n,
        Err(e) => return fail(rep, e),
    };
    rep.adapted_norm = Some(AdaptedNormSummary { core: norm.core(), epsilon: norm.epsilon(), eps0: norm.eps0(), a: norm.a_bound(), slack: norm.slack() });
    let cert = match certify_trajectory(t, &norm, space, norm.core(), tol) {
        Ok(c) => c,
        Err(e) => return fail(rep, e),
    };
    let certified = cert.passes;
    rep.certificate = Some(cert);
    let ck = estimate_ck(t, &h, a.epsilon, None)?;
    for k in norm.core().indices() {
        let i = h.core.pos(k);
        let _ = writeln!(csv, "{k},{:e},{:e},{:e},{:e}", norm.g(k), ck.c_fun[i], ck.k_fun[i], ck.angles[i]);
    }
    if !certified {
        rep.ck = Some(ck);
        return Ok((rep, csv));
    }
    let (h2, split2) = match recover_splitting(t, SplittingNorms::Adapted(&norm), space, norm.core(), a.epsilon, nominal, tol) {
        Ok(v) => v,
        Err(e) => {
            rep.ck = Some(ck);
            return fail(rep, e);
        }
    };
    rep.splitting_agreement = Some(h.max_angle_to(&h2));
    let bounds_ok = split2.projection_bounds_ok.unwrap_or(false);
    rep.adapted_splitting = Some(split2);
    rep.ck = Some(estimate_ck(t, &h2, a.epsilon, None)?);
    if a.splitting {
        rep.splitting = Some(h2);
    }
    rep.passes = bounds_ok;
    Ok((rep, csv))
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let tol = Tolerances::default();
    if a.window < 1 {
        return Err(Error::Usage(format!("window half-width must be >= 1, got {}", a.window)));
    }
    let window = Window::symmetric(a.window);
    let base = match a.kind {
        KindArg::Diagonal => {
            if a.entries.is_empty() {
                return Err(Error::Usage("--entries is required for diagonal".into()));
            }
            ExampleKind::Diagonal { entries: a.entries.clone() }
        }
        KindArg::Identity => ExampleKind::Identity { dim: a.dim },
        KindArg::Catmap => ExampleKind::Catmap,
        KindArg::NonuniformScalarPair => ExampleKind::NonuniformScalarPair { lambda: a.lambda, mu: a.mu, epsilon: a.epsilon },
    };
    let kind = match a.delta {
        Some(delta) => ExampleKind::Perturbed { base: Box::new(base.clone()), delta, seed: a.seed },
        None => base.clone(),
    };
    let c = generate_example(&kind, window).map_err(usage)?;
    let c = match a.weights.as_str() {
        "flat" => c,
        w => match w.strip_prefix("exp:").and_then(|e| e.parse::<f64>().ok()) {
            Some(eps) if eps.is_finite() => {
                let dim = c.dim();
                c.with_norms(NormSequence::exponential(window, dim, eps))?
            }
            _ => return Err(Error::Usage(format!("unknown weights {w:?}; expected flat or exp:<epsilon>"))),
        },
    };
    let meta = serde_json::json!({ "generator": ToolInfo::current(), "example": kind, "weights": a.weights });
    if a.orbit {
        let rates = match (&base, a.delta) {
            (_, Some(_)) => None,
            (ExampleKind::Catmap, _) => {
                let s5 = 5f64.sqrt();
                Some([(3.0 - s5) / 2.0, (3.0 + s5) / 2.0])
            }
            (ExampleKind::NonuniformScalarPair { lambda, mu, .. }, _) => Some([*lambda, *mu]),
            (ExampleKind::Diagonal { entries }, _) if entries.len() == 2 && entries[0].abs() < 1.0 && entries[1].abs() > 1.0 => {
                Some([entries[0].abs(), entries[1].abs()])
            }
            _ => None,
        };
        let t = match (&base, a.delta) {
            (ExampleKind::Catmap, None) => TrajectoryData::catmap_orbit(window, [0.1, 0.2], &tol)?,
            _ => TrajectoryData::from_cocycle(&c, &tol).map_err(usage)?,
        };
        write_json(&a.out, &OrbitFile::from_trajectory(&t, rates, meta))
    } else {
        write_json(&a.out, &CocycleFile::from_cocycle(&c, meta))
    }
}

fn usage(e: Error) -> Error {
    match e {
        Error::Config(m) | Error::Domain(m) => Error::Usage(m),
        other => other,
    }
}
