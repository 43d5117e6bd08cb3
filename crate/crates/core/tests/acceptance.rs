//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use dichotomy_kit::cli_io::{self, AnalyzeReport, CertifyReport, CocycleFile, OrbitFile};
use dichotomy_kit::cocycle::generate_example;
use dichotomy_kit::dichotomy::{assemble, check_equivalence, classify, extract_rates, margin, recover_projections};
use dichotomy_kit::nonuniform::{
    build_adapted_norm, certify_trajectory, estimate_ck, nonuniform_trajectory, projection_bound_z, recover_splitting, subspace_sine, AdaptedNorm,
    HyperbolicityData, SplittingNorms, TrajectoryData,
};
use dichotomy_kit::seqspace::{geometric_convolve, Direction, Phi};
use dichotomy_kit::{Cocycle, DichotomyCertificate, ExampleKind, NormSequence, SequenceSpace, Tolerances, Window, WindowedSequence};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn diag(entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(entries.to_vec()))
}

/// Stable/unstable eigenpairs of the symmetric catmap matrix.
fn catmap_spectral() -> (f64, f64, DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
    let eig = a.symmetric_eigen();
    let (s, u) = if eig.eigenvalues[0] < eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let vs = eig.eigenvectors.column(s).into_owned();
    let vu = eig.eigenvectors.column(u).into_owned();
    (eig.eigenvalues[s], eig.eigenvalues[u], &vs * vs.transpose(), vs, vu)
}

fn constant_cert(core: Window, p: DMatrix<f64>, d: f64, lambda: f64, mu: f64) -> DichotomyCertificate {
    DichotomyCertificate::constant(core, p, d, lambda, mu)
}

/// Half-width: 64, or two projection margins when the rates are close to 1.
fn half_width(rho: f64, tol: &Tolerances) -> i64 {
    64.max(2 * margin(1.0, rho, tol.proj_tol))
}

fn criterion_1(tol: &Tolerances) -> Outcome {
    let clock = Instant::now();
    let l2 = SequenceSpace::l2();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases: Vec<(String, Cocycle, Option<DichotomyCertificate>, Window)> = Vec::new();
    for i in 0..32 {
        let d = 2 + i % 3;
        let ns = 1 + rng.gen_range(0..d - 1);
        let mut entries: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.1..0.9)).collect();
        entries.extend((ns..d).map(|_| rng.gen_range(1.1..8.0)));
        let lambda = entries[..ns].iter().cloned().fold(0.0, f64::max);
        let mu = entries[ns..].iter().cloned().fold(f64::INFINITY, f64::min);
        let w = Window::symmetric(half_width(lambda.max(1.0 / mu), tol));
        let c = generate_example(&ExampleKind::Diagonal { entries: entries.clone() }, w).unwrap();
        let p = diag(&(0..d).map(|k| if k < ns { 1.0 } else { 0.0 }).collect::<Vec<_>>());
        cases.push((format!("diagonal{entries:.3?}"), c, Some(constant_cert(w, p, 1.0, lambda, mu)), w));
    }
    let (ls, lu, ps, _, _) = catmap_spectral();
    let w = Window::symmetric(64);
    cases.push(("catmap".into(), generate_example(&ExampleKind::Catmap, w).unwrap(), Some(constant_cert(w, ps, 1.0, ls, lu)), w));
    for _ in 0..5 {
        let (lambda, mu, eps) = (rng.gen_range(0.2..0.6), rng.gen_range(1.5..4.0), rng.gen_range(0.02..0.1));
        let w = Window::symmetric(64);
        let c = generate_example(&ExampleKind::NonuniformScalarPair { lambda, mu, epsilon: eps }, w)
            .unwrap()
            .with_norms(NormSequence::exponential(w, 2, eps))
            .unwrap();
        let cert = constant_cert(w, diag(&[1.0, 0.0]), 1.0, lambda * eps.exp(), mu * (-eps).exp());
        cases.push((format!("nonuniform({lambda:.3},{mu:.3},{eps:.3})"), c, Some(cert), w));
    }
    for i in 0..12 {
        let (a, b) = (rng.gen_range(0.1..0.7), rng.gen_range(1.5..8.0));
        let base = if i % 4 == 3 { ExampleKind::Catmap } else { ExampleKind::diagonal(a, b) };
        let gap = if i % 4 == 3 { 1.0 - ls } else { (1.0 - a).min(b - 1.0) };
        let delta = 0.05 * gap * rng.gen_range(0.2..1.0);
        let w = Window::symmetric(64);
        let kind = ExampleKind::Perturbed { base: Box::new(base), delta, seed: 100 + i as u64 };
        cases.push((format!("perturbed#{i}(δ={delta:.4})"), generate_example(&kind, w).unwrap(), None, w));
    }

    let mut failures = Vec::new();
    let mut worst_green: f64 = 0.0;
    for (name, c, known, w) in &cases {
        let known = match known {
            Some(k) => Some(k.clone()),
            None => check_equivalence(c, &l2, *w, None, 0, tol).ok().and_then(|r| r.converse.map(|cc| cc.certificate)),
        };
        match check_equivalence(c, &l2, *w, known.as_ref(), 10, tol) {
            Ok(r) if r.passes && r.direct.is_some() && r.converse.is_some() => {
                worst_green = worst_green.max(r.direct.unwrap().max_relative_difference);
            }
            Ok(r) => failures.push(format!("{name}: {:?}", r.notes)),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = failures.is_empty() && cases.len() >= 50 && secs <= 60.0;
    outcome(
        pass,
        format!("{} cocycles, {} failures, worst green-vs-direct {worst_green:.2e}, {secs:.1}s{}", cases.len(), failures.len(), if failures.is_empty() { String::new() } else { format!(" {failures:?}") }),
    )
}

fn criterion_2(tol: &Tolerances) -> Outcome {
    let l2 = SequenceSpace::l2();
    let w = Window::symmetric(64);
    let run = |c: &Cocycle, target: &DMatrix<f64>| -> Result<f64, String> {
        let r = extract_rates(c, &l2, w, None, tol).map_err(|e| e.to_string())?;
        let op = assemble(c, &l2, w, 1.0, w.mid()).map_err(|e| e.to_string())?;
        let rec = recover_projections(&op, w.shrink(r.margin), tol).map_err(|e| e.to_string())?;
        Ok(rec.projections.iter().map(|p| (p - target).norm()).fold(0.0, f64::max))
    };
    let d = run(&generate_example(&ExampleKind::diagonal(0.5, 2.0), w).unwrap(), &diag(&[1.0, 0.0]));
    let (_, _, ps, _, _) = catmap_spectral();
    let k = run(&generate_example(&ExampleKind::Catmap, w).unwrap(), &ps);
    match (d, k) {
        (Ok(d), Ok(k)) => outcome(d <= 1e-8 && k <= 1e-6, format!("diag(1/2,2) max ‖P_n - diag(1,0)‖ = {d:.2e} (≤ 1e-8); catmap max ‖P_n - P_spec‖ = {k:.2e} (≤ 1e-6)")),
        (d, k) => outcome(false, format!("{d:?} {k:?}")),
    }
}

fn criterion_3(tol: &Tolerances) -> Outcome {
    let l2 = SequenceSpace::l2();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    let mut samples = 0;
    let mut errors = Vec::new();
    for _ in 0..10 {
        let (a, b): (f64, f64) = (rng.gen_range(0.1..0.9), rng.gen_range(1.1..8.0));
        let w = Window::symmetric(256.max(3 * margin(1.0, a.max(1.0 / b), tol.proj_tol)));
        let c = generate_example(&ExampleKind::diagonal(a, b), w).unwrap();
        let r = match extract_rates(&c, &l2, w, None, tol) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("({a:.3},{b:.3}): {e}"));
                continue;
            }
        };
        let oracle = (1.0 / a).min(b);
        worst = worst.max((r.z_star / oracle - 1.0).abs());
        for _ in 0..10 {
            let z = rng.gen_range(1.0..1.0 + 1.0 / r.inverse_norm);
            samples += 1;
            match classify(&c, &l2, w, z, w.mid(), tol) {
                Ok(cl) if cl.invertible => {}
                _ => violations += 1,
            }
        }
    }
    outcome(
        worst <= 0.02 && violations == 0 && errors.is_empty(),
        format!("max |z*/min(1/a,b) - 1| = {:.3}% (≤ 2%); guaranteed region: {violations}/{samples} violations{}", 100.0 * worst, if errors.is_empty() { String::new() } else { format!(" {errors:?}") }),
    )
}

fn identity_norms(tol: &Tolerances) -> Vec<(i64, f64, bool)> {
    let l2 = SequenceSpace::l2();
    [32, 64, 128]
        .iter()
        .map(|&h| {
            let w = Window::symmetric(h);
            let c = generate_example(&ExampleKind::Identity { dim: 2 }, w).unwrap();
            let cl = classify(&c, &l2, w, 1.0, w.mid(), tol).unwrap();
            (h, cl.inverse_norm, cl.invertible)
        })
        .collect()
}

fn criterion_4a(tol: &Tolerances) -> Outcome {
    let rows = identity_norms(tol);
    let pass = rows.iter().all(|r| !r.2);
    outcome(pass, format!("identity classified non-invertible at half-widths 32/64/128: {:?} (growth threshold {})", rows.iter().map(|r| !r.2).collect::<Vec<_>>(), tol.growth_threshold))
}

fn criterion_4b(tol: &Tolerances) -> Outcome {
    let rows = identity_norms(tol);
    let g1 = rows[1].1 / rows[0].1;
    let g2 = rows[2].1 / rows[1].1;
    outcome(g1 >= 2.0 && g2 >= 2.0, format!("literal doubling: inverse_norm ratios W 32→64 = {g1:.4}, 64→128 = {g2:.4} (need ≥ 2)"))
}

fn criterion_5(tol: &Tolerances) -> Outcome {
    let spaces = vec![
        SequenceSpace::l1(),
        SequenceSpace::l2(),
        SequenceSpace::linf(),
        SequenceSpace::lp(1.5).unwrap(),
        SequenceSpace::lp(3.0).unwrap(),
        SequenceSpace::orlicz(Phi::Power(2.5)).unwrap(),
        SequenceSpace::orlicz(Phi::Knots(vec![[0.0, 0.5], [1.0, 1.0], [2.0, 4.0]])).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fails = Vec::new();
    let rel = 1e-10;
    for sp in &spaces {
        let mut bad = 0;
        for _ in 0..1000 {
            let len = rng.gen_range(1..40);
            let off = rng.gen_range(-20..20);
            let draw = |rng: &mut ChaCha8Rng| WindowedSequence::new(off, (0..len).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect());
            let s = draw(&mut rng);
            let t = draw(&mut rng);
            let ns = sp.norm(&s);
            let nt = sp.norm(&t);
            let c: f64 = rng.gen_range(-3.0..3.0);
            let scaled = WindowedSequence::new(off, s.values.iter().map(|v| c * v).collect());
            let sum = WindowedSequence::new(off, s.values.iter().zip(&t.values).map(|(a, b)| a + b).collect());
            let bigger = WindowedSequence::new(off, s.values.iter().map(|v| v * rng.gen_range(1.0..2.0)).collect());
            let zero = s.values.iter().all(|v| *v == 0.0);
            let mut ok = ns >= 0.0 && (ns == 0.0) == zero;
            ok &= (sp.norm(&scaled) - c.abs() * ns).abs() <= rel * (1.0 + c.abs() * ns);
            ok &= sp.norm(&sum) <= (ns + nt) * (1.0 + rel) + 1e-300;
            ok &= sp.norm(&bigger) >= ns * (1.0 - rel);
            ok &= sp.norm(&s.shift(rng.gen_range(-10..10))) <= sp.shift_constant() * ns * (1.0 + rel);
            let lambda = rng.gen_range(0.05..0.95);
            for dir in [Direction::Causal, Direction::Anticausal] {
                let (out, bound) = geometric_convolve(sp, &s, lambda, dir, tol.tail_tol).unwrap();
                ok &= sp.norm(&out) <= bound * (1.0 + rel) + 1e-300;
            }
            bad += (!ok) as usize;
        }
        if bad > 0 {
            fails.push(format!("{}: {bad}", sp.label()));
        }
    }
    let mut worst_orlicz: f64 = 0.0;
    for p in [1.5, 2.0, 3.0, 4.5] {
        let o = SequenceSpace::orlicz(Phi::Power(p)).unwrap();
        let l = SequenceSpace::lp(p).unwrap();
        for _ in 0..1000 {
            let s = WindowedSequence::new(0, (0..rng.gen_range(1..30)).map(|_| rng.gen_range(-5.0..5.0)).collect());
            let (a, b) = (o.norm(&s), l.norm(&s));
            if b > 0.0 {
                worst_orlicz = worst_orlicz.max((a - b).abs() / b);
            }
        }
    }
    outcome(
        fails.is_empty() && worst_orlicz <= 1e-10,
        format!("{} spaces x 1000 draws, axiom/shift/convolution failures: {fails:?}; max |Orlicz(t^p) - ℓ^p|/ℓ^p = {worst_orlicz:.2e} (≤ 1e-10)", spaces.len()),
    )
}

/// Riemannian splitting (rates fixed to the known ones) and the adapted norm on a shrunken core.
fn adapted_setup(t: &TrajectoryData, rates: (f64, f64), eps: f64, tol: &Tolerances) -> Result<(HyperbolicityData, AdaptedNorm), String> {
    let l2 = SequenceSpace::l2();
    let (h, _) = recover_splitting(t, SplittingNorms::Riemannian, &l2, t.window(), eps, Some(rates), tol).map_err(|e| e.to_string())?;
    let core = h.core.shrink((h.core.len() as i64 / 8).max(2));
    let n = build_adapted_norm(t, &h, eps, core, None).map_err(|e| e.to_string())?;
    Ok((h, n))
}

fn catmap_trajectory(half: i64, tol: &Tolerances) -> TrajectoryData {
    TrajectoryData::catmap_orbit(Window::symmetric(half), [0.1, 0.2], tol).unwrap()
}

/// Largest residual of each bound, as `lhs/rhs - 1` (nonpositive when the bound holds).
#[derive(Default, Debug)]
struct Residuals {
    g1_lower: f64,
    g1_upper: f64,
    g2: f64,
    t1: f64,
    t3: f64,
    t4: f64,
    z_stable: f64,
    z_unstable: f64,
}

fn adapted_residuals(t: &TrajectoryData, n: &AdaptedNorm, draws: usize, rng: &mut ChaCha8Rng) -> Residuals {
    let mut r = Residuals { g1_lower: f64::MIN, g1_upper: f64::MIN, g2: f64::MIN, t1: f64::MIN, t3: f64::MIN, t4: f64::MIN, z_stable: f64::MIN, z_unstable: f64::MIN };
    let core = n.core();
    let (lambda, mu, eps, a) = (n.lambda(), n.mu(), n.epsilon(), n.a_bound());
    let z = projection_bound_z(lambda, mu, n.eps0(), a).unwrap() * 1.05;
    let d = t.dim();
    let step = ((core.len() - 2) / 8).max(1);
    for k in (core.start + 1..core.end).step_by(step) {
        let p = n.projection(k).clone();
        let q = DMatrix::identity(d, d) - &p;
        let g = n.g(k);
        for _ in 0..draws {
            let v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let riem = t.inner().norm(k, &v);
            let adapted = n.norm(k, &v);
            r.g1_lower = r.g1_lower.max(0.5 * riem / adapted - 1.0);
            r.g1_upper = r.g1_upper.max(adapted / (g * riem) - 1.0);
            let vs = &p * &v;
            let vu = &q * &v;
            r.t1 = r.t1.max(n.norm(k + 1, &(t.deriv(k) * &vs)) / (lambda * eps.exp() * n.norm(k, &vs)) - 1.0);
            r.t3 = r.t3.max(n.norm(k - 1, &(t.inverse(k - 1) * &vu)) / (eps.exp() / mu * n.norm(k, &vu)) - 1.0);
            r.t4 = r.t4.max(n.norm(k + 1, &(t.deriv(k) * &v)) / (a * (eps.exp() + 1.0) * adapted) - 1.0);
            r.z_stable = r.z_stable.max(n.norm(k, &vs) / (z * adapted) - 1.0);
            r.z_unstable = r.z_unstable.max(n.norm(k, &vu) / (z * adapted) - 1.0);
        }
    }
    let gs = n.g_fun();
    for i in 0..gs.len() {
        for j in 0..gs.len() {
            r.g2 = r.g2.max(gs[j] / (gs[i] * (2.0 * eps * (j as f64 - i as f64).abs()).exp()) - 1.0);
        }
    }
    r
}

fn criterion_6(tol: &Tolerances) -> Outcome {
    let (ls, lu, _, _, _) = catmap_spectral();
    let norm_tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut lines = Vec::new();
    let mut pass = true;
    let cat = catmap_trajectory(64, tol);
    let nu = nonuniform_trajectory(Window::symmetric(128), 0.5, 2.0, 0.005, tol).unwrap();
    for (name, t, rates) in [("catmap", &cat, (ls, lu)), ("nonuniform", &nu, (0.5, 2.0))] {
        for eps in [0.01, 0.05, 0.1] {
            match adapted_setup(t, rates, eps, tol) {
                Ok((_, n)) => {
                    let r = adapted_residuals(t, &n, 1000, &mut rng);
                    let worst = [r.g1_lower, r.g1_upper, r.g2, r.t1, r.t3, r.t4, r.z_stable, r.z_unstable].into_iter().fold(f64::MIN, f64::max);
                    let ok = worst <= norm_tol;
                    pass &= ok;
                    lines.push(format!("{name} ε={eps}: worst residual {worst:.2e}{}", if ok { String::new() } else { format!(" {r:?}") }));
                }
                Err(e) => {
                    pass = false;
                    lines.push(format!("{name} ε={eps}: {e}"));
                }
            }
        }
    }
    outcome(pass, format!("G1/G2/T1/T3/T4/Z residuals ≤ {norm_tol:.0e}: {}", lines.join("; ")))
}

fn criterion_7(tol: &Tolerances) -> Outcome {
    let l2 = SequenceSpace::l2();
    let (ls, lu, _, vs, vu) = catmap_spectral();
    let mut notes = Vec::new();
    let mut pass = true;

    let cat = catmap_trajectory(64, tol);
    let nu = nonuniform_trajectory(Window::symmetric(128), 0.5, 2.0, 0.005, tol).unwrap();
    for (name, t, rates) in [("catmap", &cat, (ls, lu)), ("nonuniform", &nu, (0.5, 2.0))] {
        match adapted_setup(t, rates, 0.05, tol).and_then(|(_, n)| certify_trajectory(t, &n, &l2, n.core(), tol).map_err(|e| e.to_string())) {
            Ok(c) => {
                pass &= c.passes;
                notes.push(format!("{name}: ‖R_x^-1‖ ≤ {:.3} vs 1.05·D_theory = {:.3}", c.inverse_norm_upper, 1.05 * c.d_theory));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }

    let es = DMatrix::from_column_slice(2, 1, vs.as_slice());
    let eu = DMatrix::from_column_slice(2, 1, vu.as_slice());
    let split = |eps: f64| -> Result<HyperbolicityData, String> {
        let (_, n) = adapted_setup(&cat, (ls, lu), eps, tol)?;
        recover_splitting(&cat, SplittingNorms::Adapted(&n), &l2, n.core(), eps, Some((ls, lu)), tol).map(|r| r.0).map_err(|e| e.to_string())
    };
    match (split(0.02), split(0.05)) {
        (Ok(h1), Ok(h2)) => {
            let mut angle: f64 = 0.0;
            for k in h1.core.indices() {
                angle = angle.max(subspace_sine(&h1.stable[h1.core.pos(k)], &es)).max(subspace_sine(&h1.unstable[h1.core.pos(k)], &eu));
            }
            let between = h1.max_angle_to(&h2);
            pass &= angle <= 1e-6 && between <= 1e-8;
            notes.push(format!("catmap splitting vs eigenvectors {angle:.2e} (≤ 1e-6), ε=0.02 vs 0.05 {between:.2e} (≤ 1e-8)"));
        }
        (a, b) => {
            pass = false;
            notes.push(format!("splitting: {:?} {:?}", a.err(), b.err()));
        }
    }

    let eps = 0.05;
    let syn = nonuniform_trajectory(Window::symmetric(128), 0.5, 2.0, eps, tol).unwrap();
    match recover_splitting(&syn, SplittingNorms::Riemannian, &l2, syn.window(), eps, Some((0.5, 2.0)), tol) {
        Ok((h, _)) => {
            let ck = estimate_ck(&syn, &h, eps, None).unwrap();
            let window = h.core.shrink(h.core.len() as i64 / 4);
            let mut worst: f64 = 1.0;
            for k in window.indices() {
                let ratio = ck.c_fun[h.core.pos(k)] / (eps * k.abs() as f64).exp();
                worst = worst.max(ratio).max(1.0 / ratio);
            }
            let loose = dichotomy_kit::nonuniform::check_tempered(&ck.c_fun, &ck.k_fun, eps / 4.0);
            pass &= ck.tempered.passes && worst <= 2.0 && !loose.passes;
            notes.push(format!(
                "tempered at 2ε: {} violations; C(x_k)/e^(ε|k|) within factor {worst:.3} (≤ 2); at ε/4: {} violations (expected > 0)",
                ck.tempered.c_violations + ck.tempered.k_violations,
                loose.c_violations + loose.k_violations
            ));
        }
        Err(e) => {
            pass = false;
            notes.push(format!("synthetic C growth: {e}"));
        }
    }
    outcome(pass, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let run = |args: &[&str]| cli_io::run(std::iter::once("dichotomy-kit").chain(args.iter().copied()));
    let mut notes = Vec::new();
    let mut pass = true;

    let gens = [
        vec!["generate", "--kind", "diagonal", "--entries", "0.5,2", "--delta", "0.02", "--seed", "7", "--window", "32"],
        vec!["generate", "--kind", "catmap", "--orbit", "--window", "64"],
    ];
    let names = [("pert", "cocycle"), ("cat", "orbit")];
    for (g, (stem, _)) in gens.iter().zip(names) {
        for copy in ["a", "b"] {
            let out = p(&format!("{stem}_{copy}.json"));
            let mut args = g.clone();
            args.extend(["--out", out.as_str()]);
            pass &= run(&args) == 0;
        }
        let same = std::fs::read(p(&format!("{stem}_a.json"))).unwrap() == std::fs::read(p(&format!("{stem}_b.json"))).unwrap();
        pass &= same;
        notes.push(format!("generate {stem} twice identical: {same}"));
    }
    for copy in ["a", "b"] {
        let (r, c) = (p(&format!("an_{copy}.json")), p(&format!("an_{copy}.csv")));
        pass &= run(&["analyze", "--input", &p("pert_a.json"), "--report", &r, "--csv", &c, "--projections"]) == 0;
        let (r, c) = (p(&format!("ce_{copy}.json")), p(&format!("ce_{copy}.csv")));
        pass &= run(&["certify", "--orbit", &p("cat_a.json"), "--epsilon", "0.05", "--report", &r, "--csv", &c, "--splitting"]) == 0;
    }
    for stem in ["an_", "ce_"] {
        for ext in ["json", "csv"] {
            let same = std::fs::read(p(&format!("{stem}a.{ext}"))).unwrap() == std::fs::read(p(&format!("{stem}b.{ext}"))).unwrap();
            pass &= same;
            notes.push(format!("{stem}{ext} identical: {same}"));
        }
    }

    fn round_trip<T: serde::Serialize + serde::de::DeserializeOwned + PartialEq>(path: &str, scratch: &str) -> bool {
        let a: T = cli_io::read_json(std::path::Path::new(path)).unwrap();
        cli_io::write_json(std::path::Path::new(scratch), &a).unwrap();
        let b: T = cli_io::read_json(std::path::Path::new(scratch)).unwrap();
        a == b && std::fs::read(path).unwrap() == std::fs::read(scratch).unwrap()
    }
    let rt = [
        ("cocycle", round_trip::<CocycleFile>(&p("pert_a.json"), &p("rt1.json"))),
        ("orbit", round_trip::<OrbitFile>(&p("cat_a.json"), &p("rt2.json"))),
        ("analyze report", round_trip::<AnalyzeReport>(&p("an_a.json"), &p("rt3.json"))),
        ("certify report", round_trip::<CertifyReport>(&p("ce_a.json"), &p("rt4.json"))),
    ];
    let file: CocycleFile = cli_io::read_json(std::path::Path::new(&p("pert_a.json"))).unwrap();
    let c = file.to_cocycle(&Tolerances::default()).unwrap();
    let back = CocycleFile::from_cocycle(&c, file.meta.clone());
    let exact = back == file;
    pass &= exact && rt.iter().all(|r| r.1);
    notes.push(format!("lossless round trips: {rt:?}, cocycle ↔ file exact: {exact}"));
    outcome(pass, notes.join("; "))
}

fn main() {
    let tol = Tolerances::default();
    type Check = Box<dyn Fn(&Tolerances) -> Outcome>;
    let criteria: Vec<(&str, &str, Check)> = vec![
        ("1", "equivalence suite", Box::new(criterion_1)),
        ("2", "projection recovery", Box::new(criterion_2)),
        ("3", "rate extraction", Box::new(criterion_3)),
        ("4a", "negative control: identity classified non-invertible", Box::new(criterion_4a)),
        ("4b", "negative control: literal ≥ 2x inverse-norm growth", Box::new(criterion_4b)),
        ("5", "sequence-space suite", Box::new(criterion_5)),
        ("6", "adapted-norm suite", Box::new(criterion_6)),
        ("7", "trajectory certification and round trip", Box::new(criterion_7)),
        ("8", "determinism and IO", Box::new(|_: &Tolerances| criterion_8())),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let clock = Instant::now();
        let o = check(&tol);
        failed += (!o.pass) as usize;
        println!("criterion {id} [{name}]: {} ({:.1}s) {}", if o.pass { "PASS" } else { "FAIL" }, clock.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
