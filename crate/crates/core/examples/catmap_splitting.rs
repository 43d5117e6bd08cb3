//! Hyperbolic splitting along a cat map orbit, recovered from the operator
//! `R_x` and compared with the eigenvectors of `[[2,1],[1,1]]`.

use dichotomy_kit::nonuniform::{build_adapted_norm, certify_trajectory, recover_splitting, subspace_sine, SplittingNorms, TrajectoryData};
use dichotomy_kit::{Result, SequenceSpace, Tolerances, Window};
use nalgebra::DMatrix;

pub struct Summary {
    pub max_sine: f64,
    pub inverse_norm_upper: f64,
    pub d_theory: f64,
    pub passes: bool,
}

pub fn run_example() -> Result<Summary> {
    let tol = Tolerances::default();
    let l2 = SequenceSpace::l2();
    let eps = 0.05;
    let t = TrajectoryData::catmap_orbit(Window::symmetric(64), [0.1, 0.2], &tol)?;
    let root5 = 5f64.sqrt();
    let rates = ((3.0 - root5) / 2.0, (3.0 + root5) / 2.0);

    let (h, report) = recover_splitting(&t, SplittingNorms::Riemannian, &l2, t.window(), eps, Some(rates), &tol)?;
    println!("splitting on {}: decomposition residual {:.2e}, invariance residual {:.2e}", report.core, report.decomposition_residual, report.invariance_residual);

    let es = DMatrix::from_column_slice(2, 1, &[1.0, -(1.0 + root5) / 2.0]);
    let max_sine = h.core.indices().map(|k| subspace_sine(&h.stable[h.core.pos(k)], &es)).fold(0.0, f64::max);
    println!("largest sine to the stable eigenvector: {max_sine:.2e}");

    let core = h.core.shrink((h.core.len() as i64 / 8).max(2));
    let norm = build_adapted_norm(&t, &h, eps, core, None)?;
    let cert = certify_trajectory(&t, &norm, &l2, core, &tol)?;
    println!("‖R_x⁻¹‖ ≤ {:.4}, D_theory = {:.4}, passes = {}", cert.inverse_norm_upper, cert.d_theory, cert.passes);
    Ok(Summary { max_sine, inverse_norm_upper: cert.inverse_norm_upper, d_theory: cert.d_theory, passes: cert.passes })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
