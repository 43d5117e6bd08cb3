//! Verifying a dichotomy certificate `(P_n, D, λ, μ)` for the cat map cocycle
//! on every index pair of a window.

use dichotomy_kit::cocycle::{generate_example, verify_certificate, ResidualReport};
use dichotomy_kit::{DichotomyCertificate, ExampleKind, Result, Tolerances, Window};
use nalgebra::DMatrix;

pub fn run_example() -> Result<ResidualReport> {
    let tol = Tolerances::default();
    let w = Window::symmetric(32);
    let c = generate_example(&ExampleKind::Catmap, w)?;

    let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
    let eig = a.symmetric_eigen();
    let s = if eig.eigenvalues[0] < eig.eigenvalues[1] { 0 } else { 1 };
    let v = eig.eigenvectors.column(s).into_owned();
    let (lambda, mu) = (eig.eigenvalues[s], eig.eigenvalues[1 - s]);
    let cert = DichotomyCertificate::constant(w, &v * v.transpose(), 1.0, lambda, mu);

    let report = verify_certificate(&c, &cert, &tol)?;
    println!("λ = {lambda:.6}, μ = {mu:.6}");
    println!("intertwining {:.2e}, stable excess {:.2e}, unstable excess {:.2e}", report.intertwining, report.stable_excess, report.unstable_excess);
    println!("passes: {}", report.passes);

    let loose = DichotomyCertificate { lambda: 0.9 * lambda, ..cert };
    println!("with λ lowered by 10%: passes = {}", verify_certificate(&c, &loose, &tol)?.passes);
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
