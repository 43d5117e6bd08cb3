//! A nonuniformly hyperbolic trajectory whose constants grow like `e^{ε|k|}`:
//! splitting, the functions `C(x_k)`, `K(x_k)` and their tempered growth.

use dichotomy_kit::nonuniform::{estimate_ck, nonuniform_trajectory, recover_splitting, CkReport, SplittingNorms};
use dichotomy_kit::{Result, SequenceSpace, Tolerances, Window};

pub fn run_example() -> Result<CkReport> {
    let tol = Tolerances::default();
    let eps = 0.05;
    let t = nonuniform_trajectory(Window::symmetric(96), 0.5, 2.0, eps, &tol)?;
    let (h, _) = recover_splitting(&t, SplittingNorms::Riemannian, &SequenceSpace::l2(), t.window(), eps, Some((0.5, 2.0)), &tol)?;
    let ck = estimate_ck(&t, &h, eps, None)?;

    for k in (-40..=40).step_by(20) {
        let i = ck.core.pos(k);
        println!("k = {k:>3}: C = {:>9.3}  e^(ε|k|) = {:>9.3}  K = {:.3}", ck.c_fun[i], (eps * k.abs() as f64).exp(), ck.k_fun[i]);
    }
    println!(
        "tempered at rate {:.3}: {} C violations, {} K violations, observed C rate {:.4}",
        ck.tempered.rate, ck.tempered.c_violations, ck.tempered.k_violations, ck.tempered.observed_c_rate
    );
    Ok(ck)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
