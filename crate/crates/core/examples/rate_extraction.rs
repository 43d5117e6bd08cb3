//! Reading dichotomy rates off the invertibility threshold of `B(z)`.

use dichotomy_kit::cocycle::generate_example;
use dichotomy_kit::dichotomy::{classify, extract_rates, Rates};
use dichotomy_kit::{ExampleKind, Result, SequenceSpace, Tolerances, Window};

pub fn run_example() -> Result<Rates> {
    let tol = Tolerances::default();
    let l2 = SequenceSpace::l2();
    let w = Window::symmetric(128);
    let c = generate_example(&ExampleKind::diagonal(0.25, 8.0), w)?;

    for z in [1.0, 2.0, 3.5, 4.5] {
        let cl = classify(&c, &l2, w, z, w.mid(), &tol)?;
        println!("z = {z:.1}: invertible = {:5}, ‖B(z)⁻¹‖ = {:.4}", cl.invertible, cl.inverse_norm);
    }
    let r = extract_rates(&c, &l2, w, None, &tol)?;
    println!("z* = {:.4} (exact 4), λ̂ = {:.4}, μ̂ = {:.4}", r.z_star, r.lambda_hat, r.mu_hat);
    println!("guaranteed certificate: D = {:.4}, t = {:.4}, margin {}", r.d_hat, r.t, r.margin);
    Ok(r)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
