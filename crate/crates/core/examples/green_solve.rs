//! Solving `x_n - A_{n-1} x_{n-1} = y_n` with the Green series of a known
//! dichotomy, and comparing with a direct solve of the finite section.

use dichotomy_kit::cocycle::generate_example;
use dichotomy_kit::dichotomy::{assemble, green_solve, BlockVector, Boundary};
use dichotomy_kit::{DichotomyCertificate, ExampleKind, Result, SequenceSpace, Tolerances, Window};
use nalgebra::{DMatrix, DVector};

pub struct Summary {
    /// Largest deviation from the closed form `x_n = 2^{-n}` (n ≥ 0), `-2^{n}` (n < 0).
    pub closed_form_error: f64,
    pub green_vs_direct: f64,
}

pub fn run_example() -> Result<Summary> {
    let tol = Tolerances::default();
    let w = Window::symmetric(24);
    let c = generate_example(&ExampleKind::diagonal(0.5, 2.0), w)?;
    let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
    let cert = DichotomyCertificate::constant(w, p.clone(), 1.0, 0.5, 2.0);

    let y = BlockVector::impulse(w, 0, DVector::from_vec(vec![1.0, 1.0]));
    let x = green_solve(&c, &cert, &y, &tol)?;
    let mut closed_form_error: f64 = 0.0;
    for n in w.indices() {
        let xn = x.get(n).expect("in window");
        let s = if n >= 0 { 0.5f64.powi(n as i32) } else { 0.0 };
        let u = if n < 0 { -(2.0f64.powi(n as i32)) } else { 0.0 };
        closed_form_error = closed_form_error.max((xn[0] - s).abs()).max((xn[1] - u).abs());
        if n.abs() <= 3 {
            println!("x_{n:>2} = ({:+.6}, {:+.6})", xn[0], xn[1]);
        }
    }

    let op = assemble(&c, &SequenceSpace::l2(), w, 1.0, w.mid())?.with_boundary(Boundary::Projected { left: p.clone(), right: p })?;
    let direct = op.solve(&y, &tol)?;
    let green_vs_direct = direct.x.max_diff(&x);
    println!("closed form error {closed_form_error:.2e}, green vs direct {green_vs_direct:.2e}");
    Ok(Summary { closed_form_error, green_vs_direct })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
