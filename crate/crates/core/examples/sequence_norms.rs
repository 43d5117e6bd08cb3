//! Norms of a finite sequence in several admissible spaces, and the
//! geometric convolution bound used by the Green series.

use dichotomy_kit::seqspace::{geometric_convolve, Direction, Phi};
use dichotomy_kit::{Result, SequenceSpace, WindowedSequence};

pub struct Summary {
    pub lp3: f64,
    pub orlicz_power3: f64,
    pub causal_norm: f64,
    pub causal_bound: f64,
}

pub fn run_example() -> Result<Summary> {
    let s = WindowedSequence::new(-3, vec![0.5, -1.0, 2.0, 0.25, -0.75, 1.5, 0.0]);
    let spaces = [
        SequenceSpace::l1(),
        SequenceSpace::l2(),
        SequenceSpace::linf(),
        SequenceSpace::lp(3.0)?,
        SequenceSpace::orlicz(Phi::Power(3.0))?,
        SequenceSpace::orlicz(Phi::Knots(vec![[0.5, 0.2], [1.0, 1.0], [4.0, 8.0]]))?,
    ];
    for space in &spaces {
        println!("{:>28}  ‖s‖ = {:.6}  N = {}", space.label(), space.norm(&s), space.shift_constant());
    }

    let l2 = SequenceSpace::l2();
    let (conv, bound) = geometric_convolve(&l2, &s, 0.5, Direction::Causal, 1e-12)?;
    println!("causal convolution at λ = 1/2: ‖s¹‖ = {:.6} ≤ {:.6}", l2.norm(&conv), bound);

    Ok(Summary { lp3: spaces[3].norm(&s), orlicz_power3: spaces[4].norm(&s), causal_norm: l2.norm(&conv), causal_bound: bound })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
