//! Shared helpers for unit tests.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::grid::Grid;
use crate::transforms::Signal;

pub fn random_signal(g: Grid, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    Signal::new(values, g).unwrap()
}

pub fn random_real_signal(g: Grid, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0))
        .collect();
    Signal::new(values, g).unwrap()
}

/// Relative l2 error of `a` against reference `b`.
pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
