//! Randomized property tests for the structural invariants: transform
//! round trips, index bijections, adjoint pairings, and file round trips.

use num_complex::Complex64;
use proptest::prelude::*;

use tvci_core::gradient::{grad, grad_adjoint, tv_norm, GradField, TvMode};
use tvci_core::grid::{
    fourier_freq_row, lex_flatten, lex_unflatten, row_freq, walsh_freq_row,
};
use tvci_core::transforms::{
    dft_adjoint, dft_forward, haar_forward, haar_inverse, wht_forward, Signal,
};
use tvci_core::{Convention, Grid};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..=3).prop_flat_map(|d| {
        let max_pow = match d {
            1 => 9,
            2 => 5,
            _ => 3,
        };
        (1u32..=max_pow).prop_map(move |p| Grid::new(1 << p, d).unwrap())
    })
}

fn signal_strategy() -> impl Strategy<Value = Signal> {
    grid_strategy().prop_flat_map(|g| {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), g.len())
            .prop_map(move |pairs| {
                let values = pairs
                    .into_iter()
                    .map(|(re, im)| Complex64::new(re, im))
                    .collect();
                Signal::new(values, g).unwrap()
            })
    })
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_bijections_round_trip(g in grid_strategy(), raw in 0usize..1 << 16) {
        let flat = raw % g.len() + 1;
        let multi = lex_unflatten(flat, &g).unwrap();
        prop_assert_eq!(lex_flatten(&multi, &g).unwrap(), flat);
        let f = row_freq(flat, &g, Convention::Fourier).unwrap();
        prop_assert_eq!(fourier_freq_row(&f, &g).unwrap(), flat);
        let w = row_freq(flat, &g, Convention::Walsh).unwrap();
        prop_assert_eq!(walsh_freq_row(&w, &g).unwrap(), flat);
    }

    #[test]
    fn dft_round_trip(x in signal_strategy()) {
        let len = x.grid.len() as f64;
        let back = dft_adjoint(&dft_forward(&x));
        let scaled: Vec<Complex64> = x.values.iter().map(|v| v * len).collect();
        prop_assert!(rel_err(&back.values, &scaled) < 1e-10);
    }

    #[test]
    fn wht_involution(x in signal_strategy()) {
        let len = x.grid.len() as f64;
        let twice = wht_forward(&Signal::new(wht_forward(&x).values, x.grid).unwrap());
        let scaled: Vec<Complex64> = x.values.iter().map(|v| v * len).collect();
        prop_assert!(rel_err(&twice.values, &scaled) < 1e-10);
    }

    #[test]
    fn haar_round_trip_and_parseval(x in signal_strategy()) {
        let coeffs = haar_forward(&x);
        let back = haar_inverse(&coeffs);
        prop_assert!(rel_err(&back.values, &x.values) < 1e-10);
        // orthonormal basis preserves the norm
        let cn: f64 = coeffs.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((cn - x.norm()).abs() < 1e-8 * x.norm().max(1.0));
    }

    #[test]
    fn gradient_adjoint_pairing(x in signal_strategy(), seed in 0u64..1000) {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let g = x.grid;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = GradField {
            components: (0..g.d())
                .map(|_| {
                    (0..g.len())
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                })
                .collect(),
            grid: g,
        };
        let gx = grad(&x);
        let lhs: Complex64 = gx
            .components
            .iter()
            .zip(&v.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q.conj()))
            .sum();
        let rhs: Complex64 = x
            .values
            .iter()
            .zip(&grad_adjoint(&v).values)
            .map(|(p, q)| p * q.conj())
            .sum();
        prop_assert!((lhs - rhs).norm() < 1e-8 * (lhs.norm() + 1.0));
    }

    #[test]
    fn tv_mode_inequalities(x in signal_strategy()) {
        let iso = tv_norm(&x, TvMode::Isotropic);
        let aniso = tv_norm(&x, TvMode::Anisotropic);
        let d = x.grid.d() as f64;
        prop_assert!(iso <= aniso * (1.0 + 1e-12));
        prop_assert!(aniso <= d.sqrt() * iso * (1.0 + 1e-12));
    }

    #[test]
    fn pattern_file_round_trip(
        n_pow in 2u32..=6,
        d in 1usize..=2,
        m in 1usize..=64,
        seed in 0u64..500,
    ) {
        use tvci_core::io::{read_pattern, write_pattern};
        use tvci_core::patterns::sample_uniform;
        let g = Grid::new(1 << n_pow, d).unwrap();
        let pat = sample_uniform(&g, Convention::Walsh, m, seed, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_pattern(&path, &pat).unwrap();
        let back = read_pattern(&path).unwrap();
        prop_assert_eq!(back.draws, pat.draws);
        prop_assert_eq!(back.m, pat.m);
        prop_assert_eq!(back.seed, pat.seed);
    }
}
