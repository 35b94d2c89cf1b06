//! The `verify` subcommand: a self-contained property suite that exercises
//! the main invariants end to end and reports one PASS/FAIL line per check.

use num_complex::Complex64;
use tvci_core::densities::{build_density, gamma_constant, DensityKind, NormKind};
use tvci_core::experiment::{run_experiment, rows_to_csv, ExperimentSpec, Scheme};
use tvci_core::gradient::{grad, grad_adjoint, GradField};
use tvci_core::io::{read_pattern, read_raw, write_pattern, write_raw};
use tvci_core::operators::{incoherence_theta, HaarBasisKind, ThetaMode};
use tvci_core::patterns::{sample_uniform, sample_vds};
use tvci_core::phantoms::{piecewise_constant_1d, shepp_logan};
use tvci_core::solver::{solve_tv, SolverConfig};
use tvci_core::transforms::{
    dense_apply, dense_oracle, dft_forward, haar_forward, wht_forward, Signal, TransformKind,
};
use tvci_core::{Convention, Grid, MeasurementOp, Result};

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

fn test_signal(grid: Grid, seed: u64) -> Signal {
    let values: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let t = (i as f64 + seed as f64 * 0.7).sin();
            Complex64::new(t, (1.3 * t).cos())
        })
        .collect();
    Signal::new(values, grid).unwrap()
}

fn ensure(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(tvci_core::TvciError::Invalid(msg.to_string()))
    }
}

fn check_transforms() -> Result<()> {
    for (n, d) in [(16usize, 1usize), (8, 2), (4, 3)] {
        let grid = Grid::new(n, d)?;
        let x = test_signal(grid, 1);
        for kind in [TransformKind::Dft, TransformKind::Wht, TransformKind::Haar] {
            let dense = dense_oracle(kind, &grid)?;
            let slow = dense_apply(&dense, &x.values);
            let fast = match kind {
                TransformKind::Dft => dft_forward(&x).values,
                TransformKind::Wht => wht_forward(&x).values,
                TransformKind::Haar => haar_forward(&x).values,
            };
            ensure(
                rel_err(&fast, &slow) < 1e-10,
                &format!("{kind:?} fast/dense mismatch at N={n}, d={d}"),
            )?;
        }
    }
    Ok(())
}

fn check_gradient_adjoint() -> Result<()> {
    let grid = Grid::new(8, 2)?;
    let x = test_signal(grid, 2);
    let v = GradField {
        components: (0..2).map(|k| test_signal(grid, 3 + k).values).collect(),
        grid,
    };
    let gx = grad(&x);
    let mtv = grad_adjoint(&v);
    let lhs: Complex64 = gx
        .components
        .iter()
        .zip(&v.components)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()))
        .sum();
    let rhs: Complex64 = x
        .values
        .iter()
        .zip(&mtv.values)
        .map(|(a, b)| a * b.conj())
        .sum();
    ensure((lhs - rhs).norm() < 1e-8, "gradient adjoint identity failed")
}

fn check_operator_isometry() -> Result<()> {
    for conv in [Convention::Fourier, Convention::Walsh] {
        let grid = Grid::new(16, 2)?;
        let pat = sample_uniform(&grid, conv, 60, 5, true)?;
        let op = MeasurementOp::new(&pat)?;
        let c = op.ortho_constant();
        // A A* = c I on a handful of basis vectors
        for k in [0usize, 3, op.m_effective() - 1] {
            let mut e = vec![Complex64::new(0.0, 0.0); op.m_effective()];
            e[k] = Complex64::new(1.0, 0.0);
            let back = op.apply(&op.apply_adjoint(&e)?)?;
            let mut expect = vec![Complex64::new(0.0, 0.0); op.m_effective()];
            expect[k] = Complex64::new(c, 0.0);
            ensure(
                rel_err(&back, &expect) < 1e-10,
                &format!("A A* deviates from c I ({conv:?})"),
            )?;
        }
    }
    Ok(())
}

fn check_density_and_gamma() -> Result<()> {
    let grid = Grid::new(64, 2)?;
    for (kind, conv) in [
        (DensityKind::OptimalFourier, Convention::Fourier),
        (DensityKind::InverseSquare, Convention::Fourier),
        (DensityKind::HyperbolicCross, Convention::Fourier),
        (
            DensityKind::OptimalWalsh {
                norm: NormKind::LInf,
            },
            Convention::Walsh,
        ),
    ] {
        let p = build_density(kind, &grid, conv)?;
        let total: f64 = p.masses()?.iter().sum();
        ensure((total - 1.0).abs() < 1e-10, "density mass not 1")?;
        ensure(gamma_constant(&p)? > 0.0, "gamma not positive")?;
    }
    // uniform density: gamma = N^d exactly (fourier)
    let u = build_density(DensityKind::Uniform, &Grid::new(8, 2)?, Convention::Fourier)?;
    ensure(
        (gamma_constant(&u)? - 64.0).abs() < 1e-9,
        "uniform gamma != N^d",
    )
}

fn check_incoherence_bound() -> Result<()> {
    let grid = Grid::new(16, 1)?;
    let p = build_density(
        DensityKind::OptimalWalsh {
            norm: NormKind::LInf,
        },
        &grid,
        Convention::Walsh,
    )?;
    let exact = incoherence_theta(&p, HaarBasisKind::WalshHaar, ThetaMode::Exact)?;
    let bound = incoherence_theta(&p, HaarBasisKind::WalshHaar, ThetaMode::Bound)?;
    ensure(exact <= bound + 1e-12, "exact theta exceeds its bound")
}

fn check_pattern_io() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let grid = Grid::new(32, 1)?;
    let p = build_density(DensityKind::OptimalFourier, &grid, Convention::Fourier)?;
    let pat = sample_vds(&p, 20, 77)?;
    let path = dir.path().join("pat.csv");
    write_pattern(&path, &pat)?;
    let back = read_pattern(&path)?;
    ensure(
        back.draws == pat.draws && back.m == pat.m && back.scheme == pat.scheme,
        "pattern round trip changed data",
    )?;
    // raw image round trip
    let img = shepp_logan(16, 2)?.image;
    let ipath = dir.path().join("img.raw");
    write_raw(&ipath, &img)?;
    let back = read_raw(&ipath)?;
    ensure(
        rel_err(&back.values, &img.values) == 0.0,
        "raw image round trip not bit-exact",
    )
}

fn check_solver_recovery() -> Result<()> {
    // full sampling: projection alone recovers exactly
    let grid = Grid::new(8, 2)?;
    let pat = tvci_core::Pattern {
        grid,
        convention: Convention::Fourier,
        draws: (1..=grid.len()).map(|i| (i, 1)).collect(),
        m: grid.len(),
        scheme: "full".into(),
        seed: 0,
    };
    let op = MeasurementOp::new(&pat)?;
    let x = test_signal(grid, 9);
    let y = op.apply(&x)?;
    let cfg = SolverConfig {
        outer_iters: 1,
        inner_iters: 30,
        ..Default::default()
    };
    let res = solve_tv(&op, &y, &cfg)?;
    ensure(
        rel_err(&res.x_hat.values, &x.values) < 1e-6,
        "full-sampling recovery failed",
    )?;
    // undersampled gradient-sparse 1D recovery
    let ph = piecewise_constant_1d(128, 4, 21)?;
    let mut xs = ph.image.clone();
    for v in xs.values.iter_mut() {
        *v *= 100.0;
    }
    let g1 = Grid::new(128, 1)?;
    let d = build_density(DensityKind::OptimalFourier, &g1, Convention::Fourier)?;
    let pat = sample_vds(&d, 70, 5)?;
    let op = MeasurementOp::new(&pat)?;
    let y = op.apply(&xs)?;
    let res = solve_tv(&op, &y, &SolverConfig::default())?;
    ensure(
        rel_err(&res.x_hat.values, &xs.values) < 1e-2,
        "sparse 1D recovery above 1e-2",
    )
}

fn check_experiment_determinism() -> Result<()> {
    let spec = ExperimentSpec {
        image: "blocks-16-2d-s8".into(),
        convention: Convention::Fourier,
        schemes: vec![Scheme::Uniform],
        percentages: vec![50.0],
        trials: 2,
        base_seed: 4,
        solver: SolverConfig {
            inner_iters: 120,
            ..Default::default()
        },
        noise_snr_db: None,
        frames_dir: None,
    };
    let a = rows_to_csv(&run_experiment(&spec)?);
    let b = rows_to_csv(&run_experiment(&spec)?);
    ensure(a == b, "experiment CSV not byte-identical across runs")
}

/// Run every check; returns the number of failures.
pub fn run_verification() -> usize {
    let checks: Vec<(&str, fn() -> Result<()>)> = vec![
        ("transforms match dense oracles", check_transforms),
        ("gradient adjoint identity", check_gradient_adjoint),
        ("measurement operator isometry", check_operator_isometry),
        ("density normalization and gamma", check_density_and_gamma),
        ("incoherence exact vs bound", check_incoherence_bound),
        ("pattern and image file round trips", check_pattern_io),
        ("solver recovery", check_solver_recovery),
        ("experiment determinism", check_experiment_determinism),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("{name}: PASS"),
            Err(e) => {
                failures += 1;
                println!("{name}: FAIL ({e})");
            }
        }
    }
    failures
}
