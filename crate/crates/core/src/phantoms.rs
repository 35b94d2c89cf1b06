//! Synthetic test images with known gradient sparsity: the classical
//! Shepp–Logan phantom in 2D and 3D, plus seeded piecewise-constant
//! generators whose periodic gradient has an exact, known support size.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TvciError};
use crate::gradient::grad;
use crate::grid::Grid;
use crate::transforms::Signal;

#[derive(Clone, Debug)]
pub struct Phantom {
    pub image: Signal,
    /// Exact number of nonzero periodic-gradient entries, when known by
    /// construction.
    pub sparsity: Option<usize>,
    pub descriptor: String,
}

/// (intensity, a, b, c, x0, y0, z0, phi_degrees). In 2D the c and z0
/// columns are ignored. Ten-ellipse Shepp–Logan head phantom with the
/// commonly used "modified" intensities (higher contrast than the original
/// 1974 attenuation values); the 3D semi-axes and centers follow the
/// standard ten-ellipsoid extension found in tomography toolboxes.
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.81, 0.0, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.78, 0.0, -0.0184, 0.0, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.22, 0.0, 0.0, -18.0),
    (-0.2, 0.16, 0.41, 0.28, -0.22, 0.0, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.41, 0.0, 0.35, -0.15, 0.0),
    (0.1, 0.046, 0.046, 0.05, 0.0, 0.1, 0.25, 0.0),
    (0.1, 0.046, 0.046, 0.05, 0.0, -0.1, 0.25, 0.0),
    (0.1, 0.046, 0.023, 0.05, -0.08, -0.605, 0.0, 0.0),
    (0.1, 0.023, 0.023, 0.02, 0.0, -0.606, 0.0, 0.0),
    (0.1, 0.023, 0.046, 0.02, 0.06, -0.605, 0.0, 0.0),
];

/// Cell-centered sample points: t_i = (2i + 1 - N) / N for i = 0..N-1,
/// symmetric about 0.
fn sample_points(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (2.0 * i as f64 + 1.0 - n as f64) / n as f64)
        .collect()
}

fn ellipse_sum(params: &[(f64, f64, f64, f64, f64, f64, f64, f64)], x: f64, y: f64, z: Option<f64>) -> f64 {
    let mut v = 0.0;
    for &(int, a, b, c, x0, y0, z0, phi_deg) in params {
        let phi = phi_deg.to_radians();
        let (dx, dy) = (x - x0, y - y0);
        // rotate into the ellipse frame (rotation about the z axis)
        let xr = dx * phi.cos() + dy * phi.sin();
        let yr = -dx * phi.sin() + dy * phi.cos();
        let mut q = (xr / a).powi(2) + (yr / b).powi(2);
        if let Some(z) = z {
            q += ((z - z0) / c).powi(2);
        }
        if q <= 1.0 {
            v += int;
        }
    }
    // intensities that cancel exactly leave float dust behind; snap it
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

fn build_from_ellipses(
    params: &[(f64, f64, f64, f64, f64, f64, f64, f64)],
    n: usize,
    d: usize,
) -> Result<Signal> {
    let grid = Grid::new(n, d)?;
    let t = sample_points(n);
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (flat0, v) in values.iter_mut().enumerate() {
        // lexicographic: last coordinate varies fastest
        let mut rem = flat0;
        let mut idx = vec![0usize; d];
        for k in (0..d).rev() {
            idx[k] = rem % n;
            rem /= n;
        }
        // coordinate 1 -> x, 2 -> y, 3 -> z
        let x = t[idx[0]];
        let y = if d >= 2 { t[idx[1]] } else { 0.0 };
        let z = if d == 3 { Some(t[idx[2]]) } else { None };
        *v = Complex64::new(ellipse_sum(params, x, y, z), 0.0);
    }
    Signal::new(values, grid)
}

/// Shepp–Logan head phantom on an N^d grid, d in {2, 3}.
pub fn shepp_logan(n: usize, d: usize) -> Result<Phantom> {
    if d != 2 && d != 3 {
        return Err(TvciError::Invalid(format!(
            "shepp_logan supports d = 2 or 3, got {d}"
        )));
    }
    let image = build_from_ellipses(&SHEPP_LOGAN, n, d)?;
    Ok(Phantom {
        image,
        sparsity: None,
        descriptor: format!("shepp-logan-{n}x{d}d"),
    })
}

fn count_gradient_nonzeros(x: &Signal) -> usize {
    let gf = grad(x);
    gf.components
        .iter()
        .flatten()
        .filter(|v| v.norm() > 1e-12)
        .count()
}

/// 1D piecewise-constant signal whose periodic gradient has exactly s
/// nonzero entries. On a circle the jumps telescope to zero, so s = 1 is
/// infeasible; s = 0 gives a constant.
pub fn piecewise_constant_1d(n: usize, s: usize, seed: u64) -> Result<Phantom> {
    let grid = Grid::new(n, 1)?;
    if s == 1 {
        return Err(TvciError::Infeasible(
            "a periodic 1D signal cannot have exactly one jump".into(),
        ));
    }
    if s >= n {
        return Err(TvciError::OutOfRange(format!("s = {s} must be < N = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.5f64; n];
    if s > 0 {
        // choose s distinct cut positions; blocks get levels with distinct
        // neighbors (cyclically), redrawn on the rare collision
        let cuts = rand::seq::index::sample(&mut rng, n, s).into_vec();
        let mut cuts = cuts;
        cuts.sort_unstable();
        loop {
            let levels: Vec<f64> = (0..s).map(|_| rng.gen_range(0.0..1.0)).collect();
            let ok = (0..s).all(|k| (levels[k] - levels[(k + 1) % s]).abs() > 1e-6);
            if ok {
                // block k covers [cuts[k], cuts[k+1]) cyclically; the jump
                // at index i means x_{i+1} != x_i, so start blocks at cut+1
                for k in 0..s {
                    let start = (cuts[k] + 1) % n;
                    let end = (cuts[(k + 1) % s] + 1) % n;
                    let mut i = start;
                    while i != end {
                        values[i] = levels[k];
                        i = (i + 1) % n;
                    }
                }
                break;
            }
        }
    }
    let image = Signal::from_real(&values, grid)?;
    debug_assert_eq!(count_gradient_nonzeros(&image), s);
    Ok(Phantom {
        image,
        sparsity: Some(s),
        descriptor: format!("pwc1d-N{n}-s{s}-seed{seed}"),
    })
}

/// Axis-aligned box [start_k, start_k + ext_k) per axis, value `h`.
fn paint_box(values: &mut [f64], n: usize, d: usize, start: &[usize], ext: &[usize], h: f64) {
    let total: usize = ext.iter().product();
    for t in 0..total {
        let mut rem = t;
        let mut flat = 0usize;
        for k in 0..d {
            let off = rem % ext[d - 1 - k];
            rem /= ext[d - 1 - k];
            let coord = start[d - 1 - k] + off;
            flat += coord * n.pow(k as u32);
        }
        values[flat] = h;
    }
}

/// d-dimensional piecewise-constant phantom built from disjoint boxes so
/// that the periodic gradient has exactly s nonzero entries. An a-by-b box
/// in 2D contributes 2(a+b); a 1-by-1-by-c box in 3D contributes 2 + 4c.
/// Sparsities outside the reachable set give an Infeasible error:
/// 2D needs s even with 4 <= s <= 4(N-1); 3D needs s in {0, 6} or even
/// s >= 10 (within capacity).
pub fn random_blocks(n: usize, d: usize, s: usize, seed: u64) -> Result<Phantom> {
    if d == 1 {
        return piecewise_constant_1d(n, s, seed);
    }
    if d != 2 && d != 3 {
        return Err(TvciError::Invalid(format!("d must be 1, 2 or 3, got {d}")));
    }
    let grid = Grid::new(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0f64; grid.len()];
    if s > 0 {
        // decompose s into box contributions
        let boxes: Vec<Vec<usize>> = if d == 2 {
            if s % 2 != 0 || s < 4 {
                return Err(TvciError::Infeasible(format!(
                    "2D gradient sparsity {s} is not reachable (need even s >= 4)"
                )));
            }
            let b = s / 2 - 1; // 1-by-b box: 2(1 + b) = s
            if b > n - 1 {
                return Err(TvciError::Infeasible(format!(
                    "sparsity {s} needs a box of extent {b} > N-1 = {}",
                    n - 1
                )));
            }
            vec![vec![1, b]]
        } else {
            // 3D: k unit boxes (6 each) plus at most one 1x1xc box (2+4c)
            let mut found = None;
            for k in 0..=s / 6 {
                let r = s - 6 * k;
                if r == 0 {
                    found = Some((k, 0));
                    break;
                }
                if r >= 6 && (r - 2) % 4 == 0 {
                    found = Some((k, (r - 2) / 4));
                    break;
                }
            }
            let (k, c) = found.ok_or_else(|| {
                TvciError::Infeasible(format!(
                    "3D gradient sparsity {s} is not reachable"
                ))
            })?;
            let mut b: Vec<Vec<usize>> = (0..k).map(|_| vec![1, 1, 1]).collect();
            if c > 0 {
                if c > n - 1 {
                    return Err(TvciError::Infeasible(format!(
                        "sparsity {s} needs a box of extent {c} > N-1 = {}",
                        n - 1
                    )));
                }
                b.push(vec![1, 1, c]);
            }
            b
        };
        // lay boxes along axis 1 with a one-layer gap so no jumps merge
        let needed: usize = boxes.len() * 2;
        if needed > n {
            return Err(TvciError::Infeasible(format!(
                "sparsity {s} needs {} boxes but N = {n} has no room",
                boxes.len()
            )));
        }
        for (bi, ext) in boxes.iter().enumerate() {
            let mut start = vec![0usize; d];
            start[0] = 2 * bi;
            let h = rng.gen_range(0.2..1.0);
            paint_box(&mut values, n, d, &start, ext, h);
        }
    }
    let image = Signal::from_real(&values, grid)?;
    let measured = count_gradient_nonzeros(&image);
    if measured != s {
        return Err(TvciError::Invalid(format!(
            "constructed sparsity {measured} != requested {s}"
        )));
    }
    Ok(Phantom {
        image,
        sparsity: Some(s),
        descriptor: format!("blocks-N{n}-{d}d-s{s}-seed{seed}"),
    })
}
