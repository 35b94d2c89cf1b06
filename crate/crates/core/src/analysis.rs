//! Error metrics and perturbation probes: best s-term approximation errors,
//! PSNR, relative image/gradient errors, and the stability (image-domain) /
//! robustness (measurement-domain) experiments.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, TvciError};
use crate::gradient::{grad, TvMode};
use crate::solver::{solve_tv, SolverConfig};
use crate::operators::MeasurementOp;
use crate::transforms::Signal;

/// PSNR is capped here so that exact reconstructions stay finite.
pub const PSNR_CAP_DB: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SparsityNorm {
    /// Plain entrywise magnitudes.
    L1,
    /// Group magnitudes: each group is the d-vector of gradient components
    /// at one pixel.
    L21,
}

#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub rel_l2_image: f64,
    pub rel_l2_gradient: f64,
    pub psnr_db: f64,
    pub sigma_s_image: f64,
    pub sigma_s_gradient: f64,
    pub snr_of_perturbation: f64,
}

/// Best s-term approximation error of entrywise magnitudes: the norm of all
/// but the s largest.
pub fn best_s_term(v: &[Complex64], s: usize, norm: SparsityNorm) -> Result<f64> {
    let mags: Vec<f64> = v.iter().map(|x| x.norm()).collect();
    best_s_term_mags(mags, s, norm)
}

/// Best s-term error over groups: `groups[k]` holds the entries of group k;
/// for L21 each group contributes its Euclidean norm.
pub fn best_s_term_grouped(
    groups: &[Vec<Complex64>],
    s: usize,
    norm: SparsityNorm,
) -> Result<f64> {
    let mags: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    best_s_term_mags(mags, s, norm)
}

fn best_s_term_mags(mut mags: Vec<f64>, s: usize, norm: SparsityNorm) -> Result<f64> {
    if s > mags.len() {
        return Err(TvciError::OutOfRange(format!(
            "s = {s} exceeds length {}",
            mags.len()
        )));
    }
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let tail = &mags[s..];
    Ok(match norm {
        SparsityNorm::L1 => tail.iter().sum(),
        SparsityNorm::L21 => tail.iter().sum(),
    })
}

/// Relative l2 error ||rec - ref|| / ||ref||. A zero reference with a
/// nonzero reconstruction reports infinity.
pub fn rel_l2_image(reference: &Signal, rec: &Signal) -> Result<f64> {
    check_grids(reference, rec)?;
    let num: f64 = diff_norm(&reference.values, &rec.values);
    let den = reference.norm();
    Ok(if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    })
}

/// Relative l2 error between the periodic gradients of the two signals,
/// stacking all d components.
pub fn rel_l2_gradient(reference: &Signal, rec: &Signal) -> Result<f64> {
    check_grids(reference, rec)?;
    let gr = grad(reference);
    let gc = grad(rec);
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (a, b) in gr.components.iter().zip(&gc.components) {
        for (x, y) in a.iter().zip(b) {
            num += (x - y).norm_sqr();
            den += x.norm_sqr();
        }
    }
    let (num, den) = (num.sqrt(), den.sqrt());
    Ok(if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    })
}

/// Peak signal-to-noise ratio 20 log10(peak / RMSE) with peak = max |ref|,
/// capped at [`PSNR_CAP_DB`].
pub fn psnr(reference: &Signal, rec: &Signal) -> Result<f64> {
    check_grids(reference, rec)?;
    let peak = reference
        .values
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max);
    let rmse = diff_norm(&reference.values, &rec.values)
        / (reference.values.len() as f64).sqrt();
    if rmse == 0.0 || 20.0 * (peak / rmse).log10() > PSNR_CAP_DB {
        return Ok(PSNR_CAP_DB);
    }
    Ok(20.0 * (peak / rmse).log10())
}

fn check_grids(a: &Signal, b: &Signal) -> Result<()> {
    if a.grid != b.grid {
        return Err(TvciError::Mismatch("signals live on different grids".into()));
    }
    Ok(())
}

fn diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// One point of a perturbation experiment: averages at a fixed SNR level.
#[derive(Clone, Debug)]
pub struct ProbePoint {
    pub snr_db: f64,
    pub mean_rel_l2_image: f64,
    pub mean_rel_l2_gradient: f64,
    pub mean_psnr_db: f64,
}

fn random_unit_direction(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    let mut h: Vec<Complex64> = (0..len)
        .map(|_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let n = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in h.iter_mut() {
        *v /= n;
    }
    h
}

/// Perturbation norm giving `snr_db = 20 log10(||x|| / ||h||)`.
fn perturbation_norm(signal_norm: f64, snr_db: f64) -> f64 {
    if snr_db.is_infinite() {
        0.0
    } else {
        signal_norm / 10f64.powf(snr_db / 20.0)
    }
}

/// Image-domain stability: the image x is perturbed to x + h with
/// ||h|| set by the SNR, clean measurements are taken of the perturbed
/// image, and the solver runs with eta = 0. Averages over `trials`.
pub fn stability_probe(
    x: &Signal,
    op: &MeasurementOp,
    cfg: &SolverConfig,
    snr_grid_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbePoint>> {
    probe_impl(x, op, cfg, snr_grid_db, trials, seed, false)
}

/// Measurement-domain robustness: the measurements y = A x are perturbed to
/// y + h with ||h|| set against ||y||, and the solver runs with
/// eta = ||h||, so the true image is feasible by construction.
pub fn robustness_probe(
    x: &Signal,
    op: &MeasurementOp,
    cfg: &SolverConfig,
    snr_grid_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbePoint>> {
    probe_impl(x, op, cfg, snr_grid_db, trials, seed, true)
}

fn probe_impl(
    x: &Signal,
    op: &MeasurementOp,
    cfg: &SolverConfig,
    snr_grid_db: &[f64],
    trials: usize,
    seed: u64,
    measurement_domain: bool,
) -> Result<Vec<ProbePoint>> {
    if snr_grid_db.is_empty() {
        return Err(TvciError::Invalid("snr grid must be nonempty".into()));
    }
    if trials < 1 {
        return Err(TvciError::Invalid("trials must be >= 1".into()));
    }
    if x.grid != *op.grid() {
        return Err(TvciError::Mismatch("image grid != operator grid".into()));
    }
    let y_clean = op.apply(x)?;
    let mut out = Vec::with_capacity(snr_grid_db.len());
    for (lvl, &snr) in snr_grid_db.iter().enumerate() {
        let results: Vec<(f64, f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<(f64, f64, f64)> {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed ^ ((lvl as u64) << 32) ^ t as u64);
                let rec = if measurement_domain {
                    let ynorm =
                        y_clean.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                    let hnorm = perturbation_norm(ynorm, snr);
                    let dir = random_unit_direction(&mut rng, y_clean.len());
                    let y: Vec<Complex64> = y_clean
                        .iter()
                        .zip(&dir)
                        .map(|(a, b)| a + hnorm * b)
                        .collect();
                    let mut c = cfg.clone();
                    c.eta = hnorm;
                    solve_tv(op, &y, &c)?
                } else {
                    let hnorm = perturbation_norm(x.norm(), snr);
                    let dir = random_unit_direction(&mut rng, x.values.len());
                    let mut xp = x.clone();
                    for (v, d) in xp.values.iter_mut().zip(&dir) {
                        *v += hnorm * d;
                    }
                    let y = op.apply(&xp)?;
                    let mut c = cfg.clone();
                    c.eta = 0.0;
                    solve_tv(op, &y, &c)?
                };
                Ok((
                    rel_l2_image(x, &rec.x_hat)?,
                    rel_l2_gradient(x, &rec.x_hat)?,
                    psnr(x, &rec.x_hat)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = results.len() as f64;
        out.push(ProbePoint {
            snr_db: snr,
            mean_rel_l2_image: results.iter().map(|r| r.0).sum::<f64>() / n,
            mean_rel_l2_gradient: results.iter().map(|r| r.1).sum::<f64>() / n,
            mean_psnr_db: results.iter().map(|r| r.2).sum::<f64>() / n,
        });
    }
    Ok(out)
}

/// Full report for a single reconstruction against a reference.
pub fn error_report(
    reference: &Signal,
    rec: &Signal,
    s: usize,
    tv_mode: TvMode,
    snr_of_perturbation: f64,
) -> Result<ErrorReport> {
    let gf = grad(reference);
    let len = reference.grid.len();
    let groups: Vec<Vec<Complex64>> = (0..len)
        .map(|i| gf.components.iter().map(|c| c[i]).collect())
        .collect();
    let sigma_grad = match tv_mode {
        TvMode::Isotropic => best_s_term_grouped(&groups, s.min(len), SparsityNorm::L21)?,
        TvMode::Anisotropic => {
            let flat: Vec<Complex64> =
                gf.components.iter().flatten().copied().collect();
            best_s_term(&flat, s.min(flat.len()), SparsityNorm::L1)?
        }
    };
    Ok(ErrorReport {
        rel_l2_image: rel_l2_image(reference, rec)?,
        rel_l2_gradient: rel_l2_gradient(reference, rec)?,
        psnr_db: psnr(reference, rec)?,
        sigma_s_image: best_s_term(&reference.values, s.min(len), SparsityNorm::L1)?,
        sigma_s_gradient: sigma_grad,
        snr_of_perturbation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Convention, Grid};
    use crate::patterns::sample_uniform;
    use crate::testutil::random_real_signal;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn brute_force_sigma(v: &[f64], s: usize) -> f64 {
        // minimum over all size-s supports of the dropped-mass l1 norm
        let n = v.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != s {
                continue;
            }
            let dropped: f64 = (0..n)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| v[i].abs())
                .sum();
            best = best.min(dropped);
        }
        best
    }

    #[test]
    fn best_s_term_examples() {
        let v = [c(3.0), c(1.0), c(-2.0)];
        assert_eq!(best_s_term(&v, 1, SparsityNorm::L1).unwrap(), 3.0);
        assert_eq!(best_s_term(&v, 3, SparsityNorm::L1).unwrap(), 0.0);
        assert_eq!(
            best_s_term(&v, 0, SparsityNorm::L1).unwrap(),
            6.0
        );
        // s-sparse vector with s' <= s
        let sp = [c(0.0), c(5.0), c(0.0), c(-1.0)];
        assert_eq!(best_s_term(&sp, 2, SparsityNorm::L1).unwrap(), 0.0);
        assert_eq!(best_s_term(&sp, 3, SparsityNorm::L1).unwrap(), 0.0);
        assert!(best_s_term(&v, 4, SparsityNorm::L1).is_err());
    }

    #[test]
    fn best_s_term_matches_exhaustive_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in [1usize, 4, 8, 12] {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let cv: Vec<Complex64> = v.iter().map(|&x| c(x)).collect();
            for s in 0..=n {
                let fast = best_s_term(&cv, s, SparsityNorm::L1).unwrap();
                let brute = brute_force_sigma(&v, s);
                assert!((fast - brute).abs() < 1e-12, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn grouped_best_s_term() {
        // groups (3,4) -> 5 and (0,1) -> 1
        let groups = vec![vec![c(3.0), c(4.0)], vec![c(0.0), c(1.0)]];
        assert_eq!(
            best_s_term_grouped(&groups, 0, SparsityNorm::L21).unwrap(),
            6.0
        );
        assert_eq!(
            best_s_term_grouped(&groups, 1, SparsityNorm::L21).unwrap(),
            1.0
        );
        assert_eq!(
            best_s_term_grouped(&groups, 2, SparsityNorm::L21).unwrap(),
            0.0
        );
    }

    #[test]
    fn psnr_examples() {
        let g = Grid::new(8, 2).unwrap();
        let x = random_real_signal(g, 3);
        assert_eq!(psnr(&x, &x).unwrap(), PSNR_CAP_DB);

        // constant offset: RMSE = |c|
        let peak = x.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let offset = 0.25;
        let mut rec = x.clone();
        for v in rec.values.iter_mut() {
            *v += c(offset);
        }
        let expect = 20.0 * (peak / offset).log10();
        assert!((psnr(&x, &rec).unwrap() - expect).abs() < 1e-10);

        // doubling the error costs ~6.02 dB
        let mut rec2 = x.clone();
        for v in rec2.values.iter_mut() {
            *v += c(2.0 * offset);
        }
        let drop = psnr(&x, &rec).unwrap() - psnr(&x, &rec2).unwrap();
        assert!((drop - 20.0 * 2.0f64.log10()).abs() < 1e-10);

        let g2 = Grid::new(4, 2).unwrap();
        assert!(psnr(&x, &Signal::zeros(g2)).is_err());
    }

    #[test]
    fn relative_errors() {
        let g = Grid::new(8, 1).unwrap();
        let x = random_real_signal(g, 4);
        assert_eq!(rel_l2_image(&x, &x).unwrap(), 0.0);
        assert_eq!(rel_l2_gradient(&x, &x).unwrap(), 0.0);
        let mut scaled = x.clone();
        for v in scaled.values.iter_mut() {
            *v *= 1.5;
        }
        assert!((rel_l2_image(&x, &scaled).unwrap() - 0.5).abs() < 1e-12);
        assert!((rel_l2_gradient(&x, &scaled).unwrap() - 0.5).abs() < 1e-12);
        // constant reference: zero gradient, shifted rec still zero gradient
        let cst = Signal::from_real(&vec![1.0; 8], g).unwrap();
        let mut cst2 = cst.clone();
        for v in cst2.values.iter_mut() {
            *v += c(3.0);
        }
        assert_eq!(rel_l2_gradient(&cst, &cst2).unwrap(), 0.0);
    }

    #[test]
    fn probes_run_and_are_deterministic() {
        use crate::phantoms::piecewise_constant_1d;
        let g = Grid::new(64, 1).unwrap();
        let ph = piecewise_constant_1d(64, 3, 5).unwrap();
        // work at the [0, 100] scale the default solver settings expect
        let mut ph = ph;
        for v in ph.image.values.iter_mut() {
            *v *= 100.0;
        }
        let pat = sample_uniform(&g, Convention::Fourier, 40, 9, true).unwrap();
        let op = MeasurementOp::new(&pat).unwrap();
        let cfg = SolverConfig {
            inner_iters: 400,
            ..Default::default()
        };
        let grid_db = [f64::INFINITY, 20.0];
        let a = robustness_probe(&ph.image, &op, &cfg, &grid_db, 2, 7).unwrap();
        let b = robustness_probe(&ph.image, &op, &cfg, &grid_db, 2, 7).unwrap();
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_rel_l2_image, y.mean_rel_l2_image);
            assert_eq!(x.mean_psnr_db, y.mean_psnr_db);
        }
        // infinite SNR robustness = noiseless recovery; errors small
        assert!(a[0].mean_rel_l2_image < 1e-2, "{}", a[0].mean_rel_l2_image);
        // noisy level degrades (or matches) the clean one
        assert!(a[1].mean_rel_l2_image >= a[0].mean_rel_l2_image - 1e-9);

        let s = stability_probe(&ph.image, &op, &cfg, &[f64::INFINITY], 1, 3).unwrap();
        assert!(s[0].mean_rel_l2_image < 1e-2);
        assert!(stability_probe(&ph.image, &op, &cfg, &[], 1, 3).is_err());
    }

    #[test]
    fn error_report_fields_finite() {
        let g = Grid::new(8, 2).unwrap();
        let x = random_real_signal(g, 6);
        let rec = random_real_signal(g, 7);
        for mode in [TvMode::Isotropic, TvMode::Anisotropic] {
            let rep = error_report(&x, &rec, 5, mode, 20.0).unwrap();
            for v in [
                rep.rel_l2_image,
                rep.rel_l2_gradient,
                rep.psnr_db,
                rep.sigma_s_image,
                rep.sigma_s_gradient,
            ] {
                assert!(v.is_finite() && v >= 0.0);
            }
        }
    }
}
