//! Experiment orchestration: run seeded reconstruction trials across
//! sampling schemes and sampling percentages, and emit deterministic CSV
//! plus optional image frames.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{psnr, rel_l2_gradient, rel_l2_image};
use crate::densities::{build_density, DensityKind, NormKind};
use crate::error::{Result, TvciError};
use crate::grid::{Convention, Grid};
use crate::io::{write_pgm, write_raw};
use crate::operators::MeasurementOp;
use crate::patterns::{
    sample_half_half, sample_multilevel, sample_uniform, sample_vds, Pattern,
};
use crate::phantoms::{random_blocks, shepp_logan, Phantom};
use crate::solver::{solve_tv, SolverConfig};
use crate::transforms::Signal;

/// A named sampling scheme, parsed from strings like `uniform`,
/// `optimal`, `inverse-square`, `hyperbolic-cross`, `half-half`, or
/// `multilevel:r=4,r0=1,a=2`.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    Uniform,
    Optimal,
    InverseSquare,
    HyperbolicCross,
    HalfHalf,
    Multilevel { r: usize, r0: usize, a: f64 },
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => return Ok(Scheme::Uniform),
            "optimal" => return Ok(Scheme::Optimal),
            "inverse-square" => return Ok(Scheme::InverseSquare),
            "hyperbolic-cross" => return Ok(Scheme::HyperbolicCross),
            "half-half" => return Ok(Scheme::HalfHalf),
            "multilevel" => {
                return Ok(Scheme::Multilevel {
                    r: 4,
                    r0: 1,
                    a: 2.0,
                })
            }
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("multilevel:") {
            let (mut r, mut r0, mut a) = (4usize, 1usize, 2.0f64);
            for kv in rest.split(',') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| TvciError::Parse(format!("bad scheme param '{kv}'")))?;
                match k.trim() {
                    "r" => r = parse_num(v)?,
                    "r0" => r0 = parse_num(v)?,
                    "a" => a = parse_num(v)?,
                    other => {
                        return Err(TvciError::Parse(format!(
                            "unknown multilevel parameter '{other}'"
                        )))
                    }
                }
            }
            return Ok(Scheme::Multilevel { r, r0, a });
        }
        Err(TvciError::Parse(format!("unknown scheme '{s}'")))
    }

    pub fn name(&self) -> String {
        match self {
            Scheme::Uniform => "uniform".into(),
            Scheme::Optimal => "optimal".into(),
            Scheme::InverseSquare => "inverse-square".into(),
            Scheme::HyperbolicCross => "hyperbolic-cross".into(),
            Scheme::HalfHalf => "half-half".into(),
            Scheme::Multilevel { r, r0, a } => format!("multilevel:r={r},r0={r0},a={a}"),
        }
    }

    fn density_kind(&self, convention: Convention) -> Option<DensityKind> {
        match self {
            Scheme::Optimal => Some(match convention {
                Convention::Fourier => DensityKind::OptimalFourier,
                Convention::Walsh => DensityKind::OptimalWalsh {
                    norm: NormKind::LInf,
                },
            }),
            Scheme::InverseSquare => Some(DensityKind::InverseSquare),
            Scheme::HyperbolicCross => Some(DensityKind::HyperbolicCross),
            _ => None,
        }
    }

    /// Build the pattern for one trial. `m` is the number of distinct
    /// frequencies to cover: the i.i.d. schemes keep drawing (with
    /// replacement, recording multiplicities) until `m` distinct rows are
    /// hit, so a sampling percentage means the fraction of the frequency
    /// grid that is measured regardless of the scheme's duplicate rate.
    pub fn sample(
        &self,
        grid: &Grid,
        convention: Convention,
        m: usize,
        seed: u64,
    ) -> Result<Pattern> {
        match self {
            Scheme::Uniform => {
                // plain i.i.d. uniform draws; the zero frequency is not
                // forced, so the mean of the image is only constrained in
                // trials that happen to hit it
                sample_to_coverage(m, grid, |draws| {
                    sample_uniform(grid, convention, draws, seed, false)
                })
            }
            Scheme::HalfHalf => sample_half_half(grid, convention, m, seed),
            Scheme::Multilevel { r, r0, a } => {
                sample_multilevel(grid, convention, m, *r, *r0, *a, seed)
            }
            _ => {
                let kind = self.density_kind(convention).expect("density scheme");
                let p = build_density(kind, grid, convention)?;
                sample_to_coverage(m, grid, |draws| sample_vds(&p, draws, seed))
            }
        }
    }
}

/// Grow the i.i.d. draw count until the pattern covers `target` distinct
/// rows.
pub fn sample_to_coverage<F: Fn(usize) -> Result<Pattern>>(
    target: usize,
    grid: &Grid,
    sampler: F,
) -> Result<Pattern> {
    if target > grid.len() {
        return Err(TvciError::OutOfRange(format!(
            "coverage target {target} exceeds grid size {}",
            grid.len()
        )));
    }
    let mut draws = target;
    loop {
        let pat = sampler(draws)?;
        if pat.distinct() >= target {
            return Ok(pat);
        }
        if draws > grid.len().saturating_mul(64) {
            return Err(TvciError::Infeasible(format!(
                "cannot reach {target} distinct rows by i.i.d. sampling"
            )));
        }
        draws = (draws as f64 * 1.1).ceil() as usize;
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| TvciError::Parse(format!("cannot parse number '{s}'")))
}

/// Image sources understood by the experiment runner: `shepp-logan-<N>`
/// (2D), `shepp-logan-<N>-3d`, `blocks-<N>-<d>d-s<s>`, or a path to a raw
/// image file.
pub fn load_image(source: &str, seed: u64) -> Result<Phantom> {
    if let Some(rest) = source.strip_prefix("shepp-logan-") {
        if let Some(n) = rest.strip_suffix("-3d") {
            return shepp_logan(parse_num(n)?, 3);
        }
        return shepp_logan(parse_num(rest)?, 2);
    }
    if let Some(rest) = source.strip_prefix("blocks-") {
        let parts: Vec<&str> = rest.split('-').collect();
        if parts.len() == 3 {
            let n: usize = parse_num(parts[0])?;
            let d: usize = parse_num(
                parts[1]
                    .strip_suffix('d')
                    .ok_or_else(|| TvciError::Parse(format!("bad image '{source}'")))?,
            )?;
            let s: usize = parse_num(
                parts[2]
                    .strip_prefix('s')
                    .ok_or_else(|| TvciError::Parse(format!("bad image '{source}'")))?,
            )?;
            return random_blocks(n, d, s, seed);
        }
        return Err(TvciError::Parse(format!("bad image spec '{source}'")));
    }
    let img = crate::io::read_raw(Path::new(source))?;
    Ok(Phantom {
        image: img,
        sparsity: None,
        descriptor: source.to_string(),
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub image: String,
    pub convention: Convention,
    pub schemes: Vec<Scheme>,
    /// Sampling percentages in (0, 100].
    pub percentages: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub solver: SolverConfig,
    /// Measurement-noise SNR in dB; None means noiseless.
    pub noise_snr_db: Option<f64>,
    /// Directory for reconstructed frames; None skips frame output.
    pub frames_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.percentages.is_empty() {
            return Err(TvciError::Invalid(
                "need at least one scheme and one percentage".into(),
            ));
        }
        if self.trials < 1 {
            return Err(TvciError::Invalid("trials must be >= 1".into()));
        }
        for &p in &self.percentages {
            if !(p > 0.0 && p <= 100.0) {
                return Err(TvciError::OutOfRange(format!(
                    "percentage {p} outside (0, 100]"
                )));
            }
        }
        self.solver.validate()
    }
}

#[derive(Clone, Debug)]
pub struct TrialRow {
    pub scheme: String,
    pub pct: f64,
    pub trial: usize,
    pub m: usize,
    pub rel_l2_image: f64,
    pub rel_l2_gradient: f64,
    pub psnr_db: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Rescale a phantom to peak value 100 (the working range for
/// reconstruction experiments). No-op for an all-zero image.
pub fn rescale_to_100(x: &Signal) -> Signal {
    let peak = x.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let mut out = x.clone();
    if peak > 0.0 {
        for v in out.values.iter_mut() {
            *v *= 100.0 / peak;
        }
    }
    out
}

fn noisy_measurements(
    y: &[Complex64],
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<Complex64>, f64) {
    let ynorm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let hnorm = ynorm / 10f64.powf(snr_db / 20.0);
    let mut h: Vec<Complex64> = (0..y.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in h.iter_mut() {
        *v *= hnorm / n;
    }
    (y.iter().zip(&h).map(|(a, b)| a + b).collect(), hnorm)
}

/// Run all (scheme, pct, trial) combinations. Rows come back sorted by
/// scheme name, then percentage, then trial, independent of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRow>> {
    spec.validate()?;
    let phantom = load_image(&spec.image, spec.base_seed)?;
    let x = rescale_to_100(&phantom.image);
    let grid = x.grid;

    let mut jobs: Vec<(Scheme, f64, usize)> = Vec::new();
    for scheme in &spec.schemes {
        for &pct in &spec.percentages {
            for t in 0..spec.trials {
                jobs.push((scheme.clone(), pct, t));
            }
        }
    }

    let mut rows: Vec<TrialRow> = jobs
        .into_par_iter()
        .map(|(scheme, pct, trial)| -> Result<TrialRow> {
            let m = ((pct / 100.0) * grid.len() as f64).round().max(1.0) as usize;
            let m = m.min(grid.len());
            let seed = spec.base_seed.wrapping_add(trial as u64);
            let pat = scheme.sample(&grid, spec.convention, m, seed)?;
            let op = MeasurementOp::new(&pat)?;
            let y = op.apply(&x)?;
            let mut cfg = spec.solver.clone();
            let y = match spec.noise_snr_db {
                Some(snr) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f6973);
                    let (yn, hnorm) = noisy_measurements(&y, snr, &mut rng);
                    cfg.eta = hnorm;
                    yn
                }
                None => y,
            };
            let res = solve_tv(&op, &y, &cfg)?;
            if let Some(dir) = &spec.frames_dir {
                let base = format!(
                    "{}-{}-pct{}-t{}",
                    phantom.descriptor,
                    scheme.name().replace([':', ',', '='], "_"),
                    pct,
                    trial
                );
                write_raw(&dir.join(format!("{base}.raw")), &res.x_hat)?;
                if grid.d() >= 2 {
                    write_pgm(&dir.join(format!("{base}.pgm")), &res.x_hat, 16)?;
                }
            }
            Ok(TrialRow {
                scheme: scheme.name(),
                pct,
                trial,
                m,
                rel_l2_image: rel_l2_image(&x, &res.x_hat)?,
                rel_l2_gradient: rel_l2_gradient(&x, &res.x_hat)?,
                psnr_db: psnr(&x, &res.x_hat)?,
                residual: res.residual,
                iterations: res.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    rows.sort_by(|a, b| {
        a.scheme
            .cmp(&b.scheme)
            .then(a.pct.partial_cmp(&b.pct).unwrap())
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

/// Render rows as CSV with fixed formatting, so identical runs are
/// byte-identical.
pub fn rows_to_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from(
        "scheme,pct,trial,m,rel_l2_image,rel_l2_gradient,psnr_db,residual,iterations\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.12e},{:.12e},{:.6},{:.12e},{}",
            r.scheme, r.pct, r.trial, r.m, r.rel_l2_image, r.rel_l2_gradient, r.psnr_db,
            r.residual, r.iterations
        )
        .expect("string write");
    }
    out
}
