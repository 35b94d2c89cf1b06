//! Subsampled measurement operators A = (1/sqrt(m)) P F and
//! A = (1/sqrt(m)) P H, the 1D transform-domain Haar entries they are built
//! from, and the incoherence diagnostic Θ.
//!
//! An operator consumes the deduplicated view of its pattern but keeps the
//! 1/sqrt(m) scale with the nominal draw count m: duplicated rows add no
//! information, and distinct rows restore the exact row-orthogonality
//! A A* = (N^d/m) I that the solver's closed-form projection relies on.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::densities::Density;
use crate::error::{Result, TvciError};
use crate::grid::{Convention, Grid};
use crate::patterns::Pattern;
use crate::transforms::{
    dft_adjoint, dft_forward, haar_inverse, walsh_sign, wht_forward,
    HaarCoeffs, Signal,
};

#[derive(Clone, Debug)]
pub struct MeasurementOp {
    grid: Grid,
    kind: Convention,
    /// Distinct 1-based frequency-row indices, sorted.
    rows: Vec<usize>,
    /// 1/sqrt(m) with m the nominal draw count.
    scale: f64,
    m_nominal: usize,
}

impl MeasurementOp {
    pub fn new(pattern: &Pattern) -> Result<Self> {
        if pattern.m == 0 {
            return Err(TvciError::Invalid("empty pattern".into()));
        }
        Ok(MeasurementOp {
            grid: pattern.grid,
            kind: pattern.convention,
            rows: pattern.rows(),
            scale: 1.0 / (pattern.m as f64).sqrt(),
            m_nominal: pattern.m,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> Convention {
        self.kind
    }

    /// Number of measurement rows (distinct frequencies).
    pub fn m_effective(&self) -> usize {
        self.rows.len()
    }

    pub fn m_nominal(&self) -> usize {
        self.m_nominal
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// The constant c with A A* = c I.
    pub fn ortho_constant(&self) -> f64 {
        self.grid.len() as f64 * self.scale * self.scale
    }

    fn transform(&self, x: &Signal) -> Signal {
        match self.kind {
            Convention::Fourier => dft_forward(x),
            Convention::Walsh => wht_forward(x),
        }
    }

    fn transform_adjoint(&self, x: &Signal) -> Signal {
        match self.kind {
            Convention::Fourier => dft_adjoint(x),
            Convention::Walsh => wht_forward(x), // H is symmetric and real
        }
    }

    /// A x: fast transform then gather the pattern rows.
    pub fn apply(&self, x: &Signal) -> Result<Vec<Complex64>> {
        if x.grid != self.grid {
            return Err(TvciError::Mismatch("signal grid != operator grid".into()));
        }
        let t = self.transform(x);
        Ok(self
            .rows
            .iter()
            .map(|&i| t.values[i - 1] * self.scale)
            .collect())
    }

    /// A* y: scatter onto the pattern rows then adjoint transform.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Signal> {
        if y.len() != self.rows.len() {
            return Err(TvciError::Mismatch(format!(
                "measurement length {} != m_effective {}",
                y.len(),
                self.rows.len()
            )));
        }
        let mut full = Signal::zeros(self.grid);
        for (&i, &v) in self.rows.iter().zip(y) {
            full.values[i - 1] = v * self.scale;
        }
        Ok(self.transform_adjoint(&full))
    }
}

fn check_1d_wavelet_args(grid: &Grid, j: u32, n: usize, e: usize) -> Result<()> {
    if grid.d() != 1 {
        return Err(TvciError::Mismatch("1D grid required".into()));
    }
    if j >= grid.r() {
        return Err(TvciError::OutOfRange(format!("scale {j} for r={}", grid.r())));
    }
    if n >= 1 << j {
        return Err(TvciError::OutOfRange(format!("translation {n} at scale {j}")));
    }
    if e > 1 {
        return Err(TvciError::OutOfRange(format!("detail label {e}")));
    }
    Ok(())
}

/// Closed-form (unnormalized) DFT of the 1D discrete Haar vector
/// φ^(e)_{j,n} at frequency ω — the entry the fast transform would produce
/// at row ρ^{-1}(ω).
pub fn fourier_haar_entry(
    grid: &Grid,
    omega: i64,
    j: u32,
    n: usize,
    e: usize,
) -> Result<Complex64> {
    check_1d_wavelet_args(grid, j, n, e)?;
    let half = grid.n() as i64 / 2;
    if omega <= -half || omega > half {
        return Err(TvciError::OutOfRange(format!("frequency {omega}")));
    }
    let r = grid.r();
    if omega == 0 {
        return Ok(if e == 0 {
            Complex64::new(2f64.powf((r - j) as f64 / 2.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        });
    }
    let w = omega as f64;
    let tau = -2.0 * std::f64::consts::PI * w;
    let phase = |denom: f64| Complex64::from_polar(1.0, tau / denom);
    let z_half = phase(2f64.powi(j as i32 + 1)); // exp(-2 pi i w / 2^{j+1})
    let sign = if e == 0 { 1.0 } else { -1.0 };
    let val = 2f64.powf((j as f64 - r as f64) / 2.0)
        * Complex64::from_polar(1.0, tau * n as f64 / 2f64.powi(j as i32))
        * (Complex64::new(1.0, 0.0) + sign * z_half)
        * (Complex64::new(1.0, 0.0) - z_half)
        / (Complex64::new(1.0, 0.0) - phase(2f64.powi(r as i32)));
    Ok(val)
}

/// The continuous inner product between the 1D Walsh function v_i and the
/// Haar wavelet ψ^(e)_{j,n}; exact up to f64 (a dyadic rational times
/// 2^{-j/2}). Nonzero only for i < 2^j (e = 0) or 2^j <= i < 2^{j+1}
/// (e = 1).
pub fn walsh_haar_entry(i: usize, j: u32, n: usize, e: usize) -> Result<f64> {
    if n >= 1 << j {
        return Err(TvciError::OutOfRange(format!("translation {n} at scale {j}")));
    }
    if e > 1 {
        return Err(TvciError::OutOfRange(format!("detail label {e}")));
    }
    // both factors are piecewise constant on dyadic intervals of length
    // 1/M, so the integral is an exact finite sum
    let bits_i = if i == 0 { 0 } else { i.ilog2() + 1 };
    let rm = (j + 1).max(bits_i);
    let m = 1usize << rm;
    let seg = 1usize << (rm - j); // samples per wavelet support (>= 2)
    let amp = 2f64.powf(j as f64 / 2.0);
    let mut acc = 0.0f64;
    for t in n * seg..(n + 1) * seg {
        let first_half = (t - n * seg) < seg / 2;
        let s = if e == 0 || first_half { 1.0 } else { -1.0 };
        acc += walsh_sign(i, t, rm) * amp * s;
    }
    Ok(acc / m as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaarBasisKind {
    FourierHaar,
    WalshHaar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaMode {
    /// True maximum over the density-weighted unitary (N^d <= 2^20).
    Exact,
    /// Closed-form upper estimate from the per-axis decay bounds.
    Bound,
}

/// Largest grid for the exact Θ scan.
pub const THETA_EXACT_CAP: usize = 1 << 20;

/// Incoherence Θ = max |u_ij| / sqrt(p_i) over the unitary
/// U = N^{-d/2} (transform ∘ W).
pub fn incoherence_theta(p: &Density, basis: HaarBasisKind, mode: ThetaMode) -> Result<f64> {
    let grid = *p.grid();
    let expected = match basis {
        HaarBasisKind::FourierHaar => Convention::Fourier,
        HaarBasisKind::WalshHaar => Convention::Walsh,
    };
    if p.convention() != expected {
        return Err(TvciError::Mismatch(
            "density convention does not match the basis".into(),
        ));
    }
    let masses = p.masses()?;
    if masses.iter().any(|&v| v <= 0.0) {
        return Err(TvciError::Invalid(
            "Θ requires a strictly positive density".into(),
        ));
    }
    match mode {
        ThetaMode::Exact => theta_exact(&grid, basis, &masses),
        ThetaMode::Bound => Ok(theta_bound(&grid, basis, &masses)),
    }
}

fn theta_exact(grid: &Grid, basis: HaarBasisKind, masses: &[f64]) -> Result<f64> {
    let len = grid.len();
    if len > THETA_EXACT_CAP {
        return Err(TvciError::SizeGuard(format!(
            "exact Θ scan limited to N^d <= {THETA_EXACT_CAP}, got {len}"
        )));
    }
    let inv_sqrt_len = 1.0 / (len as f64).sqrt();
    let theta = (0..len)
        .into_par_iter()
        .map(|slot| {
            let mut coeffs = HaarCoeffs {
                values: vec![Complex64::new(0.0, 0.0); len],
                grid: *grid,
            };
            coeffs.values[slot] = Complex64::new(1.0, 0.0);
            let col = haar_inverse(&coeffs);
            let t = match basis {
                HaarBasisKind::FourierHaar => dft_forward(&col),
                HaarBasisKind::WalshHaar => wht_forward(&col),
            };
            t.values
                .iter()
                .zip(masses)
                .map(|(u, &p)| u.norm() * inv_sqrt_len / p.sqrt())
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(theta)
}

fn theta_bound(grid: &Grid, basis: HaarBasisKind, masses: &[f64]) -> f64 {
    let (n, d, r) = (grid.n(), grid.d(), grid.r());
    // per-axis constant dominating the normalized 1D Fourier-Haar entry
    // magnitude c * 2^{j/2} / max(w_bar, 2^j)
    let c_axis = std::f64::consts::PI * std::f64::consts::PI / 4.0;
    let mut theta: f64 = 0.0;
    let mut coords = vec![0usize; d];
    for (i0, &p) in masses.iter().enumerate() {
        crate::grid::coords0(i0, n, &mut coords);
        for j in 0..r {
            let two_j = (1u64 << j) as f64;
            let entry: f64 = match basis {
                HaarBasisKind::FourierHaar => coords
                    .iter()
                    .map(|&c0| {
                        let bar = crate::grid::rho_1d(c0 + 1).abs().max(1) as f64;
                        c_axis * two_j.sqrt() / bar.max(two_j)
                    })
                    .product(),
                HaarBasisKind::WalshHaar => {
                    let max_seq = coords.iter().copied().max().unwrap_or(0) as u64;
                    if (max_seq as f64) < 2.0 * two_j {
                        (1.0 / two_j).powi(d as i32).sqrt()
                    } else {
                        0.0
                    }
                }
            };
            theta = theta.max(entry / p.sqrt());
        }
    }
    theta
}
