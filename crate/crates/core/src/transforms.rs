//! Fast DFT (frequency-row ordering), sequency-ordered Walsh–Hadamard
//! transform, and the multidimensional discrete Haar wavelet transform,
//! plus dense brute-force oracles for all three.
//!
//! DFT and WHT are unnormalized: F*F = H^T H = N^d I. The Haar transform is
//! orthonormal. All transforms operate on signals in lexicographic layout.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, TvciError};
use crate::grid::{self, Grid};

/// A complex signal on a grid, in lexicographic layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub values: Vec<Complex64>,
    pub grid: Grid,
}

impl Signal {
    pub fn new(values: Vec<Complex64>, grid: Grid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(TvciError::Mismatch(format!(
                "signal length {} != grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Signal { values, grid })
    }

    pub fn zeros(grid: Grid) -> Self {
        Signal {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn from_real(values: &[f64], grid: Grid) -> Result<Self> {
        Signal::new(
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            grid,
        )
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Haar coefficients of a signal; slot layout is fixed by [`haar_slot`].
#[derive(Clone, Debug, PartialEq)]
pub struct HaarCoeffs {
    pub values: Vec<Complex64>,
    pub grid: Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Dft,
    Wht,
    Haar,
}

// ---- FFT plan cache ----

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place FFT along every axis of a d-dimensional cube (natural order).
fn fft_all_axes(values: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let fft = fft_plan(n, inverse);
    let len = values.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = n * stride;
        for base_big in (0..len).step_by(block) {
            for small in 0..stride {
                let base = base_big + small;
                for t in 0..n {
                    scratch[t] = values[base + t * stride];
                }
                fft.process(&mut scratch);
                for t in 0..n {
                    values[base + t * stride] = scratch[t];
                }
            }
        }
    }
}

/// Per-axis map from 0-based output row index to natural-order position.
fn build_axis_perm(n: usize, map: impl Fn(usize) -> usize) -> Vec<usize> {
    (0..n).map(map).collect()
}

/// Gather `src` (natural order) into frequency-row order via per-axis `perm`.
fn permute_gather(src: &[Complex64], n: usize, d: usize, perm: &[usize]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let mut coords = vec![0usize; d];
    for (i, o) in out.iter_mut().enumerate() {
        grid::coords0(i, n, &mut coords);
        let mut nat = 0usize;
        for &c in &coords {
            nat = nat * n + perm[c];
        }
        *o = src[nat];
    }
    out
}

/// Scatter `src` (frequency-row order) into natural order via per-axis `perm`.
fn permute_scatter(src: &[Complex64], n: usize, d: usize, perm: &[usize]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let mut coords = vec![0usize; d];
    for (i, s) in src.iter().enumerate() {
        grid::coords0(i, n, &mut coords);
        let mut nat = 0usize;
        for &c in &coords {
            nat = nat * n + perm[c];
        }
        out[nat] = *s;
    }
    out
}

fn fourier_axis_perm(n: usize) -> Vec<usize> {
    build_axis_perm(n, |c0| grid::rho_1d(c0 + 1).rem_euclid(n as i64) as usize)
}

/// Unnormalized forward DFT; output row i holds frequency `fourier_row_freq(i)`.
pub fn dft_forward(x: &Signal) -> Signal {
    let (n, d) = (x.grid.n(), x.grid.d());
    let mut buf = x.values.clone();
    fft_all_axes(&mut buf, n, d, false);
    let perm = fourier_axis_perm(n);
    Signal {
        values: permute_gather(&buf, n, d, &perm),
        grid: x.grid,
    }
}

/// Adjoint of [`dft_forward`]: dft_adjoint(dft_forward(x)) = N^d x.
pub fn dft_adjoint(y: &Signal) -> Signal {
    let (n, d) = (y.grid.n(), y.grid.d());
    let perm = fourier_axis_perm(n);
    let mut buf = permute_scatter(&y.values, n, d, &perm);
    fft_all_axes(&mut buf, n, d, true);
    Signal {
        values: buf,
        grid: y.grid,
    }
}

// ---- Walsh–Hadamard ----

/// In-place natural-order (Hadamard) butterfly along every axis.
fn fwht_all_axes(values: &mut [Complex64], n: usize, d: usize) {
    let len = values.len();
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = n * stride;
        for base_big in (0..len).step_by(block) {
            for small in 0..stride {
                let base = base_big + small;
                let mut h = 1;
                while h < n {
                    let mut i = 0;
                    while i < n {
                        for t in i..i + h {
                            let a = values[base + t * stride];
                            let b = values[base + (t + h) * stride];
                            values[base + t * stride] = a + b;
                            values[base + (t + h) * stride] = a - b;
                        }
                        i += 2 * h;
                    }
                    h *= 2;
                }
            }
        }
    }
}

/// Natural-order Hadamard row holding sequency `s`: bit-reversed Gray code.
fn sequency_to_natural(s: usize, r: u32) -> usize {
    let gray = s ^ (s >> 1);
    let mut rev = 0usize;
    for b in 0..r {
        if gray & (1 << b) != 0 {
            rev |= 1 << (r - 1 - b);
        }
    }
    rev
}

/// Unnormalized sequency-ordered Walsh–Hadamard transform (symmetric, so it
/// is its own adjoint; applying it twice gives N^d times the identity).
pub fn wht_forward(x: &Signal) -> Signal {
    let (n, d, r) = (x.grid.n(), x.grid.d(), x.grid.r());
    let mut buf = x.values.clone();
    fwht_all_axes(&mut buf, n, d);
    let perm = build_axis_perm(n, |s| sequency_to_natural(s, r));
    Signal {
        values: permute_gather(&buf, n, d, &perm),
        grid: x.grid,
    }
}

// ---- Haar ----

/// Flat slot of Haar coefficient (e, j, n_flat); slot 0 is the scaling
/// coefficient. Scale-j detail block occupies slots [2^{jd}, 2^{(j+1)d}),
/// ordered by detail label e (binary, axis 1 most significant) then by
/// translation (lexicographic, last axis fastest).
pub fn haar_slot(e: usize, j: u32, n_flat: usize, grid: &Grid) -> Result<usize> {
    let d = grid.d();
    if e == 0 || e >= 1 << d {
        return Err(TvciError::OutOfRange(format!("detail label {e} for d={d}")));
    }
    if j >= grid.r() {
        return Err(TvciError::OutOfRange(format!("scale {j} for r={}", grid.r())));
    }
    let per_scale = 1usize << (j as usize * d);
    if n_flat >= per_scale {
        return Err(TvciError::OutOfRange(format!(
            "translation {n_flat} at scale {j}"
        )));
    }
    Ok(e * per_scale + n_flat)
}

/// Inverse of [`haar_slot`]: slot -> (e, j, n_flat); slot 0 -> (0, 0, 0).
pub fn haar_slot_decompose(slot: usize, grid: &Grid) -> Result<(usize, u32, usize)> {
    if slot >= grid.len() {
        return Err(TvciError::OutOfRange(format!("slot {slot}")));
    }
    if slot == 0 {
        return Ok((0, 0, 0));
    }
    let d = grid.d() as u32;
    let j = slot.ilog2() / d;
    let per_scale = 1usize << (j * d) as usize;
    Ok((slot / per_scale, j, slot % per_scale))
}

/// Sign of the 2^d butterfly: (-1)^(popcount(e & b)).
fn butterfly_sign(e: usize, b: usize) -> f64 {
    if (e & b).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Orthonormal forward Haar transform.
pub fn haar_forward(x: &Signal) -> HaarCoeffs {
    let (n, d) = (x.grid.n(), x.grid.d());
    let two_d = 1usize << d;
    let scale = 2f64.powi(-(d as i32)).sqrt(); // 2^{-d/2}
    let mut work = x.values.clone();
    let mut out = vec![Complex64::new(0.0, 0.0); x.grid.len()];
    let mut ncoords = vec![0usize; d];
    let mut vals = vec![Complex64::new(0.0, 0.0); two_d];

    let mut side = n;
    while side > 1 {
        let half = side / 2;
        let j = half.trailing_zeros();
        let per_scale = half.pow(d as u32);
        // lexicographic order over translations; reads at 2n+b are never
        // positions already overwritten at this level
        for nf in 0..per_scale {
            grid::coords0(nf, half, &mut ncoords);
            for b in 0..two_d {
                let mut pos = 0usize;
                for (k, &c) in ncoords.iter().enumerate() {
                    pos = pos * n + (2 * c + ((b >> (d - 1 - k)) & 1));
                }
                vals[b] = work[pos];
            }
            for e in 0..two_d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, &v) in vals.iter().enumerate() {
                    acc += v * butterfly_sign(e, b);
                }
                acc *= scale;
                if e == 0 {
                    let mut pos = 0usize;
                    for &c in &ncoords {
                        pos = pos * n + c;
                    }
                    work[pos] = acc;
                } else {
                    out[e * (1usize << (j as usize * d)) + nf] = acc;
                }
            }
        }
        side = half;
    }
    out[0] = work[0];
    HaarCoeffs {
        values: out,
        grid: x.grid,
    }
}

/// Inverse of [`haar_forward`].
pub fn haar_inverse(c: &HaarCoeffs) -> Signal {
    let (n, d) = (c.grid.n(), c.grid.d());
    let two_d = 1usize << d;
    let scale = 2f64.powi(-(d as i32)).sqrt();
    let mut work = vec![Complex64::new(0.0, 0.0); c.grid.len()];
    work[0] = c.values[0];
    let mut ncoords = vec![0usize; d];
    let mut coeffs = vec![Complex64::new(0.0, 0.0); two_d];

    let mut side = 2usize;
    while side <= n {
        let half = side / 2;
        let j = half.trailing_zeros();
        let per_scale = half.pow(d as u32);
        // reverse lexicographic order so approximation values are consumed
        // before their storage is overwritten
        for nf in (0..per_scale).rev() {
            grid::coords0(nf, half, &mut ncoords);
            let mut approx_pos = 0usize;
            for &cc in &ncoords {
                approx_pos = approx_pos * n + cc;
            }
            coeffs[0] = work[approx_pos];
            for e in 1..two_d {
                coeffs[e] = c.values[e * (1usize << (j as usize * d)) + nf];
            }
            for b in 0..two_d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (e, &cv) in coeffs.iter().enumerate() {
                    acc += cv * butterfly_sign(e, b);
                }
                acc *= scale;
                let mut pos = 0usize;
                for (k, &cc) in ncoords.iter().enumerate() {
                    pos = pos * n + (2 * cc + ((b >> (d - 1 - k)) & 1));
                }
                work[pos] = acc;
            }
        }
        side *= 2;
    }
    Signal {
        values: work,
        grid: c.grid,
    }
}

// ---- Dense oracles ----

/// Walsh function sign v_seq(t/N) from the dyadic-expansion formula.
pub fn walsh_sign(seq: usize, t: usize, r: u32) -> f64 {
    // n_i = i-th dyadic digit of seq (i = 1..r, n_{r+1} = 0);
    // x_i = i-th dyadic digit of t/N, i.e. bit (r - i) of t
    let mut exp = 0u32;
    for i in 1..=r {
        let ni = (seq >> (i - 1)) & 1;
        let ni1 = (seq >> i) & 1;
        let xi = (t >> (r - i)) & 1;
        exp += ((ni + ni1) * xi) as u32;
    }
    if exp % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Value of the 1D continuous Haar mother function ψ^(e) at point t in [0,1).
fn haar_mother(e: usize, t: f64) -> f64 {
    if !(0.0..1.0).contains(&t) {
        0.0
    } else if e == 0 {
        1.0
    } else if t < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Entry of the orthonormal discrete Haar analysis matrix W*: row = slot,
/// column = 0-based lexicographic sample position.
fn haar_dense_entry(slot: usize, col: usize, g: &Grid) -> Result<f64> {
    let (e, j, n_flat) = haar_slot_decompose(slot, g)?;
    let (n, d) = (g.n(), g.d());
    let mut ncoords = vec![0usize; d];
    grid::coords0(n_flat, 1 << j, &mut ncoords);
    let mut tcoords = vec![0usize; d];
    grid::coords0(col, n, &mut tcoords);
    let two_j = (1u64 << j) as f64;
    let mut v = (two_j / n as f64).powi(d as i32).sqrt(); // (N^{-1/2} 2^{j/2})^d
    for k in 0..d {
        let ek = if slot == 0 { 0 } else { (e >> (d - 1 - k)) & 1 };
        let t = two_j * tcoords[k] as f64 / n as f64 - ncoords[k] as f64;
        v *= haar_mother(ek, t);
    }
    Ok(v)
}

/// Dense N^d x N^d forward-transform matrix (row-major), built entry-wise
/// from the defining formulas. For Haar this is the analysis matrix W*, so
/// matrix-vector product equals the forward transform for all three kinds.
pub fn dense_oracle(kind: TransformKind, g: &Grid) -> Result<Vec<Complex64>> {
    let len = g.len();
    if len > 4096 {
        return Err(TvciError::SizeGuard(format!(
            "dense oracle limited to N^d <= 4096, got {len}"
        )));
    }
    let (n, d, r) = (g.n(), g.d(), g.r());
    let mut mat = vec![Complex64::new(0.0, 0.0); len * len];
    let mut rc = vec![0usize; d];
    let mut cc = vec![0usize; d];
    for row in 0..len {
        grid::coords0(row, n, &mut rc);
        for col in 0..len {
            grid::coords0(col, n, &mut cc);
            let entry = match kind {
                TransformKind::Dft => {
                    let mut phase = 0.0f64;
                    for k in 0..d {
                        let freq = grid::rho_1d(rc[k] + 1) as f64;
                        phase -= 2.0 * std::f64::consts::PI * freq * cc[k] as f64 / n as f64;
                    }
                    Complex64::from_polar(1.0, phase)
                }
                TransformKind::Wht => {
                    let mut s = 1.0;
                    for k in 0..d {
                        s *= walsh_sign(rc[k], cc[k], r);
                    }
                    Complex64::new(s, 0.0)
                }
                TransformKind::Haar => Complex64::new(haar_dense_entry(row, col, g)?, 0.0),
            };
            mat[row * len + col] = entry;
        }
    }
    Ok(mat)
}

/// Dense row-major matrix times signal; test/oracle helper.
pub fn dense_apply(mat: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let len = x.len();
    assert_eq!(mat.len(), len * len);
    (0..len)
        .map(|row| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (col, &v) in x.iter().enumerate() {
                acc += mat[row * len + col] * v;
            }
            acc
        })
        .collect()
}
