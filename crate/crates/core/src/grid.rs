//! Resolution descriptor and the index bijections shared by every other module.
//!
//! A grid is a cube {1..N}^d with N = 2^r. Three orderings of its N^d points
//! are used throughout:
//!
//! * lexicographic (row-major, last coordinate fastest) — spatial layout,
//! * Fourier row order — per-axis frequencies interleaved as 0, 1, -1, 2, -2, …,
//! * Walsh row order — per-axis sequencies 0, 1, …, N-1.
//!
//! All public indices are 1-based; internal helpers that hot paths use are
//! 0-based and live at the bottom of this file.

use crate::error::{Result, TvciError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
    r: u32,
    d: usize,
}

impl Grid {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(TvciError::InvalidGrid("dimension must be >= 1".into()));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(TvciError::InvalidGrid(format!(
                "N must be a power of two >= 2, got {n}"
            )));
        }
        let mut len: usize = 1;
        for _ in 0..d {
            len = len.checked_mul(n).ok_or_else(|| {
                TvciError::InvalidGrid(format!("N^d overflows the index type (N={n}, d={d})"))
            })?;
        }
        Ok(Grid {
            n,
            r: n.trailing_zeros(),
            d,
        })
    }

    /// Side length N.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Exponent r with N = 2^r.
    pub fn r(&self) -> u32 {
        self.r
    }

    /// Dimension d.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Total number of points N^d.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Which frequency convention a multi-index lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Convention {
    /// Coordinates in {-N/2+1, …, N/2}.
    Fourier,
    /// Coordinates in {0, …, N-1}.
    Walsh,
}

impl Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::Fourier => "fourier",
            Convention::Walsh => "walsh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "fourier" => Ok(Convention::Fourier),
            "walsh" => Ok(Convention::Walsh),
            other => Err(TvciError::Parse(format!("unknown convention '{other}'"))),
        }
    }
}

/// A d-dimensional frequency (Fourier) or sequency (Walsh) multi-index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FreqIndex {
    pub coords: Vec<i64>,
    pub convention: Convention,
}

impl FreqIndex {
    pub fn new(coords: Vec<i64>, convention: Convention, grid: &Grid) -> Result<Self> {
        if coords.len() != grid.d() {
            return Err(TvciError::Mismatch(format!(
                "expected {} coordinates, got {}",
                grid.d(),
                coords.len()
            )));
        }
        let n = grid.n() as i64;
        for &c in &coords {
            let ok = match convention {
                Convention::Fourier => c > -n / 2 && c <= n / 2,
                Convention::Walsh => (0..n).contains(&c),
            };
            if !ok {
                return Err(TvciError::OutOfRange(format!(
                    "coordinate {c} outside {} range for N={n}",
                    convention.as_str()
                )));
            }
        }
        Ok(FreqIndex { coords, convention })
    }
}

/// Row-major flatten of a 1-based multi-index; the last coordinate varies fastest.
pub fn lex_flatten(multi: &[usize], grid: &Grid) -> Result<usize> {
    if multi.len() != grid.d() {
        return Err(TvciError::Mismatch(format!(
            "expected {} coordinates, got {}",
            grid.d(),
            multi.len()
        )));
    }
    let n = grid.n();
    let mut flat = 0usize;
    for &c in multi {
        if c < 1 || c > n {
            return Err(TvciError::OutOfRange(format!(
                "coordinate {c} outside 1..={n}"
            )));
        }
        flat = flat * n + (c - 1);
    }
    Ok(flat + 1)
}

/// Inverse of [`lex_flatten`].
pub fn lex_unflatten(flat: usize, grid: &Grid) -> Result<Vec<usize>> {
    if flat < 1 || flat > grid.len() {
        return Err(TvciError::OutOfRange(format!(
            "flat index {flat} outside 1..={}",
            grid.len()
        )));
    }
    let n = grid.n();
    let mut rest = flat - 1;
    let mut coords = vec![0usize; grid.d()];
    for k in (0..grid.d()).rev() {
        coords[k] = rest % n + 1;
        rest /= n;
    }
    Ok(coords)
}

/// 1D Fourier row -> frequency: 1,2,3,4,… -> 0, 1, -1, 2, ….
pub fn rho_1d(i: usize) -> i64 {
    let half = (i / 2) as i64;
    if i % 2 == 0 {
        half
    } else {
        -half
    }
}

/// Inverse of [`rho_1d`].
pub fn rho_1d_inv(freq: i64) -> usize {
    if freq > 0 {
        (2 * freq) as usize
    } else {
        (-2 * freq + 1) as usize
    }
}

/// Frequency multi-index of the i-th DFT row (1-based).
pub fn fourier_row_freq(i: usize, grid: &Grid) -> Result<FreqIndex> {
    let multi = lex_unflatten(i, grid)?;
    let coords = multi.into_iter().map(rho_1d).collect();
    Ok(FreqIndex {
        coords,
        convention: Convention::Fourier,
    })
}

/// Inverse of [`fourier_row_freq`].
pub fn fourier_freq_row(freq: &FreqIndex, grid: &Grid) -> Result<usize> {
    if freq.convention != Convention::Fourier {
        return Err(TvciError::Mismatch("expected a fourier index".into()));
    }
    let multi: Vec<usize> = freq.coords.iter().map(|&f| rho_1d_inv(f)).collect();
    lex_flatten(&multi, grid)
}

/// Sequency multi-index of the i-th Walsh row (1-based).
pub fn walsh_row_freq(i: usize, grid: &Grid) -> Result<FreqIndex> {
    let multi = lex_unflatten(i, grid)?;
    let coords = multi.into_iter().map(|c| (c - 1) as i64).collect();
    Ok(FreqIndex {
        coords,
        convention: Convention::Walsh,
    })
}

/// Inverse of [`walsh_row_freq`].
pub fn walsh_freq_row(freq: &FreqIndex, grid: &Grid) -> Result<usize> {
    if freq.convention != Convention::Walsh {
        return Err(TvciError::Mismatch("expected a walsh index".into()));
    }
    let multi: Vec<usize> = freq.coords.iter().map(|&c| c as usize + 1).collect();
    lex_flatten(&multi, grid)
}

/// Frequency multi-index of a row under either convention.
pub fn row_freq(i: usize, grid: &Grid, convention: Convention) -> Result<FreqIndex> {
    match convention {
        Convention::Fourier => fourier_row_freq(i, grid),
        Convention::Walsh => walsh_row_freq(i, grid),
    }
}

// ---- 0-based internals used by hot paths ----

/// Write the 0-based coordinates of a 0-based flat index into `out`.
pub(crate) fn coords0(flat0: usize, n: usize, out: &mut [usize]) {
    let mut rest = flat0;
    for k in (0..out.len()).rev() {
        out[k] = rest % n;
        rest /= n;
    }
}
