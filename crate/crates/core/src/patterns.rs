//! Random sampling pattern generators with deterministic seeding.
//!
//! Patterns record draws as a multiset over flat frequency-row indices
//! (1-based, sorted). i.i.d. schemes keep duplicates; half-half and
//! multilevel sample without replacement. All randomness comes from a
//! counter-based seeded generator, so identical (scheme, params, seed)
//! produce bit-identical patterns on every platform.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::densities::Density;
use crate::error::{Result, TvciError};
use crate::grid::{row_freq, Convention, Grid};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub grid: Grid,
    pub convention: Convention,
    /// (flat row index, multiplicity), sorted by row index.
    pub draws: Vec<(usize, u32)>,
    /// Nominal draw count: sum of multiplicities.
    pub m: usize,
    pub scheme: String,
    pub seed: u64,
}

impl Pattern {
    fn from_multiset(
        grid: Grid,
        convention: Convention,
        multiset: BTreeMap<usize, u32>,
        scheme: String,
        seed: u64,
    ) -> Self {
        let m = multiset.values().map(|&c| c as usize).sum();
        Pattern {
            grid,
            convention,
            draws: multiset.into_iter().collect(),
            m,
            scheme,
            seed,
        }
    }

    /// Number of distinct rows.
    pub fn distinct(&self) -> usize {
        self.draws.len()
    }

    /// Distinct row indices, sorted.
    pub fn rows(&self) -> Vec<usize> {
        self.draws.iter().map(|&(i, _)| i).collect()
    }
}

/// Multiplicity-1 view with set semantics.
pub fn dedupe(pat: &Pattern) -> Pattern {
    let draws: Vec<(usize, u32)> = pat.draws.iter().map(|&(i, _)| (i, 1)).collect();
    Pattern {
        grid: pat.grid,
        convention: pat.convention,
        m: draws.len(),
        draws,
        scheme: format!("dedupe({})", pat.scheme),
        seed: pat.seed,
    }
}

/// Multiset union of patterns on the same grid/convention.
pub fn merge(patterns: &[&Pattern]) -> Result<Pattern> {
    let first = patterns
        .first()
        .ok_or_else(|| TvciError::Invalid("merge of zero patterns".into()))?;
    let mut multiset: BTreeMap<usize, u32> = BTreeMap::new();
    for p in patterns {
        if p.grid != first.grid || p.convention != first.convention {
            return Err(TvciError::Mismatch(
                "merge requires matching grid and convention".into(),
            ));
        }
        for &(i, c) in &p.draws {
            *multiset.entry(i).or_insert(0) += c;
        }
    }
    let scheme = patterns
        .iter()
        .map(|p| p.scheme.clone())
        .collect::<Vec<_>>()
        .join("+");
    Ok(Pattern::from_multiset(
        first.grid,
        first.convention,
        multiset,
        format!("merge({scheme})"),
        first.seed,
    ))
}

fn check_m(m: usize, cap: usize) -> Result<()> {
    if m < 1 || m > cap {
        return Err(TvciError::OutOfRange(format!("m = {m} outside 1..={cap}")));
    }
    Ok(())
}

/// m i.i.d. uniform draws; with `include_dc`, one draw is replaced by the
/// zero frequency (always present).
pub fn sample_uniform(
    grid: &Grid,
    convention: Convention,
    m: usize,
    seed: u64,
    include_dc: bool,
) -> Result<Pattern> {
    // draws are with replacement, so m may exceed the grid size
    check_m(m, usize::MAX)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut multiset: BTreeMap<usize, u32> = BTreeMap::new();
    let random_draws = if include_dc { m - 1 } else { m };
    if include_dc {
        multiset.insert(1, 1); // row 1 is the zero frequency in both conventions
    }
    for _ in 0..random_draws {
        let i = rng.gen_range(1..=grid.len());
        *multiset.entry(i).or_insert(0) += 1;
    }
    let scheme = if include_dc {
        "uniform+dc".to_string()
    } else {
        "uniform".to_string()
    };
    Ok(Pattern::from_multiset(
        *grid, convention, multiset, scheme, seed,
    ))
}

/// m i.i.d. draws from a density via inverse CDF over the flattened grid.
pub fn sample_vds(p: &Density, m: usize, seed: u64) -> Result<Pattern> {
    let grid = *p.grid();
    // with replacement: no upper bound on m
    check_m(m, usize::MAX)?;
    let masses = p.masses()?;
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = 0.0f64;
    for &v in &masses {
        acc += v;
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut multiset: BTreeMap<usize, u32> = BTreeMap::new();
    for _ in 0..m {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(masses.len() - 1);
        *multiset.entry(idx + 1).or_insert(0) += 1;
    }
    Ok(Pattern::from_multiset(
        grid,
        p.convention(),
        multiset,
        format!("vds:{}", p.kind().descriptor()),
        seed,
    ))
}

/// Square-shell radius used to order rows from low to high frequency.
fn row_radius(i: usize, grid: &Grid, convention: Convention) -> u64 {
    let freq = row_freq(i, grid, convention).expect("row in range");
    match convention {
        Convention::Fourier => freq
            .coords
            .iter()
            .map(|&c| c.abs().max(1) as u64)
            .max()
            .unwrap(),
        Convention::Walsh => freq.coords.iter().map(|&c| c as u64).max().unwrap(),
    }
}

/// Deterministic prefix of the ⌊m/2⌋ lowest frequencies plus ⌈m/2⌉ uniform
/// draws without replacement from the complement.
pub fn sample_half_half(
    grid: &Grid,
    convention: Convention,
    m: usize,
    seed: u64,
) -> Result<Pattern> {
    check_m(m, grid.len())?;
    let len = grid.len();
    let mut order: Vec<usize> = (1..=len).collect();
    order.sort_by_key(|&i| (row_radius(i, grid, convention), i));
    let low_count = m / 2;
    let mut multiset: BTreeMap<usize, u32> = BTreeMap::new();
    for &i in &order[..low_count] {
        multiset.insert(i, 1);
    }
    let mut complement: Vec<usize> = order[low_count..].to_vec();
    complement.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, complement.len(), m - low_count);
    for idx in picks.iter() {
        multiset.insert(complement[idx], 1);
    }
    Ok(Pattern::from_multiset(
        *grid,
        convention,
        multiset,
        "half-half".into(),
        seed,
    ))
}

/// Shell index (1-based, clamped to r_levels) of each row, plus shell contents.
fn build_shells(grid: &Grid, convention: Convention, r_levels: usize) -> Vec<Vec<usize>> {
    let half_extent = match convention {
        Convention::Fourier => grid.n() / 2,
        Convention::Walsh => grid.n() - 1,
    };
    let width = (half_extent + r_levels - 1) / r_levels.max(1);
    let width = width.max(1);
    let mut shells = vec![Vec::new(); r_levels];
    for i in 1..=grid.len() {
        let rho = match convention {
            Convention::Fourier => {
                let freq = row_freq(i, grid, convention).expect("row in range");
                freq.coords.iter().map(|&c| c.unsigned_abs()).max().unwrap() as usize
            }
            Convention::Walsh => row_radius(i, grid, convention) as usize,
        };
        let k = (rho / width + 1).min(r_levels);
        shells[k - 1].push(i);
    }
    shells
}

/// Multilevel sampling: full inner shells, exponentially decaying fraction
/// p_k = exp(-(b(k-r0)/(r-r0))^a) outside, with b solved so the shell
/// counts sum to m exactly.
pub fn sample_multilevel(
    grid: &Grid,
    convention: Convention,
    m: usize,
    r_levels: usize,
    r0: usize,
    a: f64,
    seed: u64,
) -> Result<Pattern> {
    if r_levels < 1 || r0 >= r_levels {
        return Err(TvciError::Invalid(format!(
            "need r0 < r_levels, got r0={r0}, r={r_levels}"
        )));
    }
    if a <= 0.0 {
        return Err(TvciError::Invalid("exponent a must be > 0".into()));
    }
    let shells = build_shells(grid, convention, r_levels);
    let sizes: Vec<usize> = shells.iter().map(|s| s.len()).collect();
    let m_min: usize = sizes[..r0].iter().sum();
    let m_max = grid.len();
    if m < m_min.max(1) || m > m_max {
        return Err(TvciError::Infeasible(format!(
            "m = {m} outside the feasible range [{}, {m_max}] for r={r_levels}, r0={r0}",
            m_min.max(1)
        )));
    }

    let counts_for = |b: f64| -> Vec<usize> {
        (0..r_levels)
            .map(|k0| {
                let k = k0 + 1;
                if k <= r0 {
                    sizes[k0]
                } else {
                    let frac =
                        (-(b * (k - r0) as f64 / (r_levels - r0) as f64).powf(a)).exp();
                    (frac * sizes[k0] as f64).round() as usize
                }
            })
            .collect()
    };
    let total_for = |b: f64| -> usize { counts_for(b).iter().sum() };

    // total(b) is nonincreasing; bracket then bisect
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while total_for(hi) > m && hi < 1e9 {
        hi *= 2.0;
    }
    if total_for(hi) > m {
        return Err(TvciError::Infeasible(format!(
            "m = {m} below the reachable minimum {} for r={r_levels}, r0={r0}",
            total_for(hi)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_for(mid) > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut counts = counts_for(hi);
    // assign the rounding residual to the outermost shells with spare room
    let mut residual = m - counts.iter().sum::<usize>();
    for k0 in (0..r_levels).rev() {
        if residual == 0 {
            break;
        }
        let spare = sizes[k0] - counts[k0];
        let take = spare.min(residual);
        counts[k0] += take;
        residual -= take;
    }
    debug_assert_eq!(counts.iter().sum::<usize>(), m);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut multiset: BTreeMap<usize, u32> = BTreeMap::new();
    for (shell, &mk) in shells.iter().zip(&counts) {
        if mk == shell.len() {
            for &i in shell {
                multiset.insert(i, 1);
            }
        } else {
            let picks = rand::seq::index::sample(&mut rng, shell.len(), mk);
            for idx in picks.iter() {
                multiset.insert(shell[idx], 1);
            }
        }
    }
    Ok(Pattern::from_multiset(
        *grid,
        convention,
        multiset,
        format!("multilevel:r={r_levels},r0={r0},a={a}"),
        seed,
    ))
}
