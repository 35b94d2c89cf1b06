//! Periodic discrete gradient calculus and the two TV semi-norms.
//!
//! Axis convention: `grad_component(x, j)` applies the 1D periodic difference
//! (x_{i+1} - x_i, wrapping) along the axis sitting at Kronecker slot d-j+1,
//! i.e. along the coordinate with stride N^{j-1} in lexicographic layout.
//! So j = 1 differentiates the fastest-varying coordinate and j = d the
//! slowest. Worked 2D example (N = 2, X = [[1,2],[3,4]] stored as
//! (1,2,3,4)): grad_component(·, 1) = (1,-1,1,-1), the row-wise wrapped
//! differences.

use num_complex::Complex64;

use crate::error::{Result, TvciError};
use crate::grid::Grid;
use crate::transforms::Signal;

/// Which TV semi-norm: per-pixel l2 groups (isotropic) or plain l1 of all
/// gradient entries (anisotropic).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvMode {
    Isotropic,
    Anisotropic,
}

impl TvMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TvMode::Isotropic => "isotropic",
            TvMode::Anisotropic => "anisotropic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "isotropic" | "iso" => Ok(TvMode::Isotropic),
            "anisotropic" | "aniso" => Ok(TvMode::Anisotropic),
            other => Err(TvciError::Parse(format!("unknown tv mode '{other}'"))),
        }
    }
}

/// All d gradient components of a signal.
#[derive(Clone, Debug)]
pub struct GradField {
    pub components: Vec<Vec<Complex64>>,
    pub grid: Grid,
}

impl GradField {
    /// Stacked l2 norm over all components.
    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Stride (in lexicographic layout) of the axis that gradient component j
/// differentiates.
pub(crate) fn axis_stride(j: usize, grid: &Grid) -> usize {
    grid.n().pow((j - 1) as u32)
}

/// Periodic difference along gradient axis j (1-based).
pub fn grad_component(x: &Signal, j: usize) -> Result<Vec<Complex64>> {
    let d = x.grid.d();
    if j < 1 || j > d {
        return Err(TvciError::OutOfRange(format!("axis {j} outside 1..={d}")));
    }
    let n = x.grid.n();
    let stride = axis_stride(j, &x.grid);
    let len = x.grid.len();
    let block = n * stride;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for base_big in (0..len).step_by(block) {
        for small in 0..stride {
            let base = base_big + small;
            for t in 0..n {
                let cur = base + t * stride;
                let next = base + ((t + 1) % n) * stride;
                out[cur] = x.values[next] - x.values[cur];
            }
        }
    }
    Ok(out)
}

/// Full gradient field.
pub fn grad(x: &Signal) -> GradField {
    let components = (1..=x.grid.d())
        .map(|j| grad_component(x, j).expect("axis in range"))
        .collect();
    GradField {
        components,
        grid: x.grid,
    }
}

/// TV semi-norm in the requested mode.
pub fn tv_norm(x: &Signal, mode: TvMode) -> f64 {
    let g = grad(x);
    tv_of_grad(&g, mode)
}

/// TV semi-norm of an already-computed gradient field.
pub fn tv_of_grad(g: &GradField, mode: TvMode) -> f64 {
    let len = g.grid.len();
    match mode {
        TvMode::Anisotropic => g
            .components
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .sum(),
        TvMode::Isotropic => (0..len)
            .map(|i| {
                g.components
                    .iter()
                    .map(|c| c[i].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .sum(),
    }
}

/// Adjoint of the stacked gradient: negative periodic divergence.
pub fn grad_adjoint(g: &GradField) -> Signal {
    let grid = g.grid;
    let n = grid.n();
    let len = grid.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (j, comp) in g.components.iter().enumerate() {
        let stride = axis_stride(j + 1, &grid);
        let block = n * stride;
        for base_big in (0..len).step_by(block) {
            for small in 0..stride {
                let base = base_big + small;
                for t in 0..n {
                    let cur = base + t * stride;
                    let prev = base + ((t + n - 1) % n) * stride;
                    // transpose of (x_{i+1} - x_i): v_{i-1} - v_i
                    out[cur] += comp[prev] - comp[cur];
                }
            }
        }
    }
    Signal { values: out, grid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_signal;
    use crate::transforms::{dense_apply, dense_oracle, dft_forward, TransformKind};
    use crate::grid::{lex_unflatten, rho_1d};

    #[test]
    fn grad_1d_wrap() {
        let g = Grid::new(4, 1).unwrap();
        let x = Signal::from_real(&[1.0, 2.0, 3.0, 4.0], g).unwrap();
        let gx = grad_component(&x, 1).unwrap();
        let expect = [1.0, 1.0, 1.0, -3.0];
        for (a, b) in gx.iter().zip(expect) {
            assert!((a.re - b).abs() < 1e-14 && a.im.abs() < 1e-14);
        }
        assert!(grad_component(&x, 0).is_err());
        assert!(grad_component(&x, 2).is_err());
    }

    #[test]
    fn grad_constant_zero_and_telescoping() {
        for (n, d) in [(8, 1), (4, 2), (4, 3)] {
            let g = Grid::new(n, d).unwrap();
            let c = Signal::from_real(&vec![3.5; g.len()], g).unwrap();
            for comp in grad(&c).components {
                assert!(comp.iter().all(|v| v.norm() < 1e-14));
            }
            let x = random_signal(g, 9);
            for comp in grad(&x).components {
                let sum: Complex64 = comp.iter().sum();
                assert!(sum.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn grad_2d_axis_convention() {
        // X = [[1,2],[3,4]] in lexicographic layout; axis 1 is fastest
        let g = Grid::new(2, 2).unwrap();
        let x = Signal::from_real(&[1.0, 2.0, 3.0, 4.0], g).unwrap();
        let g1 = grad_component(&x, 1).unwrap();
        let g2 = grad_component(&x, 2).unwrap();
        let e1 = [1.0, -1.0, 1.0, -1.0];
        let e2 = [2.0, 2.0, -2.0, -2.0];
        for (a, b) in g1.iter().zip(e1) {
            assert!((a.re - b).abs() < 1e-14);
        }
        for (a, b) in g2.iter().zip(e2) {
            assert!((a.re - b).abs() < 1e-14);
        }
    }

    #[test]
    fn tv_modes() {
        let g = Grid::new(2, 2).unwrap();
        let c = Signal::from_real(&[5.0; 4], g).unwrap();
        assert_eq!(tv_norm(&c, TvMode::Isotropic), 0.0);
        assert_eq!(tv_norm(&c, TvMode::Anisotropic), 0.0);

        // 1D: both modes coincide
        let g1 = Grid::new(8, 1).unwrap();
        let x = random_signal(g1, 2);
        let a = tv_norm(&x, TvMode::Isotropic);
        let b = tv_norm(&x, TvMode::Anisotropic);
        assert!((a - b).abs() < 1e-12 * b);

        // X = [[1,0],[0,0]]: TV_a = 4; isotropic groups are (-1,-1), (1,0),
        // (0,1), (0,0) so TV_i = sqrt(2) + 2
        let x = Signal::from_real(&[1.0, 0.0, 0.0, 0.0], g).unwrap();
        assert!((tv_norm(&x, TvMode::Anisotropic) - 4.0).abs() < 1e-14);
        assert!((tv_norm(&x, TvMode::Isotropic) - (2f64.sqrt() + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn tv_mode_inequalities() {
        for (n, d) in [(8, 1), (8, 2), (4, 3)] {
            let g = Grid::new(n, d).unwrap();
            for seed in 0..20 {
                let x = random_signal(g, seed);
                let ti = tv_norm(&x, TvMode::Isotropic);
                let ta = tv_norm(&x, TvMode::Anisotropic);
                assert!(ti <= ta * (1.0 + 1e-12));
                assert!(ta <= (d as f64).sqrt() * ti * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn adjoint_identity() {
        let g = Grid::new(8, 2).unwrap();
        for seed in 0..5 {
            let x = random_signal(g, seed);
            let v = GradField {
                components: (0..2)
                    .map(|k| random_signal(g, 100 + seed * 2 + k).values)
                    .collect(),
                grid: g,
            };
            let gx = grad(&x);
            let lhs: Complex64 = gx
                .components
                .iter()
                .zip(&v.components)
                .flat_map(|(a, b)| a.iter().zip(b.iter()))
                .map(|(a, b)| a * b.conj())
                .sum();
            let aty = grad_adjoint(&v);
            let rhs: Complex64 = x
                .values
                .iter()
                .zip(&aty.values)
                .map(|(a, b)| a * b.conj())
                .sum();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }

        // zero in, zero out
        let z = GradField {
            components: vec![vec![Complex64::new(0.0, 0.0); g.len()]; 2],
            grid: g,
        };
        assert!(grad_adjoint(&z).values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn adjoint_matches_dense_transpose_1d() {
        let g = Grid::new(8, 1).unwrap();
        let n = g.n();
        // dense periodic difference matrix
        let mut m = vec![0.0f64; n * n];
        for i in 0..n {
            m[i * n + i] = -1.0;
            m[i * n + (i + 1) % n] = 1.0;
        }
        let v = random_signal(g, 55);
        let gf = GradField {
            components: vec![v.values.clone()],
            grid: g,
        };
        let got = grad_adjoint(&gf);
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += m[k * n + i] * v.values[k];
            }
            assert!((acc - got.values[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn commuting_property() {
        // F grad_j x equals a diagonal multiplier acting on F x, with
        // multiplier exp(2 pi i w_c / N) - 1 on the coordinate that axis j
        // differentiates
        for (n, d) in [(8, 1), (8, 2), (4, 3)] {
            let g = Grid::new(n, d).unwrap();
            for seed in 0..5 {
                let x = random_signal(g, 1000 + seed);
                let fx = dft_forward(&x);
                for j in 1..=d {
                    let gj = Signal::new(grad_component(&x, j).unwrap(), g).unwrap();
                    let lhs = dft_forward(&gj);
                    let coord = d - j; // 0-based coordinate differentiated by axis j
                    let mut rel_num = 0.0f64;
                    let mut rel_den = 0.0f64;
                    for i in 0..g.len() {
                        let multi = lex_unflatten(i + 1, &g).unwrap();
                        let w = rho_1d(multi[coord]) as f64;
                        let lam = Complex64::from_polar(
                            1.0,
                            2.0 * std::f64::consts::PI * w / n as f64,
                        ) - 1.0;
                        let rhs = lam * fx.values[i];
                        rel_num += (lhs.values[i] - rhs).norm_sqr();
                        rel_den += rhs.norm_sqr();
                    }
                    assert!(rel_num.sqrt() <= 1e-10 * rel_den.sqrt().max(1.0));
                }
            }
        }
    }

    #[test]
    fn multiplier_example_n4() {
        let lam: Vec<Complex64> = (1..=4)
            .map(|i| {
                Complex64::from_polar(
                    1.0,
                    2.0 * std::f64::consts::PI * rho_1d(i) as f64 / 4.0,
                ) - 1.0
            })
            .collect();
        let expect = [
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 1.0),
            Complex64::new(-1.0, -1.0),
            Complex64::new(-2.0, 0.0),
        ];
        for (a, b) in lam.iter().zip(expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn poincare_1d_exact() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in [16usize, 64, 256] {
            let g = Grid::new(n, 1).unwrap();
            for _ in 0..50 {
                let mut vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                for v in &mut vals {
                    *v -= mean;
                }
                let x = Signal::from_real(&vals, g).unwrap();
                let l2 = x.norm();
                let tv = tv_norm(&x, TvMode::Anisotropic);
                assert!(l2 <= (n as f64).sqrt() * tv * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn grad_vs_dense_dft_oracle_consistency() {
        // sanity that grad composes with the dense DFT the same way as the
        // fast path used in commuting_property
        let g = Grid::new(4, 2).unwrap();
        let x = random_signal(g, 4);
        let m = dense_oracle(TransformKind::Dft, &g).unwrap();
        let dense = dense_apply(&m, &x.values);
        let fast = dft_forward(&x);
        let num: f64 = dense
            .iter()
            .zip(&fast.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(num < 1e-10 * fast.norm());
    }
}
