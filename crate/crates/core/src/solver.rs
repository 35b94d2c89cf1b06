//! Constrained TV minimization
//!     min ||z||_TV  subject to  ||A z - y||_2 <= eta
//! via a Nesterov-smoothed accelerated projected-gradient scheme in the
//! NESTA style: the TV term is Huber-smoothed per gradient group, the
//! constraint is enforced by a closed-form projection (A A* = c I), and an
//! optional continuation loop shrinks the smoothing parameter by 10x per
//! outer stage.

use num_complex::Complex64;

use crate::error::{Result, TvciError};
use crate::gradient::{grad, grad_adjoint, tv_norm, GradField, TvMode};
use crate::operators::MeasurementOp;
use crate::transforms::Signal;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Final smoothing parameter.
    pub mu: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Relative objective-change stopping tolerance (inner loop).
    pub tolerance: f64,
    /// Relative step-size stopping tolerance (inner loop).
    pub delta: f64,
    /// Noise level eta in the data-fidelity constraint.
    pub eta: f64,
    pub tv_mode: TvMode,
    pub continuation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 0.2,
            outer_iters: 5,
            inner_iters: 5000,
            tolerance: 1e-5,
            delta: 1e-5,
            eta: 0.0,
            tv_mode: TvMode::Isotropic,
            continuation: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu <= 0.0 || self.tolerance <= 0.0 || self.delta <= 0.0 {
            return Err(TvciError::Invalid(
                "mu, tolerance and delta must be > 0".into(),
            ));
        }
        if self.outer_iters < 1 || self.inner_iters < 1 {
            return Err(TvciError::Invalid("iteration counts must be >= 1".into()));
        }
        if self.eta < 0.0 {
            return Err(TvciError::Invalid("eta must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReconResult {
    pub x_hat: Signal,
    /// Unsmoothed TV of the iterate at the end of each outer stage.
    pub objective_trace: Vec<f64>,
    /// Final data residual ||A x_hat - y||_2.
    pub residual: f64,
    /// Total inner iterations used.
    pub iterations: usize,
    /// False when some stage exhausted its inner budget without meeting the
    /// stopping tolerances.
    pub converged: bool,
}

/// Huber-smoothed TV value and gradient. Groups are per-pixel d-vectors of
/// gradient entries (isotropic) or individual entries (anisotropic); each
/// group contributes ||g|| when ||g|| >= mu and ||g||^2/(2 mu) + mu/2
/// otherwise, which makes the gradient (4d/mu)-Lipschitz.
fn smoothed_tv_value_grad(x: &Signal, mu: f64, mode: TvMode) -> (f64, Signal) {
    let gf = grad(x);
    let len = x.grid.len();
    let d = x.grid.d();
    let mut value = 0.0f64;
    let mut weighted = GradField {
        components: vec![vec![Complex64::new(0.0, 0.0); len]; d],
        grid: x.grid,
    };
    match mode {
        TvMode::Isotropic => {
            for i in 0..len {
                let norm = gf
                    .components
                    .iter()
                    .map(|c| c[i].norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let denom = norm.max(mu);
                value += if norm >= mu {
                    norm
                } else {
                    norm * norm / (2.0 * mu) + mu / 2.0
                };
                for (k, c) in gf.components.iter().enumerate() {
                    weighted.components[k][i] = c[i] / denom;
                }
            }
        }
        TvMode::Anisotropic => {
            for (k, c) in gf.components.iter().enumerate() {
                for i in 0..len {
                    let norm = c[i].norm();
                    let denom = norm.max(mu);
                    value += if norm >= mu {
                        norm
                    } else {
                        norm * norm / (2.0 * mu) + mu / 2.0
                    };
                    weighted.components[k][i] = c[i] / denom;
                }
            }
        }
    }
    (value, grad_adjoint(&weighted))
}

/// Gradient of the Huber-smoothed TV objective.
pub fn smoothed_tv_gradient(x: &Signal, mu: f64, mode: TvMode) -> Result<Signal> {
    if mu <= 0.0 {
        return Err(TvciError::Invalid("mu must be > 0".into()));
    }
    Ok(smoothed_tv_value_grad(x, mu, mode).1)
}

/// Huber-smoothed TV objective value.
pub fn smoothed_tv(x: &Signal, mu: f64, mode: TvMode) -> Result<f64> {
    if mu <= 0.0 {
        return Err(TvciError::Invalid("mu must be > 0".into()));
    }
    Ok(smoothed_tv_value_grad(x, mu, mode).0)
}

/// Euclidean projection onto { w : ||A w - y|| <= eta }, in closed form
/// thanks to A A* = c I. With eta = 0 this is the exact affine projection.
pub fn project_l2_ball(
    z: &Signal,
    op: &MeasurementOp,
    y: &[Complex64],
    eta: f64,
) -> Result<Signal> {
    let az = op.apply(z)?;
    let mut resid: Vec<Complex64> = az.iter().zip(y).map(|(a, b)| a - b).collect();
    let rnorm = resid.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if rnorm <= eta {
        return Ok(z.clone());
    }
    let c = op.ortho_constant();
    let shrink = (1.0 - eta / rnorm) / c;
    for v in resid.iter_mut() {
        *v *= shrink;
    }
    let corr = op.apply_adjoint(&resid)?;
    let mut out = z.clone();
    for (o, c) in out.values.iter_mut().zip(&corr.values) {
        *o -= c;
    }
    Ok(out)
}

fn residual_norm(op: &MeasurementOp, x: &Signal, y: &[Complex64]) -> f64 {
    let ax = op.apply(x).expect("dimension checked");
    ax.iter()
        .zip(y)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// One NESTA stage at fixed mu, warm-started at x0. Returns the last primal
/// (projected) iterate, the inner iterations used, and whether a stopping
/// tolerance was met.
fn nesta_stage(
    op: &MeasurementOp,
    y: &[Complex64],
    cfg: &SolverConfig,
    mu: f64,
    x0: &Signal,
) -> Result<(Signal, usize, bool)> {
    let lipschitz = 4.0 * x0.grid.d() as f64 / mu;
    let step = 1.0 / lipschitz;
    let mut xk = x0.clone();
    let mut best = project_l2_ball(&xk, op, y, cfg.eta)?;
    let mut grad_acc = Signal::zeros(x0.grid);
    let mut recent: Vec<f64> = Vec::new();
    // the accelerated scheme moves slowly at first (the dual-averaging
    // weights grow linearly), so the objective can look settled long before
    // it is; hold off stopping until the iteration has had time to move
    let burn_in = (cfg.inner_iters / 2).min(200);
    for k in 0..cfg.inner_iters {
        let (fval, gradf) = smoothed_tv_value_grad(&xk, mu, cfg.tv_mode);

        // primal gradient step
        let mut yk = xk.clone();
        for (v, g) in yk.values.iter_mut().zip(&gradf.values) {
            *v -= step * g;
        }
        let yk = project_l2_ball(&yk, op, y, cfg.eta)?;

        // weighted dual averaging step
        let alpha = 0.5 * (k as f64 + 1.0);
        for (a, g) in grad_acc.values.iter_mut().zip(&gradf.values) {
            *a += alpha * g;
        }
        let mut zk = x0.clone();
        for (v, a) in zk.values.iter_mut().zip(&grad_acc.values) {
            *v -= step * a;
        }
        let zk = project_l2_ball(&zk, op, y, cfg.eta)?;

        let tau = 2.0 / (k as f64 + 3.0);
        let mut xnext = Signal::zeros(x0.grid);
        for i in 0..xnext.values.len() {
            xnext.values[i] = tau * zk.values[i] + (1.0 - tau) * yk.values[i];
        }

        // stopping: relative objective change over a 10-iterate window, or
        // relative step size below delta
        let step_norm: f64 = xnext
            .values
            .iter()
            .zip(&xk.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let xnorm = xk.norm().max(1.0);
        recent.push(fval);
        if recent.len() > 10 {
            recent.remove(0);
        }
        let mean = recent.iter().sum::<f64>() / recent.len() as f64;
        let obj_settled =
            recent.len() == 10 && (fval - mean).abs() <= cfg.tolerance * mean.max(1e-300);
        best = yk;
        xk = xnext;
        if k + 1 >= burn_in && (obj_settled || step_norm <= cfg.delta * xnorm) {
            return Ok((best, k + 1, true));
        }
    }
    Ok((best, cfg.inner_iters, false))
}

/// Solve the constrained TV problem. The returned iterate is feasible up to
/// a 1e-3 relative slack by construction (every iterate is projected).
pub fn solve_tv(op: &MeasurementOp, y: &[Complex64], cfg: &SolverConfig) -> Result<ReconResult> {
    cfg.validate()?;
    if y.len() != op.m_effective() {
        return Err(TvciError::Mismatch(format!(
            "measurement length {} != m_effective {}",
            y.len(),
            op.m_effective()
        )));
    }

    // least-norm start: x0 = A* y / c is feasible for every eta >= 0
    let c = op.ortho_constant();
    let mut x = op.apply_adjoint(y)?;
    for v in x.values.iter_mut() {
        *v /= c;
    }

    // continuation: mu_0 tracks the dynamic range of the start, then /10
    // per stage, finishing at cfg.mu
    let mus: Vec<f64> = if cfg.continuation && cfg.outer_iters > 1 {
        let peak = x.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let mu0 = if peak > 0.0 { 0.2 * peak / 100.0 } else { cfg.mu };
        let mut mus: Vec<f64> = (0..cfg.outer_iters - 1)
            .map(|s| (mu0 / 10f64.powi(s as i32)).max(cfg.mu))
            .collect();
        mus.push(cfg.mu);
        mus
    } else {
        vec![cfg.mu; cfg.outer_iters]
    };

    let mut trace = Vec::with_capacity(mus.len());
    let mut iterations = 0usize;
    let mut converged = true;
    for &mu in &mus {
        let (xs, iters, ok) = nesta_stage(op, y, cfg, mu, &x)?;
        x = xs;
        iterations += iters;
        converged &= ok;
        trace.push(tv_norm(&x, cfg.tv_mode));
    }

    let residual = residual_norm(op, &x, y);
    Ok(ReconResult {
        x_hat: x,
        objective_trace: trace,
        residual,
        iterations,
        converged,
    })
}
