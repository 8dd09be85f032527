//! Vanilla gradient descent with deterministic initialisation, loss-trace
//! recording, and empirical convergence-rate estimation.
//!
//! A training run is a pure function of `(dataset, config, spec)`: the seed
//! fixes the initial weights, every step applies
//! `W_b <- W_b - mu * dW_b` to all six matrices simultaneously, and the
//! trace records the loss, gradient norms and (after the run) the distance
//! of each recorded iterate to the final one.

use thiserror::Error;

use crate::grad::{grad_all, GradError, Gradients};
use crate::model::{loss, Dataset, ModelConfig, ModelError, Params};
use crate::rng::Rng;
use crate::theory;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training spec: {0}")]
    InvalidSpec(String),
    #[error("loss became non-finite at step {step}; trace up to the last finite step attached")]
    NonFiniteLoss { step: usize, trace: LossTrace },
    #[error("theory learning rate is not finite ({0}); the instance has alpha = 0 and C = 0")]
    DegenerateTheoryRate(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grad(#[from] GradError),
}

#[derive(Debug, Error)]
pub enum RateFitError {
    #[error("all recorded losses are zero; run already converged")]
    AlreadyConverged,
    #[error("need at least 10 recorded positive-loss points, got {0}")]
    TooFewPoints(usize),
}

/// How the step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Fixed(f64),
    /// `mu = min(1/C, 1/alpha)` with the constants evaluated at the initial
    /// weights; the certified-contraction rate.
    Theory,
    /// Doubling line search from `1e-6` until the first losing step, then
    /// halved. A demonstration rate; certificates always use `Theory`.
    Practical,
}

/// Initial weight distribution.
#[derive(Debug, Clone)]
pub enum InitScheme {
    /// Independent Gaussian entries with one standard deviation per matrix,
    /// ordered `(w1, w2, wq, wk, wv, wu)`.
    GaussianPerMatrix {
        g1: f64,
        g2: f64,
        gq: f64,
        gk: f64,
        gv: f64,
        gu: f64,
    },
    /// Gaussian entries with standard deviation `1/sqrt(fan_in)` per matrix.
    LeCunStyle,
    Explicit(Params),
}

impl InitScheme {
    pub fn gaussian_uniform(gamma: f64) -> Self {
        InitScheme::GaussianPerMatrix {
            g1: gamma,
            g2: gamma,
            gq: gamma,
            gk: gamma,
            gv: gamma,
            gu: gamma,
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        if let InitScheme::GaussianPerMatrix { g1, g2, gq, gk, gv, gu } = self {
            for (label, g) in [("g1", g1), ("g2", g2), ("gq", gq), ("gk", gk), ("gv", gv), ("gu", gu)] {
                if !(*g > 0.0) {
                    return Err(TrainError::InvalidSpec(format!(
                        "gaussian scale {label} must be > 0, got {g}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything a run needs besides the data and model dimensions.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    pub steps: usize,
    pub mu: LearningRate,
    pub seed: u64,
    pub init: InitScheme,
    pub record_every: usize,
}

impl TrainSpec {
    fn validate(&self) -> Result<(), TrainError> {
        if self.steps == 0 {
            return Err(TrainError::InvalidSpec("steps must be >= 1".into()));
        }
        if self.record_every == 0 {
            return Err(TrainError::InvalidSpec("record_every must be >= 1".into()));
        }
        if let LearningRate::Fixed(mu) = self.mu {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(TrainError::InvalidSpec(format!("explicit mu must be positive, got {mu}")));
            }
        }
        self.init.validate()
    }
}

/// One recorded step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub phi: f64,
    /// Euclidean norm of the full stacked gradient.
    pub grad_norm: f64,
    /// Per-matrix Frobenius norms in CSV order `(g1, g2, gq, gk, gv, gu)`.
    pub g1: f64,
    pub g2: f64,
    pub gq: f64,
    pub gk: f64,
    pub gv: f64,
    pub gu: f64,
    /// `||theta^(t) - theta^(final)||_2`, filled after the run.
    pub theta_dist: f64,
}

/// Loss trace of one gradient-descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTrace {
    pub rows: Vec<TraceRow>,
    /// Resolved step size actually used.
    pub mu: f64,
    pub seed: u64,
}

impl LossTrace {
    pub const CSV_HEADER: &'static str = "t,phi,grad_norm,g1,g2,gq,gk,gv,gu,theta_dist";

    /// Serialises the trace with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.t, r.phi, r.grad_norm, r.g1, r.g2, r.gq, r.gk, r.gv, r.gu, r.theta_dist
            ));
        }
        out
    }

    pub fn initial_phi(&self) -> f64 {
        self.rows.first().map(|r| r.phi).unwrap_or(0.0)
    }

    pub fn final_phi(&self) -> f64 {
        self.rows.last().map(|r| r.phi).unwrap_or(0.0)
    }
}

/// A finished run: the trace plus the endpoints needed by the certificates.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub trace: LossTrace,
    pub params0: Params,
    pub params_final: Params,
    pub mu: f64,
}

/// Draws initial weights for a scheme. Deterministic in the seed.
pub fn init_params(cfg: &ModelConfig, scheme: &InitScheme, seed: u64) -> Params {
    let mut rng = Rng::new(seed);
    match scheme {
        InitScheme::Explicit(p) => p.clone(),
        InitScheme::GaussianPerMatrix { g1, g2, gq, gk, gv, gu } => Params {
            w1: rng.gaussian_matrix(cfg.d, cfg.d1, *g1),
            w2: rng.gaussian_matrix(cfg.d1, cfg.d, *g2),
            wq: rng.gaussian_matrix(cfg.d, cfg.d_qk, *gq),
            wk: rng.gaussian_matrix(cfg.d, cfg.d_qk, *gk),
            wv: rng.gaussian_matrix(cfg.d, cfg.d, *gv),
            wu: rng.gaussian_matrix(cfg.d, cfg.n, *gu),
        },
        InitScheme::LeCunStyle => {
            let s = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
            Params {
                w1: rng.gaussian_matrix(cfg.d, cfg.d1, s(cfg.d)),
                w2: rng.gaussian_matrix(cfg.d1, cfg.d, s(cfg.d1)),
                wq: rng.gaussian_matrix(cfg.d, cfg.d_qk, s(cfg.d)),
                wk: rng.gaussian_matrix(cfg.d, cfg.d_qk, s(cfg.d)),
                wv: rng.gaussian_matrix(cfg.d, cfg.d, s(cfg.d)),
                wu: rng.gaussian_matrix(cfg.d, cfg.n, s(cfg.d)),
            }
        }
    }
}

/// One descent step; all six matrices move simultaneously.
pub fn gd_step(params: &Params, grads: &Gradients, mu: f64) -> Params {
    Params {
        w1: params.w1.sub(&grads.g1.scale(mu)).expect("shape"),
        w2: params.w2.sub(&grads.g2.scale(mu)).expect("shape"),
        wq: params.wq.sub(&grads.gq.scale(mu)).expect("shape"),
        wk: params.wk.sub(&grads.gk.scale(mu)).expect("shape"),
        wv: params.wv.sub(&grads.gv.scale(mu)).expect("shape"),
        wu: params.wu.sub(&grads.gu.scale(mu)).expect("shape"),
    }
}

/// Resolves a learning-rate directive at the initial weights.
pub fn resolve_mu(
    lr: LearningRate,
    params0: &Params,
    data: &Dataset,
    cfg: &ModelConfig,
) -> Result<f64, TrainError> {
    match lr {
        LearningRate::Fixed(mu) => Ok(mu),
        LearningRate::Theory => {
            let report = theory::constants(params0, data, cfg)
                .map_err(|e| TrainError::InvalidSpec(format!("theory constants failed: {e}")))?;
            if !report.mu_theory.is_finite() || report.mu_theory <= 0.0 {
                return Err(TrainError::DegenerateTheoryRate(report.mu_theory));
            }
            Ok(report.mu_theory)
        }
        LearningRate::Practical => practical_mu(params0, data, cfg),
    }
}

/// Doubling line search: grow `mu` from 1e-6 until the first step that does
/// not decrease the loss, then take half of it.
fn practical_mu(params0: &Params, data: &Dataset, cfg: &ModelConfig) -> Result<f64, TrainError> {
    let base = loss(params0, data, cfg)?;
    let grads = grad_all(params0, data, cfg)?;
    if grads.global_norm() == 0.0 {
        return Ok(1e-6); // already stationary, any rate is a fixed point
    }
    let trial =
        |mu: f64| -> Result<f64, TrainError> { Ok(loss(&gd_step(params0, &grads, mu), data, cfg)?) };
    let mut mu = 1e-6;
    let mut shrink_budget = 60;
    while !(trial(mu)?.is_finite() && trial(mu)? < base) && shrink_budget > 0 {
        mu /= 2.0;
        shrink_budget -= 1;
    }
    let mut grow_budget = 80;
    loop {
        let next = mu * 2.0;
        let l = trial(next)?;
        if !l.is_finite() || l >= base || grow_budget == 0 {
            return Ok(mu);
        }
        mu = next;
        grow_budget -= 1;
    }
}

/// Runs exactly `spec.steps` descent updates, recording the trace at stride
/// `spec.record_every` (step 0 and the final step are always recorded).
pub fn train(data: &Dataset, cfg: &ModelConfig, spec: &TrainSpec) -> Result<TrainResult, TrainError> {
    cfg.validate()?;
    data.check_shapes(cfg)?;
    spec.validate()?;

    let params0 = init_params(cfg, &spec.init, spec.seed);
    params0.check_shapes(cfg)?;
    let mu = resolve_mu(spec.mu, &params0, data, cfg)?;

    let mut params = params0.clone();
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut snapshots: Vec<Params> = Vec::new();
    for t in 0..=spec.steps {
        let phi = loss(&params, data, cfg)?;
        if !phi.is_finite() {
            let trace = finish_trace(rows, snapshots, &params0, mu, spec.seed);
            return Err(TrainError::NonFiniteLoss { step: t, trace });
        }
        let grads = grad_all(&params, data, cfg)?;
        if t % spec.record_every == 0 || t == spec.steps {
            let norms = grads.per_matrix_norms(); // (w1, w2, wu, wv, wq, wk)
            rows.push(TraceRow {
                t,
                phi,
                grad_norm: grads.global_norm(),
                g1: norms[0],
                g2: norms[1],
                gu: norms[2],
                gv: norms[3],
                gq: norms[4],
                gk: norms[5],
                theta_dist: 0.0,
            });
            snapshots.push(params.clone());
        }
        if t < spec.steps {
            params = gd_step(&params, &grads, mu);
        }
    }

    for (row, snap) in rows.iter_mut().zip(&snapshots) {
        row.theta_dist = snap.theta_distance(&params);
    }
    let trace = LossTrace { rows, mu, seed: spec.seed };
    Ok(TrainResult { trace, params0, params_final: params, mu })
}

/// Fills distances against the last finite iterate when a run aborts.
fn finish_trace(
    mut rows: Vec<TraceRow>,
    snapshots: Vec<Params>,
    fallback: &Params,
    mu: f64,
    seed: u64,
) -> LossTrace {
    let last = snapshots.last().cloned().unwrap_or_else(|| fallback.clone());
    for (row, snap) in rows.iter_mut().zip(&snapshots) {
        row.theta_dist = snap.theta_distance(&last);
    }
    LossTrace { rows, mu, seed }
}

/// Fitted per-step loss ratio.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Per-step geometric ratio, `exp` of the least-squares slope of
    /// `log phi` against `t`.
    pub rho: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least-squares fit of `log phi_t` against `t` over the recorded
/// positive-loss points.
pub fn fit_linear_rate(trace: &LossTrace) -> Result<RateFit, RateFitError> {
    let pts: Vec<(f64, f64)> =
        trace.rows.iter().filter(|r| r.phi > 0.0).map(|r| (r.t as f64, r.phi.ln())).collect();
    if pts.is_empty() {
        return Err(RateFitError::AlreadyConverged);
    }
    if pts.len() < 10 {
        return Err(RateFitError::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, y) in &pts {
        sxy += (t - tbar) * (y - ybar);
        sxx += (t - tbar) * (t - tbar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * tbar;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, y) in &pts {
        let pred = intercept + slope * t;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - ybar) * (y - ybar);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { rho: slope.exp(), r_squared, points_used: pts.len() })
}
