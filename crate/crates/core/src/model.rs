//! Forward semantics of the single-layer network under study.
//!
//! For an input `X` of shape `M x d` the model computes
//!
//! ```text
//! Attn(X) = softmax(X Wq Wk^T X^T / sqrt(d_qk)) X Wv
//! Z(X)    = Attn(X) + beta * X
//! F(X)    = (phi(Z Wk1) W2 + beta * Z) Wu
//! ```
//!
//! where `phi` is the activation, `beta` in `[0, 1]` scales both residual
//! sites (`beta = 1` is the plain residual architecture, `beta = 0` removes
//! the residual paths entirely), and the row-wise softmax is evaluated with
//! per-row max subtraction so large logits cannot overflow.
//!
//! Training minimises the squared Frobenius loss
//! `L = 1/2 * sum_p ||F(X_p) - Y_p||_F^2` over `P` samples.

use thiserror::Error;

use crate::matrix::{Matrix, MatrixError};
use crate::special::{normal_cdf, normal_pdf};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what}: expected shape {expected_rows}x{expected_cols}, got {got_rows}x{got_cols}")]
    ShapeMismatch {
        what: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("softmax jacobian input is not a probability row: entry {index} = {value}, row sum {sum}")]
    NotProbabilityRow { index: usize, value: f64, sum: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Element-wise activation of the feedforward block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `max(0, x)`; the derivative at exactly zero is taken to be zero.
    ReLU,
    /// Gaussian-smoothed ReLU with smoothing width `tau`:
    /// `x * Phi(x/tau) + tau * phi(x/tau)`, a C^1, non-decreasing,
    /// 1-Lipschitz approximation whose exact derivative is `Phi(x/tau)`.
    SmoothedReLU { tau: f64 },
}

impl Activation {
    pub const DEFAULT_TAU: f64 = 0.05;

    pub fn smoothed_default() -> Self {
        Activation::SmoothedReLU { tau: Self::DEFAULT_TAU }
    }

    #[inline]
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => x.max(0.0),
            Activation::SmoothedReLU { tau } => {
                let u = x / tau;
                x * normal_cdf(u) + tau * normal_pdf(u)
            }
        }
    }

    #[inline]
    pub fn derivative_scalar(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::SmoothedReLU { tau } => normal_cdf(x / tau),
        }
    }
}

/// Applies the activation entry-wise.
pub fn activation_apply(a: &Matrix, kind: Activation) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| kind.apply_scalar(a.get(i, j)))
}

/// Entry-wise derivative of the activation.
pub fn activation_derivative(a: &Matrix, kind: Activation) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| kind.derivative_scalar(a.get(i, j)))
}

/// Architecture dimensions and the residual coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Token count M.
    pub m: usize,
    /// Embedding dimension d.
    pub d: usize,
    /// Query/key dimension.
    pub d_qk: usize,
    /// Hidden width of the feedforward block.
    pub d1: usize,
    /// Output (vocabulary) dimension N.
    pub n: usize,
    /// Sample count P.
    pub p: usize,
    /// Residual coefficient in `[0, 1]`.
    pub beta: f64,
    pub activation: Activation,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.m == 0 || self.d == 0 || self.d_qk == 0 || self.d1 == 0 || self.n == 0 || self.p == 0 {
            return Err(ModelError::InvalidConfig(format!(
                "all dimensions must be >= 1, got m={} d={} d_qk={} d1={} n={} p={}",
                self.m, self.d, self.d_qk, self.d1, self.n, self.p
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) || !self.beta.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if let Activation::SmoothedReLU { tau } = self.activation {
            if !(tau > 0.0) {
                return Err(ModelError::InvalidConfig(format!(
                    "smoothing width must be positive, got {tau}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// The six weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// `d x d1`
    pub w1: Matrix,
    /// `d1 x d`
    pub w2: Matrix,
    /// `d x d_qk`
    pub wq: Matrix,
    /// `d x d_qk`
    pub wk: Matrix,
    /// `d x d`
    pub wv: Matrix,
    /// `d x n`
    pub wu: Matrix,
}

/// Weight labels, in the vectorisation order used for the parameter vector.
pub const WEIGHT_LABELS: [&str; 6] = ["w1", "w2", "wu", "wv", "wq", "wk"];

impl Params {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            w1: Matrix::zeros(cfg.d, cfg.d1),
            w2: Matrix::zeros(cfg.d1, cfg.d),
            wq: Matrix::zeros(cfg.d, cfg.d_qk),
            wk: Matrix::zeros(cfg.d, cfg.d_qk),
            wv: Matrix::zeros(cfg.d, cfg.d),
            wu: Matrix::zeros(cfg.d, cfg.n),
        }
    }

    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        let expect = |what, m: &Matrix, rows, cols| {
            if m.shape() != (rows, cols) {
                Err(ModelError::ShapeMismatch {
                    what,
                    expected_rows: rows,
                    expected_cols: cols,
                    got_rows: m.rows(),
                    got_cols: m.cols(),
                })
            } else {
                Ok(())
            }
        };
        expect("w1", &self.w1, cfg.d, cfg.d1)?;
        expect("w2", &self.w2, cfg.d1, cfg.d)?;
        expect("wq", &self.wq, cfg.d, cfg.d_qk)?;
        expect("wk", &self.wk, cfg.d, cfg.d_qk)?;
        expect("wv", &self.wv, cfg.d, cfg.d)?;
        expect("wu", &self.wu, cfg.d, cfg.n)?;
        Ok(())
    }

    /// Weights in vectorisation order `(w1, w2, wu, wv, wq, wk)`.
    pub fn ordered(&self) -> [&Matrix; 6] {
        [&self.w1, &self.w2, &self.wu, &self.wv, &self.wq, &self.wk]
    }

    pub fn ordered_mut(&mut self) -> [&mut Matrix; 6] {
        [&mut self.w1, &mut self.w2, &mut self.wu, &mut self.wv, &mut self.wq, &mut self.wk]
    }

    /// Stacks `vec(W1), vec(W2), vec(Wu), vec(Wv), vec(Wq), vec(Wk)` with
    /// each block in column-major order.
    pub fn to_theta(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.theta_dim());
        for w in self.ordered() {
            for j in 0..w.cols() {
                for i in 0..w.rows() {
                    theta.push(w.get(i, j));
                }
            }
        }
        theta
    }

    pub fn theta_dim(&self) -> usize {
        self.ordered().iter().map(|w| w.rows() * w.cols()).sum()
    }

    /// Euclidean distance between parameter vectors.
    pub fn theta_distance(&self, other: &Params) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.ordered().iter().zip(other.ordered()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                let diff = x - y;
                acc += diff * diff;
            }
        }
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.ordered().iter().all(|w| w.is_finite())
    }
}

/// Supervised dataset: `P` inputs of shape `M x d` and targets `M x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub xs: Vec<Matrix>,
    pub ys: Vec<Matrix>,
}

impl Dataset {
    pub fn new(xs: Vec<Matrix>, ys: Vec<Matrix>) -> Result<Self, ModelError> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(ModelError::InvalidConfig(format!(
                "dataset needs matching non-empty sample lists, got {} inputs and {} targets",
                xs.len(),
                ys.len()
            )));
        }
        let ds = Self { xs, ys };
        let (xr, xc) = ds.xs[0].shape();
        let (yr, yc) = ds.ys[0].shape();
        for x in &ds.xs {
            if x.shape() != (xr, xc) {
                return Err(ModelError::InvalidConfig("inputs must share one shape".into()));
            }
        }
        for y in &ds.ys {
            if y.shape() != (yr, yc) {
                return Err(ModelError::InvalidConfig("targets must share one shape".into()));
            }
        }
        if xr != yr {
            return Err(ModelError::InvalidConfig(
                "inputs and targets must share the token count".into(),
            ));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        if self.len() != cfg.p {
            return Err(ModelError::InvalidConfig(format!(
                "dataset has {} samples but config declares p={}",
                self.len(),
                cfg.p
            )));
        }
        for x in &self.xs {
            if x.shape() != (cfg.m, cfg.d) {
                return Err(ModelError::ShapeMismatch {
                    what: "dataset input",
                    expected_rows: cfg.m,
                    expected_cols: cfg.d,
                    got_rows: x.rows(),
                    got_cols: x.cols(),
                });
            }
        }
        for y in &self.ys {
            if y.shape() != (cfg.m, cfg.n) {
                return Err(ModelError::ShapeMismatch {
                    what: "dataset target",
                    expected_rows: cfg.m,
                    expected_cols: cfg.n,
                    got_rows: y.rows(),
                    got_cols: y.cols(),
                });
            }
        }
        Ok(())
    }
}

/// Everything the forward pass produces, kept for gradient computations and
/// spectral probes.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `Attn(X)`, `M x d`.
    pub attn: Matrix,
    /// `Z(X) = Attn(X) + beta X`, `M x d`.
    pub z: Matrix,
    /// `Z W1`, `M x d1`.
    pub preact: Matrix,
    /// `phi(Z W1) W2`, `M x d`.
    pub ffn_out: Matrix,
    /// `F(X)`, `M x n`.
    pub output: Matrix,
    /// Row-stochastic attention map, `M x M`.
    pub attn_weights: Matrix,
}

/// Row-wise softmax with per-row max subtraction.
pub fn softmax_rows(a: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for i in 0..a.rows() {
        let row = a.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out.set(i, j, e);
            sum += e;
        }
        for j in 0..a.cols() {
            out.set(i, j, out.get(i, j) / sum);
        }
    }
    out
}

/// Jacobian `diag(s) - s^T s` of the softmax at an output row `s`.
///
/// The input must be a strict probability row: entries in `(0, 1)` and sum
/// within `1e-10` of one.
pub fn softmax_jacobian(s: &[f64]) -> Result<Matrix, ModelError> {
    let sum: f64 = s.iter().sum();
    for (index, &value) in s.iter().enumerate() {
        if !(value > 0.0 && value < 1.0) {
            return Err(ModelError::NotProbabilityRow { index, value, sum });
        }
    }
    if (sum - 1.0).abs() > 1e-10 {
        return Err(ModelError::NotProbabilityRow { index: 0, value: s[0], sum });
    }
    let m = s.len();
    Ok(Matrix::from_fn(m, m, |i, j| {
        let delta = if i == j { s[i] } else { 0.0 };
        delta - s[i] * s[j]
    }))
}

/// Attention logits `X Wq Wk^T X^T / sqrt(d_qk)`.
pub fn attention_logits(x: &Matrix, params: &Params, cfg: &ModelConfig) -> Result<Matrix, ModelError> {
    check_input(x, cfg)?;
    params.check_shapes(cfg)?;
    let scale = 1.0 / (cfg.d_qk as f64).sqrt();
    let q = x.matmul(&params.wq)?;
    let k = x.matmul(&params.wk)?;
    Ok(q.matmul(&k.transpose())?.scale(scale))
}

/// `softmax(X Wq Wk^T X^T / sqrt(d_qk)) X Wv`.
pub fn attention(x: &Matrix, params: &Params, cfg: &ModelConfig) -> Result<Matrix, ModelError> {
    let weights = softmax_rows(&attention_logits(x, params, cfg)?);
    Ok(weights.matmul(x)?.matmul(&params.wv)?)
}

/// Full forward pass; see the module docs for the composition.
pub fn forward(x: &Matrix, params: &Params, cfg: &ModelConfig) -> Result<ForwardTrace, ModelError> {
    let logits = attention_logits(x, params, cfg)?;
    let attn_weights = softmax_rows(&logits);
    let attn = attn_weights.matmul(x)?.matmul(&params.wv)?;
    let z = attn.add(&x.scale(cfg.beta))?;
    let preact = z.matmul(&params.w1)?;
    let hidden = activation_apply(&preact, cfg.activation);
    let ffn_out = hidden.matmul(&params.w2)?;
    let residual_stream = ffn_out.add(&z.scale(cfg.beta))?;
    let output = residual_stream.matmul(&params.wu)?;
    Ok(ForwardTrace { attn, z, preact, ffn_out, output, attn_weights })
}

/// `1/2 * sum_p ||F(X_p) - Y_p||_F^2`.
pub fn loss(params: &Params, data: &Dataset, cfg: &ModelConfig) -> Result<f64, ModelError> {
    data.check_shapes(cfg)?;
    let mut acc = 0.0;
    for (x, y) in data.xs.iter().zip(&data.ys) {
        let f = forward(x, params, cfg)?.output;
        let diff = f.sub(y)?;
        let fro = diff.frobenius_norm();
        acc += fro * fro;
    }
    Ok(0.5 * acc)
}

/// Same loss evaluated on the vertically stacked outputs/targets, i.e. the
/// vectorised least-squares form. Agrees with [`loss`] up to round-off.
pub fn loss_stacked(params: &Params, data: &Dataset, cfg: &ModelConfig) -> Result<f64, ModelError> {
    data.check_shapes(cfg)?;
    let outputs: Vec<Matrix> =
        data.xs.iter().map(|x| forward(x, params, cfg).map(|t| t.output)).collect::<Result<_, _>>()?;
    let refs: Vec<&Matrix> = outputs.iter().collect();
    let stacked_f = Matrix::vstack(&refs)?;
    let yrefs: Vec<&Matrix> = data.ys.iter().collect();
    let stacked_y = Matrix::vstack(&yrefs)?;
    let resid = stacked_f.sub(&stacked_y)?;
    // ||vec(R)||_2 is the Frobenius norm of R.
    let norm = resid.frobenius_norm();
    Ok(0.5 * norm * norm)
}

fn check_input(x: &Matrix, cfg: &ModelConfig) -> Result<(), ModelError> {
    cfg.validate()?;
    if x.shape() != (cfg.m, cfg.d) {
        return Err(ModelError::ShapeMismatch {
            what: "input",
            expected_rows: cfg.m,
            expected_cols: cfg.d,
            got_rows: x.rows(),
            got_cols: x.cols(),
        });
    }
    Ok(())
}
