//! Closed-form gradients of the training loss with respect to all six
//! weight matrices, an independent central-difference oracle, and a
//! gradient-check report comparing the two.
//!
//! The analytic path follows the chain rule through
//! `F = (phi(Z W1) W2 + beta Z) Wu` with `Z = Attn(X) + beta X`. Writing
//! `R = F - Y`, `D = R Wu^T` and `S = phi'(Z W1) . (D W2^T)` (entry-wise
//! product), the per-sample contributions are
//!
//! ```text
//! dWu = (phi(Z W1) W2 + beta Z)^T R
//! dW2 = phi(Z W1)^T D
//! dW1 = Z^T S
//! dWv = X^T P^T T            with T = S W1^T + beta D, P the attention map
//! dWq = X^T G X Wk / sqrt(d_qk)
//! dWk = X^T G^T X Wq / sqrt(d_qk)
//! ```
//!
//! where row `i` of `G` is `u_i J_i`, `u_i` the `i`-th row of `T (X Wv)^T`
//! and `J_i = diag(s_i) - s_i^T s_i` the softmax Jacobian at attention row
//! `s_i`. The `1/sqrt(d_qk)` factor comes from differentiating the scaled
//! logits; the finite-difference oracle pins it down.

use thiserror::Error;

use crate::matrix::Matrix;
use crate::model::{
    activation_apply, activation_derivative, forward, loss, Activation, Dataset, ModelConfig,
    ModelError, Params, WEIGHT_LABELS,
};
use crate::rng::Rng;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum GradError {
    #[error("finite-difference step {0} outside [1e-8, 1e-3]")]
    BadStep(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Gradient of the loss for each weight matrix; shapes match [`Params`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub g1: Matrix,
    pub g2: Matrix,
    pub gq: Matrix,
    pub gk: Matrix,
    pub gv: Matrix,
    pub gu: Matrix,
}

impl Gradients {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let p = Params::zeros(cfg);
        Self { g1: p.w1, g2: p.w2, gq: p.wq, gk: p.wk, gv: p.wv, gu: p.wu }
    }

    /// Blocks in the parameter-vector order `(w1, w2, wu, wv, wq, wk)`.
    pub fn ordered(&self) -> [&Matrix; 6] {
        [&self.g1, &self.g2, &self.gu, &self.gv, &self.gq, &self.gk]
    }

    /// Per-matrix Frobenius norms, in parameter-vector order.
    pub fn per_matrix_norms(&self) -> [f64; 6] {
        let o = self.ordered();
        [
            o[0].frobenius_norm(),
            o[1].frobenius_norm(),
            o[2].frobenius_norm(),
            o[3].frobenius_norm(),
            o[4].frobenius_norm(),
            o[5].frobenius_norm(),
        ]
    }

    /// Euclidean norm of the stacked gradient vector.
    pub fn global_norm(&self) -> f64 {
        self.ordered().iter().map(|g| g.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn to_theta(&self) -> Vec<f64> {
        let mut theta = Vec::new();
        for g in self.ordered() {
            for j in 0..g.cols() {
                for i in 0..g.rows() {
                    theta.push(g.get(i, j));
                }
            }
        }
        theta
    }

    pub fn is_finite(&self) -> bool {
        self.ordered().iter().all(|g| g.is_finite())
    }
}

/// Analytic gradients of the loss at `params`, summed over all samples.
pub fn grad_all(params: &Params, data: &Dataset, cfg: &ModelConfig) -> Result<Gradients, GradError> {
    cfg.validate()?;
    params.check_shapes(cfg)?;
    data.check_shapes(cfg)?;

    let mut g = Gradients::zeros(cfg);
    let inv_sqrt_dqk = 1.0 / (cfg.d_qk as f64).sqrt();
    for (x, y) in data.xs.iter().zip(&data.ys) {
        let trace = forward(x, params, cfg)?;
        let residual = trace.output.sub(y).map_err(ModelError::from)?;

        let hidden = activation_apply(&trace.preact, cfg.activation);
        let mask = activation_derivative(&trace.preact, cfg.activation);

        // Unembedding: gradient flows straight from the residual stream.
        let stream = trace.ffn_out.add(&trace.z.scale(cfg.beta)).map_err(ModelError::from)?;
        g.gu = g.gu.add(&mm(&stream.transpose(), &residual)).map_err(ModelError::from)?;

        let d_stream = mm(&residual, &params.wu.transpose()); // M x d
        g.g2 = g.g2.add(&mm(&hidden.transpose(), &d_stream)).map_err(ModelError::from)?;

        let s_hidden =
            mask.hadamard(&mm(&d_stream, &params.w2.transpose())).map_err(ModelError::from)?;
        g.g1 = g.g1.add(&mm(&trace.z.transpose(), &s_hidden)).map_err(ModelError::from)?;

        // d loss / d Z: FFN path plus the outer residual site.
        let d_z = mm(&s_hidden, &params.w1.transpose())
            .add(&d_stream.scale(cfg.beta))
            .map_err(ModelError::from)?;

        let xt = x.transpose();
        g.gv =
            g.gv.add(&mm(&mm(&xt, &trace.attn_weights.transpose()), &d_z)).map_err(ModelError::from)?;

        // d loss / d attention-weights, then through each row's softmax
        // Jacobian: u J = s . (u - <u, s>).
        let d_weights = mm(&d_z, &mm(x, &params.wv).transpose()); // M x M
        let mut d_logits = Matrix::zeros(cfg.m, cfg.m);
        for i in 0..cfg.m {
            let s = trace.attn_weights.row(i);
            let u = d_weights.row(i);
            let dot: f64 = s.iter().zip(u).map(|(a, b)| a * b).sum();
            for j in 0..cfg.m {
                d_logits.set(i, j, s[j] * (u[j] - dot));
            }
        }
        let xt_dlogits = mm(&xt, &d_logits);
        g.gq =
            g.gq.add(&mm(&xt_dlogits, &mm(x, &params.wk)).scale(inv_sqrt_dqk))
                .map_err(ModelError::from)?;
        let xt_dlogits_t = mm(&xt, &d_logits.transpose());
        g.gk =
            g.gk.add(&mm(&xt_dlogits_t, &mm(x, &params.wq)).scale(inv_sqrt_dqk))
                .map_err(ModelError::from)?;
    }
    Ok(g)
}

/// Central-difference gradient `(L(w + h e) - L(w - h e)) / 2h` for every
/// scalar coordinate of every weight matrix. This is the oracle the analytic
/// path is validated against; it only ever calls the loss.
pub fn finite_diff_grad(
    params: &Params,
    data: &Dataset,
    cfg: &ModelConfig,
    h: f64,
) -> Result<Gradients, GradError> {
    if !(1e-8..=1e-3).contains(&h) {
        return Err(GradError::BadStep(h));
    }
    central_diff_over_params(params, h, |p| loss(p, data, cfg).expect("loss on perturbed params"))
}

/// Central differences of an arbitrary scalar function of the parameters.
pub(crate) fn central_diff_over_params(
    params: &Params,
    h: f64,
    f: impl Fn(&Params) -> f64,
) -> Result<Gradients, GradError> {
    let mut work = params.clone();
    let mut blocks: Vec<Matrix> = Vec::with_capacity(6);
    for b in 0..6 {
        let (rows, cols) = params.ordered()[b].shape();
        let mut block = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let orig = params.ordered()[b].get(i, j);
                work.ordered_mut()[b].set(i, j, orig + h);
                let plus = f(&work);
                work.ordered_mut()[b].set(i, j, orig - h);
                let minus = f(&work);
                work.ordered_mut()[b].set(i, j, orig);
                block.set(i, j, (plus - minus) / (2.0 * h));
            }
        }
        blocks.push(block);
    }
    // Ordered layout is (w1, w2, wu, wv, wq, wk).
    let mut it = blocks.into_iter();
    let g1 = it.next().unwrap();
    let g2 = it.next().unwrap();
    let gu = it.next().unwrap();
    let gv = it.next().unwrap();
    let gq = it.next().unwrap();
    let gk = it.next().unwrap();
    Ok(Gradients { g1, g2, gq, gk, gv, gu })
}

/// Relative disagreement between two gradient blocks:
/// `||a - n||_F / max(1e-12, ||a||_F + ||n||_F)`.
pub fn relative_error(analytic: &Matrix, numeric: &Matrix) -> f64 {
    let diff = analytic.sub(numeric).expect("shape").frobenius_norm();
    diff / (analytic.frobenius_norm() + numeric.frobenius_norm()).max(1e-12)
}

/// Per-matrix relative errors in parameter-vector order.
pub fn gradient_errors(analytic: &Gradients, numeric: &Gradients) -> [f64; 6] {
    let a = analytic.ordered();
    let n = numeric.ordered();
    let mut out = [0.0; 6];
    for b in 0..6 {
        out[b] = relative_error(a[b], n[b]);
    }
    out
}

/// Outcome of one analytic-vs-numeric comparison.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// `(label, max relative error)` per weight matrix.
    pub per_matrix: [(&'static str, f64); 6],
    pub h: f64,
    pub tol: f64,
    pub pass: bool,
    pub config: ModelConfig,
    /// Times the FFN input weights were redrawn to clear ReLU kinks.
    pub kink_resamples: usize,
}

impl GradCheckReport {
    pub fn worst(&self) -> (&'static str, f64) {
        *self.per_matrix.iter().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap()
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "h {:.16e}", self.h)?;
        writeln!(f, "tol {:.16e}", self.tol)?;
        writeln!(f, "kink_resamples {}", self.kink_resamples)?;
        for (label, err) in &self.per_matrix {
            writeln!(f, "{label} {err:.16e}")?;
        }
        write!(f, "pass {}", self.pass)
    }
}

/// Runs both gradient paths and reports the per-matrix disagreement.
///
/// With the ReLU activation, coordinates whose preactivations sit within
/// `10 h` of the kink would poison the comparison; the FFN input weights are
/// redrawn (deterministically) until every preactivation clears that margin.
pub fn grad_check(
    params: &Params,
    data: &Dataset,
    cfg: &ModelConfig,
    tol: f64,
) -> Result<GradCheckReport, GradError> {
    let h = DEFAULT_FD_STEP;
    let mut params = params.clone();
    let mut kink_resamples = 0usize;
    if cfg.activation == Activation::ReLU {
        let margin = 10.0 * h;
        let scale = {
            let w = &params.w1;
            let rms = w.frobenius_norm() / ((w.rows() * w.cols()) as f64).sqrt();
            if rms > 0.0 {
                rms
            } else {
                1.0
            }
        };
        let mut attempt = 0u64;
        while min_abs_preactivation(&params, data, cfg)? < margin && attempt < 50 {
            let mut rng = Rng::new(0xA11C_E000 + attempt);
            params.w1 = rng.gaussian_matrix(cfg.d, cfg.d1, scale);
            kink_resamples += 1;
            attempt += 1;
        }
    }

    let analytic = grad_all(&params, data, cfg)?;
    let numeric = finite_diff_grad(&params, data, cfg, h)?;
    let errs = gradient_errors(&analytic, &numeric);
    let mut per_matrix = [("", 0.0f64); 6];
    for b in 0..6 {
        per_matrix[b] = (WEIGHT_LABELS[b], errs[b]);
    }
    let pass = errs.iter().all(|e| *e <= tol);
    Ok(GradCheckReport { per_matrix, h, tol, pass, config: *cfg, kink_resamples })
}

fn min_abs_preactivation(params: &Params, data: &Dataset, cfg: &ModelConfig) -> Result<f64, GradError> {
    let mut min = f64::INFINITY;
    for x in &data.xs {
        let trace = forward(x, params, cfg)?;
        for v in trace.preact.data() {
            min = min.min(v.abs());
        }
    }
    Ok(min)
}

fn mm(a: &Matrix, b: &Matrix) -> Matrix {
    a.matmul(b).expect("internal shape invariant")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{softmax_jacobian, softmax_rows, Dataset};

    fn config(
        m: usize,
        d: usize,
        d_qk: usize,
        d1: usize,
        n: usize,
        p: usize,
        beta: f64,
        act: Activation,
    ) -> ModelConfig {
        ModelConfig { m, d, d_qk, d1, n, p, beta, activation: act }
    }

    fn random_instance(cfg: &ModelConfig, seed: u64, weight_scale: f64) -> (Params, Dataset) {
        let mut rng = Rng::new(seed);
        let params = Params {
            w1: rng.gaussian_matrix(cfg.d, cfg.d1, weight_scale),
            w2: rng.gaussian_matrix(cfg.d1, cfg.d, weight_scale),
            wq: rng.gaussian_matrix(cfg.d, cfg.d_qk, weight_scale),
            wk: rng.gaussian_matrix(cfg.d, cfg.d_qk, weight_scale),
            wv: rng.gaussian_matrix(cfg.d, cfg.d, weight_scale),
            wu: rng.gaussian_matrix(cfg.d, cfg.n, weight_scale),
        };
        let xs: Vec<Matrix> = (0..cfg.p).map(|_| rng.gaussian_matrix(cfg.m, cfg.d, 1.0)).collect();
        let ys: Vec<Matrix> = (0..cfg.p).map(|_| rng.gaussian_matrix(cfg.m, cfg.n, 1.0)).collect();
        (params, Dataset::new(xs, ys).unwrap())
    }

    #[test]
    fn gradients_vanish_at_global_minimum() {
        let cfg = config(3, 2, 2, 4, 2, 2, 1.0, Activation::ReLU);
        let (params, mut data) = random_instance(&cfg, 21, 0.6);
        for (x, y) in data.xs.iter().zip(data.ys.iter_mut()) {
            *y = forward(x, &params, &cfg).unwrap().output;
        }
        let g = grad_all(&params, &data, &cfg).unwrap();
        for block in g.ordered() {
            assert_eq!(block.max_abs(), 0.0);
        }
    }

    #[test]
    fn dead_relu_zeroes_ffn_gradients() {
        let cfg = config(3, 2, 2, 4, 2, 1, 1.0, Activation::ReLU);
        let mut rng = Rng::new(22);
        // Uniform attention with Wv = 0 makes Z = X; positive X and negative
        // W1 drive every preactivation below zero.
        let params = Params {
            w1: Matrix::from_fn(cfg.d, cfg.d1, |_, _| -(1.0 + rng.next_f64())),
            w2: rng.gaussian_matrix(cfg.d1, cfg.d, 0.5),
            wq: Matrix::zeros(cfg.d, cfg.d_qk),
            wk: Matrix::zeros(cfg.d, cfg.d_qk),
            wv: Matrix::zeros(cfg.d, cfg.d),
            wu: rng.gaussian_matrix(cfg.d, cfg.n, 0.5),
        };
        let x = Matrix::from_fn(cfg.m, cfg.d, |_, _| 0.1 + rng.next_f64());
        let y = rng.gaussian_matrix(cfg.m, cfg.n, 1.0);
        let data = Dataset::new(vec![x], vec![y]).unwrap();
        let g = grad_all(&params, &data, &cfg).unwrap();
        assert_eq!(g.g1.max_abs(), 0.0);
        assert_eq!(g.g2.max_abs(), 0.0);
        assert!(g.gu.max_abs() > 0.0);
    }

    #[test]
    fn finite_differences_recover_quadratic_gradient() {
        let cfg = config(2, 2, 1, 3, 2, 1, 1.0, Activation::ReLU);
        let (params, _) = random_instance(&cfg, 23, 0.8);
        // 1/2 ||theta||^2 has gradient theta.
        let g = central_diff_over_params(&params, 1e-5, |p| {
            0.5 * p.to_theta().iter().map(|v| v * v).sum::<f64>()
        })
        .unwrap();
        for (gb, pb) in g.ordered().iter().zip(params.ordered()) {
            for (a, b) in gb.data().iter().zip(pb.data()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn analytic_matches_finite_differences_smoothed() {
        let cfg = config(4, 3, 2, 5, 2, 2, 0.7, Activation::smoothed_default());
        let (params, data) = random_instance(&cfg, 24, 0.6);
        let report = grad_check(&params, &data, &cfg, 1e-6).unwrap();
        assert!(report.pass, "{report}");
        assert_eq!(report.kink_resamples, 0);
    }

    #[test]
    fn analytic_matches_finite_differences_relu_campaign() {
        let mut worst = 0.0f64;
        for (i, seed) in (31u64..36).enumerate() {
            let cfg = config(
                2 + i % 4,
                2 + i % 3,
                1 + i % 3,
                3 + i,
                1 + i % 3,
                1 + i % 3,
                (i as f64) * 0.25,
                Activation::ReLU,
            );
            let (params, data) = random_instance(&cfg, seed, 0.6);
            let report = grad_check(&params, &data, &cfg, 1e-5).unwrap();
            assert!(report.pass, "config {cfg:?}: {report}");
            worst = worst.max(report.worst().1);
        }
        assert!(worst <= 1e-5);
    }

    #[test]
    fn corrupted_gradient_is_flagged_on_the_right_matrix() {
        let cfg = config(3, 2, 2, 4, 2, 1, 1.0, Activation::smoothed_default());
        let (params, data) = random_instance(&cfg, 25, 0.6);
        let mut analytic = grad_all(&params, &data, &cfg).unwrap();
        analytic.gk = analytic.gk.scale(2.0);
        let numeric = finite_diff_grad(&params, &data, &cfg, DEFAULT_FD_STEP).unwrap();
        let errs = gradient_errors(&analytic, &numeric);
        // wk is the last block in parameter order.
        for (b, err) in errs.iter().enumerate() {
            if WEIGHT_LABELS[b] == "wk" {
                assert!(*err > 0.1, "wk error {err}");
            } else {
                assert!(*err < 1e-5, "{} error {err}", WEIGHT_LABELS[b]);
            }
        }
    }

    #[test]
    fn directional_derivatives_agree_with_gradient() {
        let cfg = config(3, 3, 2, 4, 2, 2, 1.0, Activation::smoothed_default());
        let (params, data) = random_instance(&cfg, 26, 0.5);
        let g = grad_all(&params, &data, &cfg).unwrap().to_theta();
        let base = loss(&params, &data, &cfg).unwrap();
        let mut rng = Rng::new(27);
        let dim = params.theta_dim();
        for _ in 0..10 {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= norm;
            }
            let eps = 1e-6;
            let perturbed = add_direction(&params, &v, eps);
            let fd = (loss(&perturbed, &data, &cfg).unwrap() - base) / eps;
            let dot: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((fd - dot).abs() <= 1e-4 * dot.abs().max(1.0), "fd {fd} vs {dot}");
        }
    }

    /// Adds `eps * v` to the parameter vector, respecting the column-major
    /// block layout of `to_theta`.
    fn add_direction(params: &Params, v: &[f64], eps: f64) -> Params {
        let mut out = params.clone();
        let mut idx = 0;
        for b in 0..6 {
            let (rows, cols) = params.ordered()[b].shape();
            for j in 0..cols {
                for i in 0..rows {
                    let cur = out.ordered()[b].get(i, j);
                    out.ordered_mut()[b].set(i, j, cur + eps * v[idx]);
                    idx += 1;
                }
            }
        }
        out
    }

    /// Assembles the six published gradient formulas directly from model
    /// primitives (explicit softmax Jacobians, row-indexed sums) and checks
    /// the optimised path reproduces them term for term at beta = 1.
    #[test]
    fn textbook_assembly_matches_grad_all_at_beta_one() {
        let cfg = config(4, 3, 2, 5, 3, 2, 1.0, Activation::ReLU);
        let (params, data) = random_instance(&cfg, 28, 0.6);
        let fast = grad_all(&params, &data, &cfg).unwrap();
        let scale = 1.0 / (cfg.d_qk as f64).sqrt();

        let mut t1 = Matrix::zeros(cfg.d, cfg.d1);
        let mut t2 = Matrix::zeros(cfg.d1, cfg.d);
        let mut tu = Matrix::zeros(cfg.d, cfg.n);
        let mut tv = Matrix::zeros(cfg.d, cfg.d);
        let mut tq = Matrix::zeros(cfg.d, cfg.d_qk);
        let mut tk = Matrix::zeros(cfg.d, cfg.d_qk);

        for (x, y) in data.xs.iter().zip(&data.ys) {
            let trace = forward(x, &params, &cfg).unwrap();
            let r = trace.output.sub(y).unwrap();
            let z = &trace.z;
            let hidden = activation_apply(&trace.preact, cfg.activation);
            let mask = activation_derivative(&trace.preact, cfg.activation);
            let softmax_map = softmax_rows(&crate::model::attention_logits(x, &params, &cfg).unwrap());

            // dW1 = Z^T (phi' . (R Wu^T W2^T))
            let inner = mask
                .hadamard(
                    &r.matmul(&params.wu.transpose()).unwrap().matmul(&params.w2.transpose()).unwrap(),
                )
                .unwrap();
            t1 = t1.add(&z.transpose().matmul(&inner).unwrap()).unwrap();

            // dW2 = phi(Z W1)^T R Wu^T
            t2 = t2
                .add(&hidden.transpose().matmul(&r).unwrap().matmul(&params.wu.transpose()).unwrap())
                .unwrap();

            // dWu = (phi(Z W1) W2 + Z)^T R
            let stream = hidden.matmul(&params.w2).unwrap().add(z).unwrap();
            tu = tu.add(&stream.transpose().matmul(&r).unwrap()).unwrap();

            // dWv = X^T S^T (phi' . (R Wu^T W2^T)) W1^T + X^T S^T R Wu^T
            let xs_t = x.transpose().matmul(&softmax_map.transpose()).unwrap();
            tv = tv.add(&xs_t.matmul(&inner).unwrap().matmul(&params.w1.transpose()).unwrap()).unwrap();
            tv = tv.add(&xs_t.matmul(&r).unwrap().matmul(&params.wu.transpose()).unwrap()).unwrap();

            // Row-indexed dWq / dWk with explicit Jacobian matrices.
            for i in 0..cfg.m {
                let jac = softmax_jacobian(softmax_map.row(i)).unwrap();
                let xi = Matrix::new(1, cfg.d, x.row(i).to_vec()).unwrap(); // X(i,:)
                let ri = Matrix::new(1, cfg.n, r.row(i).to_vec()).unwrap();
                let inner_i = Matrix::new(1, cfg.d1, inner.row(i).to_vec()).unwrap();

                // First term: X(i,:)^T (R(i,:) Wu^T Wv^T X^T J) X Wk / sqrt(d_qk)
                let row_a = ri
                    .matmul(&params.wu.transpose())
                    .unwrap()
                    .matmul(&params.wv.transpose())
                    .unwrap()
                    .matmul(&x.transpose())
                    .unwrap()
                    .matmul(&jac)
                    .unwrap(); // 1 x M
                               // Second term routes through the FFN mask.
                let row_b = inner_i
                    .matmul(&params.w1.transpose())
                    .unwrap()
                    .matmul(&params.wv.transpose())
                    .unwrap()
                    .matmul(&x.transpose())
                    .unwrap()
                    .matmul(&jac)
                    .unwrap(); // 1 x M
                let row = row_a.add(&row_b).unwrap();

                let dq = xi
                    .transpose()
                    .matmul(&row.matmul(x).unwrap().matmul(&params.wk).unwrap())
                    .unwrap()
                    .scale(scale);
                tq = tq.add(&dq).unwrap();

                let dk = x
                    .transpose()
                    .matmul(&row.transpose())
                    .unwrap()
                    .matmul(&xi.matmul(&params.wq).unwrap())
                    .unwrap()
                    .scale(scale);
                tk = tk.add(&dk).unwrap();
            }
        }

        let textbook = Gradients { g1: t1, g2: t2, gq: tq, gk: tk, gv: tv, gu: tu };
        for (a, b) in fast.ordered().iter().zip(textbook.ordered()) {
            let diff = a.sub(b).unwrap().max_abs();
            let scale = a.max_abs().max(1.0);
            assert!(diff <= 1e-13 * scale, "diff {diff}");
        }
    }
}
