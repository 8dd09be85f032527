//! Experiment orchestration: synthetic data, sliding-window CSV ingestion,
//! residual ablations, sweeps over the residual coefficient, rank-collapse
//! demonstrations, and plot-ready CSV emission.
//!
//! Every experiment is a pure function of its spec and seed; the functions
//! here return rendered file contents so callers decide where (and whether)
//! to write them. [`write_outputs`] enforces the no-overwrite policy.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::matrix::Matrix;
use crate::model::{forward, Dataset, ModelConfig, ModelError, Params};
use crate::optimizer::{
    fit_linear_rate, init_params, train, InitScheme, LossTrace, RateFitError, TrainError, TrainSpec,
};
use crate::rng::Rng;
use crate::theory::{self, TheoryError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("output file {path} already exists; pass force to overwrite")]
    PathExists { path: PathBuf },
    #[error("failed writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("file has no header row")]
    NoHeader,
    #[error("column {name:?} not found in header")]
    MissingColumn { name: String },
    #[error("non-numeric cell {value:?} at data row {row}, column {column:?}")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("data row {row} has {got} fields, header has {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("{rows} data rows is too short for window {window} plus horizon {horizon}")]
    TooShort { rows: usize, window: usize, horizon: usize },
    #[error("column {column:?} has zero variance; z-score normalisation undefined")]
    ZeroVariance { column: String },
    #[error("invalid ingest spec: {0}")]
    InvalidSpec(String),
    #[error("dataset text is malformed at line {line}: {reason}")]
    MalformedDataset { line: usize, reason: String },
}

/// Target generation mode for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Targets are i.i.d. standard Gaussian matrices.
    Gaussian,
    /// Targets come from a hidden teacher network plus optional noise.
    Realizable,
}

/// Synthetic dataset: Gaussian inputs, targets per [`TargetKind`].
/// Deterministic in the seed.
pub fn gen_synthetic(seed: u64, cfg: &ModelConfig, target: TargetKind, noise: f64) -> Dataset {
    gen_synthetic_with_teacher(seed, cfg, target, noise).0
}

/// Like [`gen_synthetic`] and also returns the teacher weights used for
/// realizable targets (`None` for Gaussian targets).
pub fn gen_synthetic_with_teacher(
    seed: u64,
    cfg: &ModelConfig,
    target: TargetKind,
    noise: f64,
) -> (Dataset, Option<Params>) {
    let mut rng = Rng::new(seed);
    let xs: Vec<Matrix> = (0..cfg.p).map(|_| rng.gaussian_matrix(cfg.m, cfg.d, 1.0)).collect();
    match target {
        TargetKind::Gaussian => {
            let ys: Vec<Matrix> = (0..cfg.p).map(|_| rng.gaussian_matrix(cfg.m, cfg.n, 1.0)).collect();
            (Dataset::new(xs, ys).expect("shapes by construction"), None)
        }
        TargetKind::Realizable => {
            let s = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
            let teacher = Params {
                w1: rng.gaussian_matrix(cfg.d, cfg.d1, s(cfg.d)),
                w2: rng.gaussian_matrix(cfg.d1, cfg.d, s(cfg.d1)),
                wq: rng.gaussian_matrix(cfg.d, cfg.d_qk, s(cfg.d)),
                wk: rng.gaussian_matrix(cfg.d, cfg.d_qk, s(cfg.d)),
                wv: rng.gaussian_matrix(cfg.d, cfg.d, s(cfg.d)),
                wu: rng.gaussian_matrix(cfg.d, cfg.n, s(cfg.d)),
            };
            let ys: Vec<Matrix> = xs
                .iter()
                .map(|x| {
                    let clean = forward(x, &teacher, cfg).expect("teacher forward").output;
                    if noise == 0.0 {
                        clean
                    } else {
                        clean.add(&rng.gaussian_matrix(cfg.m, cfg.n, noise)).expect("shape")
                    }
                })
                .collect();
            (Dataset::new(xs, ys).expect("shapes by construction"), Some(teacher))
        }
    }
}

/// Column normalisation applied before windowing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    ZScore,
    None,
}

/// Sliding-window ingestion of a numeric CSV with one header row.
#[derive(Debug, Clone)]
pub struct CsvIngestSpec {
    pub path: PathBuf,
    /// Feature columns, by header name; their count is the embedding dim.
    pub feature_columns: Vec<String>,
    /// Window length (token count M).
    pub window: usize,
    /// Offset, in rows, between an input window and its target window.
    pub horizon: usize,
    pub stride: usize,
    pub normalization: Normalization,
    /// Cap on the number of windows taken.
    pub sample_cap: Option<usize>,
    /// Output dimension: targets are the next-step rows projected to the
    /// first `targets` feature columns.
    pub targets: usize,
}

impl CsvIngestSpec {
    fn validate(&self) -> Result<(), IngestError> {
        if self.window == 0 {
            return Err(IngestError::InvalidSpec("window length must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(IngestError::InvalidSpec("stride must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(IngestError::InvalidSpec("horizon must be >= 1".into()));
        }
        if self.feature_columns.is_empty() {
            return Err(IngestError::InvalidSpec("need at least one feature column".into()));
        }
        if self.targets == 0 || self.targets > self.feature_columns.len() {
            return Err(IngestError::InvalidSpec(format!(
                "targets must be in [1, {}], got {}",
                self.feature_columns.len(),
                self.targets
            )));
        }
        Ok(())
    }
}

/// Windows a CSV file into a dataset: inputs are `window x d` slices of the
/// selected features, targets the same window shifted by `horizon` and
/// projected to the first `targets` columns.
pub fn ingest_csv(spec: &CsvIngestSpec) -> Result<Dataset, IngestError> {
    spec.validate()?;
    let text = std::fs::read_to_string(&spec.path)
        .map_err(|source| IngestError::Read { path: spec.path.clone(), source })?;
    ingest_csv_text(spec, &text)
}

/// The parsing core of [`ingest_csv`], on in-memory text.
pub fn ingest_csv_text(spec: &CsvIngestSpec, text: &str) -> Result<Dataset, IngestError> {
    spec.validate()?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(IngestError::NoHeader)?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut col_idx = Vec::with_capacity(spec.feature_columns.len());
    for want in &spec.feature_columns {
        let idx = names
            .iter()
            .position(|n| n == want)
            .ok_or_else(|| IngestError::MissingColumn { name: want.clone() })?;
        col_idx.push(idx);
    }

    // columns[c][r]: value of feature c at data row r.
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); col_idx.len()];
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(IngestError::RaggedRow {
                row: row + 1,
                got: fields.len(),
                expected: names.len(),
            });
        }
        for (c, &idx) in col_idx.iter().enumerate() {
            let cell = fields[idx];
            let value: f64 = cell.parse().map_err(|_| IngestError::NonNumericCell {
                row: row + 1,
                column: spec.feature_columns[c].clone(),
                value: cell.to_string(),
            })?;
            columns[c].push(value);
        }
    }
    let rows = columns[0].len();
    if rows < spec.window + spec.horizon {
        return Err(IngestError::TooShort { rows, window: spec.window, horizon: spec.horizon });
    }

    if spec.normalization == Normalization::ZScore {
        for (c, col) in columns.iter_mut().enumerate() {
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var == 0.0 {
                return Err(IngestError::ZeroVariance { column: spec.feature_columns[c].clone() });
            }
            let std = var.sqrt();
            for v in col.iter_mut() {
                *v = (*v - mean) / std;
            }
        }
    }

    let d = columns.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut start = 0usize;
    while start + spec.window + spec.horizon <= rows {
        if let Some(cap) = spec.sample_cap {
            if xs.len() >= cap {
                break;
            }
        }
        let x = Matrix::from_fn(spec.window, d, |i, j| columns[j][start + i]);
        let y = Matrix::from_fn(spec.window, spec.targets, |i, j| columns[j][start + spec.horizon + i]);
        xs.push(x);
        ys.push(y);
        start += spec.stride;
    }
    Ok(Dataset::new(xs, ys).expect("window shapes are uniform"))
}

/// Deterministic text serialisation of a dataset, 17 significant digits.
pub fn dataset_to_text(data: &Dataset) -> String {
    let (m, d) = data.xs[0].shape();
    let n = data.ys[0].cols();
    let mut out = String::new();
    let _ = writeln!(out, "dataset v1");
    let _ = writeln!(out, "p={} m={} d={} n={}", data.len(), m, d, n);
    for (p, (x, y)) in data.xs.iter().zip(&data.ys).enumerate() {
        let _ = writeln!(out, "x {p}");
        for i in 0..m {
            let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        let _ = writeln!(out, "y {p}");
        for i in 0..m {
            let row: Vec<String> = y.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
    }
    out
}

/// Parses the format written by [`dataset_to_text`].
pub fn dataset_from_text(text: &str) -> Result<Dataset, IngestError> {
    let lines: Vec<&str> = text.lines().collect();
    let bad = |line: usize, reason: &str| IngestError::MalformedDataset {
        line: line + 1,
        reason: reason.into(),
    };
    let mut pos = 0usize;
    let next = |pos: &mut usize| -> Option<(usize, &str)> {
        let out = lines.get(*pos).map(|l| (*pos, *l));
        *pos += 1;
        out
    };
    let (l0, magic) = next(&mut pos).ok_or_else(|| bad(0, "empty file"))?;
    if magic.trim() != "dataset v1" {
        return Err(bad(l0, "missing `dataset v1` magic"));
    }
    let (l1, dims) = next(&mut pos).ok_or_else(|| bad(1, "missing dimension line"))?;
    let mut p = 0usize;
    let mut m = 0usize;
    let mut d = 0usize;
    let mut n = 0usize;
    for part in dims.split_whitespace() {
        let (key, value) = part.split_once('=').ok_or_else(|| bad(l1, "expected key=value"))?;
        let v: usize = value.parse().map_err(|_| bad(l1, "non-integer dimension"))?;
        match key {
            "p" => p = v,
            "m" => m = v,
            "d" => d = v,
            "n" => n = v,
            _ => return Err(bad(l1, "unknown dimension key")),
        }
    }
    let parse_block = |pos: &mut usize, rows: usize, cols: usize| -> Result<Matrix, IngestError> {
        let mut mat = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let ln = *pos;
            let line = lines.get(ln).ok_or_else(|| bad(lines.len(), "truncated block"))?;
            *pos += 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(bad(ln, "wrong field count"));
            }
            for (j, f) in fields.iter().enumerate() {
                mat.set(i, j, f.trim().parse().map_err(|_| bad(ln, "non-numeric value"))?);
            }
        }
        Ok(mat)
    };
    let mut xs = Vec::with_capacity(p);
    let mut ys = Vec::with_capacity(p);
    for idx in 0..p {
        let (ln, tag) = next(&mut pos).ok_or_else(|| bad(lines.len(), "missing x block"))?;
        if tag.trim() != format!("x {idx}") {
            return Err(bad(ln, "expected x block tag"));
        }
        xs.push(parse_block(&mut pos, m, d)?);
        let (ln, tag) = next(&mut pos).ok_or_else(|| bad(lines.len(), "missing y block"))?;
        if tag.trim() != format!("y {idx}") {
            return Err(bad(ln, "expected y block tag"));
        }
        ys.push(parse_block(&mut pos, m, n)?);
    }
    Dataset::new(xs, ys).map_err(|e| IngestError::MalformedDataset { line: 0, reason: e.to_string() })
}

/// A named file rendered by an experiment, relative to the output directory.
pub type RenderedFile = (String, String);

/// Writes rendered files under `dir`. Refuses to overwrite unless `force`.
pub fn write_outputs(
    dir: &Path,
    files: &[RenderedFile],
    force: bool,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)
        .map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        if path.exists() && !force {
            return Err(HarnessError::PathExists { path });
        }
        std::fs::write(&path, contents)
            .map_err(|source| HarnessError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Terminal state of one run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Aborted { step: usize },
    FitFailed(String),
}

impl RunStatus {
    fn as_str(&self) -> String {
        match self {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Aborted { step } => format!("aborted@{step}"),
            RunStatus::FitFailed(reason) => format!("fit_failed:{reason}"),
        }
    }
}

/// Outcome for one residual coefficient in a sweep.
#[derive(Debug, Clone)]
pub struct BetaRun {
    pub beta: f64,
    pub conditioning_ratio: f64,
    pub rho: f64,
    pub r_squared: f64,
    pub status: RunStatus,
    pub trace: Option<LossTrace>,
}

/// Sweep results plus the rendered output files.
#[derive(Debug, Clone)]
pub struct BetaSweepResult {
    pub runs: Vec<BetaRun>,
    pub files: Vec<RenderedFile>,
}

fn beta_label(beta: f64) -> String {
    format!("beta={beta}")
}

/// Trains one model per residual coefficient from a shared seed and
/// initialisation, recording the conditioning ratio at initialisation and
/// the fitted per-step loss ratio.
///
/// Renders `beta_sweep_trace.csv` (`beta,step,phi`) and
/// `beta_sweep_summary.csv` (`beta,ratio,rho,r2,status`); failed runs keep
/// their summary row.
pub fn run_beta_sweep(
    data: &Dataset,
    cfg: &ModelConfig,
    train_spec: &TrainSpec,
    betas: &[f64],
) -> Result<BetaSweepResult, HarnessError> {
    if betas.is_empty() {
        return Err(HarnessError::Ingest(IngestError::InvalidSpec("beta sweep list is empty".into())));
    }
    let mut runs = Vec::with_capacity(betas.len());
    for &beta in betas {
        let cfg_b = cfg.with_beta(beta);
        cfg_b.validate()?;
        let params0 = init_params(&cfg_b, &train_spec.init, train_spec.seed);
        let ratio = theory::conditioning_ratio(&params0, data, &cfg_b)?;
        match train(data, &cfg_b, train_spec) {
            Ok(result) => match fit_linear_rate(&result.trace) {
                Ok(fit) => runs.push(BetaRun {
                    beta,
                    conditioning_ratio: ratio,
                    rho: fit.rho,
                    r_squared: fit.r_squared,
                    status: RunStatus::Ok,
                    trace: Some(result.trace),
                }),
                Err(RateFitError::AlreadyConverged) => runs.push(BetaRun {
                    beta,
                    conditioning_ratio: ratio,
                    rho: 0.0,
                    r_squared: 1.0,
                    status: RunStatus::Ok,
                    trace: Some(result.trace),
                }),
                Err(e) => runs.push(BetaRun {
                    beta,
                    conditioning_ratio: ratio,
                    rho: f64::NAN,
                    r_squared: f64::NAN,
                    status: RunStatus::FitFailed(e.to_string()),
                    trace: Some(result.trace),
                }),
            },
            Err(TrainError::NonFiniteLoss { step, trace }) => runs.push(BetaRun {
                beta,
                conditioning_ratio: ratio,
                rho: f64::NAN,
                r_squared: f64::NAN,
                status: RunStatus::Aborted { step },
                trace: Some(trace),
            }),
            Err(e) => return Err(e.into()),
        }
    }

    let mut trace_csv = format!("# seed={}\nbeta,step,phi\n", train_spec.seed);
    for run in &runs {
        if let Some(trace) = &run.trace {
            for row in &trace.rows {
                let _ = writeln!(trace_csv, "{},{},{}", run.beta, row.t, fmt_f64(row.phi));
            }
        }
    }
    let mut summary_csv = format!("# seed={}\nbeta,ratio,rho,r2,status\n", train_spec.seed);
    for run in &runs {
        let _ = writeln!(
            summary_csv,
            "{},{},{},{},{}",
            run.beta,
            fmt_f64(run.conditioning_ratio),
            fmt_f64(run.rho),
            fmt_f64(run.r_squared),
            run.status.as_str()
        );
    }
    let files = vec![
        ("beta_sweep_trace.csv".to_string(), trace_csv),
        ("beta_sweep_summary.csv".to_string(), summary_csv),
    ];
    Ok(BetaSweepResult { runs, files })
}

/// Paired runs with and without residual connections.
#[derive(Debug, Clone)]
pub struct AblationResult {
    pub with_residual: LossTrace,
    pub without_residual: LossTrace,
    /// `final loss at beta=1` over `final loss at beta=0`.
    pub final_loss_ratio: f64,
    pub files: Vec<RenderedFile>,
}

/// Trains the same initialisation at `beta = 1` and `beta = 0` and renders
/// the paired trace plus a gap summary.
pub fn run_residual_ablation(
    data: &Dataset,
    cfg: &ModelConfig,
    train_spec: &TrainSpec,
) -> Result<AblationResult, HarnessError> {
    let run = |beta: f64| -> Result<LossTrace, HarnessError> {
        let cfg_b = cfg.with_beta(beta);
        Ok(train(data, &cfg_b, train_spec)?.trace)
    };
    let with_residual = run(1.0)?;
    let without_residual = run(0.0)?;
    let ratio = with_residual.final_phi() / without_residual.final_phi();

    let mut trace_csv = format!("# seed={}\nbeta,step,phi\n", train_spec.seed);
    for (beta, trace) in [(1.0, &with_residual), (0.0, &without_residual)] {
        for row in &trace.rows {
            let _ = writeln!(trace_csv, "{},{},{}", beta, row.t, fmt_f64(row.phi));
        }
    }
    let summary = format!(
        "# seed={}\nfinal_phi_beta1,final_phi_beta0,ratio\n{},{},{}\n",
        train_spec.seed,
        fmt_f64(with_residual.final_phi()),
        fmt_f64(without_residual.final_phi()),
        fmt_f64(ratio)
    );
    let files = vec![
        ("ablation_trace.csv".to_string(), trace_csv),
        ("ablation_summary.csv".to_string(), summary),
    ];
    Ok(AblationResult { with_residual, without_residual, final_loss_ratio: ratio, files })
}

/// Weights that freeze the attention map at the uniform limit: query and
/// key are zero (their gradients stay zero, so the logits never move), the
/// remaining blocks are Gaussian.
pub fn rank_collapse_params(cfg: &ModelConfig, seed: u64, value_scale: f64) -> Params {
    let mut rng = Rng::new(seed);
    let s = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
    Params {
        w1: rng.gaussian_matrix(cfg.d, cfg.d1, s(cfg.d)),
        w2: rng.gaussian_matrix(cfg.d1, cfg.d, s(cfg.d1)),
        wq: Matrix::zeros(cfg.d, cfg.d_qk),
        wk: Matrix::zeros(cfg.d, cfg.d_qk),
        wv: rng.gaussian_matrix(cfg.d, cfg.d, value_scale * s(cfg.d)),
        wu: rng.gaussian_matrix(cfg.d, cfg.n, s(cfg.d)),
    }
}

/// Rank-collapse demonstration: spectral probes over a logit-scale sweep
/// plus paired training runs at the exact uniform-attention limit.
#[derive(Debug, Clone)]
pub struct RankCollapseResult {
    pub probes: Vec<theory::SpectralProbe>,
    pub with_residual: LossTrace,
    pub without_residual: LossTrace,
    pub files: Vec<RenderedFile>,
}

pub fn run_rank_collapse_demo(
    data: &Dataset,
    cfg: &ModelConfig,
    train_spec: &TrainSpec,
    logit_scales: &[f64],
) -> Result<RankCollapseResult, HarnessError> {
    if logit_scales.is_empty() {
        return Err(HarnessError::Ingest(IngestError::InvalidSpec("logit scale list is empty".into())));
    }
    // Probe a generic attention module on the first sample.
    let mut rng = Rng::new(train_spec.seed);
    let s = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
    let probe_params = Params {
        w1: rng.gaussian_matrix(cfg.d, cfg.d1, s(cfg.d)),
        w2: rng.gaussian_matrix(cfg.d1, cfg.d, s(cfg.d1)),
        wq: rng.gaussian_matrix(cfg.d, cfg.d_qk, 1.0),
        wk: rng.gaussian_matrix(cfg.d, cfg.d_qk, 1.0),
        wv: rng.gaussian_matrix(cfg.d, cfg.d, s(cfg.d)),
        wu: rng.gaussian_matrix(cfg.d, cfg.n, s(cfg.d)),
    };
    let probes = theory::rank_collapse_probe(&data.xs[0], &probe_params, cfg, logit_scales)?;

    // Train at the frozen uniform-attention limit with and without the
    // residual path.
    let frozen = rank_collapse_params(cfg, train_spec.seed, 1.0);
    let spec = TrainSpec { init: InitScheme::Explicit(frozen), ..train_spec.clone() };
    let with_residual = train(data, &cfg.with_beta(1.0), &spec)?.trace;
    let without_residual = train(data, &cfg.with_beta(0.0), &spec)?.trace;

    let mut probes_csv = format!("# seed={}\n", train_spec.seed);
    probes_csv.push_str(&theory::probes_to_csv(&probes));
    let mut trace_csv = format!("# seed={}\nbeta,step,phi\n", train_spec.seed);
    for (beta, trace) in [(1.0, &with_residual), (0.0, &without_residual)] {
        for row in &trace.rows {
            let _ = writeln!(trace_csv, "{},{},{}", beta, row.t, fmt_f64(row.phi));
        }
    }
    let files = vec![
        ("rank_collapse_probes.csv".to_string(), probes_csv),
        ("rank_collapse_trace.csv".to_string(), trace_csv),
    ];
    Ok(RankCollapseResult { probes, with_residual, without_residual, files })
}

/// Tidy long-format CSV (`series,t,value`) of loss traces, series sorted
/// lexicographically. No rendering, just plot-ready data.
pub fn emit_plot_data(traces: &[(String, &LossTrace)]) -> String {
    let mut sorted: Vec<&(String, &LossTrace)> = traces.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::from("series,t,value\n");
    for (name, trace) in sorted {
        for row in &trace.rows {
            let _ = writeln!(out, "{},{},{}", name, row.t, fmt_f64(row.phi));
        }
    }
    out
}

/// Parses the output of [`emit_plot_data`] back into `(series, t, value)`
/// triples.
pub fn parse_plot_data(text: &str) -> Result<Vec<(String, usize, f64)>, IngestError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(IngestError::MalformedDataset {
                line: i + 1,
                reason: "expected 3 fields".into(),
            });
        }
        let t = parts[1]
            .parse()
            .map_err(|_| IngestError::MalformedDataset { line: i + 1, reason: "bad step".into() })?;
        let v = parts[2]
            .parse()
            .map_err(|_| IngestError::MalformedDataset { line: i + 1, reason: "bad value".into() })?;
        rows.push((parts[0].to_string(), t, v));
    }
    Ok(rows)
}

/// Builds the series label used by sweep plot data.
pub fn sweep_series_label(beta: f64) -> String {
    beta_label(beta)
}
