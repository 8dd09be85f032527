//! Strict JSON experiment specs. Unknown keys are rejected everywhere so a
//! committed spec document says exactly what ran.

use std::path::PathBuf;

use serde::Deserialize;

use attnlab::harness::{CsvIngestSpec, Normalization, TargetKind};
use attnlab::model::{Activation, ModelConfig};
use attnlab::optimizer::{InitScheme, LearningRate, TrainSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub model: ModelSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub train: Option<TrainSpecDoc>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub m: usize,
    pub d: usize,
    pub d_qk: usize,
    pub d1: usize,
    pub n: usize,
    pub p: usize,
    pub beta: f64,
    pub activation: ActivationSpec,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationSpec {
    Relu,
    SmoothedRelu { tau: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Synthetic {
        target: TargetSpec,
        #[serde(default)]
        noise: f64,
    },
    Csv {
        path: PathBuf,
        feature_columns: Vec<String>,
        horizon: usize,
        stride: usize,
        normalization: NormalizationSpec,
        #[serde(default)]
        sample_cap: Option<usize>,
    },
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    Gaussian,
    Realizable,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationSpec {
    Zscore,
    None,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpecDoc {
    pub steps: usize,
    pub mu: MuSpec,
    pub record_every: usize,
    pub init: InitSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Fixed(f64),
    Directive(String),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    Lecun,
    /// Frozen uniform-attention weights (zero query/key); the rank-collapse
    /// construction.
    RankCollapse,
    GaussianUniform(f64),
    Gaussian {
        g1: f64,
        g2: f64,
        gq: f64,
        gk: f64,
        gv: f64,
        gu: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSpec {
    Beta(Vec<f64>),
    LogitScale(Vec<f64>),
}

impl ModelSpec {
    pub fn to_config(&self) -> ModelConfig {
        ModelConfig {
            m: self.m,
            d: self.d,
            d_qk: self.d_qk,
            d1: self.d1,
            n: self.n,
            p: self.p,
            beta: self.beta,
            activation: match self.activation {
                ActivationSpec::Relu => Activation::ReLU,
                ActivationSpec::SmoothedRelu { tau } => Activation::SmoothedReLU { tau },
            },
        }
    }
}

impl DataSpec {
    /// CSV specs need the window length (the model's token count) attached.
    pub fn to_ingest_spec(&self, cfg: &ModelConfig) -> Option<CsvIngestSpec> {
        match self {
            DataSpec::Synthetic { .. } => None,
            DataSpec::Csv { path, feature_columns, horizon, stride, normalization, sample_cap } => {
                Some(CsvIngestSpec {
                    path: path.clone(),
                    feature_columns: feature_columns.clone(),
                    window: cfg.m,
                    horizon: *horizon,
                    stride: *stride,
                    normalization: match normalization {
                        NormalizationSpec::Zscore => Normalization::ZScore,
                        NormalizationSpec::None => Normalization::None,
                    },
                    sample_cap: *sample_cap,
                    targets: cfg.n,
                })
            }
        }
    }

    pub fn target_kind(&self) -> Option<(TargetKind, f64)> {
        match self {
            DataSpec::Synthetic { target, noise } => Some((
                match target {
                    TargetSpec::Gaussian => TargetKind::Gaussian,
                    TargetSpec::Realizable => TargetKind::Realizable,
                },
                *noise,
            )),
            DataSpec::Csv { .. } => None,
        }
    }
}

impl TrainSpecDoc {
    pub fn to_train_spec(&self, cfg: &ModelConfig, seed: u64) -> Result<TrainSpec, String> {
        let mu = match &self.mu {
            MuSpec::Fixed(v) => LearningRate::Fixed(*v),
            MuSpec::Directive(d) => match d.as_str() {
                "theory" => LearningRate::Theory,
                "practical" => LearningRate::Practical,
                other => {
                    return Err(format!(
                        "unknown mu directive {other:?}; use a number, \"theory\" or \"practical\""
                    ))
                }
            },
        };
        let init = match &self.init {
            InitSpec::Lecun => InitScheme::LeCunStyle,
            InitSpec::RankCollapse => {
                InitScheme::Explicit(attnlab::harness::rank_collapse_params(cfg, seed, 1.0))
            }
            InitSpec::GaussianUniform(g) => InitScheme::gaussian_uniform(*g),
            InitSpec::Gaussian { g1, g2, gq, gk, gv, gu } => {
                InitScheme::GaussianPerMatrix { g1: *g1, g2: *g2, gq: *gq, gk: *gk, gv: *gv, gu: *gu }
            }
        };
        Ok(TrainSpec { steps: self.steps, mu, seed, init, record_every: self.record_every })
    }
}

/// Parses a spec file with strict validation.
pub fn load_spec(path: &std::path::Path) -> Result<ExperimentSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read spec file {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid spec {}: {e}", path.display()))
}
