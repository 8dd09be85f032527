//! One function per subcommand. Input problems (bad specs, missing files,
//! refusing to overwrite) map to exit code 1, runtime failures to 2.

use std::path::PathBuf;

use attnlab::harness::{self, HarnessError};
use attnlab::model::Dataset;
use attnlab::optimizer::{self, fit_linear_rate, init_params, train, RateFitError};
use attnlab::rng::Rng;
use attnlab::theory;
use attnlab::{grad, Activation, Matrix, ModelConfig, Params};

use crate::spec::{load_spec, DataSpec, ExperimentSpec, SweepSpec};

pub enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Ingest(inner) => CliError::Input(inner.to_string()),
        HarnessError::PathExists { path } => CliError::Input(format!(
            "output file {} already exists; pass --force to overwrite",
            path.display()
        )),
        other => CliError::Runtime(other.to_string()),
    }
}

pub struct SpecRun {
    pub spec: ExperimentSpec,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub force: bool,
    pub verbose: bool,
}

/// Loads the spec and applies the flag overrides.
pub fn load_run(
    spec_path: &std::path::Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    force: bool,
    verbose: bool,
) -> Result<SpecRun, CliError> {
    let spec = load_spec(spec_path).map_err(CliError::Input)?;
    let seed = seed.unwrap_or(spec.seed);
    let out_dir = out.clone().unwrap_or_else(|| spec.out_dir.clone());
    Ok(SpecRun { spec, seed, out_dir, force, verbose })
}

fn build_dataset(run: &SpecRun, cfg: &ModelConfig) -> Result<Dataset, CliError> {
    let data = match &run.spec.data {
        DataSpec::Synthetic { .. } => {
            let (kind, noise) = run.spec.data.target_kind().expect("synthetic");
            harness::gen_synthetic(run.seed, cfg, kind, noise)
        }
        DataSpec::Csv { .. } => {
            let ingest = run.spec.data.to_ingest_spec(cfg).expect("csv");
            harness::ingest_csv(&ingest).map_err(input)?
        }
    };
    // Shapes must satisfy the model config; fail loudly, never truncate.
    data.check_shapes(cfg).map_err(input)?;
    Ok(data)
}

fn train_spec(run: &SpecRun, cfg: &ModelConfig) -> Result<optimizer::TrainSpec, CliError> {
    let doc = run.spec.train.as_ref().ok_or_else(|| {
        CliError::Input("this subcommand needs a \"train\" section in the spec".into())
    })?;
    doc.to_train_spec(cfg, run.seed).map_err(CliError::Input)
}

pub fn cmd_train(run: &SpecRun) -> Result<(), CliError> {
    let cfg = run.spec.model.to_config();
    cfg.validate().map_err(input)?;
    let data = build_dataset(run, &cfg)?;
    let tspec = train_spec(run, &cfg)?;
    let result = train(&data, &cfg, &tspec).map_err(runtime)?;

    let contents = format!("# seed={}\n{}", run.seed, result.trace.to_csv());
    harness::write_outputs(&run.out_dir, &[("trace.csv".to_string(), contents)], run.force)
        .map_err(harness_error)?;

    println!("experiment: {}", run.spec.name);
    println!("seed: {}", run.seed);
    println!("mu: {:.16e}", result.mu);
    println!("initial phi: {:.16e}", result.trace.initial_phi());
    println!("final phi: {:.16e}", result.trace.final_phi());
    match fit_linear_rate(&result.trace) {
        Ok(fit) => println!("fitted rho: {:.16e} (r2 {:.6})", fit.rho, fit.r_squared),
        Err(RateFitError::AlreadyConverged) => println!("fitted rho: n/a (already converged)"),
        Err(e) => println!("fitted rho: n/a ({e})"),
    }
    if run.verbose {
        println!("trace rows: {}", result.trace.rows.len());
    }
    Ok(())
}

pub fn cmd_theory(run: &SpecRun) -> Result<(), CliError> {
    let cfg = run.spec.model.to_config();
    cfg.validate().map_err(input)?;
    let data = build_dataset(run, &cfg)?;
    let tspec = train_spec(run, &cfg)?;
    let params0 = init_params(&cfg, &tspec.init, run.seed);
    let report = theory::constants(&params0, &data, &cfg).map_err(runtime)?;

    let json = report.to_json_seeded(run.seed);
    harness::write_outputs(&run.out_dir, &[("theory_report.json".to_string(), json)], run.force)
        .map_err(harness_error)?;

    println!("experiment: {}", run.spec.name);
    println!("seed: {}", run.seed);
    println!("alpha: {:.16e}", report.alpha);
    println!("c_main: {:.16e} (c_tilde = {})", report.c_main, report.c_tilde);
    println!("c_detailed: {:.16e}", report.c_detailed);
    println!("c_w: {:.16e}", report.c_w);
    println!("mu_theory: {:.16e}", report.mu_theory);
    println!("conditioning_ratio: {:.16e}", report.conditioning_ratio);
    println!(
        "init requirement: {} (sqrt(phi0) {:.16e} vs bound {:.16e}, binding {})",
        if report.init_requirement.met { "met" } else { "not met" },
        report.init_requirement.lhs,
        report.init_requirement.bound,
        report.init_requirement.binding
    );
    Ok(())
}

pub fn cmd_sweep_beta(run: &SpecRun) -> Result<(), CliError> {
    let cfg = run.spec.model.to_config();
    cfg.validate().map_err(input)?;
    let betas = match &run.spec.sweep {
        Some(SweepSpec::Beta(b)) if !b.is_empty() => b.clone(),
        _ => {
            return Err(CliError::Input(
                "sweep-beta needs a non-empty {\"sweep\": {\"beta\": [...]}}".into(),
            ))
        }
    };
    if betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return Err(CliError::Input("beta values must lie in [0, 1]".into()));
    }
    let data = build_dataset(run, &cfg)?;
    let tspec = train_spec(run, &cfg)?;
    let result = harness::run_beta_sweep(&data, &cfg, &tspec, &betas).map_err(harness_error)?;

    let mut files = result.files.clone();
    let series: Vec<(String, &optimizer::LossTrace)> = result
        .runs
        .iter()
        .filter_map(|r| r.trace.as_ref().map(|t| (harness::sweep_series_label(r.beta), t)))
        .collect();
    files.push(("beta_sweep_plot.csv".to_string(), harness::emit_plot_data(&series)));
    harness::write_outputs(&run.out_dir, &files, run.force).map_err(harness_error)?;

    println!("experiment: {}", run.spec.name);
    println!("seed: {}", run.seed);
    for r in &result.runs {
        println!(
            "beta {}: conditioning_ratio {:.16e}, rho {:.16e}, r2 {:.6}",
            r.beta, r.conditioning_ratio, r.rho, r.r_squared
        );
    }
    Ok(())
}

pub fn cmd_rank_collapse(run: &SpecRun) -> Result<(), CliError> {
    let cfg = run.spec.model.to_config();
    cfg.validate().map_err(input)?;
    let scales = match &run.spec.sweep {
        Some(SweepSpec::LogitScale(s)) if !s.is_empty() => s.clone(),
        _ => {
            return Err(CliError::Input(
                "rank-collapse needs a non-empty {\"sweep\": {\"logit_scale\": [...]}}".into(),
            ))
        }
    };
    let data = build_dataset(run, &cfg)?;
    let tspec = train_spec(run, &cfg)?;
    let result = harness::run_rank_collapse_demo(&data, &cfg, &tspec, &scales).map_err(harness_error)?;
    harness::write_outputs(&run.out_dir, &result.files, run.force).map_err(harness_error)?;

    println!("experiment: {}", run.spec.name);
    println!("seed: {}", run.seed);
    for probe in result.probes.iter().filter(|p| p.label == "attn") {
        println!(
            "scale {:.6}: sigma2/sigma1 {:.16e}, rank {}",
            probe.scale, probe.sigma_ratio, probe.rank
        );
    }
    println!(
        "final phi with residual {:.16e}, without {:.16e}",
        result.with_residual.final_phi(),
        result.without_residual.final_phi()
    );
    Ok(())
}

pub fn cmd_ablation(run: &SpecRun) -> Result<(), CliError> {
    let cfg = run.spec.model.to_config();
    cfg.validate().map_err(input)?;
    let data = build_dataset(run, &cfg)?;
    let tspec = train_spec(run, &cfg)?;
    let result = harness::run_residual_ablation(&data, &cfg, &tspec).map_err(harness_error)?;
    harness::write_outputs(&run.out_dir, &result.files, run.force).map_err(harness_error)?;

    println!("experiment: {}", run.spec.name);
    println!("seed: {}", run.seed);
    println!("final phi beta=1: {:.16e}", result.with_residual.final_phi());
    println!("final phi beta=0: {:.16e}", result.without_residual.final_phi());
    println!("final loss ratio: {:.16e}", result.final_loss_ratio);
    Ok(())
}

pub fn cmd_ingest(run: &SpecRun) -> Result<(), CliError> {
    let cfg = run.spec.model.to_config();
    cfg.validate().map_err(input)?;
    let ingest = run
        .spec
        .data
        .to_ingest_spec(&cfg)
        .ok_or_else(|| CliError::Input("ingest needs a {\"data\": {\"csv\": ...}} source".into()))?;
    let data = harness::ingest_csv(&ingest).map_err(input)?;
    if data.len() != cfg.p {
        return Err(CliError::Input(format!(
            "ingestion produced {} samples but the model config declares p={}; adjust sample_cap or p",
            data.len(),
            cfg.p
        )));
    }
    data.check_shapes(&cfg).map_err(input)?;

    let text = harness::dataset_to_text(&data);
    harness::write_outputs(&run.out_dir, &[("dataset.txt".to_string(), text)], run.force)
        .map_err(harness_error)?;

    let (m, d) = data.xs[0].shape();
    println!("samples: {}", data.len());
    println!("input shape: {m} x {d}");
    println!("target shape: {m} x {}", data.ys[0].cols());
    Ok(())
}

pub struct GradCheckOpts {
    pub tol: Option<f64>,
    pub activation: String,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub force: bool,
    pub verbose: bool,
}

/// Randomised gradient-check campaign over the documented shape ranges:
/// m in 2..=6, d in 2..=5, d_qk in 1..=4, d1 in 2..=8, n in 1..=4, p in 1..=4.
pub fn cmd_grad_check(opts: &GradCheckOpts) -> Result<(), CliError> {
    let activation = match opts.activation.as_str() {
        "relu" => Activation::ReLU,
        "smoothed" => Activation::smoothed_default(),
        other => {
            return Err(CliError::Input(format!("unknown activation {other:?}; use relu or smoothed")))
        }
    };
    let tol = opts.tol.unwrap_or(match activation {
        Activation::ReLU => 1e-5,
        Activation::SmoothedReLU { .. } => 1e-6,
    });
    if !(tol > 0.0) {
        return Err(CliError::Input(format!("tolerance must be positive, got {tol}")));
    }
    if opts.trials == 0 {
        return Err(CliError::Input("need at least one trial".into()));
    }

    let mut worst = [("w1", 0.0f64), ("w2", 0.0), ("wu", 0.0), ("wv", 0.0), ("wq", 0.0), ("wk", 0.0)];
    let mut failures = Vec::new();
    let mut report_text = String::new();
    for trial in 0..opts.trials {
        let mut rng = Rng::new(opts.seed.wrapping_add(trial as u64));
        let cfg = ModelConfig {
            m: 2 + (rng.next_u64() % 5) as usize,
            d: 2 + (rng.next_u64() % 4) as usize,
            d_qk: 1 + (rng.next_u64() % 4) as usize,
            d1: 2 + (rng.next_u64() % 7) as usize,
            n: 1 + (rng.next_u64() % 4) as usize,
            p: 1 + (rng.next_u64() % 4) as usize,
            beta: (rng.next_u64() % 5) as f64 * 0.25,
            activation,
        };
        let params = Params {
            w1: rng.gaussian_matrix(cfg.d, cfg.d1, 0.6),
            w2: rng.gaussian_matrix(cfg.d1, cfg.d, 0.6),
            wq: rng.gaussian_matrix(cfg.d, cfg.d_qk, 0.6),
            wk: rng.gaussian_matrix(cfg.d, cfg.d_qk, 0.6),
            wv: rng.gaussian_matrix(cfg.d, cfg.d, 0.6),
            wu: rng.gaussian_matrix(cfg.d, cfg.n, 0.6),
        };
        let xs: Vec<Matrix> = (0..cfg.p).map(|_| rng.gaussian_matrix(cfg.m, cfg.d, 1.0)).collect();
        let ys: Vec<Matrix> = (0..cfg.p).map(|_| rng.gaussian_matrix(cfg.m, cfg.n, 1.0)).collect();
        let data = Dataset::new(xs, ys).map_err(runtime)?;
        let report = grad::grad_check(&params, &data, &cfg, tol).map_err(runtime)?;
        for (slot, (label, err)) in worst.iter_mut().zip(report.per_matrix.iter()) {
            debug_assert_eq!(slot.0, *label);
            slot.1 = slot.1.max(*err);
        }
        if !report.pass {
            failures.push((trial, cfg));
        }
        if opts.verbose {
            println!("trial {trial}: worst {} = {:.3e}", report.worst().0, report.worst().1);
        }
        report_text.push_str(&format!("trial {trial}\n{report}\n"));
    }

    println!("seed: {}", opts.seed);
    println!("trials: {}", opts.trials);
    println!("tolerance: {tol:.16e}");
    for (label, err) in &worst {
        println!("worst {label}: {err:.16e}");
    }
    if let Some(dir) = &opts.out {
        let header = format!("# seed={}\n", opts.seed);
        harness::write_outputs(
            dir,
            &[("grad_check.txt".to_string(), header + &report_text)],
            opts.force,
        )
        .map_err(harness_error)?;
    }
    if failures.is_empty() {
        println!("grad check: PASS");
        Ok(())
    } else {
        for (trial, cfg) in &failures {
            eprintln!("grad check failed at trial {trial} with config {cfg:?}");
        }
        Err(CliError::Runtime(format!(
            "{} of {} trials exceeded tolerance {tol:e}",
            failures.len(),
            opts.trials
        )))
    }
}
