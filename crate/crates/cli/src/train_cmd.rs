//! `vdkl train`: run a training config, write checkpoint, trace and
//! sparsity report.

use crate::common::{csv_header, OutputFormat};
use crate::sparsity_cmd::render_sparsity;
use crate::CommonArgs;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vdkl::vdnet::{
    builtin_linear, builtin_sine, from_csv, sparsity_report, train, Activation, Checkpoint,
    Dataset, EpochStats, LayerMode, NetworkConfig, TrainConfig, TrainOutcome,
};
use vdkl::{Error, Result};

#[derive(clap::Args)]
pub struct TrainArgs {
    /// JSON run configuration (see `RunSpec` in the README).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for checkpoint.json, trace.csv and the sparsity
    /// report.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

/// One self-contained training run. `dataset` is `"linear"`, `"sine"`, or
/// `{"csv": "path"}` (CSV splits 3:1 into train/held-out).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSpec {
    pub dataset: DatasetSpec,
    #[serde(default = "default_data_seed")]
    pub data_seed: u64,
    pub layer_sizes: Vec<usize>,
    pub mode: LayerMode,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    pub sigma_n: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default = "default_unit")]
    pub kl_scale: f64,
    #[serde(default = "default_unit")]
    pub prior_c: f64,
    #[serde(default = "default_prune_threshold")]
    pub prune_threshold: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSpec {
    Builtin(String),
    Csv { csv: PathBuf },
}

fn default_data_seed() -> u64 {
    42
}

fn default_activation() -> Activation {
    Activation::Identity
}

fn default_unit() -> f64 {
    1.0
}

fn default_prune_threshold() -> f64 {
    3.0
}

impl RunSpec {
    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            layer_sizes: self.layer_sizes.clone(),
            modes: vec![self.mode; self.layer_sizes.len().saturating_sub(1)],
            activation: self.activation,
            sigma_n: self.sigma_n,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            kl_scale: self.kl_scale,
            prior_c: self.prior_c,
        }
    }
}

pub fn load_run_spec(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn resolve_dataset(spec: &DatasetSpec, data_seed: u64) -> Result<(Dataset, Dataset)> {
    match spec {
        DatasetSpec::Builtin(name) => match name.as_str() {
            "linear" => Ok(builtin_linear(data_seed)),
            "sine" => Ok(builtin_sine(data_seed)),
            other => Err(Error::Config(format!(
                "unknown builtin dataset '{other}' (expected 'linear' or 'sine')"
            ))),
        },
        DatasetSpec::Csv { csv } => {
            let text = std::fs::read_to_string(csv)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", csv.display())))?;
            let all = from_csv(&text)?;
            split_three_to_one(&all)
        }
    }
}

fn split_three_to_one(all: &Dataset) -> Result<(Dataset, Dataset)> {
    let n = all.len();
    let n_train = (3 * n) / 4;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "CSV dataset with {n} rows cannot be split 3:1"
        )));
    }
    let dim = all.dim();
    let take = |lo: usize, hi: usize| -> Result<Dataset> {
        let feats = vdkl::vdnet::Matrix::from_fn(hi - lo, dim, |r, c| all.features.get(lo + r, c));
        Dataset::new(feats, all.targets[lo..hi].to_vec())
    };
    Ok((take(0, n_train)?, take(n_train, n)?))
}

pub fn run(args: TrainArgs) -> Result<ExitCode> {
    let mut spec = load_run_spec(&args.config)?;
    if let Some(seed) = args.common.seed {
        spec.seed = seed;
    }
    let (train_data, test_data) = resolve_dataset(&spec.dataset, spec.data_seed)?;
    let net_cfg = spec.network_config();
    let train_cfg = spec.train_config();

    let effective = serde_json::to_value(&spec).expect("spec serialises");
    println!("effective config: {effective}");

    let outcome: TrainOutcome = train(&net_cfg, &train_cfg, &train_data, &test_data)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let ckpt_path = args.out_dir.join("checkpoint.json");
    let checkpoint = Checkpoint::from_trained(&outcome.network, &train_cfg);
    write_file(&ckpt_path, &format!("{}\n", checkpoint.to_json()))?;

    let trace_path = args.out_dir.join("trace.csv");
    let mut trace = csv_header("train", spec.seed, &effective);
    trace.push_str(EpochStats::CSV_HEADER);
    trace.push('\n');
    for row in &outcome.trace {
        trace.push_str(&row.csv_row());
        trace.push('\n');
    }
    write_file(&trace_path, &trace)?;

    let (report, _) = sparsity_report(&outcome.network, spec.prune_threshold, &test_data)?;
    let (sparsity_name, sparsity_content) = match args.common.format {
        OutputFormat::Csv => (
            "sparsity.csv",
            render_sparsity(&report, OutputFormat::Csv, spec.seed, &effective),
        ),
        OutputFormat::Json => (
            "sparsity.json",
            render_sparsity(&report, OutputFormat::Json, spec.seed, &effective),
        ),
    };
    write_file(&args.out_dir.join(sparsity_name), &sparsity_content)?;

    let last = outcome.trace.last().expect("at least one epoch");
    println!(
        "trained {} epochs: objective {:.6}, kl_total {:.6}, rmse_train {:.6}, rmse_test {:.6}",
        outcome.trace.len(),
        last.objective,
        last.kl_total,
        last.rmse_train,
        last.rmse_test
    );
    println!(
        "wrote {}, {}, {}",
        ckpt_path.display(),
        trace_path.display(),
        args.out_dir.join(sparsity_name).display()
    );
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}
