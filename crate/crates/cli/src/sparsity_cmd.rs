//! `vdkl sparsity`: recompute a sparsity report from a checkpoint.

use crate::common::{csv_header, emit, OutputFormat};
use crate::train_cmd::{resolve_dataset, DatasetSpec};
use crate::CommonArgs;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use vdkl::vdnet::{sparsity_report, Checkpoint, SparsityReport};
use vdkl::{Error, Result};

#[derive(clap::Args)]
pub struct SparsityArgs {
    /// Checkpoint JSON written by `vdkl train`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Held-out data: 'linear', 'sine', or a CSV path (the CSV's 3:1 split
    /// is applied and its held-out quarter used).
    #[arg(long, default_value = "linear")]
    dataset: String,
    /// Seed for builtin dataset generation; match the training run to
    /// evaluate on the same held-out split.
    #[arg(long, default_value_t = 42)]
    data_seed: u64,
    /// log10-alpha pruning threshold.
    #[arg(long, default_value_t = 3.0)]
    threshold: f64,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run(args: SparsityArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.checkpoint)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.checkpoint.display())))?;
    let checkpoint = Checkpoint::from_json(&text)?;
    let (network, _) = checkpoint.restore()?;

    let spec = if args.dataset == "linear" || args.dataset == "sine" {
        DatasetSpec::Builtin(args.dataset.clone())
    } else {
        DatasetSpec::Csv {
            csv: PathBuf::from(&args.dataset),
        }
    };
    let (_, heldout) = resolve_dataset(&spec, args.data_seed)?;
    let (report, _) = sparsity_report(&network, args.threshold, &heldout)?;

    let config = json!({
        "checkpoint": args.checkpoint.display().to_string(),
        "dataset": args.dataset, "data_seed": args.data_seed,
        "threshold": args.threshold,
    });
    let content = render_sparsity(
        &report,
        args.common.format,
        args.common.seed_or_zero(),
        &config,
    );
    emit(args.common.out.as_deref(), &content)?;
    eprintln!(
        "pruned fraction {:.4}; held-out RMSE {:.6} -> {:.6}",
        report.pruned_fraction, report.rmse_before, report.rmse_after
    );
    Ok(ExitCode::SUCCESS)
}

/// Shared renderer for sparsity reports (also used by `vdkl train`).
pub fn render_sparsity(
    report: &SparsityReport,
    format: OutputFormat,
    seed: u64,
    config: &serde_json::Value,
) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = csv_header("sparsity", seed, config);
            s.push_str(&format!("# threshold = {}\n", report.threshold));
            s.push_str(&format!("# pruned_fraction = {}\n", report.pruned_fraction));
            s.push_str(&format!("# rmse_before = {}\n", report.rmse_before));
            s.push_str(&format!("# rmse_after = {}\n", report.rmse_after));
            s.push_str("layer,weight,log10_alpha,pruned\n");
            for (li, layer) in report.log10_alpha.iter().enumerate() {
                for (wi, &v) in layer.iter().enumerate() {
                    s.push_str(&format!("{li},{wi},{v},{}\n", v > report.threshold));
                }
            }
            s
        }
        OutputFormat::Json => {
            let doc = json!({"config": config, "seed": seed, "report": report});
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serialises")
            )
        }
    }
}
