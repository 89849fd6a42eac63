//! `vdkl verify`: the oracle suite with one line per check.

use crate::common::{csv_header, emit, OutputFormat, EXIT_VERIFY_FAILED};
use crate::CommonArgs;
use serde_json::json;
use std::process::ExitCode;
use vdkl::verify::{run_all, VerifyOptions};
use vdkl::Result;

#[derive(clap::Args)]
pub struct VerifyArgs {
    /// Monte Carlo sample count per stochastic check.
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
    /// Fault-injection hook: scale digamma values consumed by the digamma
    /// checks by (1 + eps). Exists to prove those checks can fail.
    #[arg(long, hide = true, default_value_t = 0.0)]
    inject_digamma_error: f64,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run(args: VerifyArgs) -> Result<ExitCode> {
    let opts = VerifyOptions {
        digamma_perturbation: args.inject_digamma_error,
        mc_samples: args.mc_samples.max(1000),
        mc_seed_offset: args.common.seed_or_zero(),
    };
    let results = run_all(&opts)?;
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();

    for r in &results {
        println!(
            "{} {} — {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    println!(
        "{} of {} checks passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        eprintln!("failed checks: {}", failed.join(", "));
    }

    if args.common.out.is_some() {
        let config = json!({
            "mc_samples": opts.mc_samples,
            "digamma_perturbation": opts.digamma_perturbation,
        });
        let content = match args.common.format {
            OutputFormat::Csv => {
                let mut s = csv_header("verify", args.common.seed_or_zero(), &config);
                s.push_str("check,passed,detail\n");
                for r in &results {
                    s.push_str(&format!(
                        "{},{},\"{}\"\n",
                        r.name,
                        r.passed,
                        r.detail.replace('"', "'")
                    ));
                }
                s
            }
            OutputFormat::Json => {
                let rows: Vec<_> = results
                    .iter()
                    .map(|r| json!({"check": r.name, "passed": r.passed, "detail": r.detail}))
                    .collect();
                let doc = json!({
                    "config": config, "seed": args.common.seed_or_zero(), "checks": rows,
                    "all_passed": failed.is_empty(),
                });
                format!(
                    "{}\n",
                    serde_json::to_string_pretty(&doc).expect("serialises")
                )
            }
        };
        emit(args.common.out.as_deref(), &content)?;
    }

    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    })
}
