//! `vdkl probe`: origin- and tail-mass divergence evidence.

use crate::common::{csv_header, emit, OutputFormat};
use crate::CommonArgs;
use serde_json::json;
use std::process::ExitCode;
use vdkl::probe::{
    divergence_report, logistic_tail_mass, origin_mass, DivergenceReport, IntervalMassReport,
    Likelihood1D, ProbeKind,
};
use vdkl::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ProbeKindArg {
    /// Shrinking annulus around w = 0.
    Origin,
    /// Growing right-tail interval [k, K] under the logistic likelihood.
    LogisticTail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum LikArg {
    /// Logistic likelihood of one observation (x = 1, y = 1).
    Sigmoid,
    /// Gaussian likelihood N(y = 0; w, 1).
    Gaussian,
}

#[derive(clap::Args)]
pub struct ProbeArgs {
    /// Which pathology to probe.
    #[arg(long, value_enum)]
    kind: ProbeKindArg,
    /// Likelihood for the origin probe.
    #[arg(long, value_enum, default_value_t = LikArg::Sigmoid)]
    lik: LikArg,
    /// Outer annulus radius delta0 (origin probe); the delta grid shrinks
    /// from it geometrically.
    #[arg(long, default_value_t = 1e-2)]
    delta0: f64,
    /// Inner tail limit k (logistic-tail probe); the K grid is k e^1..e^m.
    #[arg(long, default_value_t = 10.0)]
    k: f64,
    /// Explicit outer limit K: probes the single interval [k, K] instead
    /// of a grid (no divergence fit; needs K > k).
    #[arg(long)]
    big_k: Option<f64>,
    /// Grid size m.
    #[arg(long, default_value_t = 8)]
    grid_points: usize,
    /// Prior constant C.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Divergence threshold on the fitted slope (default 0.1 C).
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run(args: ProbeArgs) -> Result<ExitCode> {
    let (kind, reports): (ProbeKind, Vec<IntervalMassReport>) = match args.kind {
        ProbeKindArg::LogisticTail => {
            if let Some(big_k) = args.big_k {
                if big_k <= args.k {
                    return Err(Error::Precondition(format!(
                        "probe requires K > k, got (k={}, K={big_k})",
                        args.k
                    )));
                }
                (
                    ProbeKind::Tail,
                    vec![logistic_tail_mass(args.k, big_k, args.c)?],
                )
            } else {
                let reports = (1..=args.grid_points)
                    .map(|m| logistic_tail_mass(args.k, args.k * (m as f64).exp(), args.c))
                    .collect::<Result<Vec<_>>>()?;
                (ProbeKind::Tail, reports)
            }
        }
        ProbeKindArg::Origin => {
            let lik = match args.lik {
                LikArg::Sigmoid => Likelihood1D::sigmoid(),
                LikArg::Gaussian => Likelihood1D::gaussian(0.0, 1.0),
            };
            let reports = (1..=args.grid_points)
                .map(|j| origin_mass(&lik, args.delta0 * (-(j as f64)).exp(), args.delta0, args.c))
                .collect::<Result<Vec<_>>>()?;
            (ProbeKind::Origin, reports)
        }
    };

    let fit: Option<DivergenceReport> = if reports.len() >= 4 {
        Some(divergence_report(kind, &reports, args.threshold)?)
    } else {
        None
    };

    let config = json!({
        "kind": format!("{:?}", args.kind), "lik": format!("{:?}", args.lik),
        "delta0": args.delta0, "k": args.k, "grid_points": args.grid_points,
        "c": args.c, "threshold": args.threshold,
    });
    let content = match args.common.format {
        OutputFormat::Csv => {
            let mut s = csv_header("probe", args.common.seed_or_zero(), &config);
            s.push_str(
                "# likelihood continuity at w = 0 is assumed, not proven; the annulus \
                 infimum is estimated from 1001 samples\n",
            );
            s.push_str(IntervalMassReport::CSV_HEADER);
            s.push('\n');
            let slope = fit.map_or(f64::NAN, |f| f.slope);
            for r in &reports {
                s.push_str(&r.csv_row(slope));
                s.push('\n');
            }
            if let Some(f) = &fit {
                s.push_str(&format!(
                    "# slope = {}, intercept = {}, r_squared = {}, threshold = {}, verdict = {}\n",
                    f.slope, f.intercept, f.r_squared, f.threshold, f.verdict
                ));
            }
            s
        }
        OutputFormat::Json => {
            let doc = json!({
                "config": config, "seed": args.common.seed_or_zero(),
                "note": "likelihood continuity at w = 0 is assumed, not proven; \
                         the annulus infimum is estimated from 1001 samples",
                "rows": reports, "fit": fit,
            });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serialises")
            )
        }
    };
    emit(args.common.out.as_deref(), &content)?;
    if let Some(f) = &fit {
        eprintln!(
            "verdict: {} (slope {:.6}, r^2 {:.6})",
            f.verdict, f.slope, f.r_squared
        );
    }
    Ok(ExitCode::SUCCESS)
}
