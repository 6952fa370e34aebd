//! The `verify` verb. Reports are written before the verdict is returned,
//! so a failing suite still leaves its evidence behind.

use std::path::Path;

use anrat::report::{self, write_atomic};
use anrat::verify::{convexity_scan, gradcheck_suite, lambda_scan_suite, linear_grid, log_grid, SinusoidToy};
use clap::ValueEnum;
use serde::Serialize;

use crate::config::VerifyConfig;
use crate::{Failure, Outcome};

/// Smallest Spearman correlation accepted as a monotone PSD trend.
pub const MIN_TREND: f64 = 0.95;
/// Upper end of the λ-scan grid, which starts at the λ floor.
pub const SCAN_LAMBDA_MAX: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gradcheck,
    LambdaScan,
    ConvexityScan,
}

#[derive(Debug, Serialize)]
struct ConvexityReport<'a> {
    scan: &'a anrat::verify::ConvexityScan,
    spearman: Option<f64>,
    min_spearman: f64,
    fraction_at_one: Option<f64>,
    passed: bool,
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Outcome {
    write_atomic(&dir.join(name), bytes).map_err(Failure::data)
}

/// Runs one suite; `Ok` carries a one-line summary.
pub fn run_verify(suite: Suite, cfg: &VerifyConfig, out: &Path) -> Outcome<String> {
    let (passed, line) = match suite {
        Suite::Gradcheck => {
            let s = gradcheck_suite(cfg.fixtures, cfg.seed, cfg.corrupt_gradient)?;
            write(out, "gradcheck.json", &report::json_bytes(&s)?)?;
            let line = format!(
                "gradcheck: {} fixtures, max relative error {:.3e} (fixture {}), tolerance {:.0e}",
                s.fixtures, s.max_rel_error, s.worst_fixture, s.tolerance
            );
            (s.passed, line)
        }
        Suite::LambdaScan => {
            let grid = log_grid(anrat::loss::DEFAULT_LAMBDA_MIN, SCAN_LAMBDA_MAX, cfg.lambda_points);
            let s = lambda_scan_suite(cfg.batches, cfg.seed, &grid, 2, 2)?;
            write(out, "lambda_scan.csv", &report::lambda_scan_csv(&s)?)?;
            write(out, "lambda_scan.json", &report::json_bytes(&s)?)?;
            let failed = s.cases.iter().filter(|c| !c.passed).count();
            let line = format!(
                "lambda-scan: {} batches over {} lambdas, {failed} failing, largest drop {:.3e}",
                s.cases.len(),
                s.grid.len(),
                s.max_drop
            );
            (s.passed, line)
        }
        Suite::ConvexityScan => {
            let points: Vec<Vec<f64>> = linear_grid(cfg.theta_min, cfg.theta_max, cfg.theta_points)
                .into_iter()
                .map(|t| vec![t])
                .collect();
            let scan = convexity_scan(&SinusoidToy::default(), &cfg.lambdas, &points, 2, 2)?;
            let fraction_at_one = scan.fraction_at(1.0);
            let passed = scan.is_monotone_trend(MIN_TREND)
                && fraction_at_one.is_none_or(|f| f >= scan.baseline_fraction);
            let rep = ConvexityReport {
                scan: &scan,
                spearman: scan.trend(),
                min_spearman: MIN_TREND,
                fraction_at_one,
                passed,
            };
            write(out, "convexity.csv", &report::convexity_csv(&scan)?)?;
            write(out, "convexity.json", &report::json_bytes(&rep)?)?;
            let line = format!(
                "convexity-scan: PSD fractions {:?} vs baseline {}, Spearman {:?}",
                scan.psd_fraction, scan.baseline_fraction, rep.spearman
            );
            (passed, line)
        }
    };
    if passed {
        Ok(line)
    } else {
        Err(Failure::Verify(line))
    }
}
