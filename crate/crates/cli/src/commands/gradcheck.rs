//! `gradcheck`: finite-difference audit of the reverse-mode gradients.
//!
//! Exits zero exactly when the worst relative error over the whole
//! battery stays below 1e-4.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};

use crate::checks::run_all_checks;
use crate::config_file::FlatConfig;
use crate::output::RunDir;

/// Pass bound on the worst relative gradient error. Part of the command's
/// exit-code contract, so not configurable.
pub const GRADCHECK_BOUND: f64 = 1e-4;

pub fn run(config: &FlatConfig, out_root: &Path) -> Result<()> {
    let step = config.parse_or("gradcheck", "step", 1e-4)?;
    let seed = config.parse_or("gradcheck", "seed", 7u64)?;
    let reports = run_all_checks(step, seed)?;

    let mut text = String::new();
    for report in &reports {
        let _ = writeln!(text, "{:<36} {:.3e}", report.name, report.worst_rel_error);
    }
    let worst = reports
        .iter()
        .map(|r| r.worst_rel_error)
        .fold(0.0_f64, f64::max);
    let _ = writeln!(
        text,
        "max relative error {worst:.3e} (bound {GRADCHECK_BOUND:e})"
    );
    print!("{text}");

    let mut run = RunDir::create(
        out_root,
        "gradcheck",
        config,
        &[("step", step.to_string()), ("seed", seed.to_string())],
    )?;
    run.record("checks", reports.len());
    run.record("max_rel_error", worst);
    let report_path = run.write_text("gradcheck.txt", &text)?;
    let manifest = run.finish()?;
    println!("wrote {}", report_path.display());
    println!("wrote {}", manifest.display());

    if !(worst < GRADCHECK_BOUND) {
        bail!("gradient check failed: max relative error {worst:.3e} >= {GRADCHECK_BOUND:e}");
    }
    Ok(())
}
