//! `grad-check`: the release gate. Runs the per-kernel finite-difference
//! suite and the end-to-end objective check, printing one line per kernel.

use anyhow::Result;
use pruneood_core::autodiff::gradcheck::kernel_suite;
use pruneood_core::checks::end_to_end_check;

/// Returns true when every check passed.
pub fn run(seed: u64, inject_fault: Option<&str>) -> Result<bool> {
    let suite = kernel_suite(seed, 10, 1e-5, 1e-4, inject_fault)?;
    println!("{:<22} {:>14}  status", "kernel", "max rel err");
    for k in &suite.kernels {
        println!(
            "{:<22} {:>14.3e}  {}",
            k.kernel,
            k.max_rel_err,
            if k.passed { "ok" } else { "FAIL" }
        );
    }

    let e2e = end_to_end_check(seed)?;
    println!(
        "{:<22} {:>14.3e}  {}",
        "end-to-end objective",
        e2e.max_rel_err,
        if e2e.passed { "ok" } else { "FAIL" }
    );
    if !e2e.passed {
        if let Some(worst) = e2e.worst() {
            println!(
                "  worst element: {}[{}] analytic {:.6e} vs numeric {:.6e}",
                worst.param, worst.index, worst.analytic, worst.numeric
            );
        }
    }

    let passed = suite.passed && e2e.passed;
    println!("{}", if passed { "all checks passed" } else { "CHECKS FAILED" });
    Ok(passed)
}
