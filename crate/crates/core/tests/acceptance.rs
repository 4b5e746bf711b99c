//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p traverse-core --test acceptance -- --nocapture`
//! to see the per-criterion lines and timings.

use traverse_core::selftest::{run_all, SuiteOptions};

#[test]
fn acceptance_criteria() {
    let reports = run_all(&SuiteOptions::default());
    assert_eq!(reports.len(), 8, "every criterion must run");
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "criterion {}: {:<28} {} ({} ms) {}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.elapsed_ms,
            r.details
        );
        if !r.passed {
            failed.push(r.id);
        }
    }
    // stated runtime budgets (seconds)
    let budgets = [10u128, 10, 60, 10, 30, 5, 20, 30];
    for r in &reports {
        let budget_ms = budgets[r.id - 1] * 1000;
        assert!(
            r.elapsed_ms <= budget_ms,
            "criterion {} exceeded its budget: {} ms > {} ms",
            r.id,
            r.elapsed_ms,
            budget_ms
        );
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
