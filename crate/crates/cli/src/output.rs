//! CSV emission and human-readable summaries.
//!
//! The results schema is a stable contract: header
//! `rep,t,agent,n,budget,prior_mean,cum_regret,regret_inc,oracle_status,wall_ms`,
//! one row per `(rep, t)`, UTF-8, `.` decimal. Float columns are written
//! in scientific notation with 17 significant digits so parsing recovers
//! them exactly. The `budget` column holds the effective per-round cap
//! (`n` when unconstrained); `wall_ms` is measured wall time and is the
//! one column that legitimately differs between reruns of the same seed.

use std::fmt::Write as _;

use netbandit::harness::{ExperimentConfig, ExperimentResult};
use netbandit::optimize::Budget;

pub const CSV_HEADER: &str =
    "rep,t,agent,n,budget,prior_mean,cum_regret,regret_inc,oracle_status,wall_ms";

/// Full-precision float formatting (17 significant digits round-trips f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn results_csv(cfg: &ExperimentConfig<f64>, result: &ExperimentResult<f64>) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let agent = cfg.agent.kind.as_str();
    let cap = match cfg.budget.resolve(cfg.n) {
        Budget::Limit(b) => b.min(cfg.n),
        Budget::Unlimited => cfg.n,
    };
    for run in &result.runs {
        for (rec, cum) in run.records.iter().zip(&run.cumulative_regret) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                run.rep,
                rec.t,
                agent,
                cfg.n,
                cap,
                fmt_f64(cfg.agent.prior_mean),
                fmt_f64(*cum),
                fmt_f64(rec.regret_increment),
                rec.oracle_status.as_str(),
                fmt_f64(rec.wall.as_secs_f64() * 1e3),
            );
        }
    }
    out
}

/// Optional posterior-mean trace, one row per `(rep, t)` with the full
/// parameter vector. Written next to the results when requested.
pub fn posterior_csv(cfg: &ExperimentConfig<f64>, result: &ExperimentResult<f64>) -> String {
    let dim = cfg.dim();
    let mut out = String::from("rep,t");
    for j in 0..dim {
        let _ = write!(out, ",theta_{j}");
    }
    out.push('\n');
    for run in &result.runs {
        for rec in &run.records {
            let Some(mean) = &rec.posterior_mean else {
                continue;
            };
            let _ = write!(out, "{},{}", run.rep, rec.t);
            for v in mean {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            out.push('\n');
        }
    }
    out
}

pub fn summary(label: &str, result: &ExperimentResult<f64>) -> String {
    let agg = &result.aggregate;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{label}: final cumulative regret {:.4} +/- {:.4} (se) over {} replications, {} rounds",
        agg.final_mean(),
        agg.final_se(),
        agg.reps,
        agg.rounds
    );
    if agg.heuristic_round_fraction > 0.0 {
        let _ = writeln!(
            out,
            "  {:.1}% of rounds used a heuristic oracle; regret curves are lower bounds there",
            100.0 * agg.heuristic_round_fraction
        );
    }
    if !result.failures.is_empty() {
        let _ = writeln!(out, "  {} replication(s) failed:", result.failures.len());
        for (rep, e) in &result.failures {
            let _ = writeln!(out, "    rep {rep}: {e}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &v in &[
            0.0,
            1.0,
            -1.5,
            std::f64::consts::PI,
            1e-300,
            -3.123456789012345e17,
            f64::MIN_POSITIVE,
        ] {
            let parsed: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{v}");
        }
    }
}
