//! Paired with/without-control comparisons and parameter sweeps. Runs are
//! independent, so each gets its own thread.

use std::path::Path;
use std::thread;

use harvester_core::ComparisonReport;

use crate::config::ScenarioConfig;
use crate::runner::{run_scenario, run_scenario_with_sink, RunError, RunOutput};
use crate::trace::TraceWriter;

pub fn compare_runs(with: &RunOutput, without: &RunOutput) -> Result<ComparisonReport<f64>, RunError> {
    if !with.config.control_enabled || without.config.control_enabled {
        return Err(RunError::ScenarioMismatch(
            "expected one run with control and one without".into(),
        ));
    }
    if !with.config.same_scenario(&without.config) {
        return Err(RunError::ScenarioMismatch(
            "configs differ in terrain, seed, targets or parameters".into(),
        ));
    }
    Ok(ComparisonReport::new(with.metrics, without.metrics))
}

fn run_into(cfg: &ScenarioConfig, dir: Option<&Path>) -> Result<RunOutput, RunError> {
    match dir {
        Some(d) => {
            let mut w = TraceWriter::create(d)?;
            run_scenario_with_sink(cfg, &mut w)
        }
        None => run_scenario(cfg),
    }
}

/// Runs `cfg` with and without control on two threads. Traces go to
/// `out/with_control` and `out/without_control` when `out` is given.
pub fn compare(
    cfg: &ScenarioConfig,
    out: Option<&Path>,
) -> Result<(ComparisonReport<f64>, RunOutput, RunOutput), RunError> {
    let mut with_cfg = cfg.clone();
    with_cfg.control_enabled = true;
    let mut without_cfg = cfg.clone();
    without_cfg.control_enabled = false;
    let with_dir = out.map(|d| d.join("with_control"));
    let without_dir = out.map(|d| d.join("without_control"));

    let (with, without) = thread::scope(|s| {
        let h = s.spawn(|| run_into(&with_cfg, with_dir.as_deref()));
        let b = run_into(&without_cfg, without_dir.as_deref());
        (h.join().expect("run thread panicked"), b)
    });
    let (with, without) = (with?, without?);
    let report = compare_runs(&with, &without)?;
    Ok((report, with, without))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub rmse_theta: f64,
    pub rmse_h: f64,
    pub score: Option<f64>,
}

/// One run per value of `param`, all else held at `cfg`.
pub fn sweep(cfg: &ScenarioConfig, param: &str, values: &[String]) -> Result<Vec<SweepRow>, RunError> {
    let cfgs = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set(param, v)?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let results: Vec<Result<RunOutput, RunError>> = thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || run_scenario(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    });
    values
        .iter()
        .zip(results)
        .map(|(v, r)| {
            let r = r?;
            Ok(SweepRow {
                value: v.clone(),
                rmse_theta: r.metrics.rmse_theta,
                rmse_h: r.metrics.rmse_h,
                score: r.metrics.score,
            })
        })
        .collect()
}

pub fn sweep_table(param: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{param},rmse_theta,rmse_h,score\n");
    for r in rows {
        let score = r.score.map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
        s.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            r.value, r.rmse_theta, r.rmse_h, score
        ));
    }
    s
}
