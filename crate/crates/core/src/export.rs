//! CSV documents for pools, plans, timings and metrics.
//!
//! Output is byte-stable for a fixed input: rows follow stored order
//! (strategy run order, then pool or vm_id order), floats carry exactly six
//! fractional digits with '.', and lines end in '\n'.

use std::collections::HashMap;

use csv::{Terminator, WriterBuilder};
use serde::Serialize;

use crate::engine::SimulationResult;
use crate::error::{RasError, Result};
use crate::experiment::{Experiment, ExperimentFile, ExperimentStatus};
use crate::generation::Request;
use crate::metrics::{consolidate, ConsolidatedMetrics, StrategyMetrics};
use crate::strategies::AssignmentPlan;

pub const POOL_HEADER: [&str; 7] = ["request_id", "service_id", "ip", "zone_id", "arrival_time", "process_time", "priority"];
pub const PLAN_HEADER: [&str; 4] = ["strategy", "request_id", "vm_id_or_REJECTED", "reason"];
pub const TIMING_HEADER: [&str; 8] = ["strategy", "request_id", "vm_id", "arrival", "start", "completion", "wait", "response"];
pub const METRICS_HEADER: [&str; 8] =
    ["experiment_id", "strategy", "assigned", "rejected", "avg_wait", "avg_response", "mean_ruf", "total_value"];
pub const NODE_HEADER: [&str; 5] = ["experiment_id", "strategy", "vm_id", "value", "ruf"];
pub const NODE_SERVICE_HEADER: [&str; 5] = ["experiment_id", "strategy", "vm_id", "service_id", "value"];
pub const RANKING_HEADER: [&str; 3] = ["experiment_id", "rank", "strategy"];
pub const SUMMARY_HEADER: [&str; 6] =
    ["strategy", "experiments", "mean_avg_wait", "mean_avg_response", "mean_mean_ruf", "win_count"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CsvDocument {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportTarget {
    Experiment(u32),
    Consolidated,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

fn write_rows<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    let bytes = w.into_inner().map_err(|e| RasError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn pool_csv(pool: &[Request]) -> Result<String> {
    write_rows(
        &POOL_HEADER,
        pool.iter().map(|r| {
            [
                r.request_id.to_string(),
                r.service_id.to_string(),
                r.ip.clone(),
                r.zone_id.to_string(),
                r.arrival_time.to_string(),
                r.process_time.to_string(),
                r.priority.to_string(),
            ]
        }),
    )
}

/// One row per pool request per plan, in pool order.
pub fn plans_csv(plans: &[AssignmentPlan], pool: &[Request]) -> Result<String> {
    let position: HashMap<u64, usize> = pool.iter().enumerate().map(|(i, r)| (r.request_id, i)).collect();
    let mut rows = Vec::new();
    for plan in plans {
        let mut lines: Vec<(usize, [String; 4])> = plan
            .entries
            .iter()
            .map(|e| {
                (position[&e.request_id], [plan.strategy.to_string(), e.request_id.to_string(), e.vm_id.to_string(), String::new()])
            })
            .chain(plan.rejections.iter().map(|r| {
                (
                    position[&r.request_id],
                    [plan.strategy.to_string(), r.request_id.to_string(), "REJECTED".to_string(), r.reason.to_string()],
                )
            }))
            .collect();
        lines.sort_by_key(|(i, _)| *i);
        rows.extend(lines.into_iter().map(|(_, row)| row));
    }
    write_rows(&PLAN_HEADER, rows)
}

pub fn timings_csv(results: &[&SimulationResult]) -> Result<String> {
    write_rows(
        &TIMING_HEADER,
        results.iter().flat_map(|res| {
            res.timings.iter().map(|t| {
                [
                    res.strategy.to_string(),
                    t.request_id.to_string(),
                    t.vm_id.to_string(),
                    t.arrival_time.to_string(),
                    t.start_time.to_string(),
                    t.completion_time.to_string(),
                    t.wait_time.to_string(),
                    t.response_time.to_string(),
                ]
            })
        }),
    )
}

pub fn metrics_csv(rows: &[(u32, &StrategyMetrics)]) -> Result<String> {
    write_rows(
        &METRICS_HEADER,
        rows.iter().map(|(exp, m)| {
            [
                exp.to_string(),
                m.strategy.to_string(),
                m.assigned_count.to_string(),
                m.rejection_count.to_string(),
                fmt_f64(m.avg_wait),
                fmt_f64(m.avg_response),
                fmt_f64(m.mean_ruf),
                m.total_value.to_string(),
            ]
        }),
    )
}

pub fn per_node_value_csv(rows: &[(u32, &StrategyMetrics)]) -> Result<String> {
    write_rows(
        &NODE_HEADER,
        rows.iter().flat_map(|(exp, m)| {
            m.per_node_value.iter().map(move |(vm, value)| {
                [
                    exp.to_string(),
                    m.strategy.to_string(),
                    vm.to_string(),
                    value.to_string(),
                    fmt_f64(m.per_node_ruf.get(vm).copied().unwrap_or(0.0)),
                ]
            })
        }),
    )
}

pub fn per_node_service_value_csv(rows: &[(u32, &StrategyMetrics)]) -> Result<String> {
    write_rows(
        &NODE_SERVICE_HEADER,
        rows.iter().flat_map(|(exp, m)| {
            m.per_node_service_value.iter().flat_map(move |(vm, per_service)| {
                per_service.iter().map(move |(service, value)| {
                    [exp.to_string(), m.strategy.to_string(), vm.to_string(), service.to_string(), value.to_string()]
                })
            })
        }),
    )
}

fn ranking_csv<'a>(experiments: impl IntoIterator<Item = &'a Experiment>) -> Result<String> {
    write_rows(
        &RANKING_HEADER,
        experiments.into_iter().flat_map(|e| {
            e.ranking
                .iter()
                .enumerate()
                .map(move |(i, s)| [e.experiment_id.to_string(), (i + 1).to_string(), s.to_string()])
        }),
    )
}

pub fn summary_csv(consolidated: &ConsolidatedMetrics) -> Result<String> {
    write_rows(
        &SUMMARY_HEADER,
        consolidated.per_strategy.iter().map(|s| {
            [
                s.strategy.to_string(),
                s.experiments.to_string(),
                fmt_f64(s.mean_avg_wait),
                fmt_f64(s.mean_avg_response),
                fmt_f64(s.mean_mean_ruf),
                s.win_count.to_string(),
            ]
        }),
    )
}

fn doc(name: &str, contents: String) -> CsvDocument {
    CsvDocument { name: name.to_string(), contents }
}

/// Every CSV for one completed experiment.
pub fn experiment_csvs(exp: &Experiment) -> Result<Vec<CsvDocument>> {
    if exp.status != ExperimentStatus::Completed {
        return Err(RasError::NotReady(exp.experiment_id));
    }
    let plans: Vec<AssignmentPlan> = exp.runs.iter().map(|r| r.plan.clone()).collect();
    let sims: Vec<&SimulationResult> = exp.runs.iter().map(|r| &r.simulation).collect();
    let rows: Vec<(u32, &StrategyMetrics)> = exp.runs.iter().map(|r| (exp.experiment_id, &r.metrics)).collect();
    Ok(vec![
        doc("pool.csv", pool_csv(&exp.pool)?),
        doc("plans.csv", plans_csv(&plans, &exp.pool)?),
        doc("timings.csv", timings_csv(&sims)?),
        doc("metrics_per_strategy.csv", metrics_csv(&rows)?),
        doc("per_node_value.csv", per_node_value_csv(&rows)?),
        doc("per_node_service_value.csv", per_node_service_value_csv(&rows)?),
        doc("ranking.csv", ranking_csv([exp])?),
    ])
}

/// Cross-experiment CSVs. `consolidated.csv` shares the column layout of
/// `metrics_per_strategy.csv`.
pub fn consolidated_csvs(file: &ExperimentFile) -> Result<Vec<CsvDocument>> {
    let consolidated = consolidate(file)?;
    let rows: Vec<(u32, &StrategyMetrics)> = consolidated.rows.iter().map(|r| (r.experiment_id, &r.metrics)).collect();
    let completed = file.experiments.iter().filter(|e| e.status == ExperimentStatus::Completed);
    Ok(vec![
        doc("consolidated.csv", metrics_csv(&rows)?),
        doc("consolidated_summary.csv", summary_csv(&consolidated)?),
        doc("per_node_value.csv", per_node_value_csv(&rows)?),
        doc("ranking.csv", ranking_csv(completed)?),
    ])
}

pub fn export_csv(file: &ExperimentFile, target: ExportTarget) -> Result<Vec<CsvDocument>> {
    match target {
        ExportTarget::Experiment(id) => experiment_csvs(file.experiment(id)?),
        ExportTarget::Consolidated => consolidated_csvs(file),
    }
}
