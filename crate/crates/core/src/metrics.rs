//! Output parameters per strategy run, the strategy ranking, and the
//! cross-experiment consolidation of a file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::SimulationResult;
use crate::error::{RasError, Result};
use crate::experiment::{ExperimentFile, ExperimentStatus};
use crate::model::{service_priority, Service, ServiceId, VirtualMachine, VmId};
use crate::strategies::StrategyId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MetricFlag {
    NoAssignments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMetrics {
    pub strategy: StrategyId,
    pub assigned_count: usize,
    pub rejection_count: usize,
    pub avg_wait: f64,
    pub avg_response: f64,
    /// Σ value × weightage of the requests each VM completed.
    pub per_node_value: BTreeMap<VmId, u64>,
    pub per_node_service_value: BTreeMap<VmId, BTreeMap<ServiceId, u64>>,
    /// Resource utilization factor: busy slot-ticks / (makespan × connections).
    pub per_node_ruf: BTreeMap<VmId, f64>,
    /// Mean RUF over non-faulty VMs.
    pub mean_ruf: f64,
    pub total_value: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<MetricFlag>,
}

pub fn compute_metrics(result: &SimulationResult, services: &[Service], vms: &[VirtualMachine]) -> StrategyMetrics {
    let earned: BTreeMap<ServiceId, u64> = services.iter().map(|s| (s.service_id, service_priority(s))).collect();

    let mut vm_ids: Vec<VmId> = vms.iter().map(|v| v.vm_id).collect();
    vm_ids.sort_unstable();
    let mut service_ids: Vec<ServiceId> = services.iter().map(|s| s.service_id).collect();
    service_ids.sort_unstable();

    let mut per_node_service_value: BTreeMap<VmId, BTreeMap<ServiceId, u64>> = vm_ids
        .iter()
        .map(|&v| (v, service_ids.iter().map(|&s| (s, 0)).collect()))
        .collect();

    let n = result.timings.len();
    let (mut wait_sum, mut response_sum) = (0u64, 0u64);
    for t in &result.timings {
        wait_sum += t.wait_time;
        response_sum += t.response_time;
    }
    for t in &result.timings {
        *per_node_service_value.entry(t.vm_id).or_default().entry(t.service_id).or_default() +=
            earned.get(&t.service_id).copied().unwrap_or(0);
    }
    let per_node_value: BTreeMap<VmId, u64> =
        per_node_service_value.iter().map(|(&v, m)| (v, m.values().sum())).collect();

    let per_node_ruf: BTreeMap<VmId, f64> = vms
        .iter()
        .map(|vm| {
            let busy = result.per_vm_busy.get(&vm.vm_id).copied().unwrap_or(0);
            let capacity = result.makespan * u64::from(vm.connections);
            let ruf = if capacity == 0 { 0.0 } else { busy as f64 / capacity as f64 };
            (vm.vm_id, ruf)
        })
        .collect();
    let healthy: Vec<f64> = vms.iter().filter(|vm| !vm.faulty).map(|vm| per_node_ruf[&vm.vm_id]).collect();
    let mean_ruf = if healthy.is_empty() { 0.0 } else { healthy.iter().sum::<f64>() / healthy.len() as f64 };

    let (avg_wait, avg_response) =
        if n == 0 { (0.0, 0.0) } else { (wait_sum as f64 / n as f64, response_sum as f64 / n as f64) };

    StrategyMetrics {
        strategy: result.strategy,
        assigned_count: n,
        rejection_count: result.rejections.len(),
        avg_wait,
        avg_response,
        total_value: per_node_value.values().sum(),
        per_node_value,
        per_node_service_value,
        per_node_ruf,
        mean_ruf,
        flags: if n == 0 { vec![MetricFlag::NoAssignments] } else { vec![] },
    }
}

/// Best first: mean RUF descending, then average response ascending, then
/// strategy declaration order.
pub fn rank_strategies(metrics: &[StrategyMetrics]) -> Vec<StrategyId> {
    let mut order: Vec<&StrategyMetrics> = metrics.iter().collect();
    order.sort_by(|a, b| {
        b.mean_ruf
            .total_cmp(&a.mean_ruf)
            .then(a.avg_response.total_cmp(&b.avg_response))
            .then(a.strategy.cmp(&b.strategy))
    });
    order.into_iter().map(|m| m.strategy).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub experiment_id: u32,
    pub metrics: StrategyMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyId,
    pub experiments: usize,
    pub mean_avg_wait: f64,
    pub mean_avg_response: f64,
    pub mean_mean_ruf: f64,
    pub win_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedMetrics {
    pub file_name: String,
    /// Ordered by experiment id, then by the order strategies ran.
    pub rows: Vec<ExperimentRow>,
    /// Ordered by strategy declaration order.
    pub per_strategy: Vec<StrategySummary>,
}

pub fn consolidate(file: &ExperimentFile) -> Result<ConsolidatedMetrics> {
    let completed: Vec<_> =
        file.experiments.iter().filter(|e| e.status == ExperimentStatus::Completed).collect();
    if completed.is_empty() {
        return Err(RasError::NothingToConsolidate);
    }

    let mut rows = Vec::new();
    let mut acc: BTreeMap<StrategyId, (usize, f64, f64, f64, usize)> = BTreeMap::new();
    for exp in completed {
        let metrics: Vec<StrategyMetrics> = exp.runs.iter().map(|r| r.metrics.clone()).collect();
        let winner = rank_strategies(&metrics).first().copied();
        for m in metrics {
            let e = acc.entry(m.strategy).or_default();
            e.0 += 1;
            e.1 += m.avg_wait;
            e.2 += m.avg_response;
            e.3 += m.mean_ruf;
            if Some(m.strategy) == winner {
                e.4 += 1;
            }
            rows.push(ExperimentRow { experiment_id: exp.experiment_id, metrics: m });
        }
    }
    let per_strategy = acc
        .into_iter()
        .map(|(strategy, (k, wait, resp, ruf, wins))| StrategySummary {
            strategy,
            experiments: k,
            mean_avg_wait: wait / k as f64,
            mean_avg_response: resp / k as f64,
            mean_mean_ruf: ruf / k as f64,
            win_count: wins,
        })
        .collect();
    Ok(ConsolidatedMetrics { file_name: file.name.clone(), rows, per_strategy })
}
