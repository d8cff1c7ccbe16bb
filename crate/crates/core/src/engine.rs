//! Per-VM queue simulation turning an [`AssignmentPlan`] into timings.
//!
//! A VM runs up to `connections` requests at once, and the summed service
//! sizes of its running requests may not exceed `ram_gb`. Waiting requests
//! start strictly in queue order: arrival order, or highest priority first
//! (then arrival) when the priority option is on. A head that does not fit
//! blocks everything behind it. Only running requests hold storage.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::generation::{Request, RequestId};
use crate::model::{Options, Service, ServiceId, Tick, VirtualMachine, VmId};
use crate::strategies::{AssignmentPlan, RejectReason, Rejection, StrategyId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTiming {
    pub request_id: RequestId,
    pub vm_id: VmId,
    pub service_id: ServiceId,
    pub arrival_time: Tick,
    pub start_time: Tick,
    pub completion_time: Tick,
    pub wait_time: Tick,
    pub response_time: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub strategy: StrategyId,
    /// In plan entry order.
    pub timings: Vec<RequestTiming>,
    pub rejections: Vec<Rejection>,
    pub makespan: Tick,
    pub per_vm_busy: BTreeMap<VmId, u64>,
}

struct Job {
    slot: usize,
    request_id: RequestId,
    service_id: ServiceId,
    arrival: Tick,
    process: Tick,
    size: u64,
    priority: u64,
}

/// Start tick for each job, in the same order as `jobs`.
fn run_vm(jobs: &[Job], connections: usize, ram: u64, priority_enabled: bool) -> Vec<Tick> {
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by_key(|&j| (jobs[j].arrival, jobs[j].request_id));
    let key = |j: usize| {
        let job = &jobs[j];
        (Reverse(if priority_enabled { job.priority } else { 0 }), job.arrival, job.request_id, j)
    };

    let mut starts = vec![0; jobs.len()];
    let mut waiting = BTreeSet::new();
    let mut running: BinaryHeap<Reverse<(Tick, u64)>> = BinaryHeap::new();
    let mut held_storage = 0u64;
    let mut next = 0;

    while next < order.len() || !waiting.is_empty() {
        let upcoming = order.get(next).map(|&j| jobs[j].arrival);
        let freeing = running.peek().map(|Reverse((t, _))| *t).filter(|_| !waiting.is_empty());
        let now = match (upcoming, freeing) {
            (Some(a), Some(f)) => a.min(f),
            (Some(a), None) => a,
            (None, Some(f)) => f,
            (None, None) => unreachable!("a blocked head always has running work ahead of it"),
        };

        while let Some(&Reverse((t, size))) = running.peek() {
            if t > now {
                break;
            }
            running.pop();
            held_storage -= size;
        }
        while let Some(&j) = order.get(next) {
            if jobs[j].arrival > now {
                break;
            }
            waiting.insert(key(j));
            next += 1;
        }
        while let Some(&head) = waiting.first() {
            let job = &jobs[head.3];
            if running.len() >= connections || held_storage + job.size > ram {
                break;
            }
            waiting.pop_first();
            starts[head.3] = now;
            running.push(Reverse((now + job.process, job.size)));
            held_storage += job.size;
        }
    }
    starts
}

pub fn simulate(
    plan: &AssignmentPlan,
    requests: &[Request],
    vms: &[VirtualMachine],
    services: &[Service],
    options: Options,
) -> SimulationResult {
    let by_id: HashMap<RequestId, (usize, &Request)> =
        requests.iter().enumerate().map(|(i, r)| (r.request_id, (i, r))).collect();
    let sizes: HashMap<ServiceId, u64> = services.iter().map(|s| (s.service_id, u64::from(s.size))).collect();
    let vm_by_id: BTreeMap<VmId, &VirtualMachine> = vms.iter().map(|vm| (vm.vm_id, vm)).collect();

    let mut rejections = plan.rejections.clone();
    let mut jobs_per_vm: BTreeMap<VmId, Vec<Job>> = BTreeMap::new();
    let mut timings: Vec<Option<RequestTiming>> = vec![None; plan.entries.len()];

    for (slot, entry) in plan.entries.iter().enumerate() {
        let (_, request) = by_id[&entry.request_id];
        let vm = vm_by_id[&entry.vm_id];
        let size = sizes.get(&request.service_id).copied().unwrap_or(0);
        if size > u64::from(vm.ram_gb) {
            rejections.push(Rejection { request_id: request.request_id, reason: RejectReason::Oversized });
            continue;
        }
        jobs_per_vm.entry(vm.vm_id).or_default().push(Job {
            slot,
            request_id: request.request_id,
            service_id: request.service_id,
            arrival: request.arrival_time,
            process: request.process_time,
            size,
            priority: request.priority,
        });
    }

    for (vm_id, jobs) in &jobs_per_vm {
        let vm = vm_by_id[vm_id];
        let starts = run_vm(jobs, vm.connections as usize, u64::from(vm.ram_gb), options.priority_enabled);
        for (job, start) in jobs.iter().zip(starts) {
            let completion = start + job.process;
            timings[job.slot] = Some(RequestTiming {
                request_id: job.request_id,
                vm_id: *vm_id,
                service_id: job.service_id,
                arrival_time: job.arrival,
                start_time: start,
                completion_time: completion,
                wait_time: start - job.arrival,
                response_time: completion - job.arrival,
            });
        }
    }

    let timings: Vec<RequestTiming> = timings.into_iter().flatten().collect();
    rejections.sort_by_key(|r| by_id.get(&r.request_id).map_or(usize::MAX, |(i, _)| *i));
    let makespan = match (
        timings.iter().map(|t| t.arrival_time).min(),
        timings.iter().map(|t| t.completion_time).max(),
    ) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0,
    };

    let mut result = SimulationResult {
        strategy: plan.strategy,
        timings,
        rejections,
        makespan,
        per_vm_busy: vm_by_id.keys().map(|&id| (id, 0)).collect(),
    };
    result.per_vm_busy = busy_accounting(&result);
    result
}

/// Slot-ticks consumed per VM: the summed process times of its requests.
/// Every VM already keyed in `per_vm_busy` appears, idle ones with 0.
pub fn busy_accounting(result: &SimulationResult) -> BTreeMap<VmId, u64> {
    let mut busy: BTreeMap<VmId, u64> = result.per_vm_busy.keys().map(|&id| (id, 0)).collect();
    for t in &result.timings {
        *busy.entry(t.vm_id).or_default() += t.completion_time - t.start_time;
    }
    busy
}
