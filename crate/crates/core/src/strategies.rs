//! Load-balancing principles. Each one turns a request pool into an
//! [`AssignmentPlan`]: a VM per request, or a rejection with a reason.
//!
//! All strategies see VMs in ascending `vm_id` order and never hand a VM
//! more than `max_users` requests. Placement ignores timing except for
//! [`StrategyId::Throttled`], which replays connection occupancy.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::generation::{Request, RequestId};
use crate::model::{CloudConfig, DataCenter, Options, Tick, VirtualMachine, VmId, ZoneId};
use crate::quantification::{apportion, quantify, QuantBasis, QuantMode, QuantificationResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StrategyId {
    RoundRobin,
    OrderlyCircular,
    CapacityFillIn,
    Throttled,
    EqualSplit,
    CapacityProportioned,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::RoundRobin,
        StrategyId::OrderlyCircular,
        StrategyId::CapacityFillIn,
        StrategyId::Throttled,
        StrategyId::EqualSplit,
        StrategyId::CapacityProportioned,
    ];

    /// Run when the caller selects nothing.
    pub const DEFAULT: [StrategyId; 2] = [StrategyId::RoundRobin, StrategyId::OrderlyCircular];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::RoundRobin => "ROUND_ROBIN",
            StrategyId::OrderlyCircular => "ORDERLY_CIRCULAR",
            StrategyId::CapacityFillIn => "CAPACITY_FILL_IN",
            StrategyId::Throttled => "THROTTLED",
            StrategyId::EqualSplit => "EQUAL_SPLIT",
            StrategyId::CapacityProportioned => "CAPACITY_PROPORTIONED",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    NoEligibleVm,
    AllFull,
    Oversized,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::NoEligibleVm => "NO_ELIGIBLE_VM",
            RejectReason::AllFull => "ALL_FULL",
            RejectReason::Oversized => "OVERSIZED",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub request_id: RequestId,
    pub vm_id: VmId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub request_id: RequestId,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub strategy: StrategyId,
    /// In pool (arrival) order.
    pub entries: Vec<Assignment>,
    pub rejections: Vec<Rejection>,
    /// One per distinct eligible-VM set, for capacity-proportioned plans.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quantifications: Vec<QuantificationResult>,
}

impl AssignmentPlan {
    pub fn counts_per_vm(&self) -> BTreeMap<VmId, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.vm_id).or_default() += 1;
        }
        m
    }
}

/// Everything a strategy may look at besides the pool.
#[derive(Debug, Clone)]
pub struct PlanContext<'a> {
    vms: Vec<&'a VirtualMachine>,
    zones: BTreeMap<VmId, ZoneId>,
    pub options: Options,
    pub mode: QuantMode,
    pub basis: QuantBasis,
}

impl<'a> PlanContext<'a> {
    pub fn new(vms: &'a [VirtualMachine], data_centers: &[DataCenter], options: Options) -> Self {
        let mut sorted: Vec<&VirtualMachine> = vms.iter().collect();
        sorted.sort_by_key(|vm| vm.vm_id);
        let zones = vms
            .iter()
            .filter_map(|vm| {
                data_centers.iter().find(|dc| dc.dc_id == vm.dc_id).map(|dc| (vm.vm_id, dc.zone_id))
            })
            .collect();
        PlanContext { vms: sorted, zones, options, mode: QuantMode::default(), basis: QuantBasis::default() }
    }

    pub fn from_config(config: &'a CloudConfig) -> Self {
        Self::new(&config.vms, &config.data_centers, config.options)
    }

    pub fn with_mode(mut self, mode: QuantMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_basis(mut self, basis: QuantBasis) -> Self {
        self.basis = basis;
        self
    }

    /// VMs in ascending id order.
    pub fn vms(&self) -> &[&'a VirtualMachine] {
        &self.vms
    }

    fn eligible_indices(&self, request: &Request) -> Vec<usize> {
        let base: Vec<usize> = (0..self.vms.len())
            .filter(|&i| !(self.options.faulty_handling_enabled && self.vms[i].faulty))
            .collect();
        if !self.options.zone_affinity_enabled {
            return base;
        }
        let local: Vec<usize> = base
            .iter()
            .copied()
            .filter(|&i| self.zones.get(&self.vms[i].vm_id) == Some(&request.zone_id))
            .collect();
        if local.is_empty() {
            base
        } else {
            local
        }
    }
}

/// VMs a request may be placed on, in ascending id order. Faulty VMs drop
/// out when faulty handling is on; zone affinity keeps only VMs in the
/// request's zone unless none exist there.
pub fn eligible_vms<'a>(request: &Request, ctx: &PlanContext<'a>) -> Vec<&'a VirtualMachine> {
    ctx.eligible_indices(request).into_iter().map(|i| ctx.vms[i]).collect()
}

enum Outcome {
    Placed(usize),
    Rejected(RejectReason),
}

/// Collects per-request outcomes and per-VM usage, then emits a plan in
/// pool order.
struct PlanBuilder<'p, 'a> {
    ctx: &'p PlanContext<'a>,
    used: Vec<u64>,
    outcomes: Vec<Option<Outcome>>,
}

impl<'p, 'a> PlanBuilder<'p, 'a> {
    fn new(ctx: &'p PlanContext<'a>, n: usize) -> Self {
        PlanBuilder { ctx, used: vec![0; ctx.vms.len()], outcomes: (0..n).map(|_| None).collect() }
    }

    fn has_room(&self, vm: usize) -> bool {
        self.used[vm] < u64::from(self.ctx.vms[vm].max_users)
    }

    fn headroom(&self, vm: usize) -> u64 {
        u64::from(self.ctx.vms[vm].max_users).saturating_sub(self.used[vm])
    }

    fn place(&mut self, request: usize, vm: usize) {
        self.used[vm] += 1;
        self.outcomes[request] = Some(Outcome::Placed(vm));
    }

    fn reject(&mut self, request: usize, reason: RejectReason) {
        self.outcomes[request] = Some(Outcome::Rejected(reason));
    }

    fn finish(self, strategy: StrategyId, requests: &[Request]) -> AssignmentPlan {
        let mut entries = Vec::new();
        let mut rejections = Vec::new();
        for (r, outcome) in requests.iter().zip(self.outcomes) {
            match outcome.expect("every request has an outcome") {
                Outcome::Placed(vm) => entries.push(Assignment { request_id: r.request_id, vm_id: self.ctx.vms[vm].vm_id }),
                Outcome::Rejected(reason) => rejections.push(Rejection { request_id: r.request_id, reason }),
            }
        }
        AssignmentPlan { strategy, entries, rejections, quantifications: Vec::new() }
    }
}

/// Persistent cursor over the VM ring; each request takes the first VM
/// from the cursor onward with room, and the cursor moves past it.
pub fn assign_round_robin(requests: &[Request], ctx: &PlanContext) -> AssignmentPlan {
    let m = ctx.vms.len();
    let mut b = PlanBuilder::new(ctx, requests.len());
    let mut cursor = 0;
    for (i, r) in requests.iter().enumerate() {
        let eligible = ctx.eligible_indices(r);
        if eligible.is_empty() {
            b.reject(i, RejectReason::NoEligibleVm);
            continue;
        }
        let hit = (0..m).map(|k| (cursor + k) % m).find(|&v| eligible.contains(&v) && b.has_room(v));
        match hit {
            Some(v) => {
                b.place(i, v);
                cursor = (v + 1) % m;
            }
            None => b.reject(i, RejectReason::AllFull),
        }
    }
    b.finish(StrategyId::RoundRobin, requests)
}

fn first_fit(requests: &[Request], ctx: &PlanContext, order: &[usize], strategy: StrategyId) -> AssignmentPlan {
    let mut b = PlanBuilder::new(ctx, requests.len());
    for (i, r) in requests.iter().enumerate() {
        let eligible = ctx.eligible_indices(r);
        if eligible.is_empty() {
            b.reject(i, RejectReason::NoEligibleVm);
            continue;
        }
        match order.iter().copied().find(|v| eligible.contains(v) && b.has_room(*v)) {
            Some(v) => b.place(i, v),
            None => b.reject(i, RejectReason::AllFull),
        }
    }
    b.finish(strategy, requests)
}

/// First fit with the scan restarting at the lowest id for every request.
pub fn assign_orderly_circular(requests: &[Request], ctx: &PlanContext) -> AssignmentPlan {
    let order: Vec<usize> = (0..ctx.vms.len()).collect();
    first_fit(requests, ctx, &order, StrategyId::OrderlyCircular)
}

/// Fill the VM with the most connections up to `max_users`, then the next.
pub fn assign_capacity_fill_in(requests: &[Request], ctx: &PlanContext) -> AssignmentPlan {
    let mut order: Vec<usize> = (0..ctx.vms.len()).collect();
    order.sort_by_key(|&i| (Reverse(ctx.vms[i].connections), ctx.vms[i].vm_id));
    first_fit(requests, ctx, &order, StrategyId::CapacityFillIn)
}

/// Target counts from `weights`, clipped at `caps`; the clipped overflow is
/// re-split over the VMs that still have room until it is absorbed or no
/// room is left.
fn split_with_caps(weights: &[f64], n: u64, caps: &[u64]) -> Vec<u64> {
    let split = |w: &[f64], k: u64| apportion(w, k).unwrap_or_else(|_| apportion(&vec![1.0; w.len()], k).unwrap());
    let mut targets = split(weights, n);
    loop {
        let mut overflow = 0;
        for (t, &cap) in targets.iter_mut().zip(caps) {
            if *t > cap {
                overflow += *t - cap;
                *t = cap;
            }
        }
        let open: Vec<usize> = (0..targets.len()).filter(|&i| targets[i] < caps[i]).collect();
        if overflow == 0 || open.is_empty() {
            return targets;
        }
        let sub: Vec<f64> = open.iter().map(|&i| weights[i]).collect();
        for (&i, extra) in open.iter().zip(split(&sub, overflow)) {
            targets[i] += extra;
        }
    }
}

/// Requests grouped by their eligible VM set, groups in order of first
/// appearance. Without zone affinity there is a single group.
fn eligible_groups(requests: &[Request], ctx: &PlanContext) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (i, r) in requests.iter().enumerate() {
        let eligible = ctx.eligible_indices(r);
        match groups.iter_mut().find(|(vms, _)| *vms == eligible) {
            Some((_, members)) => members.push(i),
            None => groups.push((eligible, vec![i])),
        }
    }
    groups
}

fn assign_by_targets(
    requests: &[Request],
    ctx: &PlanContext,
    strategy: StrategyId,
    mut weigh: impl FnMut(&[usize]) -> Vec<f64>,
) -> (AssignmentPlan, usize) {
    let mut b = PlanBuilder::new(ctx, requests.len());
    let mut group_count = 0;
    for (vms, members) in eligible_groups(requests, ctx) {
        if vms.is_empty() {
            for i in members {
                b.reject(i, RejectReason::NoEligibleVm);
            }
            continue;
        }
        group_count += 1;
        let weights = weigh(&vms);
        let caps: Vec<u64> = vms.iter().map(|&v| b.headroom(v)).collect();
        let targets = split_with_caps(&weights, members.len() as u64, &caps);
        let mut slots = vms.iter().zip(&targets).flat_map(|(&v, &t)| std::iter::repeat_n(v, t as usize));
        for i in members {
            match slots.next() {
                Some(v) => b.place(i, v),
                None => b.reject(i, RejectReason::AllFull),
            }
        }
    }
    (b.finish(strategy, requests), group_count)
}

/// Equal shares in id order (`⌊N/m⌋`, one extra for the first `N mod m`),
/// dealt VM by VM in arrival order.
pub fn assign_equal_split(requests: &[Request], ctx: &PlanContext) -> AssignmentPlan {
    assign_by_targets(requests, ctx, StrategyId::EqualSplit, |vms| vec![1.0; vms.len()]).0
}

/// Shares from the Z-score quantification of the eligible VMs' capacities.
pub fn assign_capacity_proportioned(requests: &[Request], ctx: &PlanContext) -> AssignmentPlan {
    let mut quantifications = Vec::new();
    let (mut plan, _) = assign_by_targets(requests, ctx, StrategyId::CapacityProportioned, |vms| {
        let caps: Vec<f64> = vms
            .iter()
            .map(|&v| match ctx.basis {
                QuantBasis::Load => f64::from(ctx.vms[v].connections),
                QuantBasis::Storage => f64::from(ctx.vms[v].ram_gb),
            })
            .collect();
        let q = quantify(&caps, ctx.mode).expect("non-empty, finite capacities");
        let weights = q.percentages.clone();
        quantifications.push(q);
        weights
    });
    plan.quantifications = quantifications;
    plan
}

/// Throttled placement with the start tick of each placed request.
///
/// Requests are replayed in time. On arrival a request joins a global hold
/// queue; at every event tick the head of the queue goes to the first
/// eligible VM (id order) with a free connection and room under
/// `max_users`. A head with no such VM blocks the queue until a connection
/// frees. A head whose eligible VMs are all at `max_users` is rejected.
pub fn throttled_schedule(requests: &[Request], ctx: &PlanContext) -> (AssignmentPlan, BTreeMap<RequestId, Tick>) {
    let mut b = PlanBuilder::new(ctx, requests.len());
    let mut starts = BTreeMap::new();
    let mut active: Vec<BinaryHeap<Reverse<Tick>>> = vec![BinaryHeap::new(); ctx.vms.len()];
    let priority = ctx.options.priority_enabled;
    let key = |i: usize| {
        let r = &requests[i];
        (if priority { Reverse(r.priority) } else { Reverse(0) }, r.arrival_time, r.request_id, i)
    };

    let mut arrivals: Vec<usize> = (0..requests.len()).collect();
    arrivals.sort_by_key(|&i| (requests[i].arrival_time, requests[i].request_id));
    let mut next_arrival = 0;
    let mut held = BTreeSet::new();

    loop {
        let upcoming = arrivals.get(next_arrival).map(|&i| requests[i].arrival_time);
        let freeing = if held.is_empty() {
            None
        } else {
            active.iter().filter_map(|h| h.peek().map(|Reverse(t)| *t)).min()
        };
        let now = match (upcoming, freeing) {
            (None, None) => break,
            (Some(a), None) => a,
            (None, Some(f)) => f,
            (Some(a), Some(f)) => a.min(f),
        };

        for heap in &mut active {
            while heap.peek().is_some_and(|Reverse(t)| *t <= now) {
                heap.pop();
            }
        }
        while let Some(&i) = arrivals.get(next_arrival) {
            if requests[i].arrival_time > now {
                break;
            }
            held.insert(key(i));
            next_arrival += 1;
        }

        while let Some(&head) = held.first() {
            let i = head.3;
            let eligible = ctx.eligible_indices(&requests[i]);
            if eligible.is_empty() {
                b.reject(i, RejectReason::NoEligibleVm);
            } else if !eligible.iter().any(|&v| b.has_room(v)) {
                b.reject(i, RejectReason::AllFull);
            } else {
                let free = eligible
                    .iter()
                    .copied()
                    .find(|&v| b.has_room(v) && active[v].len() < ctx.vms[v].connections as usize);
                let Some(v) = free else { break };
                b.place(i, v);
                active[v].push(Reverse(now + requests[i].process_time));
                starts.insert(requests[i].request_id, now);
            }
            held.pop_first();
        }
    }
    (b.finish(StrategyId::Throttled, requests), starts)
}

pub fn assign_throttled(requests: &[Request], ctx: &PlanContext) -> AssignmentPlan {
    throttled_schedule(requests, ctx).0
}

pub fn assign(strategy: StrategyId, requests: &[Request], ctx: &PlanContext) -> AssignmentPlan {
    match strategy {
        StrategyId::RoundRobin => assign_round_robin(requests, ctx),
        StrategyId::OrderlyCircular => assign_orderly_circular(requests, ctx),
        StrategyId::CapacityFillIn => assign_capacity_fill_in(requests, ctx),
        StrategyId::Throttled => assign_throttled(requests, ctx),
        StrategyId::EqualSplit => assign_equal_split(requests, ctx),
        StrategyId::CapacityProportioned => assign_capacity_proportioned(requests, ctx),
    }
}

/// The strategies actually run for a selection: the defaults when empty,
/// otherwise the selection with repeats dropped.
pub fn resolve_selection(selected: &[StrategyId]) -> Vec<StrategyId> {
    if selected.is_empty() {
        return StrategyId::DEFAULT.to_vec();
    }
    let mut seen = BTreeSet::new();
    selected.iter().copied().filter(|s| seen.insert(*s)).collect()
}

/// One plan per strategy, all over the same pool.
pub fn run_strategies(selected: &[StrategyId], requests: &[Request], ctx: &PlanContext) -> Vec<AssignmentPlan> {
    resolve_selection(selected).into_iter().map(|s| assign(s, requests, ctx)).collect()
}
