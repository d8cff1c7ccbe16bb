//! Reference transcriptions and invariant checkers shared by the
//! integration tests. Nothing here calls into the library's strategy,
//! quantification or engine code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ras_core::engine::SimulationResult;
use ras_core::generation::Request;
use ras_core::model::{
    CloudConfig, DataCenter, Options, Service, ServiceDemand, TimeRangeSettings, VirtualMachine,
};
use ras_core::quantification::{QuantBasis, QuantMode};
use ras_core::strategies::{AssignmentPlan, RejectReason, StrategyId};

// ---------------------------------------------------------------- numerics

/// Φ from its Maclaurin series, 0.5 + φ-series. Good to ~1e-14 for |z| < 4.
pub fn phi_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let z2 = z * z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -z2 / (2.0 * n);
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    0.5 + sum / (2.0 * std::f64::consts::PI).sqrt()
}

/// Truncate to two decimals by cutting the printed digits.
pub fn truncate_by_text(z: f64) -> f64 {
    let s = format!("{z:.9}");
    let dot = s.find('.').unwrap();
    s[..dot + 3].parse().unwrap()
}

pub fn oracle_percentages(caps: &[f64], mode: QuantMode) -> Vec<f64> {
    let n = caps.len() as f64;
    let mean = caps.iter().sum::<f64>() / n;
    let var = if caps.len() > 1 { caps.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let sd = var.sqrt();
    caps.iter()
        .map(|c| {
            let z = if sd > 0.0 { (c - mean) / sd } else { 0.0 };
            let z = if mode == QuantMode::PaperCompat { truncate_by_text(z) } else { z };
            100.0 * phi_series(z)
        })
        .collect()
}

/// Largest remainder, bumping one index at a time.
pub fn oracle_apportion(weights: &[f64], n: u64) -> Vec<u64> {
    let mut total: f64 = weights.iter().sum();
    let uniform;
    let weights = if total > 0.0 {
        weights
    } else {
        uniform = vec![1.0; weights.len()];
        total = weights.len() as f64;
        &uniform[..]
    };
    let quota: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<u64> = quota.iter().map(|q| q.floor() as u64).collect();
    let mut bumped = vec![false; weights.len()];
    while counts.iter().sum::<u64>() < n {
        let mut best: Option<usize> = None;
        for i in 0..weights.len() {
            if bumped[i] {
                continue;
            }
            let f = quota[i] - quota[i].floor();
            if best.is_none_or(|b| f > quota[b] - quota[b].floor()) {
                best = Some(i);
            }
        }
        let b = best.unwrap();
        bumped[b] = true;
        counts[b] += 1;
    }
    counts
}

fn oracle_capped_split(weights: &[f64], n: u64, caps: &[u64]) -> Vec<u64> {
    let mut t = oracle_apportion(weights, n);
    loop {
        let mut overflow = 0;
        for i in 0..t.len() {
            if t[i] > caps[i] {
                overflow += t[i] - caps[i];
                t[i] = caps[i];
            }
        }
        let open: Vec<usize> = (0..t.len()).filter(|&i| t[i] < caps[i]).collect();
        if overflow == 0 || open.is_empty() {
            return t;
        }
        let w: Vec<f64> = open.iter().map(|&i| weights[i]).collect();
        let extra = oracle_apportion(&w, overflow);
        for (k, &i) in open.iter().enumerate() {
            t[i] += extra[k];
        }
    }
}

// -------------------------------------------------------------- strategies

/// Result of a reference strategy: VM id or rejection reason per request,
/// in pool order.
pub type Placement = Vec<Result<u32, RejectReason>>;

pub fn placement_of(plan: &AssignmentPlan, pool: &[Request]) -> Placement {
    let mut by_id: BTreeMap<u64, Result<u32, RejectReason>> = BTreeMap::new();
    for e in &plan.entries {
        by_id.insert(e.request_id, Ok(e.vm_id));
    }
    for r in &plan.rejections {
        by_id.insert(r.request_id, Err(r.reason));
    }
    pool.iter().map(|r| by_id[&r.request_id]).collect()
}

pub struct World<'a> {
    pub vms: Vec<&'a VirtualMachine>,
    pub zone: BTreeMap<u32, u8>,
    pub options: Options,
}

impl<'a> World<'a> {
    pub fn new(config: &'a CloudConfig, options: Options) -> Self {
        let mut vms: Vec<&VirtualMachine> = config.vms.iter().collect();
        vms.sort_by_key(|vm| vm.vm_id);
        let zone = config
            .vms
            .iter()
            .map(|vm| (vm.vm_id, config.data_centers.iter().find(|d| d.dc_id == vm.dc_id).unwrap().zone_id))
            .collect();
        World { vms, zone, options }
    }

    /// Positions (into `vms`) a request may use.
    pub fn eligible(&self, r: &Request) -> Vec<usize> {
        let mut ok = Vec::new();
        for (i, vm) in self.vms.iter().enumerate() {
            if self.options.faulty_handling_enabled && vm.faulty {
                continue;
            }
            ok.push(i);
        }
        if self.options.zone_affinity_enabled {
            let local: Vec<usize> = ok.iter().copied().filter(|&i| self.zone[&self.vms[i].vm_id] == r.zone_id).collect();
            if !local.is_empty() {
                return local;
            }
        }
        ok
    }
}

fn scan_order(world: &World, strategy: StrategyId) -> Vec<usize> {
    let mut order: Vec<usize> = (0..world.vms.len()).collect();
    if strategy == StrategyId::CapacityFillIn {
        order.sort_by(|&a, &b| {
            world.vms[b].connections.cmp(&world.vms[a].connections).then(world.vms[a].vm_id.cmp(&world.vms[b].vm_id))
        });
    }
    order
}

pub fn reference_plan(strategy: StrategyId, pool: &[Request], world: &World, mode: QuantMode, basis: QuantBasis) -> Placement {
    match strategy {
        StrategyId::RoundRobin => reference_round_robin(pool, world),
        StrategyId::OrderlyCircular | StrategyId::CapacityFillIn => reference_first_fit(pool, world, strategy),
        StrategyId::Throttled => reference_throttled(pool, world).0,
        StrategyId::EqualSplit | StrategyId::CapacityProportioned => reference_targets(pool, world, strategy, mode, basis),
    }
}

fn reference_round_robin(pool: &[Request], world: &World) -> Placement {
    let m = world.vms.len();
    let mut used = vec![0u32; m];
    let mut cursor = 0usize;
    let mut out = Vec::new();
    for r in pool {
        let el = world.eligible(r);
        if el.is_empty() {
            out.push(Err(RejectReason::NoEligibleVm));
            continue;
        }
        let mut placed = None;
        for step in 0..m {
            let v = (cursor + step) % m;
            if el.contains(&v) && used[v] < world.vms[v].max_users {
                placed = Some(v);
                break;
            }
        }
        match placed {
            Some(v) => {
                used[v] += 1;
                cursor = (v + 1) % m;
                out.push(Ok(world.vms[v].vm_id));
            }
            None => out.push(Err(RejectReason::AllFull)),
        }
    }
    out
}

fn reference_first_fit(pool: &[Request], world: &World, strategy: StrategyId) -> Placement {
    let order = scan_order(world, strategy);
    let mut used = vec![0u32; world.vms.len()];
    let mut out = Vec::new();
    for r in pool {
        let el = world.eligible(r);
        if el.is_empty() {
            out.push(Err(RejectReason::NoEligibleVm));
            continue;
        }
        let mut placed = Err(RejectReason::AllFull);
        for &v in &order {
            if el.contains(&v) && used[v] < world.vms[v].max_users {
                used[v] += 1;
                placed = Ok(world.vms[v].vm_id);
                break;
            }
        }
        out.push(placed);
    }
    out
}

fn reference_targets(pool: &[Request], world: &World, strategy: StrategyId, mode: QuantMode, basis: QuantBasis) -> Placement {
    let mut used = vec![0u64; world.vms.len()];
    let mut out: Vec<Option<Result<u32, RejectReason>>> = vec![None; pool.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, r) in pool.iter().enumerate() {
        let el = world.eligible(r);
        match groups.iter().position(|g| *g == el) {
            Some(k) => members[k].push(i),
            None => {
                groups.push(el);
                members.push(vec![i]);
            }
        }
    }
    for (el, mem) in groups.iter().zip(&members) {
        if el.is_empty() {
            for &i in mem {
                out[i] = Some(Err(RejectReason::NoEligibleVm));
            }
            continue;
        }
        let weights: Vec<f64> = if strategy == StrategyId::EqualSplit {
            vec![1.0; el.len()]
        } else {
            let caps: Vec<f64> = el
                .iter()
                .map(|&v| match basis {
                    QuantBasis::Load => world.vms[v].connections as f64,
                    QuantBasis::Storage => world.vms[v].ram_gb as f64,
                })
                .collect();
            oracle_percentages(&caps, mode)
        };
        let caps: Vec<u64> = el.iter().map(|&v| (world.vms[v].max_users as u64).saturating_sub(used[v])).collect();
        let targets = oracle_capped_split(&weights, mem.len() as u64, &caps);
        let mut given = vec![0u64; el.len()];
        for &i in mem {
            match (0..el.len()).find(|&k| given[k] < targets[k]) {
                Some(k) => {
                    given[k] += 1;
                    used[el[k]] += 1;
                    out[i] = Some(Ok(world.vms[el[k]].vm_id));
                }
                None => out[i] = Some(Err(RejectReason::AllFull)),
            }
        }
    }
    out.into_iter().map(Option::unwrap).collect()
}

fn sort_key(r: &Request, priority: bool) -> (i64, u64, u64) {
    (if priority { -(r.priority as i64) } else { 0 }, r.arrival_time, r.request_id)
}

/// Tick-by-tick throttled placement with start ticks.
pub fn reference_throttled(pool: &[Request], world: &World) -> (Placement, BTreeMap<u64, u64>) {
    let mut out: Vec<Option<Result<u32, RejectReason>>> = vec![None; pool.len()];
    let mut starts = BTreeMap::new();
    let mut used = vec![0u32; world.vms.len()];
    let mut ends: Vec<Vec<u64>> = vec![Vec::new(); world.vms.len()];
    let mut held: Vec<usize> = Vec::new();
    let horizon = pool.iter().map(|r| r.arrival_time).max().unwrap_or(0) + pool.iter().map(|r| r.process_time).sum::<u64>() + 1;
    for t in 0..=horizon {
        for e in ends.iter_mut() {
            e.retain(|&end| end > t);
        }
        for (i, r) in pool.iter().enumerate() {
            if r.arrival_time == t {
                held.push(i);
            }
        }
        held.sort_by_key(|&i| sort_key(&pool[i], world.options.priority_enabled));
        while let Some(&i) = held.first() {
            let el = world.eligible(&pool[i]);
            if el.is_empty() {
                out[i] = Some(Err(RejectReason::NoEligibleVm));
            } else if el.iter().all(|&v| used[v] >= world.vms[v].max_users) {
                out[i] = Some(Err(RejectReason::AllFull));
            } else {
                let free =
                    el.iter().copied().find(|&v| used[v] < world.vms[v].max_users && ends[v].len() < world.vms[v].connections as usize);
                let Some(v) = free else { break };
                used[v] += 1;
                ends[v].push(t + pool[i].process_time);
                starts.insert(pool[i].request_id, t);
                out[i] = Some(Ok(world.vms[v].vm_id));
            }
            held.remove(0);
        }
    }
    (out.into_iter().map(Option::unwrap).collect(), starts)
}

// ------------------------------------------------------------------ engine

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BruteTiming {
    pub request_id: u64,
    pub vm_id: u32,
    pub start: u64,
    pub completion: u64,
}

/// Per-tick simulation of a plan. Returns timings sorted by request id and
/// the ids rejected as oversized.
pub fn brute_engine(
    plan: &AssignmentPlan,
    pool: &[Request],
    vms: &[VirtualMachine],
    services: &[Service],
    priority: bool,
) -> (Vec<BruteTiming>, Vec<u64>) {
    let size = |r: &Request| services.iter().find(|s| s.service_id == r.service_id).map_or(0, |s| s.size as u64);
    let mut timings = Vec::new();
    let mut oversized = Vec::new();
    for vm in vms {
        let mut jobs: Vec<&Request> = Vec::new();
        for e in plan.entries.iter().filter(|e| e.vm_id == vm.vm_id) {
            let r = pool.iter().find(|r| r.request_id == e.request_id).unwrap();
            if size(r) > vm.ram_gb as u64 {
                oversized.push(r.request_id);
            } else {
                jobs.push(r);
            }
        }
        let mut waiting: Vec<&Request> = Vec::new();
        let mut running: Vec<(u64, u64)> = Vec::new();
        let mut done = 0;
        let mut t = 0;
        while done < jobs.len() {
            running.retain(|&(end, _)| end > t);
            for r in &jobs {
                if r.arrival_time == t {
                    waiting.push(r);
                }
            }
            waiting.sort_by_key(|r| sort_key(r, priority));
            while let Some(head) = waiting.first() {
                let held: u64 = running.iter().map(|&(_, s)| s).sum();
                if running.len() >= vm.connections as usize || held + size(head) > vm.ram_gb as u64 {
                    break;
                }
                let head = waiting.remove(0);
                running.push((t + head.process_time, size(head)));
                timings.push(BruteTiming { request_id: head.request_id, vm_id: vm.vm_id, start: t, completion: t + head.process_time });
                done += 1;
            }
            t += 1;
        }
    }
    timings.sort();
    oversized.sort();
    (timings, oversized)
}

// -------------------------------------------------------------- invariants

/// Every check a plan and its simulation must pass. Returns the first
/// violation found.
pub fn check_invariants(
    plan: &AssignmentPlan,
    sim: &SimulationResult,
    pool: &[Request],
    config: &CloudConfig,
    options: Options,
) -> Result<(), String> {
    let tag = plan.strategy;
    let pool_ids: BTreeSet<u64> = pool.iter().map(|r| r.request_id).collect();
    let mut seen = BTreeSet::new();
    for id in plan.entries.iter().map(|e| e.request_id).chain(plan.rejections.iter().map(|r| r.request_id)) {
        if !seen.insert(id) {
            return Err(format!("{tag}: request {id} appears twice in the plan"));
        }
    }
    if seen != pool_ids {
        return Err(format!("{tag}: plan does not partition the pool"));
    }

    let world = World::new(config, options);
    let mut per_vm: BTreeMap<u32, u32> = BTreeMap::new();
    for e in &plan.entries {
        *per_vm.entry(e.vm_id).or_default() += 1;
        let r = pool.iter().find(|r| r.request_id == e.request_id).unwrap();
        let el = world.eligible(r);
        if !el.iter().any(|&v| world.vms[v].vm_id == e.vm_id) {
            return Err(format!("{tag}: request {} placed on ineligible vm {}", e.request_id, e.vm_id));
        }
    }
    for (vm_id, n) in &per_vm {
        let vm = config.vm(*vm_id).unwrap();
        if *n > vm.max_users {
            return Err(format!("{tag}: vm {vm_id} holds {n} > max_users {}", vm.max_users));
        }
    }

    let sim_ids: BTreeSet<u64> =
        sim.timings.iter().map(|t| t.request_id).chain(sim.rejections.iter().map(|r| r.request_id)).collect();
    if sim_ids != pool_ids || sim.timings.len() + sim.rejections.len() != pool.len() {
        return Err(format!("{tag}: simulation does not account for every request"));
    }

    let by_id: BTreeMap<u64, &Request> = pool.iter().map(|r| (r.request_id, r)).collect();
    let size = |service: u32| config.service(service).unwrap().size as u64;
    for t in &sim.timings {
        let r = by_id[&t.request_id];
        if t.arrival_time != r.arrival_time || t.start_time < t.arrival_time {
            return Err(format!("{tag}: request {} starts before arrival", t.request_id));
        }
        if t.completion_time != t.start_time + r.process_time
            || t.wait_time != t.start_time - t.arrival_time
            || t.response_time != t.wait_time + r.process_time
        {
            return Err(format!("{tag}: request {} breaks response = wait + process", t.request_id));
        }
    }

    for vm in &config.vms {
        let mine: Vec<_> = sim.timings.iter().filter(|t| t.vm_id == vm.vm_id).collect();
        let mut ticks: BTreeSet<u64> = mine.iter().map(|t| t.start_time).collect();
        ticks.extend(mine.iter().map(|t| t.completion_time));
        for &tick in &ticks {
            let active: Vec<_> = mine.iter().filter(|t| t.start_time <= tick && tick < t.completion_time).collect();
            if active.len() > vm.connections as usize {
                return Err(format!("{tag}: vm {} runs {} > {} at tick {tick}", vm.vm_id, active.len(), vm.connections));
            }
            let held: u64 = active.iter().map(|t| size(t.service_id)).sum();
            if held > vm.ram_gb as u64 {
                return Err(format!("{tag}: vm {} holds {held} > {} storage at tick {tick}", vm.vm_id, vm.ram_gb));
            }
        }
        for a in &mine {
            for b in &mine {
                let ka = sort_key(by_id[&a.request_id], options.priority_enabled);
                let kb = sort_key(by_id[&b.request_id], options.priority_enabled);
                if ka < kb && a.arrival_time <= b.start_time && b.start_time < a.start_time {
                    return Err(format!("{tag}: request {} overtook {} on vm {}", b.request_id, a.request_id, vm.vm_id));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- fixtures

pub fn tiny_services() -> Vec<Service> {
    vec![
        Service { service_id: 1, file_name: "a".into(), size: 2, type_label: "A".into(), value: 1, weightage: 1 },
        Service { service_id: 2, file_name: "b".into(), size: 4, type_label: "B".into(), value: 2, weightage: 3 },
    ]
}

/// (connections, ram_gb, max_users, faulty)
pub const TINY_SHAPES: [(u32, u32, u32, bool); 4] = [(1, 4, 2, false), (2, 6, 3, false), (2, 4, 1, false), (1, 3, 2, true)];

pub fn vm(vm_id: u32, dc_id: u32, connections: u32, ram_gb: u32, max_users: u32, faulty: bool) -> VirtualMachine {
    VirtualMachine {
        dc_id,
        vm_id,
        processor: "x".into(),
        ram_gb,
        hdd_gb: 100,
        connections,
        nic: 1,
        traffic: 1,
        bandwidth: 1,
        os: "linux".into(),
        max_users,
        faulty,
    }
}

pub fn two_zone_dcs() -> Vec<DataCenter> {
    vec![
        DataCenter { zone_id: 1, dc_id: 1, country: "A".into(), city: "a".into() },
        DataCenter { zone_id: 2, dc_id: 2, country: "B".into(), city: "b".into() },
    ]
}

/// Every multiset of VM shapes of size 1..=3, as configs with ids 1, 2, 3
/// and alternating data centers.
pub fn tiny_vm_sets() -> Vec<Vec<VirtualMachine>> {
    let mut out = Vec::new();
    fn rec(start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<VirtualMachine>>) {
        if !cur.is_empty() {
            out.push(
                cur.iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        let (c, ram, max, faulty) = TINY_SHAPES[s];
                        vm(i as u32 + 1, (i % 2) as u32 + 1, c, ram, max, faulty)
                    })
                    .collect(),
            );
        }
        if cur.len() == 3 {
            return;
        }
        for s in start..TINY_SHAPES.len() {
            cur.push(s);
            rec(s, cur, out);
            cur.pop();
        }
    }
    rec(0, &mut Vec::new(), &mut out);
    out
}

/// (arrival, process, service) kinds, ordered by arrival.
pub fn tiny_kinds() -> Vec<(u64, u64, u32)> {
    let mut kinds = Vec::new();
    for arrival in 0..3 {
        for process in [1, 3] {
            for service in [1, 2] {
                kinds.push((arrival, process, service));
            }
        }
    }
    kinds
}

/// Every pool of at most `max_n` requests over `kinds`, as nondecreasing
/// kind sequences so pools come out sorted by arrival then id.
pub fn tiny_pools(max_n: usize) -> Vec<Vec<Request>> {
    let kinds = tiny_kinds();
    let mut out = Vec::new();
    fn rec(start: usize, cur: &mut Vec<usize>, max_n: usize, kinds: &[(u64, u64, u32)], out: &mut Vec<Vec<Request>>) {
        out.push(
            cur.iter()
                .enumerate()
                .map(|(i, &k)| {
                    let (arrival, process, service) = kinds[k];
                    Request {
                        request_id: i as u64 + 1,
                        service_id: service,
                        ip: "1.2.3.4".into(),
                        zone_id: (i % 2) as u8 + 1,
                        arrival_time: arrival,
                        process_time: process,
                        priority: if service == 1 { 1 } else { 6 },
                    }
                })
                .collect(),
        );
        if cur.len() == max_n {
            return;
        }
        for k in start..kinds.len() {
            cur.push(k);
            rec(k, cur, max_n, kinds, out);
            cur.pop();
        }
    }
    rec(0, &mut Vec::new(), max_n, &kinds, &mut out);
    out
}

pub fn tiny_config(vms: Vec<VirtualMachine>, options: Options) -> CloudConfig {
    CloudConfig {
        data_centers: two_zone_dcs(),
        vms,
        services: tiny_services(),
        demands: vec![ServiceDemand { service_id: 1, count: 1 }, ServiceDemand { service_id: 2, count: 2 }],
        options,
        time_settings: TimeRangeSettings::default(),
    }
}

pub fn options_from_bits(bits: usize) -> Options {
    Options {
        priority_enabled: bits & 1 != 0,
        faulty_handling_enabled: bits & 2 != 0,
        zone_affinity_enabled: bits & 4 != 0,
    }
}

/// A random valid configuration with up to `max_vms` VMs, 1..=3 services and
/// at most `max_requests` total demand.
pub fn random_config(seed: u64, max_vms: usize, max_requests: u64) -> CloudConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data_centers: Vec<DataCenter> = (1..=6u8)
        .map(|z| DataCenter { zone_id: z, dc_id: 100 + z as u32, country: format!("C{z}"), city: format!("c{z}") })
        .collect();
    let m = rng.random_range(1..=max_vms);
    let vms: Vec<VirtualMachine> = (0..m)
        .map(|i| {
            vm(
                1000 + i as u32 * 7 % 13,
                100 + rng.random_range(1..=6u32),
                rng.random_range(1..=10),
                rng.random_range(4..=16),
                rng.random_range(1..=40),
                rng.random_bool(0.15),
            )
        })
        .collect();
    let k = rng.random_range(1..=3u32);
    let services: Vec<Service> = (1..=k)
        .map(|s| Service {
            service_id: 500 + s,
            file_name: format!("s{s}"),
            size: rng.random_range(1..=8),
            type_label: "T".into(),
            value: 0,
            weightage: rng.random_range(1..=5),
        })
        .collect();
    let total = rng.random_range(1..=max_requests);
    let mut counts = vec![0u64; k as usize];
    for _ in 0..total {
        counts[rng.random_range(0..k as usize)] += 1;
    }
    let demands = services.iter().zip(&counts).map(|(s, &count)| ServiceDemand { service_id: s.service_id, count }).collect();
    let lo = rng.random_range(0..10);
    let plo = rng.random_range(1..4);
    let config = CloudConfig {
        data_centers,
        vms,
        services,
        demands,
        options: options_from_bits(rng.random_range(0..8)),
        time_settings: TimeRangeSettings {
            arrival_lo: lo,
            arrival_hi: lo + rng.random_range(1..40),
            process_lo: plo,
            process_hi: plo + rng.random_range(0..12),
        },
    };
    config.with_recomputed_values()
}
