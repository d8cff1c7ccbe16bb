//! Domain types for the four dashboard panels (data centers, VMs, services,
//! requests) plus the experiment-wide options and time ranges.
//!
//! Everything here is plain value data. [`validate_config`] reports
//! problems as data instead of failing, so a partially edited configuration
//! can still be stored and shown.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub type ZoneId = u8;
pub type DcId = u32;
pub type VmId = u32;
pub type ServiceId = u32;
/// Dimensionless integer time unit.
pub type Tick = u64;

/// The world is split into this many zones, numbered from 1.
pub const ZONE_COUNT: ZoneId = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataCenter {
    pub zone_id: ZoneId,
    pub dc_id: DcId,
    pub country: String,
    pub city: String,
}

/// A virtual machine. Only `connections` (load capacity), `ram_gb`
/// (storage capacity) and `max_users` constrain assignment; the remaining
/// columns are carried as labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualMachine {
    pub dc_id: DcId,
    pub vm_id: VmId,
    pub processor: String,
    pub ram_gb: u32,
    pub hdd_gb: u32,
    /// Maximum number of concurrently active requests.
    pub connections: u32,
    pub nic: u32,
    pub traffic: u32,
    pub bandwidth: u32,
    pub os: String,
    /// Maximum number of requests assignable to this VM in one experiment.
    pub max_users: u32,
    #[serde(default)]
    pub faulty: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Service {
    pub service_id: ServiceId,
    pub file_name: String,
    /// Storage units held by a request of this service while it is active.
    pub size: u32,
    pub type_label: String,
    /// Demand rank, 1 = least demanded. Derived, see [`compute_service_values`].
    pub value: u32,
    pub weightage: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDemand {
    pub service_id: ServiceId,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Options {
    pub priority_enabled: bool,
    pub faulty_handling_enabled: bool,
    pub zone_affinity_enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRangeSettings {
    pub arrival_lo: Tick,
    pub arrival_hi: Tick,
    pub process_lo: Tick,
    pub process_hi: Tick,
}

impl Default for TimeRangeSettings {
    fn default() -> Self {
        TimeRangeSettings { arrival_lo: 0, arrival_hi: 20, process_lo: 1, process_hi: 10 }
    }
}

/// The master configuration of one experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloudConfig {
    pub data_centers: Vec<DataCenter>,
    pub vms: Vec<VirtualMachine>,
    pub services: Vec<Service>,
    pub demands: Vec<ServiceDemand>,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub time_settings: TimeRangeSettings,
}

impl CloudConfig {
    pub fn data_center(&self, dc_id: DcId) -> Option<&DataCenter> {
        self.data_centers.iter().find(|dc| dc.dc_id == dc_id)
    }

    pub fn vm(&self, vm_id: VmId) -> Option<&VirtualMachine> {
        self.vms.iter().find(|vm| vm.vm_id == vm_id)
    }

    pub fn service(&self, service_id: ServiceId) -> Option<&Service> {
        self.services.iter().find(|s| s.service_id == service_id)
    }

    /// Zone of the data center hosting `vm`, if it resolves.
    pub fn vm_zone(&self, vm: &VirtualMachine) -> Option<ZoneId> {
        self.data_center(vm.dc_id).map(|dc| dc.zone_id)
    }

    pub fn demand_of(&self, service_id: ServiceId) -> u64 {
        self.demands
            .iter()
            .filter(|d| d.service_id == service_id)
            .map(|d| d.count)
            .sum()
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.iter().map(|d| d.count).sum()
    }

    /// Demand for every configured service, 0 where no demand row exists.
    pub fn full_demands(&self) -> Vec<ServiceDemand> {
        self.services
            .iter()
            .map(|s| ServiceDemand { service_id: s.service_id, count: self.demand_of(s.service_id) })
            .collect()
    }

    /// Re-derives every service's `value` from the current demands.
    pub fn recompute_values(&mut self) {
        let values = compute_service_values(&self.full_demands());
        for service in &mut self.services {
            if let Some(&v) = values.get(&service.service_id) {
                service.value = v;
            }
        }
    }

    pub fn with_recomputed_values(mut self) -> Self {
        self.recompute_values();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    NoVms,
    NoServices,
    ZoneOutOfRange,
    DuplicateDc,
    DuplicateVm,
    DanglingDcRef,
    ZeroConnections,
    ZeroMaxUsers,
    ZeroRam,
    DuplicateService,
    ZeroServiceSize,
    ZeroWeightage,
    StaleServiceValue,
    DuplicateDemand,
    DanglingServiceRef,
    BadArrivalRange,
    BadProcessRange,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NoVms => "NO_VMS",
            ViolationCode::NoServices => "NO_SERVICES",
            ViolationCode::ZoneOutOfRange => "ZONE_OUT_OF_RANGE",
            ViolationCode::DuplicateDc => "DUPLICATE_DC",
            ViolationCode::DuplicateVm => "DUPLICATE_VM",
            ViolationCode::DanglingDcRef => "DANGLING_DC_REF",
            ViolationCode::ZeroConnections => "ZERO_CONNECTIONS",
            ViolationCode::ZeroMaxUsers => "ZERO_MAX_USERS",
            ViolationCode::ZeroRam => "ZERO_RAM",
            ViolationCode::DuplicateService => "DUPLICATE_SERVICE",
            ViolationCode::ZeroServiceSize => "ZERO_SERVICE_SIZE",
            ViolationCode::ZeroWeightage => "ZERO_WEIGHTAGE",
            ViolationCode::StaleServiceValue => "STALE_SERVICE_VALUE",
            ViolationCode::DuplicateDemand => "DUPLICATE_DEMAND",
            ViolationCode::DanglingServiceRef => "DANGLING_SERVICE_REF",
            ViolationCode::BadArrivalRange => "BAD_ARRIVAL_RANGE",
            ViolationCode::BadProcessRange => "BAD_PROCESS_RANGE",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Violation { code, message: message.into() }
    }
}

/// Lists every invariant violation in `config`. An empty list means the
/// configuration is runnable.
pub fn validate_config(config: &CloudConfig) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();

    let mut dc_ids = BTreeSet::new();
    for dc in &config.data_centers {
        if !(1..=ZONE_COUNT).contains(&dc.zone_id) {
            out.push(Violation::new(
                ZoneOutOfRange,
                format!("data center {} has zone {} outside 1..={ZONE_COUNT}", dc.dc_id, dc.zone_id),
            ));
        }
        if !dc_ids.insert(dc.dc_id) {
            out.push(Violation::new(DuplicateDc, format!("data center id {} is repeated", dc.dc_id)));
        }
    }

    if config.vms.is_empty() {
        out.push(Violation::new(NoVms, "at least one virtual machine is required"));
    }
    let mut vm_ids = BTreeSet::new();
    for vm in &config.vms {
        if !vm_ids.insert(vm.vm_id) {
            out.push(Violation::new(DuplicateVm, format!("vm id {} is repeated", vm.vm_id)));
        }
        if !dc_ids.contains(&vm.dc_id) {
            out.push(Violation::new(
                DanglingDcRef,
                format!("vm {} references unknown data center {}", vm.vm_id, vm.dc_id),
            ));
        }
        if vm.connections == 0 {
            out.push(Violation::new(ZeroConnections, format!("vm {} has zero connections", vm.vm_id)));
        }
        if vm.max_users == 0 {
            out.push(Violation::new(ZeroMaxUsers, format!("vm {} has zero max users", vm.vm_id)));
        }
        if vm.ram_gb == 0 {
            out.push(Violation::new(ZeroRam, format!("vm {} has zero ram", vm.vm_id)));
        }
    }

    if config.services.is_empty() {
        out.push(Violation::new(NoServices, "at least one service is required"));
    }
    let mut service_ids = BTreeSet::new();
    for s in &config.services {
        if !service_ids.insert(s.service_id) {
            out.push(Violation::new(DuplicateService, format!("service id {} is repeated", s.service_id)));
        }
        if s.size == 0 {
            out.push(Violation::new(ZeroServiceSize, format!("service {} has zero size", s.service_id)));
        }
        if s.weightage == 0 {
            out.push(Violation::new(ZeroWeightage, format!("service {} has zero weightage", s.service_id)));
        }
    }

    let mut demand_ids = BTreeSet::new();
    for d in &config.demands {
        if !demand_ids.insert(d.service_id) {
            out.push(Violation::new(DuplicateDemand, format!("service {} has two demand rows", d.service_id)));
        }
        if !service_ids.contains(&d.service_id) {
            out.push(Violation::new(
                DanglingServiceRef,
                format!("demand references unknown service {}", d.service_id),
            ));
        }
    }

    if service_ids.len() == config.services.len() {
        let expected = compute_service_values(&config.full_demands());
        for s in &config.services {
            if let Some(&v) = expected.get(&s.service_id) {
                if v != s.value {
                    out.push(Violation::new(
                        StaleServiceValue,
                        format!("service {} has value {} but its demand rank is {v}", s.service_id, s.value),
                    ));
                }
            }
        }
    }

    let t = &config.time_settings;
    if t.arrival_lo > t.arrival_hi {
        out.push(Violation::new(
            BadArrivalRange,
            format!("arrival range [{}, {}] is inverted", t.arrival_lo, t.arrival_hi),
        ));
    }
    if t.process_lo == 0 || t.process_lo > t.process_hi {
        out.push(Violation::new(
            BadProcessRange,
            format!("process range [{}, {}] must be positive and ordered", t.process_lo, t.process_hi),
        ));
    }

    out
}

/// Ranks services by demand: the least demanded gets value 1, the most
/// demanded gets S. Equal demands rank the lower service id first.
pub fn compute_service_values(demands: &[ServiceDemand]) -> BTreeMap<ServiceId, u32> {
    let mut order: Vec<&ServiceDemand> = demands.iter().collect();
    order.sort_by_key(|d| (d.count, d.service_id));
    order
        .into_iter()
        .enumerate()
        .map(|(rank, d)| (d.service_id, rank as u32 + 1))
        .collect()
}

/// Request priority and per-request value earned: value × weightage.
pub fn service_priority(service: &Service) -> u64 {
    u64::from(service.value) * u64::from(service.weightage)
}
