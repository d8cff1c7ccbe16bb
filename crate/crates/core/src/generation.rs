//! Seeded generation of the request pool.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`)
//! and every draw is an inclusive integer range reduced from one `next_u64`
//! word by rejection sampling ([`uniform_inclusive`]). Both are fixed
//! algorithms, so a pool depends only on the configuration and the seed.
//!
//! Per request, in this order: the first IP octet (uniform over the octets
//! the zone table covers), the three remaining octets (each 0..=255), the
//! arrival time and the process time. Services are visited by ascending
//! `service_id`; request ids count from 1 in generation order.

use std::net::Ipv4Addr;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RasError, Result};
use crate::model::{service_priority, validate_config, CloudConfig, ServiceId, Tick, ZoneId, ZONE_COUNT};

pub type RequestId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub request_id: RequestId,
    pub service_id: ServiceId,
    pub ip: String,
    pub zone_id: ZoneId,
    pub arrival_time: Tick,
    pub process_time: Tick,
    pub priority: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneInterval {
    pub octet_lo: u8,
    pub octet_hi: u8,
    pub zone_id: ZoneId,
}

/// First-octet intervals mapped to zones. Serialized as a bare JSON list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ZoneInterval>", into = "Vec<ZoneInterval>")]
pub struct ZoneTable {
    intervals: Vec<ZoneInterval>,
}

const DEFAULT_ZONES: &str = include_str!("../data/zones.json");

impl ZoneTable {
    pub fn new(mut intervals: Vec<ZoneInterval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(RasError::ZoneTable("no intervals".into()));
        }
        intervals.sort_by_key(|iv| iv.octet_lo);
        for iv in &intervals {
            if iv.octet_lo > iv.octet_hi {
                return Err(RasError::ZoneTable(format!("interval {}..{} is inverted", iv.octet_lo, iv.octet_hi)));
            }
            if !(1..=ZONE_COUNT).contains(&iv.zone_id) {
                return Err(RasError::ZoneTable(format!("zone {} out of range", iv.zone_id)));
            }
        }
        for pair in intervals.windows(2) {
            if pair[1].octet_lo <= pair[0].octet_hi {
                return Err(RasError::ZoneTable(format!(
                    "intervals starting at {} and {} overlap",
                    pair[0].octet_lo, pair[1].octet_lo
                )));
            }
        }
        Ok(ZoneTable { intervals })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn intervals(&self) -> &[ZoneInterval] {
        &self.intervals
    }

    pub fn zone_of_octet(&self, octet: u8) -> Option<ZoneId> {
        self.intervals
            .iter()
            .find(|iv| iv.octet_lo <= octet && octet <= iv.octet_hi)
            .map(|iv| iv.zone_id)
    }

    pub fn covered_octets(&self) -> Vec<u8> {
        self.intervals.iter().flat_map(|iv| iv.octet_lo..=iv.octet_hi).collect()
    }
}

impl Default for ZoneTable {
    fn default() -> Self {
        ZoneTable::from_json(DEFAULT_ZONES).expect("bundled zone table is valid")
    }
}

impl TryFrom<Vec<ZoneInterval>> for ZoneTable {
    type Error = RasError;

    fn try_from(intervals: Vec<ZoneInterval>) -> Result<Self> {
        ZoneTable::new(intervals)
    }
}

impl From<ZoneTable> for Vec<ZoneInterval> {
    fn from(table: ZoneTable) -> Self {
        table.intervals
    }
}

pub fn ip_to_zone(ip: &str, table: &ZoneTable) -> Result<ZoneId> {
    let addr: Ipv4Addr = ip.parse().map_err(|_| RasError::BadIp(ip.to_string()))?;
    let first = addr.octets()[0];
    table.zone_of_octet(first).ok_or_else(|| RasError::UnroutableIp(ip.to_string()))
}

/// Unbiased draw from `lo..=hi`.
pub fn uniform_inclusive<R: RngCore>(rng: &mut R, lo: u64, hi: u64) -> u64 {
    debug_assert!(lo <= hi);
    let span = hi - lo;
    if span == u64::MAX {
        return rng.next_u64();
    }
    let range = span + 1;
    let limit = (u64::MAX / range) * range;
    loop {
        let x = rng.next_u64();
        if x < limit {
            return lo + x % range;
        }
    }
}

pub fn generate_requests(config: &CloudConfig, seed: u64) -> Result<Vec<Request>> {
    generate_requests_with(config, seed, &ZoneTable::default())
}

pub fn generate_requests_with(config: &CloudConfig, seed: u64, table: &ZoneTable) -> Result<Vec<Request>> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(RasError::InvalidConfig(violations));
    }
    if config.total_demand() == 0 {
        return Err(RasError::EmptyPool);
    }

    let octets = table.covered_octets();
    let t = config.time_settings;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut services: Vec<_> = config.services.iter().collect();
    services.sort_by_key(|s| s.service_id);

    let mut pool = Vec::with_capacity(config.total_demand() as usize);
    let mut next_id: RequestId = 1;
    for service in services {
        let priority = service_priority(service);
        for _ in 0..config.demand_of(service.service_id) {
            let first = octets[uniform_inclusive(&mut rng, 0, octets.len() as u64 - 1) as usize];
            let rest: [u8; 3] = std::array::from_fn(|_| uniform_inclusive(&mut rng, 0, 255) as u8);
            let ip = Ipv4Addr::new(first, rest[0], rest[1], rest[2]);
            let zone_id = table.zone_of_octet(first).expect("octet drawn from the table");
            let arrival_time = uniform_inclusive(&mut rng, t.arrival_lo, t.arrival_hi);
            let process_time = uniform_inclusive(&mut rng, t.process_lo, t.process_hi);
            pool.push(Request {
                request_id: next_id,
                service_id: service.service_id,
                ip: ip.to_string(),
                zone_id,
                arrival_time,
                process_time,
                priority,
            });
            next_id += 1;
        }
    }
    pool.sort_by_key(|r| (r.arrival_time, r.request_id));
    Ok(pool)
}

/// Re-draws the pool with the next seed; counts per service stay the same.
pub fn refresh_pool(config: &CloudConfig, old_seed: u64) -> Result<(u64, Vec<Request>)> {
    let seed = next_seed(old_seed);
    Ok((seed, generate_requests(config, seed)?))
}

pub fn next_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}
