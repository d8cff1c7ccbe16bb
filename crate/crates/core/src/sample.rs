//! The reference cloud: one data center, the four-VM table and the three
//! services from the original dashboard screenshots, with the demand counts
//! 14/16/18.

use crate::model::{
    CloudConfig, DataCenter, Options, Service, ServiceDemand, TimeRangeSettings, VirtualMachine,
};

#[allow(clippy::too_many_arguments)]
fn vm(
    vm_id: u32,
    processor: &str,
    ram_gb: u32,
    hdd_gb: u32,
    connections: u32,
    nic: u32,
    traffic: u32,
    bandwidth: u32,
    os: &str,
    max_users: u32,
) -> VirtualMachine {
    VirtualMachine {
        dc_id: 101,
        vm_id,
        processor: processor.into(),
        ram_gb,
        hdd_gb,
        connections,
        nic,
        traffic,
        bandwidth,
        os: os.into(),
        max_users,
        faulty: false,
    }
}

fn service(service_id: u32, file_name: &str, size: u32, type_label: &str, value: u32, weightage: u32) -> Service {
    Service { service_id, file_name: file_name.into(), size, type_label: type_label.into(), value, weightage }
}

pub fn reference_vms() -> Vec<VirtualMachine> {
    vec![
        vm(10001, "Intel", 8, 500, 9, 32, 50, 512, "Windows 2003", 5),
        vm(10002, "Intel", 10, 1024, 7, 64, 200, 512, "Windows 2008", 9),
        vm(10003, "Dual Core", 12, 128, 6, 128, 100, 15, "Windows 2012", 7),
        vm(10004, "Intel", 14, 500, 8, 32, 20, 135, "Windows 2012", 7),
    ]
}

pub fn reference_services() -> Vec<Service> {
    vec![
        service(501, "LOAD", 5, "SERVICE", 1, 5),
        service(502, "PROCESSING", 4, "SERVICE", 2, 2),
        service(503, "RESULT", 6, "WIN SERVICE", 3, 3),
    ]
}

pub fn reference_config() -> CloudConfig {
    CloudConfig {
        data_centers: vec![DataCenter {
            zone_id: 4,
            dc_id: 101,
            country: "India".into(),
            city: "Pondicherry".into(),
        }],
        vms: reference_vms(),
        services: reference_services(),
        demands: vec![
            ServiceDemand { service_id: 501, count: 14 },
            ServiceDemand { service_id: 502, count: 16 },
            ServiceDemand { service_id: 503, count: 18 },
        ],
        options: Options::default(),
        time_settings: TimeRangeSettings { arrival_lo: 0, arrival_hi: 20, process_lo: 1, process_hi: 10 },
    }
}
