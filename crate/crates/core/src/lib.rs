//! Request Assignment Simulator core.
//!
//! The pipeline is: configure a cloud ([`model`]), draw a seeded request
//! pool ([`generation`]), place requests on VMs under each selected
//! principle ([`strategies`], using [`quantification`] for the
//! capacity-proportioned split), replay each plan through per-VM queues
//! ([`engine`]), and summarize ([`metrics`]). [`experiment`] strings runs
//! together into named files, [`store`] persists them and [`export`]
//! renders CSV.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod export;
pub mod generation;
pub mod metrics;
pub mod model;
pub mod quantification;
pub mod sample;
pub mod store;
pub mod strategies;

pub use error::{RasError, Result};
