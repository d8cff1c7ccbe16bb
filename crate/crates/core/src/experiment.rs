//! Experiment files: a named series of experiments sharing one
//! configuration lineage.
//!
//! Experiments move draft → generated → completed and never back. Starting
//! the next experiment adds the new demand to the previous one, re-derives
//! service values, and chains the arrival range: the new lower bound is the
//! previous upper bound.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{simulate, SimulationResult};
use crate::error::{RasError, Result};
use crate::generation::{generate_requests_with, next_seed, Request, ZoneTable};
use crate::metrics::{compute_metrics, rank_strategies, StrategyMetrics};
use crate::model::{validate_config, CloudConfig, Options, ServiceDemand, ServiceId, Tick};
use crate::quantification::{QuantBasis, QuantMode};
use crate::strategies::{resolve_selection, run_strategies, AssignmentPlan, PlanContext, StrategyId};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ACTOR: &str = "local";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentStatus {
    Draft,
    Generated,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRun {
    pub plan: AssignmentPlan,
    pub simulation: SimulationResult,
    pub metrics: StrategyMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub experiment_id: u32,
    pub config: CloudConfig,
    pub status: ExperimentStatus,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub pool: Vec<Request>,
    #[serde(default)]
    pub mode: Option<QuantMode>,
    #[serde(default)]
    pub basis: Option<QuantBasis>,
    #[serde(default)]
    pub runs: Vec<StrategyRun>,
    /// Strategies best first; empty until completed.
    #[serde(default)]
    pub ranking: Vec<StrategyId>,
}

impl Experiment {
    fn draft(experiment_id: u32, config: CloudConfig) -> Self {
        Experiment {
            experiment_id,
            config,
            status: ExperimentStatus::Draft,
            seed: None,
            pool: Vec::new(),
            mode: None,
            basis: None,
            runs: Vec::new(),
            ranking: Vec::new(),
        }
    }

    pub fn run_for(&self, strategy: StrategyId) -> Option<&StrategyRun> {
        self.runs.iter().find(|r| r.plan.strategy == strategy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    pub action: String,
    pub detail: String,
}

/// What a run should do beyond the experiment's stored configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    #[serde(default)]
    pub strategies: Vec<StrategyId>,
    #[serde(default)]
    pub mode: QuantMode,
    #[serde(default)]
    pub basis: QuantBasis,
    /// Replaces the configured options for this run when present.
    #[serde(default)]
    pub options: Option<Options>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub experiments: Vec<Experiment>,
    pub event_log: Vec<Event>,
}

impl ExperimentFile {
    /// A new file holding experiment 1 as a draft of `config`.
    pub fn new(name: impl Into<String>, config: CloudConfig) -> Result<Self> {
        let config = checked(config)?;
        let mut file = ExperimentFile {
            name: name.into(),
            created_at: Utc::now(),
            experiments: vec![Experiment::draft(1, config)],
            event_log: Vec::new(),
        };
        let detail = format!("file {:?} created with experiment 1", file.name);
        file.log("create_file", detail);
        Ok(file)
    }

    pub fn log(&mut self, action: &str, detail: impl Into<String>) {
        self.event_log.push(Event {
            timestamp: Utc::now(),
            actor: DEFAULT_ACTOR.to_string(),
            action: action.to_string(),
            detail: detail.into(),
        });
    }

    pub fn experiment(&self, id: u32) -> Result<&Experiment> {
        self.experiments.iter().find(|e| e.experiment_id == id).ok_or(RasError::ExperimentNotFound(id))
    }

    fn experiment_mut(&mut self, id: u32) -> Result<&mut Experiment> {
        self.experiments.iter_mut().find(|e| e.experiment_id == id).ok_or(RasError::ExperimentNotFound(id))
    }

    pub fn latest(&self) -> &Experiment {
        self.experiments.last().expect("a file always holds at least one experiment")
    }

    /// Replaces a draft's configuration. Service values are re-derived
    /// before validation.
    pub fn set_config(&mut self, id: u32, config: CloudConfig) -> Result<&Experiment> {
        let config = checked(config)?;
        let exp = self.experiment_mut(id)?;
        if exp.status != ExperimentStatus::Draft {
            return Err(RasError::Sequence(format!("experiment {id} is {:?}; only drafts are editable", exp.status)));
        }
        exp.config = config;
        self.log("set_config", format!("experiment {id} configuration replaced"));
        self.experiment(id)
    }

    pub fn generate(&mut self, id: u32, seed: Option<u64>, table: &ZoneTable) -> Result<&Experiment> {
        let exp = self.experiment_mut(id)?;
        if exp.status == ExperimentStatus::Completed {
            return Err(RasError::Sequence(format!("experiment {id} is already completed")));
        }
        let seed = seed.or(exp.seed).unwrap_or(DEFAULT_SEED);
        exp.pool = generate_requests_with(&exp.config, seed, table)?;
        exp.seed = Some(seed);
        exp.status = ExperimentStatus::Generated;
        let n = exp.pool.len();
        self.log("generate", format!("experiment {id}: {n} requests from seed {seed}"));
        self.experiment(id)
    }

    /// New pool from the next seed with unchanged per-service counts.
    pub fn refresh(&mut self, id: u32, table: &ZoneTable) -> Result<&Experiment> {
        let exp = self.experiment(id)?;
        if exp.status != ExperimentStatus::Generated {
            return Err(RasError::Sequence(format!("experiment {id} has no pool to refresh")));
        }
        let seed = next_seed(exp.seed.unwrap_or(DEFAULT_SEED));
        let exp = self.experiment_mut(id)?;
        exp.pool = generate_requests_with(&exp.config, seed, table)?;
        exp.seed = Some(seed);
        self.log("refresh", format!("experiment {id}: pool refreshed with seed {seed}"));
        self.experiment(id)
    }

    pub fn run(&mut self, id: u32, request: &RunRequest) -> Result<&Experiment> {
        let exp = self.experiment(id)?;
        if exp.status != ExperimentStatus::Generated {
            return Err(RasError::Sequence(format!("experiment {id} must be generated before it runs")));
        }
        let mut config = exp.config.clone();
        if let Some(options) = request.options {
            config.options = options;
        }
        let ctx = PlanContext::from_config(&config).with_mode(request.mode).with_basis(request.basis);
        let selected = resolve_selection(&request.strategies);
        let plans = run_strategies(&selected, &exp.pool, &ctx);
        let names: Vec<&str> = selected.iter().map(|s| s.as_str()).collect();
        let plan_detail = format!("experiment {id}: planned {}", names.join(","));

        let runs: Vec<StrategyRun> = plans
            .into_iter()
            .map(|plan| {
                let simulation = simulate(&plan, &exp.pool, &config.vms, &config.services, config.options);
                let metrics = compute_metrics(&simulation, &config.services, &config.vms);
                StrategyRun { plan, simulation, metrics }
            })
            .collect();
        let metrics: Vec<StrategyMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
        let ranking = rank_strategies(&metrics);

        let exp = self.experiment_mut(id)?;
        exp.config = config;
        exp.mode = Some(request.mode);
        exp.basis = Some(request.basis);
        exp.runs = runs;
        exp.ranking = ranking;
        exp.status = ExperimentStatus::Completed;
        self.log("plan", plan_detail);
        self.log("simulate", format!("experiment {id}: simulated {} plan(s)", names.len()));
        self.log("metrics", format!("experiment {id}: metrics computed"));
        self.experiment(id)
    }

    /// Opens the next experiment after the latest completed one.
    pub fn next_experiment(&mut self, added: &BTreeMap<ServiceId, u64>, new_arrival_hi: Tick) -> Result<&Experiment> {
        let prev = self.latest();
        if prev.status != ExperimentStatus::Completed {
            return Err(RasError::Sequence(format!(
                "experiment {} must be completed before the next one starts",
                prev.experiment_id
            )));
        }
        let current = prev.config.time_settings.arrival_hi;
        if new_arrival_hi <= current {
            return Err(RasError::BadRange { current, requested: new_arrival_hi });
        }
        let mut config = prev.config.clone();
        for (&service_id, &count) in added {
            if config.service(service_id).is_none() {
                return Err(RasError::UnknownService(service_id));
            }
            match config.demands.iter_mut().find(|d| d.service_id == service_id) {
                Some(d) => d.count += count,
                None => config.demands.push(ServiceDemand { service_id, count }),
            }
        }
        config.recompute_values();
        config.time_settings.arrival_lo = current;
        config.time_settings.arrival_hi = new_arrival_hi;

        let id = prev.experiment_id + 1;
        self.experiments.push(Experiment::draft(id, config));
        self.log("next_experiment", format!("experiment {id}: arrival range [{current}, {new_arrival_hi}]"));
        self.experiment(id)
    }
}

fn checked(config: CloudConfig) -> Result<CloudConfig> {
    let config = config.with_recomputed_values();
    let violations = validate_config(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(RasError::InvalidConfig(violations))
    }
}
