//! Per-slot scheduling policies behind one interface.

mod forecasts;
mod gmmpre;
mod greedy;
mod offline;
mod random;
mod rhcop;

pub use forecasts::{Forecaster, GmmForecaster, TraceForecaster};
pub use gmmpre::GmmPre;
pub use greedy::{greedy_plan, greedy_step, GreedyOl};
pub use offline::OfflineMilp;
pub use random::RandomPolicy;
pub use rhcop::Rhcop;

pub use crate::decision::ScheduleDecision;

use std::time::Duration;

use crate::environment::{scheduler_rng, Environment};
use crate::error::{Error, Result};
use crate::milp::{count_model, Dimensions, InstanceSnapshot};
use crate::solvers::SolveOptions;
use crate::substrate::SubstrateNetwork;
use crate::workload::DagRequest;

/// Names accepted by [`build_scheduler`], in report order.
pub const SCHEDULER_NAMES: [&str; 6] = ["milp", "rhcop", "greedy", "gmmpre", "random", "idle"];

/// What a policy may look at in slot `slot`. Holds nothing from later slots.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub slot: usize,
    /// Episode length.
    pub horizon: usize,
    pub network: &'a SubstrateNetwork,
    pub requests: &'a [DagRequest],
    /// Battery levels after this slot's harvest is stored.
    pub levels: &'a [f64],
    /// Battery levels at the end of the previous slot.
    pub previous_levels: &'a [f64],
    /// Energy offered to each battery this slot.
    pub arrivals: &'a [f64],
    /// Device link gains this slot.
    pub gains: &'a [f64],
    /// Upload energy of each device this slot.
    pub device_costs: &'a [f64],
    /// Ages before this slot's decision.
    pub ages: &'a [u32],
    /// Sum of each request's ages over the slots already played.
    pub accumulated_age: &'a [u64],
    pub sense_energy_per_bit: f64,
    pub slot_duration: f64,
}

impl Observation<'_> {
    /// One-slot model of the current slot on the realized state.
    pub fn slot_snapshot(&self) -> InstanceSnapshot<'_> {
        InstanceSnapshot {
            network: self.network,
            requests: self.requests,
            slots: vec![self.slot],
            arrivals: vec![vec![0.0; self.levels.len()]],
            gains: vec![self.gains.to_vec()],
            initial_levels: self.levels.to_vec(),
            initial_ages: self.ages.to_vec(),
            accumulated_age: self.accumulated_age.to_vec(),
            age_divisor: self.horizon as f64,
            sense_energy_per_bit: self.sense_energy_per_bit,
            slot_duration: self.slot_duration,
        }
    }
}

/// Counters a policy accumulates over an episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SchedulerReport {
    /// Solver calls.
    pub solves: usize,
    /// Solver calls that ended without an optimality proof.
    pub unproven: usize,
    /// Slots decided by the greedy fallback.
    pub fallbacks: usize,
    /// Decisions withdrawn by a final check on the true state.
    pub vetoes: usize,
}

pub trait Scheduler: Send {
    fn name(&self) -> &str;
    fn decide(&mut self, observation: &Observation<'_>) -> Result<ScheduleDecision>;
    fn report(&self) -> SchedulerReport {
        SchedulerReport::default()
    }
}

/// Never serves anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl Scheduler for Idle {
    fn name(&self) -> &str {
        "idle"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<ScheduleDecision> {
        Ok(ScheduleDecision::empty(obs.network, obs.requests))
    }
}

pub(crate) fn budget(time_limit_s: f64, node_limit: u64) -> SolveOptions {
    SolveOptions {
        time_limit: Duration::from_secs_f64(time_limit_s.max(0.0)),
        node_limit,
        ..SolveOptions::default()
    }
}

/// Errors unless the full-horizon model of `env` fits the exact-solver cap
/// or an external solver is configured.
pub fn check_milp_cap(env: &Environment) -> Result<()> {
    let sched = &env.config.scheduling;
    if sched.external_solver.is_some() {
        return Ok(());
    }
    let snap = InstanceSnapshot::new(
        &env.network,
        &env.requests,
        env.arrivals.clone(),
        env.gains.clone(),
        env.initial_levels.clone(),
        env.config.energy.sense_energy_per_bit,
        env.config.energy.slot_duration,
    );
    let variables = count_model(&Dimensions::of(&snap)).variables;
    if variables > sched.milp_variable_cap {
        return Err(Error::ModelTooLarge {
            variables,
            cap: sched.milp_variable_cap,
        });
    }
    Ok(())
}

/// The policy called `name`, bound to the episode `env`.
pub fn build_scheduler(name: &str, env: &Environment) -> Result<Box<dyn Scheduler>> {
    let sched = &env.config.scheduling;
    Ok(match name {
        "greedy" => Box::new(GreedyOl),
        "idle" => Box::new(Idle),
        "random" => Box::new(RandomPolicy::new(scheduler_rng(env.seed))),
        "gmmpre" => Box::new(GmmPre::new(GmmForecaster::train(env)?, sched.gmmpre_window)),
        "rhcop" => Box::new(Rhcop::new(
            Box::new(GmmForecaster::train(env)?),
            sched.window,
            budget(sched.rhcop_time_limit_s, sched.rhcop_node_limit),
            sched.external_solver.clone(),
        )),
        "milp" => Box::new(OfflineMilp::new(env)?),
        other => {
            return Err(Error::Config(format!(
                "unknown scheduler {other:?}; expected one of {}",
                SCHEDULER_NAMES.join(", ")
            )))
        }
    })
}
