//! Non-causal benchmark: the whole episode solved up front on the realized
//! trace, then replayed slot by slot.

use super::{budget, check_milp_cap, Observation, ScheduleDecision, Scheduler, SchedulerReport};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::milp::{build_model, export_lp, InstanceSnapshot};
use crate::solvers::{decode_schedule, external_solve, solve_exact, Solution, SolveStatus};

#[derive(Debug, Clone)]
pub struct OfflineMilp {
    pub solution: Solution,
    report: SchedulerReport,
}

impl OfflineMilp {
    /// Solves the full-horizon model of `env`. Sees every future arrival
    /// and gain of the episode.
    pub fn new(env: &Environment) -> Result<Self> {
        check_milp_cap(env)?;
        let sched = &env.config.scheduling;
        let snap = InstanceSnapshot::new(
            &env.network,
            &env.requests,
            env.arrivals.clone(),
            env.gains.clone(),
            env.initial_levels.clone(),
            env.config.energy.sense_energy_per_bit,
            env.config.energy.slot_duration,
        );
        let model = build_model(&snap)?;
        let solution = match &sched.external_solver {
            Some(command) => {
                let lp = export_lp(&model)?;
                let mut sol = external_solve(&model, &lp, command)?;
                sol.schedule = decode_schedule(&model, &snap, &sol.values);
                sol
            }
            None => solve_exact(&model, &snap, &budget(sched.milp_time_limit_s, sched.milp_node_limit))?,
        };
        if !solution.status.has_solution() {
            return Err(Error::Build(format!(
                "full-horizon model ended {:?} without a schedule",
                solution.status
            )));
        }
        let report = SchedulerReport {
            solves: 1,
            unproven: usize::from(solution.status != SolveStatus::Optimal),
            ..SchedulerReport::default()
        };
        Ok(Self { solution, report })
    }

    pub fn proven_optimal(&self) -> bool {
        self.solution.status == SolveStatus::Optimal
    }
}

impl Scheduler for OfflineMilp {
    fn name(&self) -> &str {
        "milp"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<ScheduleDecision> {
        self.solution
            .schedule
            .get(obs.slot)
            .cloned()
            .ok_or_else(|| Error::Build(format!("no planned decision for slot {}", obs.slot)))
    }

    fn report(&self) -> SchedulerReport {
        self.report
    }
}
