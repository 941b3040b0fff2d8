//! Receding-horizon optimization: solve the next `window` slots on
//! forecasts, apply the first decision, shift by one slot.

use log::warn;

use super::{greedy_step, Forecaster, Observation, ScheduleDecision, Scheduler, SchedulerReport};
use crate::error::Result;
use crate::milp::{build_model, export_lp, InstanceSnapshot};
use crate::solvers::{decode_schedule, external_solve, solve_exact, SolveOptions, SolveStatus};

pub struct Rhcop {
    forecaster: Box<dyn Forecaster>,
    window: usize,
    options: SolveOptions,
    external: Option<String>,
    report: SchedulerReport,
}

impl Rhcop {
    pub fn new(
        forecaster: Box<dyn Forecaster>,
        window: usize,
        options: SolveOptions,
        external: Option<String>,
    ) -> Self {
        Self {
            forecaster,
            window: window.max(1),
            options,
            external,
            report: SchedulerReport::default(),
        }
    }

    /// Window model: realized current slot, forecasts afterwards, truncated
    /// at the end of the episode.
    pub fn window_snapshot<'a>(&self, obs: &Observation<'a>) -> InstanceSnapshot<'a> {
        let len = self.window.min(obs.horizon - obs.slot).max(1);
        let mut arrivals = vec![vec![0.0; obs.levels.len()]];
        let mut gains = vec![obs.gains.to_vec()];
        for j in 1..len {
            arrivals.push(self.forecaster.arrivals(obs.slot + j));
            gains.push(self.forecaster.gains(obs.slot + j));
        }
        InstanceSnapshot {
            network: obs.network,
            requests: obs.requests,
            slots: (obs.slot..obs.slot + len).collect(),
            arrivals,
            gains,
            initial_levels: obs.levels.to_vec(),
            initial_ages: obs.ages.to_vec(),
            accumulated_age: obs.accumulated_age.to_vec(),
            age_divisor: obs.horizon as f64,
            sense_energy_per_bit: obs.sense_energy_per_bit,
            slot_duration: obs.slot_duration,
        }
    }

    fn solve(&mut self, snap: &InstanceSnapshot<'_>) -> Result<Option<ScheduleDecision>> {
        let model = build_model(snap)?;
        self.report.solves += 1;
        let solution = match &self.external {
            Some(command) => {
                let lp = export_lp(&model)?;
                let mut sol = external_solve(&model, &lp, command)?;
                sol.schedule = decode_schedule(&model, snap, &sol.values);
                sol
            }
            None => solve_exact(&model, snap, &self.options)?,
        };
        if solution.status != SolveStatus::Optimal {
            self.report.unproven += 1;
        }
        Ok(solution.schedule.into_iter().next())
    }
}

impl Scheduler for Rhcop {
    fn name(&self) -> &str {
        "rhcop"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<ScheduleDecision> {
        let snap = self.window_snapshot(obs);
        match self.solve(&snap) {
            Ok(Some(decision)) => return Ok(decision),
            Ok(None) => warn!("slot {}: window solve gave no schedule, using greedy", obs.slot),
            Err(e) => warn!("slot {}: window solve failed ({e}), using greedy", obs.slot),
        }
        self.report.fallbacks += 1;
        Ok(greedy_step(obs))
    }

    fn report(&self) -> SchedulerReport {
        self.report
    }
}
