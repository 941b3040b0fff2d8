//! Greedy embedding on forecast energy instead of measured energy.

use super::{greedy_plan, GmmForecaster, Observation, ScheduleDecision, Scheduler, SchedulerReport};
use crate::dynamics::{validate_decision, SlotContext};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct GmmPre {
    forecaster: GmmForecaster,
    window: usize,
    report: SchedulerReport,
}

impl GmmPre {
    pub fn new(forecaster: GmmForecaster, window: usize) -> Self {
        Self {
            forecaster,
            window: window.max(1),
            report: SchedulerReport::default(),
        }
    }

    /// Levels the policy believes in: last slot's level plus the average
    /// forecast arrival over the window, capped by the battery.
    pub fn believed_levels(&self, obs: &Observation<'_>) -> Vec<f64> {
        self.forecaster
            .arrival_models
            .iter()
            .enumerate()
            .map(|(n, gmm)| {
                let window = gmm.predict_window(self.window);
                let mean = window.iter().sum::<f64>() / window.len() as f64;
                let cap = obs.network.caps(n).battery_capacity;
                (obs.previous_levels[n] + mean).min(cap)
            })
            .collect()
    }
}

impl Scheduler for GmmPre {
    fn name(&self) -> &str {
        "gmmpre"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<ScheduleDecision> {
        let believed = self.believed_levels(obs);
        let plan = greedy_plan(
            obs.network,
            obs.requests,
            &believed,
            obs.device_costs,
            obs.ages,
            obs.slot_duration,
        );
        let ctx = SlotContext {
            network: obs.network,
            requests: obs.requests,
            levels: obs.levels,
            device_costs: obs.device_costs,
            slot_duration: obs.slot_duration,
        };
        if validate_decision(&ctx, &plan).is_empty() {
            Ok(plan)
        } else {
            self.report.vetoes += 1;
            Ok(ScheduleDecision::empty(obs.network, obs.requests))
        }
    }

    fn report(&self) -> SchedulerReport {
        self.report
    }
}
