//! Serves a uniformly drawn subset of requests when the slot allows it.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Observation, ScheduleDecision, Scheduler, SchedulerReport};
use crate::error::Result;
use crate::milp::build_model;
use crate::solvers::{solve_exact, SolveOptions};

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    report: SchedulerReport,
}

impl RandomPolicy {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self {
            rng,
            report: SchedulerReport::default(),
        }
    }

    /// Subset size uniform on `0..=n`, then a uniform subset of that size.
    pub fn draw_subset(&mut self, n: usize) -> Vec<bool> {
        let k = self.rng.random_range(0..=n);
        let mut chosen = vec![false; n];
        for r in sample(&mut self.rng, n, k) {
            chosen[r] = true;
        }
        chosen
    }
}

impl Scheduler for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<ScheduleDecision> {
        let chosen = self.draw_subset(obs.requests.len());
        if !chosen.iter().any(|c| *c) {
            return Ok(ScheduleDecision::empty(obs.network, obs.requests));
        }
        let snap = obs.slot_snapshot();
        let mut model = build_model(&snap)?;
        for (r, &c) in chosen.iter().enumerate() {
            let z = &mut model.variables[model.layout.slots[0].z[r]];
            if c {
                z.lower = 1.0;
            } else {
                z.upper = 0.0;
            }
        }
        let solution = solve_exact(&model, &snap, &SolveOptions::default())?;
        self.report.solves += 1;
        Ok(if solution.status.has_solution() {
            solution.schedule[0].clone()
        } else {
            ScheduleDecision::empty(obs.network, obs.requests)
        })
    }

    fn report(&self) -> SchedulerReport {
        self.report
    }
}
