//! Solving `MilpModel`s: exact branch-and-bound over the scheduling
//! binaries, an exhaustive oracle for tiny instances, and an adapter for
//! external LP-file solvers.

mod brute;
mod exact;
mod external;
mod replay;

use std::time::Duration;

pub use brute::{brute_force_fixed, brute_force_oracle, BRUTE_FORCE_LIMIT};
pub use exact::solve_exact;
pub use external::{external_solve, parse_solution_file};
pub use replay::{decode_schedule, replay};

use crate::decision::ScheduleDecision;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal.
    Optimal,
    /// Incumbent without an optimality proof.
    Feasible,
    Infeasible,
    /// Budget exhausted before any incumbent.
    Timeout,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub wall_time: Duration,
    /// Some child lists were capped, so the search was not exhaustive.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// One value per model variable; empty without a solution.
    pub values: Vec<f64>,
    /// Per-slot decisions; empty without a solution.
    pub schedule: Vec<ScheduleDecision>,
    pub stats: SolveStats,
}

impl Solution {
    pub(crate) fn without_solution(status: SolveStatus, stats: SolveStats) -> Self {
        Self {
            status,
            objective: None,
            values: Vec::new(),
            schedule: Vec::new(),
            stats,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub time_limit: Duration,
    pub node_limit: u64,
    /// Most server assignments enumerated per served set; hitting it
    /// forfeits the optimality proof.
    pub frontier_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(600),
            node_limit: 20_000_000,
            frontier_cap: 65_536,
        }
    }
}
