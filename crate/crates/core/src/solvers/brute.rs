//! Exhaustive enumeration of the scheduling binaries for tiny instances.
//!
//! Every slot tries every combination of device uploads, located collector
//! activations, processor placements and completions; routes follow from
//! those. Each combination is checked constraint by constraint against the
//! realized levels, so this shares nothing with the branch-and-bound code.

use std::time::Instant;

use super::{replay, Solution, SolveStats, SolveStatus};
use crate::decision::ScheduleDecision;
use crate::dynamics::{aos_update, slot_drain, validate_decision, SlotContext};
use crate::error::{Error, Result};
use crate::milp::{build_model, count_model, Dimensions, InstanceSnapshot};

/// Largest model (scheduling binaries) the oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

struct Enumeration<'a> {
    snap: &'a InstanceSnapshot<'a>,
    fixed: &'a [Vec<Option<bool>>],
    combos: &'a [ScheduleDecision],
    costs: &'a [Vec<f64>],
    path: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    leaves: u64,
}

/// Every assignment of one slot's effective binaries.
fn slot_combinations(snap: &InstanceSnapshot<'_>) -> Vec<ScheduleDecision> {
    let net = snap.network;
    let reqs = snap.requests;
    let ns = net.servers.len();
    // Radix per digit: uploads, activations and completions are binary,
    // placements pick "none" or a server.
    let mut radix = vec![2usize; net.devices.len()];
    for dag in reqs {
        radix.extend(std::iter::repeat_n(2, dag.collectors.len()));
        radix.extend(std::iter::repeat_n(ns + 1, dag.processors.len()));
        radix.push(2);
    }
    let total: usize = radix.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; radix.len()];
    for _ in 0..total {
        let mut dec = ScheduleDecision::empty(net, reqs);
        let mut it = digits.iter();
        for d in 0..net.devices.len() {
            dec.uploads[d] = *it.next().unwrap() == 1;
        }
        for (r, dag) in reqs.iter().enumerate() {
            for u in 0..dag.collectors.len() {
                dec.active[r][u] = *it.next().unwrap() == 1;
            }
            for v in 0..dag.processors.len() {
                let s = *it.next().unwrap();
                dec.placement[r][v] = if s == 0 { None } else { Some(s - 1) };
            }
            dec.served[r] = *it.next().unwrap() == 1;
            for e in &dag.edges {
                let (u, v) = (e.collector, e.processor);
                if let (true, Some(s)) = (dec.active[r][u], dec.placement[r][v]) {
                    dec.routes[r][u][v] = Some((dag.collectors[u].gateway, s));
                }
            }
        }
        out.push(dec);
        for (digit, &base) in digits.iter_mut().zip(&radix) {
            *digit += 1;
            if *digit < base {
                break;
            }
            *digit = 0;
        }
    }
    out
}

impl Enumeration<'_> {
    fn walk(&mut self, k: usize, level: &[f64], ages: &[u32], sums: &[f64]) {
        let snap = self.snap;
        let net = snap.network;
        if k == snap.horizon() {
            self.leaves += 1;
            let value = sums
                .iter()
                .map(|s| s / snap.age_divisor)
                .fold(0.0, f64::max);
            if self.best.as_ref().is_none_or(|b| value < b.0) {
                self.best = Some((value, self.path.clone()));
            }
            return;
        }
        let avail: Vec<f64> = (0..level.len())
            .map(|n| (level[n] + snap.arrivals[k][n]).min(net.caps(n).battery_capacity))
            .collect();
        let (combos, costs) = (self.combos, self.costs);
        let ctx = SlotContext {
            network: net,
            requests: snap.requests,
            levels: &avail,
            device_costs: &costs[k],
            slot_duration: snap.slot_duration,
        };
        for (c, dec) in combos.iter().enumerate() {
            let pinned = dec
                .served
                .iter()
                .zip(&self.fixed[k])
                .any(|(z, f)| f.is_some_and(|f| f != *z));
            if pinned || !validate_decision(&ctx, dec).is_empty() {
                continue;
            }
            let drain = slot_drain(&ctx, dec);
            let next: Vec<f64> = avail.iter().zip(&drain).map(|(a, d)| (a - d).max(0.0)).collect();
            let mut next_ages = ages.to_vec();
            let mut next_sums = sums.to_vec();
            for r in 0..ages.len() {
                next_ages[r] = aos_update(ages[r], dec.served[r]);
                next_sums[r] += next_ages[r] as f64;
            }
            self.path.push(c);
            self.walk(k + 1, &next, &next_ages, &next_sums);
            self.path.pop();
        }
    }
}

/// Exact optimum by exhaustion; `fixed[k][r]` pins `z` where set.
pub fn brute_force_fixed(snap: &InstanceSnapshot<'_>, fixed: &[Vec<Option<bool>>]) -> Result<Solution> {
    snap.validate()?;
    let binaries = count_model(&Dimensions::of(snap)).variables;
    if binaries > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            binaries,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if fixed.len() != snap.horizon() || fixed.iter().any(|f| f.len() != snap.requests.len()) {
        return Err(Error::Build("z pins must cover every slot and request".into()));
    }
    let start = Instant::now();
    let net = snap.network;
    let combos = slot_combinations(snap);
    let costs: Vec<Vec<f64>> = (0..snap.horizon())
        .map(|k| (0..net.devices.len()).map(|d| snap.device_cost(k, d)).collect())
        .collect();
    let mut search = Enumeration {
        snap,
        fixed,
        combos: &combos,
        costs: &costs,
        path: Vec::new(),
        best: None,
        leaves: 0,
    };
    let sums: Vec<f64> = snap.accumulated_age.iter().map(|&a| a as f64).collect();
    search.walk(0, &snap.initial_levels, &snap.initial_ages, &sums);
    let stats = SolveStats {
        nodes: search.leaves,
        wall_time: start.elapsed(),
        truncated: false,
    };
    let Some((objective, path)) = search.best else {
        return Ok(Solution::without_solution(SolveStatus::Infeasible, stats));
    };
    let schedule: Vec<ScheduleDecision> = path.iter().map(|&c| combos[c].clone()).collect();
    let model = build_model(snap)?;
    let values = replay(&model, snap, &schedule);
    Ok(Solution {
        status: SolveStatus::Optimal,
        objective: Some(objective),
        values,
        schedule,
        stats,
    })
}

/// Exact optimum by exhaustion, for models of at most
/// [`BRUTE_FORCE_LIMIT`] scheduling binaries.
pub fn brute_force_oracle(snap: &InstanceSnapshot<'_>) -> Result<Solution> {
    let free = vec![vec![None; snap.requests.len()]; snap.horizon()];
    brute_force_fixed(snap, &free)
}
