//! The per-slot episode loop.

use std::io::Write;

use log::warn;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::dynamics::{aos_update, minmax_objective, slot_drain, validate_decision, SlotContext};
use crate::energy::{
    apply_drain, compute_energy_step, device_upload_energy, store_energy, utilization, BatteryState,
};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::schedulers::{build_scheduler, Observation, ScheduleDecision, Scheduler, SchedulerReport};

/// Largest gap tolerated between the stepped level and
/// `previous + stored - drain`.
pub const CONSERVATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub scheduler: String,
    pub seed: u64,
    /// `ages[r][t]`
    pub ages: Vec<Vec<u32>>,
    /// `served[r][t]`
    pub served: Vec<Vec<bool>>,
    /// Time-average age per request.
    pub averages: Vec<f64>,
    pub objective: f64,
    /// `levels[t][node]` at the end of slot `t`.
    pub levels: Vec<Vec<f64>>,
    /// `stored[t][node]`
    pub stored: Vec<Vec<f64>>,
    /// `drains[t][node]`
    pub drains: Vec<Vec<f64>>,
    /// Decisions that failed validation and were replaced by the empty one.
    pub rejected: usize,
    pub report: SchedulerReport,
    /// Broken battery-bound, conservation or age-replay checks.
    pub invariant_violations: Vec<String>,
}

/// Plays `scheduler` through `env`.
pub fn run_with(env: &Environment, scheduler: &mut dyn Scheduler) -> Result<EpisodeResult> {
    let cfg = &env.config;
    let net = &env.network;
    let reqs = &env.requests;
    let horizon = env.horizon();
    if horizon == 0 {
        return Err(Error::Config("episode needs at least one slot".into()));
    }
    let nodes = net.node_count();
    let delta = cfg.energy.slot_duration;
    let rho = cfg.energy.sense_energy_per_bit;

    let mut level = env.initial_levels.clone();
    let mut ages = vec![0u32; reqs.len()];
    let mut accumulated = vec![0u64; reqs.len()];
    let mut out = EpisodeResult {
        scheduler: scheduler.name().to_string(),
        seed: env.seed,
        ages: vec![Vec::with_capacity(horizon); reqs.len()],
        served: vec![Vec::with_capacity(horizon); reqs.len()],
        averages: Vec::new(),
        objective: 0.0,
        levels: Vec::with_capacity(horizon),
        stored: Vec::with_capacity(horizon),
        drains: Vec::with_capacity(horizon),
        rejected: 0,
        report: SchedulerReport::default(),
        invariant_violations: Vec::new(),
    };

    for t in 0..horizon {
        let batteries: Vec<BatteryState> = (0..nodes)
            .map(|n| BatteryState {
                level: level[n],
                capacity: net.caps(n).battery_capacity,
            })
            .collect();
        let stored: Vec<f64> = (0..nodes)
            .map(|n| store_energy(env.arrivals[t][n], &batteries[n]))
            .collect();
        let current: Vec<f64> = (0..nodes).map(|n| level[n] + stored[n]).collect();
        let gains = &env.gains[t];
        let costs: Vec<f64> = (0..net.devices.len())
            .map(|d| device_upload_energy(net, reqs, d, gains[d], rho, delta))
            .collect();

        let obs = Observation {
            slot: t,
            horizon,
            network: net,
            requests: reqs,
            levels: &current,
            previous_levels: &level,
            arrivals: &env.arrivals[t],
            gains,
            device_costs: &costs,
            ages: &ages,
            accumulated_age: &accumulated,
            sense_energy_per_bit: rho,
            slot_duration: delta,
        };
        let mut decision = scheduler.decide(&obs).map_err(|e| Error::Scheduler {
            scheduler: scheduler.name().to_string(),
            slot: t,
            message: e.to_string(),
        })?;

        let ctx = SlotContext {
            network: net,
            requests: reqs,
            levels: &current,
            device_costs: &costs,
            slot_duration: delta,
        };
        let violations = validate_decision(&ctx, &decision);
        if !violations.is_empty() {
            let tags: Vec<&str> = violations.iter().map(|v| v.tag.as_str()).collect();
            warn!(
                "{} slot {t} seed {}: decision rejected ({})",
                scheduler.name(),
                env.seed,
                tags.join(", ")
            );
            out.rejected += 1;
            decision = ScheduleDecision::empty(net, reqs);
        }
        let drain = slot_drain(&ctx, &decision);

        let next = step_levels(env, &decision, &batteries, &stored, &costs, &mut out.invariant_violations, t);
        for n in 0..nodes {
            let expected = level[n] + stored[n] - drain[n];
            if (next[n] - expected).abs() > CONSERVATION_TOL {
                out.invariant_violations
                    .push(format!("slot {t} node {n}: level {} but balance gives {expected}", next[n]));
            }
            let cap = net.caps(n).battery_capacity;
            if next[n] < 0.0 || next[n] > cap {
                out.invariant_violations
                    .push(format!("slot {t} node {n}: level {} outside [0, {cap}]", next[n]));
            }
        }
        level = next;

        for r in 0..reqs.len() {
            ages[r] = aos_update(ages[r], decision.served[r]);
            accumulated[r] += u64::from(ages[r]);
            out.ages[r].push(ages[r]);
            out.served[r].push(decision.served[r]);
        }
        out.levels.push(level.clone());
        out.stored.push(stored);
        out.drains.push(drain);
    }

    for r in 0..reqs.len() {
        let mut a = 0;
        for t in 0..horizon {
            a = aos_update(a, out.served[r][t]);
            if a != out.ages[r][t] {
                out.invariant_violations
                    .push(format!("request {r} slot {t}: age {} but replay gives {a}", out.ages[r][t]));
            }
        }
    }
    out.averages = out
        .ages
        .iter()
        .map(|row| row.iter().map(|&a| f64::from(a)).sum::<f64>() / horizon as f64)
        .collect();
    out.objective = minmax_objective(&out.ages);
    out.report = scheduler.report();
    Ok(out)
}

/// End-of-slot levels from the per-class energy steps.
fn step_levels(
    env: &Environment,
    decision: &ScheduleDecision,
    batteries: &[BatteryState],
    stored: &[f64],
    costs: &[f64],
    problems: &mut Vec<String>,
    t: usize,
) -> Vec<f64> {
    let net = &env.network;
    let reqs = &env.requests;
    let delta = env.config.energy.slot_duration;
    let mut next = vec![0.0; net.node_count()];
    let mut settle = |n: usize, r: Result<f64>| match r {
        Ok(v) => next[n] = v,
        Err(e) => {
            problems.push(format!("slot {t} node {n}: {e}"));
            next[n] = batteries[n].level + stored[n];
        }
    };
    for d in 0..net.devices.len() {
        let n = net.device_node(d);
        let drain = if decision.uploads[d] { costs[d] } else { 0.0 };
        settle(n, apply_drain(&batteries[n], stored[n], drain));
    }
    for i in 0..net.gateways.len() {
        let n = net.gateway_node(i);
        let active: Vec<(f64, bool)> = reqs
            .iter()
            .enumerate()
            .flat_map(|(r, dag)| {
                dag.collectors
                    .iter()
                    .enumerate()
                    .map(move |(u, c)| (c.compute, c.gateway == i && decision.active[r][u]))
            })
            .collect();
        let caps = net.caps(n);
        let step = utilization(&active, caps.cpu_capacity).and_then(|u| {
            compute_energy_step(&batteries[n], stored[n], u, caps.base_power, caps.peak_power, delta)
        });
        settle(n, step);
    }
    for s in 0..net.servers.len() {
        let n = net.server_node(s);
        let active: Vec<(f64, bool)> = reqs
            .iter()
            .enumerate()
            .flat_map(|(r, dag)| {
                dag.processors
                    .iter()
                    .enumerate()
                    .map(move |(v, p)| (p.compute, decision.placement[r][v] == Some(s)))
            })
            .collect();
        let caps = net.caps(n);
        let step = utilization(&active, caps.cpu_capacity).and_then(|u| {
            compute_energy_step(&batteries[n], stored[n], u, caps.base_power, caps.peak_power, delta)
        });
        settle(n, step);
    }
    next
}

/// Generates the world for `seed` and plays the scheduler called `scheduler`.
pub fn run_episode(config: &ExperimentConfig, scheduler: &str, seed: u64) -> Result<EpisodeResult> {
    let env = Environment::generate(config, seed)?;
    let mut policy = build_scheduler(scheduler, &env)?;
    run_with(&env, policy.as_mut())
}

#[derive(Serialize)]
struct SlotRow<'a> {
    scheduler: &'a str,
    seed: u64,
    slot: usize,
    request: usize,
    served: u8,
    age: u32,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    scheduler: &'a str,
    seed: u64,
    objective: f64,
    rejected: usize,
    solves: usize,
    unproven: usize,
    fallbacks: usize,
    vetoes: usize,
}

/// One row per slot per request:
/// `scheduler,seed,slot,request,served,age`.
pub fn write_slot_csv<W: Write>(results: &[EpisodeResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for res in results {
        for (r, row) in res.ages.iter().enumerate() {
            for (t, &age) in row.iter().enumerate() {
                w.serialize(SlotRow {
                    scheduler: &res.scheduler,
                    seed: res.seed,
                    slot: t,
                    request: r,
                    served: u8::from(res.served[r][t]),
                    age,
                })?;
            }
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// One row per episode:
/// `scheduler,seed,objective,rejected,solves,unproven,fallbacks,vetoes`.
pub fn write_summary_csv<W: Write>(results: &[EpisodeResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for res in results {
        w.serialize(SummaryRow {
            scheduler: &res.scheduler,
            seed: res.seed,
            objective: res.objective,
            rejected: res.rejected,
            solves: res.report.solves,
            unproven: res.report.unproven,
            fallbacks: res.report.fallbacks,
            vetoes: res.report.vetoes,
        })?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
