//! Online greedy embedding: oldest request first, all or nothing.

use super::{Observation, ScheduleDecision, Scheduler};
use crate::error::Result;
use crate::substrate::SubstrateNetwork;
use crate::workload::DagRequest;

/// Resources still free in the slot.
#[derive(Debug, Clone)]
struct Headroom {
    energy: Vec<f64>,
    cpu: Vec<f64>,
    link: Vec<Vec<f64>>,
    sink: Vec<f64>,
    uploader: Vec<Option<usize>>,
}

impl Headroom {
    fn new(network: &SubstrateNetwork, levels: &[f64]) -> Self {
        Self {
            energy: levels.to_vec(),
            cpu: (0..network.node_count())
                .map(|n| network.caps(n).cpu_capacity)
                .collect(),
            link: vec![vec![network.wired_capacity; network.servers.len()]; network.gateways.len()],
            sink: vec![network.wired_capacity; network.servers.len()],
            uploader: vec![None; network.gateways.len()],
        }
    }
}

/// Reserves `cpu` megacycles on `node` if both energy and CPU allow.
fn reserve(room: &mut Headroom, network: &SubstrateNetwork, node: usize, cpu: f64, delta: f64) -> bool {
    let energy = network.caps(node).energy_per_megacycle() * cpu * delta;
    if cpu > room.cpu[node] || energy > room.energy[node] {
        return false;
    }
    room.cpu[node] -= cpu;
    room.energy[node] -= energy;
    true
}

/// Servers for every processor of `dag`, reserving resources in `room`;
/// `None` leaves `room` in an unspecified state.
fn embed(
    network: &SubstrateNetwork,
    dag: &DagRequest,
    room: &mut Headroom,
    device_costs: &[f64],
    delta: f64,
) -> Option<Vec<usize>> {
    for c in &dag.collectors {
        let i = c.gateway;
        if !reserve(room, network, network.gateway_node(i), c.compute, delta) {
            return None;
        }
        if room.uploader[i].is_none() {
            let best = network.association[i]
                .iter()
                .copied()
                .filter(|&d| device_costs[d] <= room.energy[network.device_node(d)])
                .max_by(|&a, &b| {
                    let (ea, eb) = (room.energy[network.device_node(a)], room.energy[network.device_node(b)]);
                    ea.total_cmp(&eb).then(b.cmp(&a))
                })?;
            room.energy[network.device_node(best)] -= device_costs[best];
            room.uploader[i] = Some(best);
        }
    }
    let mut servers = Vec::with_capacity(dag.processors.len());
    for p in &dag.processors {
        let s = (0..network.servers.len()).find(|&s| reserve(room, network, network.server_node(s), p.compute, delta))?;
        servers.push(s);
    }
    for e in &dag.edges {
        let i = dag.collectors[e.collector].gateway;
        let s = servers[e.processor];
        if e.bandwidth > room.link[i][s] {
            return None;
        }
        room.link[i][s] -= e.bandwidth;
    }
    for (v, p) in dag.processors.iter().enumerate() {
        let s = servers[v];
        if p.merge_bandwidth > room.sink[s] {
            return None;
        }
        room.sink[s] -= p.merge_bandwidth;
    }
    Some(servers)
}

/// Greedy decision against `levels`, which need not be the true levels.
pub fn greedy_plan(
    network: &SubstrateNetwork,
    requests: &[DagRequest],
    levels: &[f64],
    device_costs: &[f64],
    ages: &[u32],
    slot_duration: f64,
) -> ScheduleDecision {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| ages[b].cmp(&ages[a]).then(requests[a].id.cmp(&requests[b].id)));
    let mut room = Headroom::new(network, levels);
    let mut placement = vec![None; requests.len()];
    for r in order {
        let mut trial = room.clone();
        if let Some(servers) = embed(network, &requests[r], &mut trial, device_costs, slot_duration) {
            room = trial;
            placement[r] = Some(servers);
        }
    }
    ScheduleDecision::from_plan(network, requests, &placement, &room.uploader)
}

pub fn greedy_step(obs: &Observation<'_>) -> ScheduleDecision {
    greedy_plan(
        obs.network,
        obs.requests,
        obs.levels,
        obs.device_costs,
        obs.ages,
        obs.slot_duration,
    )
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyOl;

impl Scheduler for GreedyOl {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<ScheduleDecision> {
        Ok(greedy_step(obs))
    }
}
