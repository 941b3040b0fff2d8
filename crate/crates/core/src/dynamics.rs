//! Per-slot constraint evaluation and the age recurrence.

use crate::decision::ScheduleDecision;
use crate::energy::ENERGY_TOL;
use crate::milp::Violation;
use crate::substrate::SubstrateNetwork;
use crate::workload::DagRequest;

/// Realized state a decision is checked against.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub network: &'a SubstrateNetwork,
    pub requests: &'a [DagRequest],
    /// Battery level of every node after this slot's harvest is stored.
    pub levels: &'a [f64],
    /// Upload energy of every device this slot.
    pub device_costs: &'a [f64],
    pub slot_duration: f64,
}

pub fn aos_update(previous: u32, served: bool) -> u32 {
    if served {
        1
    } else {
        previous + 1
    }
}

/// `max_r mean_t a[r][t]`; 0 without requests.
pub fn minmax_objective(ages: &[Vec<u32>]) -> f64 {
    ages.iter()
        .filter(|row| !row.is_empty())
        .map(|row| row.iter().map(|&a| a as f64).sum::<f64>() / row.len() as f64)
        .fold(0.0, f64::max)
}

/// Energy drained at every node by `decision`.
pub fn slot_drain(ctx: &SlotContext<'_>, decision: &ScheduleDecision) -> Vec<f64> {
    let net = ctx.network;
    let mut drain = vec![0.0; net.node_count()];
    for (d, &up) in decision.uploads.iter().enumerate() {
        if up {
            drain[net.device_node(d)] += ctx.device_costs[d];
        }
    }
    for (i, load) in gateway_loads(ctx, decision).into_iter().enumerate() {
        let node = net.gateway_node(i);
        drain[node] = net.caps(node).energy_per_megacycle() * load * ctx.slot_duration;
    }
    for (s, load) in server_loads(ctx, decision).into_iter().enumerate() {
        let node = net.server_node(s);
        drain[node] = net.caps(node).energy_per_megacycle() * load * ctx.slot_duration;
    }
    drain
}

fn gateway_loads(ctx: &SlotContext<'_>, decision: &ScheduleDecision) -> Vec<f64> {
    let mut load = vec![0.0; ctx.network.gateways.len()];
    for (r, dag) in ctx.requests.iter().enumerate() {
        for (u, c) in dag.collectors.iter().enumerate() {
            if decision.active[r][u] {
                load[c.gateway] += c.compute;
            }
        }
    }
    load
}

fn server_loads(ctx: &SlotContext<'_>, decision: &ScheduleDecision) -> Vec<f64> {
    let mut load = vec![0.0; ctx.network.servers.len()];
    for (r, dag) in ctx.requests.iter().enumerate() {
        for (v, p) in dag.processors.iter().enumerate() {
            if let Some(s) = decision.placement[r][v] {
                load[s] += p.compute;
            }
        }
    }
    load
}

fn shape_ok(ctx: &SlotContext<'_>, dec: &ScheduleDecision) -> bool {
    let net = ctx.network;
    let reqs = ctx.requests;
    dec.served.len() == reqs.len()
        && dec.uploads.len() == net.devices.len()
        && dec.active.len() == reqs.len()
        && dec.placement.len() == reqs.len()
        && dec.routes.len() == reqs.len()
        && reqs.iter().enumerate().all(|(r, dag)| {
            dec.active[r].len() == dag.collectors.len()
                && dec.placement[r].len() == dag.processors.len()
                && dec.placement[r].iter().flatten().all(|&s| s < net.servers.len())
                && dec.routes[r].len() == dag.collectors.len()
                && dec.routes[r].iter().all(|row| {
                    row.len() == dag.processors.len()
                        && row
                            .iter()
                            .flatten()
                            .all(|&(i, s)| i < net.gateways.len() && s < net.servers.len())
                })
        })
        && ctx.levels.len() == net.node_count()
        && ctx.device_costs.len() == net.devices.len()
}

/// Every per-slot constraint `decision` breaks, tagged with its equation.
pub fn validate_decision(ctx: &SlotContext<'_>, decision: &ScheduleDecision) -> Vec<Violation> {
    let mut out = Vec::new();
    // same relative slack the exact solver packs with
    let mut push = |name: String, eq: u8, used: f64, limit: f64| {
        let amount = used - limit;
        if amount > ENERGY_TOL * limit.abs().max(1.0) {
            out.push(Violation {
                name,
                tag: format!("eq{eq}"),
                amount,
            });
        }
    };
    if !shape_ok(ctx, decision) {
        push("decision shape".into(), 0, 1.0, 0.0);
        return out;
    }
    let net = ctx.network;
    let reqs = ctx.requests;
    let drain = slot_drain(ctx, decision);
    let total_collectors: usize = reqs.iter().map(|r| r.collectors.len()).sum();

    let gw_load = gateway_loads(ctx, decision);
    for (i, gw) in net.gateways.iter().enumerate() {
        let node = net.gateway_node(i);
        push(format!("gateway {i} cpu"), 4, gw_load[i], gw.caps.cpu_capacity);
        push(format!("gateway {i} energy"), 7, drain[node], ctx.levels[node]);
        let uploads = net.association[i].iter().filter(|&&d| decision.uploads[d]).count();
        let active = reqs
            .iter()
            .enumerate()
            .flat_map(|(r, dag)| {
                dag.collectors
                    .iter()
                    .enumerate()
                    .filter(move |(u, c)| c.gateway == i && decision.active[r][*u])
            })
            .count();
        if total_collectors > 0 {
            let need = active as f64 / total_collectors as f64;
            push(format!("gateway {i} device selection"), 9, need, uploads as f64);
        }
        push(format!("gateway {i} devices"), 10, uploads as f64, 1.0);
    }
    for d in 0..net.devices.len() {
        let node = net.device_node(d);
        push(format!("device {d} energy"), 12, drain[node], ctx.levels[node]);
    }
    let srv_load = server_loads(ctx, decision);
    let mut sink_bw = vec![0.0; net.servers.len()];
    for (r, dag) in reqs.iter().enumerate() {
        for (v, p) in dag.processors.iter().enumerate() {
            if let Some(s) = decision.placement[r][v] {
                sink_bw[s] += p.merge_bandwidth;
            }
        }
    }
    for (s, srv) in net.servers.iter().enumerate() {
        let node = net.server_node(s);
        push(format!("server {s} cpu"), 13, srv_load[s], srv.caps.cpu_capacity);
        push(format!("server {s} energy"), 16, drain[node], ctx.levels[node]);
        push(format!("server {s} sink link"), 23, sink_bw[s], net.wired_capacity);
    }

    let mut link_bw = vec![vec![0.0; net.servers.len()]; net.gateways.len()];
    for (r, dag) in reqs.iter().enumerate() {
        if decision.served[r] {
            let idle_c = decision.active[r].iter().filter(|x| !**x).count();
            push(format!("request {r} collectors"), 18, idle_c as f64, 0.0);
            let idle_p = decision.placement[r].iter().filter(|y| y.is_none()).count();
            push(format!("request {r} processors"), 19, idle_p as f64, 0.0);
        }
        for e in &dag.edges {
            let (u, v) = (e.collector, e.processor);
            let route = decision.routes[r][u][v];
            let from_ok = match route {
                Some((i, _)) => decision.active[r][u] && i == dag.collectors[u].gateway,
                None => !decision.active[r][u],
            };
            if !from_ok {
                push(format!("request {r} edge ({u},{v}) gateway"), 20, 1.0, 0.0);
            }
            if route.map(|(_, s)| s) != decision.placement[r][v] {
                push(format!("request {r} edge ({u},{v}) server"), 21, 1.0, 0.0);
            }
            if let Some((i, s)) = route {
                link_bw[i][s] += e.bandwidth;
            }
        }
    }
    for &(i, s) in &net.gateway_server_links {
        push(format!("link ({i},{s})"), 22, link_bw[i][s], net.wired_capacity);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn age_recurrence() {
        assert_eq!(aos_update(5, true), 1);
        assert_eq!(aos_update(5, false), 6);
        assert_eq!(aos_update(0, false), 1);
    }

    #[test]
    fn minmax_examples() {
        let unserved: Vec<u32> = (1..=12).collect();
        assert_eq!(minmax_objective(&[unserved]), 6.5);
        assert_eq!(minmax_objective(&[vec![1; 12], vec![1; 12]]), 1.0);
        assert_eq!(minmax_objective(&[vec![1, 2], vec![1, 1]]), 1.5);
        assert_eq!(minmax_objective(&[]), 0.0);
    }

    #[test]
    fn served_only_in_the_middle_slot() {
        let mut a = 0;
        let trace: Vec<u32> = [false, true, false]
            .iter()
            .map(|&z| {
                a = aos_update(a, z);
                a
            })
            .collect();
        assert_eq!(trace, vec![1, 1, 2]);
        assert!((minmax_objective(&[trace]) - 4.0 / 3.0).abs() < 1e-12);
    }
}
