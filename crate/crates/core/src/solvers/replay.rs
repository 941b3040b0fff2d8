use crate::decision::ScheduleDecision;
use crate::dynamics::{aos_update, slot_drain, SlotContext};
use crate::milp::{InstanceSnapshot, MilpModel};

/// Full variable assignment realizing `schedule` on `snap`: harvest is
/// greedy, levels and ages follow from the decisions, and the epigraph
/// variable takes the worst request average.
pub fn replay(model: &MilpModel, snap: &InstanceSnapshot<'_>, schedule: &[ScheduleDecision]) -> Vec<f64> {
    let net = snap.network;
    let reqs = snap.requests;
    let lay = &model.layout;
    let mut values = vec![0.0; model.variables.len()];
    let mut level = snap.initial_levels.clone();
    let mut age: Vec<u32> = snap.initial_ages.clone();
    let mut sums: Vec<f64> = snap.accumulated_age.iter().map(|&a| a as f64).collect();

    for (k, dec) in schedule.iter().enumerate() {
        let sl = &lay.slots[k];
        let mut avail = vec![0.0; level.len()];
        for n in 0..level.len() {
            let cap = net.caps(n).battery_capacity;
            let w = snap.arrivals[k][n].min((cap - level[n]).max(0.0));
            values[sl.w[n]] = w;
            avail[n] = level[n] + w;
        }
        let costs: Vec<f64> = (0..net.devices.len()).map(|d| snap.device_cost(k, d)).collect();
        let ctx = SlotContext {
            network: net,
            requests: reqs,
            levels: &avail,
            device_costs: &costs,
            slot_duration: snap.slot_duration,
        };
        let drain = slot_drain(&ctx, dec);
        for n in 0..level.len() {
            level[n] = avail[n] - drain[n];
            values[sl.e[n]] = level[n];
        }
        for (d, &up) in dec.uploads.iter().enumerate() {
            values[sl.phi[d]] = f64::from(u8::from(up));
        }
        for (r, dag) in reqs.iter().enumerate() {
            let z = dec.served[r];
            values[sl.z[r]] = f64::from(u8::from(z));
            for (u, c) in dag.collectors.iter().enumerate() {
                if dec.active[r][u] {
                    values[lay.x(k, r, u, c.gateway)] = 1.0;
                }
            }
            for v in 0..dag.processors.len() {
                if let Some(s) = dec.placement[r][v] {
                    values[lay.y(k, r, v, s)] = 1.0;
                }
            }
            for u in 0..dag.collectors.len() {
                for v in 0..dag.processors.len() {
                    if let Some((i, s)) = dec.routes[r][u][v] {
                        values[lay.l(k, r, u, v, i, s)] = 1.0;
                    }
                }
            }
            values[sl.lambda[r]] = if z { age[r] as f64 } else { 0.0 };
            age[r] = aos_update(age[r], z);
            values[sl.a[r]] = age[r] as f64;
            sums[r] += age[r] as f64;
        }
    }
    values[lay.eta] = sums
        .iter()
        .map(|s| s / snap.age_divisor)
        .fold(0.0, f64::max);
    values
}

/// Reads the scheduling binaries of `values` back into per-slot decisions.
pub fn decode_schedule(
    model: &MilpModel,
    snap: &InstanceSnapshot<'_>,
    values: &[f64],
) -> Vec<ScheduleDecision> {
    let net = snap.network;
    let reqs = snap.requests;
    let lay = &model.layout;
    let on = |idx: usize| values[idx] > 0.5;
    (0..lay.slots.len())
        .map(|k| {
            let sl = &lay.slots[k];
            let mut dec = ScheduleDecision::empty(net, reqs);
            for d in 0..net.devices.len() {
                dec.uploads[d] = on(sl.phi[d]);
            }
            for (r, dag) in reqs.iter().enumerate() {
                dec.served[r] = on(sl.z[r]);
                for (u, c) in dag.collectors.iter().enumerate() {
                    dec.active[r][u] = on(lay.x(k, r, u, c.gateway));
                }
                for v in 0..dag.processors.len() {
                    dec.placement[r][v] = (0..net.servers.len()).find(|&s| on(lay.y(k, r, v, s)));
                    for u in 0..dag.collectors.len() {
                        dec.routes[r][u][v] = (0..net.gateways.len())
                            .flat_map(|i| (0..net.servers.len()).map(move |s| (i, s)))
                            .find(|&(i, s)| on(lay.l(k, r, u, v, i, s)));
                    }
                }
            }
            dec
        })
        .collect()
}
