//! Instance builders shared by the integration tests.
#![allow(dead_code)]

use aosnet::config::ExperimentConfig;
use aosnet::milp::{audit, count_model, linearize_aos, Dimensions, Sense, REQUIRED_EQUATIONS};
use aosnet::substrate::{build_topology, SubstrateNetwork};
use aosnet::workload::{generate_requests, DagRequest};
use aosnet::{build_model, InstanceSnapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Tiny {
    pub network: SubstrateNetwork,
    pub requests: Vec<DagRequest>,
    pub arrivals: Vec<Vec<f64>>,
    pub gains: Vec<Vec<f64>>,
    pub initial_levels: Vec<f64>,
    pub config: ExperimentConfig,
}

impl Tiny {
    pub fn snapshot(&self) -> InstanceSnapshot<'_> {
        InstanceSnapshot::new(
            &self.network,
            &self.requests,
            self.arrivals.clone(),
            self.gains.clone(),
            self.initial_levels.clone(),
            self.config.energy.sense_energy_per_bit,
            self.config.energy.slot_duration,
        )
    }
}

/// Random instance with at most `limit` scheduling binaries and batteries
/// small enough that energy binds.
pub fn tiny_instance(seed: u64, limit: usize) -> Tiny {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut c = ExperimentConfig::default();
        c.network.gateways = rng.random_range(1..=2);
        c.network.servers = rng.random_range(1..=2);
        c.network.devices_per_gateway = 1;
        c.workload.requests = rng.random_range(1..=2);
        c.workload.vnfs_per_dag = 2;
        c.scheduling.slots = rng.random_range(1..=4);
        c.energy.gateway_battery = rng.random_range(5.0..80.0);
        c.energy.server_battery = rng.random_range(5.0..80.0);
        c.energy.device_battery = rng.random_range(0.2..3.0);
        let network = build_topology(&c, &mut rng).unwrap();
        let requests = generate_requests(&c.workload, c.network.gateways, &mut rng).unwrap();
        let slots = c.scheduling.slots;
        let nodes = network.node_count();
        let dims = aosnet::milp::Dimensions {
            slots,
            devices: network.devices.len(),
            gateways: network.gateways.len(),
            servers: network.servers.len(),
            collectors: requests.iter().map(|r| r.collectors.len()).collect(),
            processors: requests.iter().map(|r| r.processors.len()).collect(),
            edges: requests.iter().map(|r| r.edges.len()).collect(),
            gateway_server_links: network.gateway_server_links.len(),
        };
        if aosnet::milp::count_model(&dims).variables > limit {
            continue;
        }
        let arrivals = (0..slots)
            .map(|_| (0..nodes).map(|_| rng.random_range(0.0..8.0)).collect())
            .collect();
        let gains = (0..slots)
            .map(|_| {
                (0..network.devices.len())
                    .map(|_| rng.random_range(0.0..2e-7))
                    .collect()
            })
            .collect();
        let initial_levels = (0..nodes)
            .map(|n| rng.random_range(0.0..=network.caps(n).battery_capacity))
            .collect();
        return Tiny {
            network,
            requests,
            arrivals,
            gains,
            initial_levels,
            config: c,
        };
    }
}

/// Feasible interval of `lambda` once `z` and `a_prev` are pinned, read off
/// the rows that do not mention `a`, then the `a` the equality row forces.
pub fn pinned_aos(psi: f64, z: f64, a_prev: f64) -> ((f64, f64), f64) {
    let (vars, rows) = linearize_aos(psi);
    let fixed = [z, a_prev];
    let (mut lo, mut hi) = (vars[2].lower, vars[2].upper);
    let mut age_row = None;
    for row in &rows.rows {
        let mut rest = row.rhs;
        let (mut cl, mut ca) = (0.0, 0.0);
        for &(v, c) in &row.terms {
            match v {
                0 | 1 => rest -= c * fixed[v],
                2 => cl += c,
                3 => ca += c,
                _ => unreachable!(),
            }
        }
        if ca != 0.0 {
            assert_eq!(row.sense, Sense::Eq);
            age_row = Some((cl, ca, rest));
            continue;
        }
        assert!(cl != 0.0, "row {} constrains nothing", row.name);
        let bound = rest / cl;
        match (row.sense, cl > 0.0) {
            (Sense::Le, true) | (Sense::Ge, false) => hi = hi.min(bound),
            (Sense::Ge, true) | (Sense::Le, false) => lo = lo.max(bound),
            (Sense::Eq, _) => {
                lo = lo.max(bound);
                hi = hi.min(bound);
            }
        }
    }
    let (cl, ca, rest) = age_row.expect("age update row");
    ((lo, hi), (rest - cl * lo) / ca)
}

/// Builds a model on random dimensions and compares it with the closed-form
/// counts and the tag audit.
pub fn audit_random_dimensions(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut c = ExperimentConfig::default();
    c.network.gateways = rng.random_range(1..=4);
    c.network.servers = rng.random_range(1..=4);
    c.network.devices_per_gateway = rng.random_range(1..=3);
    c.workload.requests = rng.random_range(0..=4);
    c.workload.vnfs_per_dag = rng.random_range(2..=6);
    c.scheduling.slots = rng.random_range(1..=5);
    let net = build_topology(&c, rng).unwrap();
    let reqs = generate_requests(&c.workload, c.network.gateways, rng).unwrap();
    let slots = c.scheduling.slots;
    let snap = InstanceSnapshot::new(
        &net,
        &reqs,
        vec![vec![1.0; net.node_count()]; slots],
        vec![vec![1e-7; net.devices.len()]; slots],
        (0..net.node_count()).map(|n| net.caps(n).battery_capacity).collect(),
        c.energy.sense_energy_per_bit,
        c.energy.slot_duration,
    );
    let model = build_model(&snap).map_err(|e| e.to_string())?;
    let dims = Dimensions::of(&snap);
    let expected = count_model(&dims);
    let found = audit(&model);
    if found.binaries != expected.variables || found.accounted_rows != expected.constraints {
        return Err(format!(
            "{dims:?}: built {} binaries / {} rows, closed form {} / {}",
            found.binaries, found.accounted_rows, expected.variables, expected.constraints
        ));
    }
    if found.dangling_references > 0 || found.binaries_with_bad_bounds > 0 {
        return Err(format!("{dims:?}: malformed model"));
    }
    if !reqs.is_empty() && !found.missing_equations.is_empty() {
        return Err(format!("{dims:?}: missing {:?}", found.missing_equations));
    }
    if let Some(eq) = found.rows_by_equation.keys().find(|e| !REQUIRED_EQUATIONS.contains(e)) {
        return Err(format!("stray tag eq{eq}"));
    }
    Ok(())
}
