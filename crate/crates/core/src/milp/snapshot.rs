use crate::energy::device_upload_energy;
use crate::error::{Error, Result};
use crate::substrate::SubstrateNetwork;
use crate::workload::DagRequest;

/// Everything a horizon model needs: the static instance plus per-slot
/// arrivals and gains (realized or forecast) and the starting state.
///
/// `arrivals[k][n]` is the energy reaching node `n` at the start of window
/// slot `k`, before that slot's decision. `initial_levels` are the battery
/// levels at the end of the slot preceding the window.
#[derive(Debug, Clone)]
pub struct InstanceSnapshot<'a> {
    pub network: &'a SubstrateNetwork,
    pub requests: &'a [DagRequest],
    /// Absolute slot index of each window slot.
    pub slots: Vec<usize>,
    pub arrivals: Vec<Vec<f64>>,
    /// `gains[k][d]` for the link of device `d` to its gateway.
    pub gains: Vec<Vec<f64>>,
    pub initial_levels: Vec<f64>,
    pub initial_ages: Vec<u32>,
    /// Age already accumulated by each request before the window.
    pub accumulated_age: Vec<u64>,
    /// Denominator of the time-average age (the full episode length).
    pub age_divisor: f64,
    pub sense_energy_per_bit: f64,
    pub slot_duration: f64,
}

impl<'a> InstanceSnapshot<'a> {
    /// Full-horizon snapshot starting from fresh ages.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        network: &'a SubstrateNetwork,
        requests: &'a [DagRequest],
        arrivals: Vec<Vec<f64>>,
        gains: Vec<Vec<f64>>,
        initial_levels: Vec<f64>,
        sense_energy_per_bit: f64,
        slot_duration: f64,
    ) -> Self {
        let horizon = arrivals.len();
        Self {
            network,
            requests,
            slots: (0..horizon).collect(),
            arrivals,
            gains,
            initial_levels,
            initial_ages: vec![0; requests.len()],
            accumulated_age: vec![0; requests.len()],
            age_divisor: horizon as f64,
            sense_energy_per_bit,
            slot_duration,
        }
    }

    pub fn horizon(&self) -> usize {
        self.arrivals.len()
    }

    /// Big-M constant: no age inside the window can exceed it.
    pub fn psi(&self) -> f64 {
        let start = self.initial_ages.iter().copied().max().unwrap_or(0) as usize;
        (start + self.horizon()).max(self.horizon()) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.horizon();
        let nodes = self.network.node_count();
        let devices = self.network.devices.len();
        let r = self.requests.len();
        if t == 0 {
            return Err(Error::Build("empty horizon".into()));
        }
        if self.slots.len() != t {
            return Err(Error::Build(format!("{} slot labels for {t} slots", self.slots.len())));
        }
        if self.gains.len() != t {
            return Err(Error::Build(format!("gain data covers {} of {t} slots", self.gains.len())));
        }
        for (k, row) in self.arrivals.iter().enumerate() {
            if row.len() != nodes {
                return Err(Error::Build(format!("slot {k}: {} arrivals for {nodes} nodes", row.len())));
            }
            if row.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::Build(format!("slot {k}: invalid arrival")));
            }
        }
        for (k, row) in self.gains.iter().enumerate() {
            if row.len() != devices {
                return Err(Error::Build(format!("slot {k}: {} gains for {devices} devices", row.len())));
            }
            if row.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                return Err(Error::Build(format!("slot {k}: invalid gain")));
            }
        }
        if self.initial_levels.len() != nodes {
            return Err(Error::Build("initial levels do not cover every node".into()));
        }
        for (n, &e) in self.initial_levels.iter().enumerate() {
            let cap = self.network.caps(n).battery_capacity;
            if !(e >= -1e-9 && e <= cap + 1e-9) {
                return Err(Error::Build(format!("node {n}: initial level {e} outside [0, {cap}]")));
            }
        }
        if self.initial_ages.len() != r || self.accumulated_age.len() != r {
            return Err(Error::Build("initial ages do not cover every request".into()));
        }
        if !(self.age_divisor > 0.0) {
            return Err(Error::Build("age divisor must be positive".into()));
        }
        let g = self.network.gateways.len();
        for dag in self.requests {
            if dag.collectors.iter().any(|c| c.gateway >= g) {
                return Err(Error::Build(format!("request {} has a collector at an unknown gateway", dag.id)));
            }
        }
        Ok(())
    }

    /// Energy device `d` spends uploading in window slot `k`.
    pub fn device_cost(&self, k: usize, d: usize) -> f64 {
        device_upload_energy(
            self.network,
            self.requests,
            d,
            self.gains[k][d],
            self.sense_energy_per_bit,
            self.slot_duration,
        )
    }

    /// Joules per megacycle drained at compute node `node`.
    pub fn drain_per_megacycle(&self, node: usize) -> f64 {
        self.network.caps(node).energy_per_megacycle() * self.slot_duration
    }
}
