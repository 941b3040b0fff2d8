//! Pregenerated randomness for one episode.
//!
//! Every random quantity an episode consumes is drawn up front from
//! independent ChaCha8 substreams of the episode seed, so the realized
//! world does not depend on which scheduler runs in it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::config::ExperimentConfig;
use crate::energy::{SolarProcess, Weather};
use crate::error::Result;
use crate::substrate::{build_topology, SubstrateNetwork};
use crate::workload::{generate_requests, DagRequest};

const TOPOLOGY_STREAM: u64 = 0;
const REQUEST_STREAM: u64 = 1;
const SOLAR_STREAM: u64 = 2;
const FADING_STREAM: u64 = 3;
const TRAINING_STREAM: u64 = 4;
const SCHEDULER_STREAM: u64 = 5;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator handed to randomized schedulers.
pub fn scheduler_rng(seed: u64) -> ChaCha8Rng {
    substream(seed, SCHEDULER_STREAM)
}

#[derive(Debug, Clone)]
pub struct Environment {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub network: SubstrateNetwork,
    pub requests: Vec<DagRequest>,
    /// `arrivals[t][node]`: energy offered to the battery at the start of
    /// slot `t`, before that slot's decision.
    pub arrivals: Vec<Vec<f64>>,
    /// `gains[t][d]`: device-to-gateway power gain in slot `t`.
    pub gains: Vec<Vec<f64>>,
    pub initial_levels: Vec<f64>,
    /// `training_arrivals[node]`: history before the episode.
    pub training_arrivals: Vec<Vec<f64>>,
    /// `training_fading[d]`: fading draws before the episode, in units of
    /// the link's distance path gain.
    pub training_fading: Vec<Vec<f64>>,
}

fn arrival_trace(
    config: &ExperimentConfig,
    network: &SubstrateNetwork,
    process: &SolarProcess,
    slots: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let nodes = network.node_count();
    let delta = config.energy.slot_duration;
    let chains = if config.energy.shared_weather { 1 } else { nodes };
    let mut weather: Vec<Weather> = (0..chains).map(|_| process.sample_stationary(rng)).collect();
    let mut out = Vec::with_capacity(slots);
    for _ in 0..slots {
        for w in weather.iter_mut() {
            *w = process.advance_weather(*w, rng);
        }
        let row = if config.energy.shared_weather {
            let irradiance = process.sample_irradiance(weather[0], rng);
            (0..nodes)
                .map(|n| {
                    let caps = network.caps(n);
                    crate::energy::irradiance_to_energy(irradiance, caps.panel_side, caps.panel_efficiency, delta)
                })
                .collect()
        } else {
            (0..nodes)
                .map(|n| {
                    let caps = network.caps(n);
                    process.sample_arrival(weather[n], caps.panel_side, caps.panel_efficiency, delta, rng)
                })
                .collect()
        };
        out.push(row);
    }
    out
}

impl Environment {
    pub fn generate(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let network = build_topology(config, &mut substream(seed, TOPOLOGY_STREAM))?;
        let requests = generate_requests(
            &config.workload,
            network.gateways.len(),
            &mut substream(seed, REQUEST_STREAM),
        )?;
        let process = SolarProcess::new(&config.solar)?;
        let slots = config.scheduling.slots;

        let arrivals = arrival_trace(config, &network, &process, slots, &mut substream(seed, SOLAR_STREAM));

        let mut fading = substream(seed, FADING_STREAM);
        let mut gains = Vec::with_capacity(slots);
        for _ in 0..slots {
            let row = (0..network.devices.len())
                .map(|d| {
                    let h: f64 = Exp1.sample(&mut fading);
                    network.device_gain(d, h)
                })
                .collect::<Result<Vec<f64>>>()?;
            gains.push(row);
        }

        let mut training = substream(seed, TRAINING_STREAM);
        let history = arrival_trace(config, &network, &process, config.scheduling.training_slots, &mut training);
        let training_arrivals = (0..network.node_count())
            .map(|n| history.iter().map(|row| row[n]).collect())
            .collect();
        let training_fading = (0..network.devices.len())
            .map(|_| {
                (0..config.scheduling.training_slots)
                    .map(|_| Exp1.sample(&mut training))
                    .collect()
            })
            .collect();

        let initial_levels = network
            .capacities()
            .iter()
            .map(|c| c * config.energy.initial_charge)
            .collect();

        Ok(Self {
            config: config.clone(),
            seed,
            network,
            requests,
            arrivals,
            gains,
            initial_levels,
            training_arrivals,
            training_fading,
        })
    }

    pub fn horizon(&self) -> usize {
        self.arrivals.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_world() {
        let config = ExperimentConfig::default();
        let a = Environment::generate(&config, 7).unwrap();
        let b = Environment::generate(&config, 7).unwrap();
        assert_eq!(a.arrivals, b.arrivals);
        assert_eq!(a.gains, b.gains);
        assert_eq!(a.requests, b.requests);
        let c = Environment::generate(&config, 8).unwrap();
        assert_ne!(a.arrivals, c.arrivals);
    }

    #[test]
    fn shapes() {
        let config = ExperimentConfig::default();
        let env = Environment::generate(&config, 1).unwrap();
        assert_eq!(env.horizon(), 12);
        assert!(env.gains.iter().all(|g| g.len() == 9));
        assert_eq!(env.training_arrivals.len(), env.network.node_count());
        assert!(env.training_arrivals.iter().all(|h| h.len() == 500));
        assert!(env.arrivals.iter().flatten().all(|&w| w >= 0.0));
    }
}
