//! Shared fixtures for the benchmarks.

use aosnet::config::ExperimentConfig;
use aosnet::{Environment, InstanceSnapshot};

/// Default configuration with `requests` applications.
pub fn config(requests: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.workload.requests = requests;
    c
}

pub fn environment(requests: usize, seed: u64) -> Environment {
    Environment::generate(&config(requests), seed).expect("default configuration is valid")
}

/// Full-horizon snapshot of `env` truncated to its first `slots` slots.
pub fn snapshot(env: &Environment, slots: usize) -> InstanceSnapshot<'_> {
    let slots = slots.min(env.horizon());
    InstanceSnapshot::new(
        &env.network,
        &env.requests,
        env.arrivals[..slots].to_vec(),
        env.gains[..slots].to_vec(),
        env.initial_levels.clone(),
        env.config.energy.sense_energy_per_bit,
        env.config.energy.slot_duration,
    )
}
