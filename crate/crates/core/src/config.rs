//! Experiment configuration.
//!
//! Configuration files are TOML documents (`key = value` lines grouped in
//! `[section]`s). Every section and key is optional and falls back to the
//! evaluation defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub energy: EnergyConfig,
    pub solar: SolarConfig,
    pub channel: ChannelConfig,
    pub workload: WorkloadConfig,
    pub scheduling: SchedulingConfig,
    pub experiment: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    pub gateways: usize,
    pub servers: usize,
    pub devices_per_gateway: usize,
    /// Devices are dropped uniformly in a disc of this radius (meters)
    /// around their gateway.
    pub device_radius: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            area_side: 1000.0,
            gateways: 3,
            servers: 3,
            devices_per_gateway: 3,
            device_radius: 50.0,
        }
    }
}

/// Which node classes get unbounded energy and CPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ResourceScenario {
    #[default]
    Limited,
    Gateways,
    Servers,
    Both,
}

impl ResourceScenario {
    pub const ALL: [ResourceScenario; 4] = [
        ResourceScenario::Limited,
        ResourceScenario::Gateways,
        ResourceScenario::Servers,
        ResourceScenario::Both,
    ];

    pub fn unlimited_gateways(self) -> bool {
        matches!(self, ResourceScenario::Gateways | ResourceScenario::Both)
    }

    pub fn unlimited_servers(self) -> bool {
        matches!(self, ResourceScenario::Servers | ResourceScenario::Both)
    }
}

/// Stand-in for "unlimited" battery (J) and CPU (megacycles).
pub const UNLIMITED: f64 = 1.0e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub device_battery: f64,
    pub gateway_battery: f64,
    pub server_battery: f64,
    /// Megacycles per slot, gateways and servers.
    pub cpu_capacity: f64,
    pub base_power: f64,
    pub peak_power: f64,
    /// Device panel side, cm.
    pub device_panel_side: f64,
    /// Gateway and server panel side, cm.
    pub panel_side: f64,
    pub panel_efficiency: f64,
    /// Joules per sensed bit.
    pub sense_energy_per_bit: f64,
    /// Slot length, seconds.
    pub slot_duration: f64,
    /// Initial battery level as a fraction of capacity.
    pub initial_charge: f64,
    /// Drive every node from one weather chain instead of one chain per node.
    pub shared_weather: bool,
    pub scenario: ResourceScenario,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            device_battery: 10.0,
            gateway_battery: 100.0,
            server_battery: 100.0,
            cpu_capacity: 1000.0,
            base_power: 170.0,
            peak_power: 500.0,
            device_panel_side: 30.0,
            panel_side: 30.0,
            panel_efficiency: 0.2,
            sense_energy_per_bit: 150e-9,
            slot_duration: 1.0,
            initial_charge: 1.0,
            shared_weather: false,
            scenario: ResourceScenario::Limited,
        }
    }
}

/// Four-state solar irradiance chain, states ordered Poor, Fair, Good, Excellent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolarConfig {
    /// mW/cm^2
    pub means: [f64; 4],
    pub variances: [f64; 4],
    pub transitions: [[f64; 4]; 4],
}

impl Default for SolarConfig {
    fn default() -> Self {
        Self {
            means: [1.75, 4.21, 7.02, 9.38],
            variances: [0.65, 1.04, 2.34, 0.54],
            transitions: [
                [0.979, 0.015, 0.006, 0.0],
                [0.005, 0.988, 0.007, 0.0],
                [0.006, 0.009, 0.975, 0.010],
                [0.0, 0.0, 0.007, 0.993],
            ],
        }
    }
}

impl SolarConfig {
    /// Irradiance statistics quoted in the evaluation prose (Excellent..Poor
    /// reordered to Poor..Excellent). Loadable via config override.
    pub fn prose_statistics() -> Self {
        Self {
            means: [17.9, 45.6, 76.0, 94.6],
            variances: [0.71, 1.48, 1.55, 0.31],
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Hz
    pub bandwidth: f64,
    pub noise_density_dbm_per_hz: f64,
    pub path_loss_exponent: f64,
    /// Path loss at the reference distance, dB.
    pub reference_loss_db: f64,
    /// Meters.
    pub reference_distance: f64,
    /// Wired link capacity, bits/s.
    pub wired_capacity: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            bandwidth: 200e3,
            noise_density_dbm_per_hz: -95.0,
            path_loss_exponent: 2.5,
            reference_loss_db: 30.0,
            reference_distance: 1.0,
            wired_capacity: 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub requests: usize,
    pub vnfs_per_dag: usize,
    /// Fixed fraction of VNFs that are collectors; random split when absent.
    pub vnfc_ratio: Option<f64>,
    /// Megacycles.
    pub compute_min: f64,
    pub compute_max: f64,
    pub edge_probability: f64,
    /// bits/s
    pub bandwidth_min: f64,
    pub bandwidth_max: f64,
    /// Collector sampling rate, bits/s.
    pub data_rate: f64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            requests: 3,
            vnfs_per_dag: 5,
            vnfc_ratio: None,
            compute_min: 10.0,
            compute_max: 100.0,
            edge_probability: 0.9,
            bandwidth_min: 10e3,
            bandwidth_max: 50e3,
            data_rate: 100e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulingConfig {
    /// Episode horizon |T|.
    pub slots: usize,
    /// RHCOP window K.
    pub window: usize,
    /// GMMPre forecast window K'.
    pub gmmpre_window: usize,
    pub gmm_components: usize,
    pub training_slots: usize,
    pub em_max_iterations: usize,
    pub em_tolerance: f64,
    /// The offline MILP policy refuses models with more scheduling binaries
    /// than this unless an external solver is configured.
    pub milp_variable_cap: usize,
    pub milp_time_limit_s: f64,
    pub milp_node_limit: u64,
    pub rhcop_time_limit_s: f64,
    pub rhcop_node_limit: u64,
    /// Command template with `{input}` and `{output}` placeholders.
    pub external_solver: Option<String>,
}

impl Default for SchedulingConfig {
    fn default() -> Self {
        Self {
            slots: 12,
            window: 8,
            gmmpre_window: 8,
            gmm_components: 4,
            training_slots: 500,
            em_max_iterations: 200,
            em_tolerance: 1e-6,
            milp_variable_cap: 2000,
            milp_time_limit_s: 600.0,
            milp_node_limit: 20_000_000,
            rhcop_time_limit_s: 60.0,
            rhcop_node_limit: 200_000,
            external_solver: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub runs: usize,
    pub seed: u64,
    pub schedulers: Vec<String>,
    /// Sweep axis; `None` runs the base configuration as a single point.
    pub axis: Option<String>,
    pub values: Vec<f64>,
    /// Fill the runtime column of the raw CSV (makes output timing-dependent).
    pub record_runtime: bool,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            runs: 50,
            seed: 1,
            schedulers: ["milp", "rhcop", "greedy", "gmmpre", "random"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            axis: None,
            values: Vec::new(),
            record_runtime: false,
            workers: 0,
        }
    }
}

/// Parameters that a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Gateways,
    Servers,
    DevicesPerGateway,
    Requests,
    Window,
    PanelSide,
    VnfcRatio,
    VnfCount,
    /// Values 0..=3 index `ResourceScenario::ALL`.
    Scenario,
}

impl SweepAxis {
    pub const NAMES: [&'static str; 9] = [
        "gateways",
        "servers",
        "devices_per_gateway",
        "requests",
        "window",
        "panel_side",
        "vnfc_ratio",
        "vnf_count",
        "scenario",
    ];

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "gateways" => SweepAxis::Gateways,
            "servers" => SweepAxis::Servers,
            "devices_per_gateway" | "devices" => SweepAxis::DevicesPerGateway,
            "requests" => SweepAxis::Requests,
            "window" => SweepAxis::Window,
            "panel_side" => SweepAxis::PanelSide,
            "vnfc_ratio" => SweepAxis::VnfcRatio,
            "vnf_count" => SweepAxis::VnfCount,
            "scenario" => SweepAxis::Scenario,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep axis {other:?} (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

fn as_count(axis: &str, value: f64) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 {
        return Err(Error::Config(format!(
            "axis {axis} needs a nonnegative integer, got {value}"
        )));
    }
    Ok(value as usize)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Copy of `self` with one sweep parameter replaced.
    pub fn with_axis_value(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            SweepAxis::Gateways => c.network.gateways = as_count("gateways", value)?,
            SweepAxis::Servers => c.network.servers = as_count("servers", value)?,
            SweepAxis::DevicesPerGateway => {
                c.network.devices_per_gateway = as_count("devices_per_gateway", value)?
            }
            SweepAxis::Requests => c.workload.requests = as_count("requests", value)?,
            SweepAxis::Window => c.scheduling.window = as_count("window", value)?,
            SweepAxis::PanelSide => c.energy.panel_side = value,
            SweepAxis::VnfcRatio => c.workload.vnfc_ratio = Some(value),
            SweepAxis::VnfCount => c.workload.vnfs_per_dag = as_count("vnf_count", value)?,
            SweepAxis::Scenario => {
                let idx = as_count("scenario", value)?;
                c.energy.scenario = *ResourceScenario::ALL.get(idx).ok_or_else(|| {
                    Error::Config(format!("scenario index {idx} out of range 0..=3"))
                })?;
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Noise power over the channel bandwidth, watts.
    pub fn noise_power(&self) -> f64 {
        let density_w = 10f64.powf((self.channel.noise_density_dbm_per_hz - 30.0) / 10.0);
        density_w * self.channel.bandwidth
    }

    /// Linear gain at the reference distance.
    pub fn reference_gain(&self) -> f64 {
        10f64.powf(-self.channel.reference_loss_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let n = &self.network;
        if !(n.area_side > 0.0) {
            return fail(format!("area_side must be positive, got {}", n.area_side));
        }
        if n.device_radius < 0.0 {
            return fail("device_radius must be nonnegative".into());
        }
        let e = &self.energy;
        for (name, v) in [
            ("device_battery", e.device_battery),
            ("gateway_battery", e.gateway_battery),
            ("server_battery", e.server_battery),
            ("slot_duration", e.slot_duration),
        ] {
            if !(v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if e.cpu_capacity < 0.0 {
            return fail("cpu_capacity must be nonnegative".into());
        }
        if !(0.0 <= e.base_power && e.base_power <= e.peak_power) {
            return fail(format!(
                "need 0 <= base_power <= peak_power, got {} / {}",
                e.base_power, e.peak_power
            ));
        }
        if !(e.panel_efficiency > 0.0 && e.panel_efficiency <= 1.0) {
            return fail("panel_efficiency must lie in (0, 1]".into());
        }
        if e.panel_side < 0.0 || e.device_panel_side < 0.0 {
            return fail("panel sides must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&e.initial_charge) {
            return fail("initial_charge must lie in [0, 1]".into());
        }
        if e.sense_energy_per_bit < 0.0 {
            return fail("sense_energy_per_bit must be nonnegative".into());
        }
        let s = &self.solar;
        for (k, row) in s.transitions.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|p| *p < 0.0) {
                return fail(format!("solar transition row {k} is not stochastic"));
            }
        }
        if s.means.iter().chain(s.variances.iter()).any(|v| *v < 0.0) {
            return fail("solar means and variances must be nonnegative".into());
        }
        let c = &self.channel;
        if !(c.bandwidth > 0.0 && c.path_loss_exponent > 0.0 && c.reference_distance > 0.0) {
            return fail("bandwidth, path_loss_exponent and reference_distance must be positive".into());
        }
        if !(c.wired_capacity > 0.0) {
            return fail("wired_capacity must be positive".into());
        }
        let w = &self.workload;
        if w.vnfs_per_dag < 2 {
            return fail(format!(
                "vnfs_per_dag must be at least 2, got {}",
                w.vnfs_per_dag
            ));
        }
        if let Some(r) = w.vnfc_ratio {
            if !(r > 0.0 && r < 1.0) {
                return fail(format!("vnfc_ratio must lie in (0, 1), got {r}"));
            }
        }
        if !(0.0 <= w.compute_min && w.compute_min <= w.compute_max) {
            return fail("need 0 <= compute_min <= compute_max".into());
        }
        if !(0.0 <= w.bandwidth_min && w.bandwidth_min <= w.bandwidth_max) {
            return fail("need 0 <= bandwidth_min <= bandwidth_max".into());
        }
        if !(0.0..=1.0).contains(&w.edge_probability) {
            return fail("edge_probability must lie in [0, 1]".into());
        }
        if w.data_rate < 0.0 {
            return fail("data_rate must be nonnegative".into());
        }
        if self.workload.requests > 0 && n.gateways == 0 {
            return fail("requests need at least one gateway".into());
        }
        let sc = &self.scheduling;
        if sc.slots == 0 {
            return fail("slots must be at least 1".into());
        }
        if sc.window == 0 || sc.gmmpre_window == 0 {
            return fail("window sizes must be at least 1".into());
        }
        if sc.gmm_components == 0 {
            return fail("gmm_components must be at least 1".into());
        }
        if sc.training_slots < sc.gmm_components {
            return fail("training_slots must be at least gmm_components".into());
        }
        let x = &self.experiment;
        if x.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if x.schedulers.is_empty() {
            return fail("scheduler list is empty".into());
        }
        if let Some(axis) = &x.axis {
            SweepAxis::parse(axis)?;
            if x.values.is_empty() {
                return fail(format!("sweep axis {axis} has no values"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn noise_power_matches_hand_conversion() {
        // -95 dBm/Hz = 10^-12.5 W/Hz over 200 kHz
        let c = ExperimentConfig::default();
        let expected = 10f64.powf(-12.5) * 200e3;
        assert!((c.noise_power() - expected).abs() < 1e-20);
        assert!((c.reference_gain() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("[network]\ngatways = 3\n").unwrap_err();
        assert!(err.to_string().contains("gatways"), "{err}");
        let err = ExperimentConfig::from_toml_str("[netwrk]\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn partial_files_fall_back_to_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "[network]\ngateways = 5\n[experiment]\naxis = \"requests\"\nvalues = [1, 3]\n",
        )
        .unwrap();
        assert_eq!(c.network.gateways, 5);
        assert_eq!(c.network.servers, 3);
        assert_eq!(c.experiment.values, vec![1.0, 3.0]);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn axis_values_apply() {
        let base = ExperimentConfig::default();
        let c = base.with_axis_value(SweepAxis::Gateways, 7.0).unwrap();
        assert_eq!(c.network.gateways, 7);
        let c = base.with_axis_value(SweepAxis::Scenario, 3.0).unwrap();
        assert_eq!(c.energy.scenario, ResourceScenario::Both);
        assert!(base.with_axis_value(SweepAxis::Scenario, 4.0).is_err());
        assert!(base.with_axis_value(SweepAxis::Requests, 1.5).is_err());
        assert!(SweepAxis::parse("bogus").is_err());
    }

    #[test]
    fn zero_gateways_with_requests_is_an_error() {
        let mut c = ExperimentConfig::default();
        c.network.gateways = 0;
        assert!(c.validate().is_err());
    }
}
