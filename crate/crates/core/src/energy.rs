//! Solar arrivals, battery storage and the per-slot energy balance of
//! devices, gateways and servers.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::SolarConfig;
use crate::error::{Error, Result};
use crate::substrate::SubstrateNetwork;
use crate::workload::{gateway_rate, DagRequest};

/// Levels within this much of a bound are treated as on the bound.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weather {
    Poor = 0,
    Fair = 1,
    Good = 2,
    Excellent = 3,
}

impl Weather {
    pub const ALL: [Weather; 4] = [Weather::Poor, Weather::Fair, Weather::Good, Weather::Excellent];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Weather {
        Self::ALL[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolarProcess {
    pub means: [f64; 4],
    pub variances: [f64; 4],
    pub transitions: [[f64; 4]; 4],
}

impl SolarProcess {
    pub fn new(config: &SolarConfig) -> Result<Self> {
        let p = Self {
            means: config.means,
            variances: config.variances,
            transitions: config.transitions,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, row) in self.transitions.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 || row.iter().any(|p| *p < 0.0) {
                return Err(Error::Config(format!("transition row {k} is not stochastic")));
            }
        }
        if self.means.iter().chain(&self.variances).any(|v| *v < 0.0) {
            return Err(Error::Config("negative solar mean or variance".into()));
        }
        Ok(())
    }

    fn sample_row<R: Rng + ?Sized>(row: &[f64; 4], rng: &mut R) -> Weather {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return Weather::from_index(k);
            }
        }
        // rounding left a sliver above the last cumulative sum
        let last = row.iter().rposition(|p| *p > 0.0).unwrap_or(3);
        Weather::from_index(last)
    }

    pub fn advance_weather<R: Rng + ?Sized>(&self, state: Weather, rng: &mut R) -> Weather {
        Self::sample_row(&self.transitions[state.index()], rng)
    }

    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Weather {
        Self::sample_row(&self.stationary(), rng)
    }

    /// Stationary distribution by power iteration.
    pub fn stationary(&self) -> [f64; 4] {
        let mut pi = [0.25; 4];
        for _ in 0..100_000 {
            let mut next = [0.0; 4];
            for (a, pa) in pi.iter().enumerate() {
                for (b, nb) in next.iter_mut().enumerate() {
                    *nb += pa * self.transitions[a][b];
                }
            }
            let diff: f64 = next.iter().zip(&pi).map(|(x, y)| (x - y).abs()).sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        let total: f64 = pi.iter().sum();
        pi.map(|p| p / total)
    }

    /// Irradiance (mW/cm^2) drawn from the state's Gaussian, truncated at 0.
    pub fn sample_irradiance<R: Rng + ?Sized>(&self, state: Weather, rng: &mut R) -> f64 {
        let k = state.index();
        let sd = self.variances[k].sqrt();
        let x = if sd > 0.0 {
            Normal::new(self.means[k], sd)
                .expect("finite mean and sd")
                .sample(rng)
        } else {
            self.means[k]
        };
        x.max(0.0)
    }

    /// Energy (J) arriving at a square panel of `panel_side` cm in one slot.
    pub fn sample_arrival<R: Rng + ?Sized>(
        &self,
        state: Weather,
        panel_side: f64,
        efficiency: f64,
        slot_duration: f64,
        rng: &mut R,
    ) -> f64 {
        let irradiance = self.sample_irradiance(state, rng);
        irradiance_to_energy(irradiance, panel_side, efficiency, slot_duration)
    }
}

/// mW/cm^2 over `panel_side`^2 cm^2 for `slot_duration` s, in joules.
pub fn irradiance_to_energy(
    irradiance: f64,
    panel_side: f64,
    efficiency: f64,
    slot_duration: f64,
) -> f64 {
    irradiance * panel_side * panel_side * efficiency * slot_duration * 1e-3
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    pub level: f64,
    pub capacity: f64,
}

impl BatteryState {
    pub fn full(capacity: f64) -> Self {
        Self {
            level: capacity,
            capacity,
        }
    }
}

/// Largest storable amount: `min(arrival, capacity - level)`.
pub fn store_energy(arrival: f64, battery: &BatteryState) -> f64 {
    arrival.max(0.0).min((battery.capacity - battery.level).max(0.0))
}

/// `(compute demand, located here)` pairs over the CPU capacity.
pub fn utilization(active: &[(f64, bool)], cpu_capacity: f64) -> Result<f64> {
    let load: f64 = active.iter().filter(|(_, here)| *here).map(|(c, _)| c).sum();
    if load == 0.0 {
        return Ok(0.0);
    }
    let u = if cpu_capacity > 0.0 {
        load / cpu_capacity
    } else {
        f64::INFINITY
    };
    if u > 1.0 + ENERGY_TOL {
        return Err(Error::CapacityViolation { utilization: u });
    }
    Ok(u)
}

pub fn gateway_utilization(active: &[(f64, bool)], cpu_capacity: f64) -> Result<f64> {
    utilization(active, cpu_capacity)
}

pub fn server_utilization(active: &[(f64, bool)], cpu_capacity: f64) -> Result<f64> {
    utilization(active, cpu_capacity)
}

fn settle(level: f64, capacity: f64) -> Result<f64> {
    let slack = ENERGY_TOL * capacity.abs().max(1.0);
    if level < -slack {
        return Err(Error::EnergyInfeasible { level });
    }
    if level > capacity + slack {
        return Err(Error::ModelViolation { level, capacity });
    }
    Ok(level.clamp(0.0, capacity))
}

/// `level + stored - (P1 - P0) * U`, for gateways and servers alike.
pub fn compute_energy_step(
    battery: &BatteryState,
    stored: f64,
    utilization: f64,
    base_power: f64,
    peak_power: f64,
    slot_duration: f64,
) -> Result<f64> {
    let drain = (peak_power - base_power) * utilization * slot_duration;
    settle(battery.level + stored - drain, battery.capacity)
}

pub fn gateway_energy_step(
    battery: &BatteryState,
    stored: f64,
    utilization: f64,
    base_power: f64,
    peak_power: f64,
) -> Result<f64> {
    compute_energy_step(battery, stored, utilization, base_power, peak_power, 1.0)
}

pub fn server_energy_step(
    battery: &BatteryState,
    stored: f64,
    utilization: f64,
    base_power: f64,
    peak_power: f64,
) -> Result<f64> {
    compute_energy_step(battery, stored, utilization, base_power, peak_power, 1.0)
}

/// Energy a device spends to sense and upload at `rate` for one slot.
pub fn device_upload_cost(tx_power: f64, sense_energy_per_bit: f64, rate: f64, slot_duration: f64) -> f64 {
    (tx_power + sense_energy_per_bit * rate) * slot_duration
}

/// Energy device `d` spends uploading in a slot with link gain `gain`, at
/// the fastest rate any collector on its gateway demands. A dead link costs
/// more than the battery holds, so the upload is never affordable.
pub fn device_upload_energy(
    network: &SubstrateNetwork,
    requests: &[DagRequest],
    d: usize,
    gain: f64,
    sense_energy_per_bit: f64,
    slot_duration: f64,
) -> f64 {
    let dev = &network.devices[d];
    let rate = gateway_rate(requests, dev.gateway);
    let unaffordable = dev.caps.battery_capacity + 1.0;
    match network.channel.required_tx_power(rate, gain) {
        Ok(p) => {
            let cost = device_upload_cost(p, sense_energy_per_bit, rate, slot_duration);
            if cost.is_finite() {
                cost.min(unaffordable)
            } else {
                unaffordable
            }
        }
        Err(_) if rate == 0.0 => 0.0,
        Err(_) => unaffordable,
    }
}

/// `level + stored - drain`, checked against the battery bounds.
pub fn apply_drain(battery: &BatteryState, stored: f64, drain: f64) -> Result<f64> {
    settle(battery.level + stored - drain, battery.capacity)
}

pub fn device_energy_step(
    battery: &BatteryState,
    stored: f64,
    uploading: bool,
    tx_power: f64,
    sense_energy_per_bit: f64,
    rate: f64,
) -> Result<f64> {
    let drain = if uploading {
        device_upload_cost(tx_power, sense_energy_per_bit, rate, 1.0)
    } else {
        0.0
    };
    settle(battery.level + stored - drain, battery.capacity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn process() -> SolarProcess {
        SolarProcess::new(&SolarConfig::default()).unwrap()
    }

    #[test]
    fn table_values() {
        let p = process();
        assert_eq!(p.means[Weather::Poor.index()], 1.75);
        assert_eq!(p.transitions[Weather::Excellent.index()][Weather::Good.index()], 0.007);
        for row in p.transitions {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn poor_stays_poor_on_low_draw() {
        // first cumulative bucket of the Poor row is [0, 0.979)
        let p = process();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut stayed = 0;
        for _ in 0..10_000 {
            if p.advance_weather(Weather::Poor, &mut rng) == Weather::Poor {
                stayed += 1;
            }
        }
        assert!((stayed as f64 / 10_000.0 - 0.979).abs() < 0.01);
    }

    #[test]
    fn good_state_expected_arrival() {
        let p = process();
        let expected = 7.02 * 900.0 * 0.2 * 1e-3;
        assert_relative_eq!(expected, 1.2636, max_relative = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| p.sample_arrival(Weather::Good, 30.0, 0.2, 1.0, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
        assert_eq!(p.sample_arrival(Weather::Good, 0.0, 0.2, 1.0, &mut rng), 0.0);
    }

    #[test]
    fn store_clamps() {
        let b = BatteryState { level: 98.0, capacity: 100.0 };
        assert_eq!(store_energy(5.0, &b), 2.0);
        assert_eq!(store_energy(0.0, &b), 0.0);
        let b = BatteryState { level: 10.0, capacity: 100.0 };
        assert_eq!(store_energy(5.0, &b), 5.0);
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(gateway_utilization(&[], 1000.0).unwrap(), 0.0);
        assert_eq!(gateway_utilization(&[(500.0, true)], 1000.0).unwrap(), 0.5);
        assert_eq!(gateway_utilization(&[(500.0, true), (300.0, false)], 1000.0).unwrap(), 0.5);
        assert!(matches!(
            gateway_utilization(&[(600.0, true), (600.0, true)], 1000.0),
            Err(Error::CapacityViolation { .. })
        ));
        assert_eq!(server_utilization(&[(100.0, true)], 1000.0).unwrap(), 0.1);
    }

    #[test]
    fn gateway_step_examples() {
        let b = BatteryState { level: 100.0, capacity: 200.0 };
        assert_eq!(gateway_energy_step(&b, 3.0, 0.0, 170.0, 500.0).unwrap(), 103.0);
        assert_relative_eq!(
            gateway_energy_step(&BatteryState { level: 180.0, capacity: 200.0 }, 0.0, 0.5, 170.0, 500.0)
                .unwrap(),
            15.0
        );
        let b = BatteryState::full(100.0);
        assert!(matches!(
            gateway_energy_step(&b, 0.0, 0.5, 170.0, 500.0),
            Err(Error::EnergyInfeasible { .. })
        ));
        assert!(matches!(
            server_energy_step(&b, 0.0, 0.5, 170.0, 500.0),
            Err(Error::EnergyInfeasible { .. })
        ));
        assert!(matches!(
            gateway_energy_step(&b, 5.0, 0.0, 170.0, 500.0),
            Err(Error::ModelViolation { .. })
        ));
    }

    #[test]
    fn device_step_examples() {
        let sensing = 150e-9 * 1e5;
        assert_relative_eq!(sensing, 0.015, max_relative = 1e-12);
        let b = BatteryState { level: 5.0, capacity: 10.0 };
        assert_eq!(device_energy_step(&b, 1.0, false, 2.614, 150e-9, 1e5).unwrap(), 6.0);
        let after = device_energy_step(&b, 0.0, true, 2.614, 150e-9, 1e5).unwrap();
        assert_relative_eq!(5.0 - after, 2.629, max_relative = 1e-12);
        let low = BatteryState { level: 1.0, capacity: 10.0 };
        assert!(device_energy_step(&low, 0.0, true, 2.614, 150e-9, 1e5).is_err());
    }

    #[test]
    fn stationary_is_a_fixed_point() {
        let p = process();
        let pi = p.stationary();
        for b in 0..4 {
            let flow: f64 = (0..4).map(|a| pi[a] * p.transitions[a][b]).sum();
            assert!((flow - pi[b]).abs() < 1e-12);
        }
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
