//! Physical network: devices, gateways, servers, the sink, and the wireless
//! channel model.

use rand::Rng;

use crate::config::{ExperimentConfig, UNLIMITED};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeCapacities {
    /// Joules.
    pub battery_capacity: f64,
    /// Megacycles per slot.
    pub cpu_capacity: f64,
    /// Watts.
    pub base_power: f64,
    pub peak_power: f64,
    /// Centimeters.
    pub panel_side: f64,
    pub panel_efficiency: f64,
}

impl NodeCapacities {
    pub fn validate(&self) -> Result<()> {
        if !(self.battery_capacity > 0.0)
            || self.cpu_capacity < 0.0
            || !(0.0 <= self.base_power && self.base_power <= self.peak_power)
            || !(self.panel_efficiency > 0.0 && self.panel_efficiency <= 1.0)
        {
            return Err(Error::Domain(format!("invalid node capacities {self:?}")));
        }
        Ok(())
    }

    /// Joules drained per megacycle of load, (P1 - P0) / C^max.
    pub fn energy_per_megacycle(&self) -> f64 {
        if self.cpu_capacity > 0.0 {
            (self.peak_power - self.base_power) / self.cpu_capacity
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub reference_gain: f64,
    pub reference_distance: f64,
    pub path_loss_exponent: f64,
    pub bandwidth: f64,
    /// Total noise power over the bandwidth, watts.
    pub noise_power: f64,
}

impl ChannelParams {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            reference_gain: config.reference_gain(),
            reference_distance: config.channel.reference_distance,
            path_loss_exponent: config.channel.path_loss_exponent,
            bandwidth: config.channel.bandwidth,
            noise_power: config.noise_power(),
        }
    }

    /// Power gain `h * C0 * (D / D0)^-alpha`.
    pub fn channel_gain(&self, distance: f64, fading: f64) -> Result<f64> {
        if !(distance > 0.0) {
            return Err(Error::Domain(format!(
                "channel distance must be positive, got {distance}"
            )));
        }
        if fading < 0.0 {
            return Err(Error::Domain(format!("fading draw must be nonnegative, got {fading}")));
        }
        Ok(fading
            * self.reference_gain
            * (distance / self.reference_distance).powf(-self.path_loss_exponent))
    }

    /// Transmit power (W) needed to sustain `rate` bits/s over a link with `gain`.
    pub fn required_tx_power(&self, rate: f64, gain: f64) -> Result<f64> {
        if rate < 0.0 {
            return Err(Error::Domain(format!("rate must be nonnegative, got {rate}")));
        }
        if !(gain > 0.0) {
            return Err(Error::InfeasibleLink { gain });
        }
        Ok(((rate / self.bandwidth).exp2() - 1.0) * self.noise_power / gain)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub gateway: usize,
    pub position: Point,
    pub caps: NodeCapacities,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComputeNode {
    pub position: Point,
    pub caps: NodeCapacities,
}

/// Devices, gateways and servers are also addressed by one flat node index:
/// devices first, then gateways, then servers.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateNetwork {
    pub area_side: f64,
    pub devices: Vec<Device>,
    pub gateways: Vec<ComputeNode>,
    pub servers: Vec<ComputeNode>,
    pub sink: Point,
    /// (device, gateway)
    pub wireless_links: Vec<(usize, usize)>,
    /// (gateway, server)
    pub gateway_server_links: Vec<(usize, usize)>,
    /// Servers with a link to the sink; one link each.
    pub server_sink_links: Vec<usize>,
    /// Devices associated with each gateway.
    pub association: Vec<Vec<usize>>,
    pub channel: ChannelParams,
    /// Wired link capacity, bits/s.
    pub wired_capacity: f64,
}

impl SubstrateNetwork {
    pub fn node_count(&self) -> usize {
        self.devices.len() + self.gateways.len() + self.servers.len()
    }

    pub fn device_node(&self, d: usize) -> usize {
        d
    }

    pub fn gateway_node(&self, i: usize) -> usize {
        self.devices.len() + i
    }

    pub fn server_node(&self, s: usize) -> usize {
        self.devices.len() + self.gateways.len() + s
    }

    pub fn caps(&self, node: usize) -> &NodeCapacities {
        let nd = self.devices.len();
        let ng = self.gateways.len();
        if node < nd {
            &self.devices[node].caps
        } else if node < nd + ng {
            &self.gateways[node - nd].caps
        } else {
            &self.servers[node - nd - ng].caps
        }
    }

    pub fn position(&self, node: usize) -> Point {
        let nd = self.devices.len();
        let ng = self.gateways.len();
        if node < nd {
            self.devices[node].position
        } else if node < nd + ng {
            self.gateways[node - nd].position
        } else {
            self.servers[node - nd - ng].position
        }
    }

    pub fn capacities(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|n| self.caps(n).battery_capacity)
            .collect()
    }

    /// Device-to-gateway distance in meters.
    pub fn device_distance(&self, d: usize) -> f64 {
        let dev = &self.devices[d];
        dev.position.distance(&self.gateways[dev.gateway].position)
    }

    pub fn device_gain(&self, d: usize, fading: f64) -> Result<f64> {
        self.channel.channel_gain(self.device_distance(d), fading)
    }

    /// Checks the structural invariants; returns every violation found.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = vec![0usize; self.devices.len()];
        for (i, members) in self.association.iter().enumerate() {
            for &d in members {
                match seen.get_mut(d) {
                    Some(c) => *c += 1,
                    None => out.push(format!("gateway {i} lists unknown device {d}")),
                }
                if self.devices.get(d).map(|dev| dev.gateway) != Some(i) {
                    out.push(format!("device {d} associated with gateway {i} disagrees"));
                }
            }
        }
        for (d, c) in seen.iter().enumerate() {
            if *c != 1 {
                out.push(format!("device {d} appears in {c} association sets"));
            }
        }
        for s in 0..self.servers.len() {
            let c = self.server_sink_links.iter().filter(|&&x| x == s).count();
            if c != 1 {
                out.push(format!("server {s} has {c} sink links"));
            }
        }
        for &(d, i) in &self.wireless_links {
            if self.devices.get(d).map(|dev| dev.gateway) != Some(i) {
                out.push(format!("wireless link ({d},{i}) does not follow the association"));
            }
        }
        for n in 0..self.node_count() {
            let p = self.position(n);
            if !(0.0..=self.area_side).contains(&p.x) || !(0.0..=self.area_side).contains(&p.y) {
                out.push(format!("node {n} at ({}, {}) lies outside the area", p.x, p.y));
            }
        }
        out
    }
}

fn uniform_point<R: Rng + ?Sized>(side: f64, rng: &mut R) -> Point {
    Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side)
}

/// Uniform point in the disc of `radius` around `center`, restricted to the
/// area and at positive distance from the center.
fn point_near<R: Rng + ?Sized>(center: Point, radius: f64, side: f64, rng: &mut R) -> Point {
    if radius <= 0.0 {
        return center;
    }
    loop {
        let r = radius * rng.random::<f64>().sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let p = Point::new(center.x + r * theta.cos(), center.y + r * theta.sin());
        if r > 0.0 && (0.0..=side).contains(&p.x) && (0.0..=side).contains(&p.y) {
            return p;
        }
    }
}

pub fn build_topology<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<SubstrateNetwork> {
    let net = &config.network;
    let energy = &config.energy;
    if net.gateways == 0 && net.devices_per_gateway > 0 && config.workload.requests > 0 {
        return Err(Error::Config(
            "devices and requests need at least one gateway".into(),
        ));
    }
    let side = net.area_side;
    let scenario = energy.scenario;

    let compute_caps = |battery: f64, unlimited: bool| NodeCapacities {
        battery_capacity: if unlimited { UNLIMITED } else { battery },
        cpu_capacity: if unlimited {
            UNLIMITED
        } else {
            energy.cpu_capacity
        },
        base_power: energy.base_power,
        peak_power: energy.peak_power,
        panel_side: energy.panel_side,
        panel_efficiency: energy.panel_efficiency,
    };
    let device_caps = NodeCapacities {
        battery_capacity: energy.device_battery,
        cpu_capacity: 0.0,
        base_power: 0.0,
        peak_power: 0.0,
        panel_side: energy.device_panel_side,
        panel_efficiency: energy.panel_efficiency,
    };

    let sink = Point::new(side / 2.0, side / 2.0);
    let gateways: Vec<ComputeNode> = (0..net.gateways)
        .map(|_| ComputeNode {
            position: uniform_point(side, rng),
            caps: compute_caps(energy.gateway_battery, scenario.unlimited_gateways()),
        })
        .collect();
    let servers: Vec<ComputeNode> = (0..net.servers)
        .map(|_| ComputeNode {
            position: uniform_point(side, rng),
            caps: compute_caps(energy.server_battery, scenario.unlimited_servers()),
        })
        .collect();

    let mut devices = Vec::new();
    let mut association = vec![Vec::new(); net.gateways];
    let mut wireless_links = Vec::new();
    for (i, gw) in gateways.iter().enumerate() {
        for _ in 0..net.devices_per_gateway {
            let d = devices.len();
            devices.push(Device {
                gateway: i,
                position: point_near(gw.position, net.device_radius, side, rng),
                caps: device_caps.clone(),
            });
            association[i].push(d);
            wireless_links.push((d, i));
        }
    }
    let gateway_server_links = (0..gateways.len())
        .flat_map(|i| (0..servers.len()).map(move |s| (i, s)))
        .collect();
    let server_sink_links = (0..servers.len()).collect();

    Ok(SubstrateNetwork {
        area_side: side,
        devices,
        gateways,
        servers,
        sink,
        wireless_links,
        gateway_server_links,
        server_sink_links,
        association,
        channel: ChannelParams::from_config(config),
        wired_capacity: config.channel.wired_capacity,
    })
}
