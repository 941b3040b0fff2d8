//! DAG application requests.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::config::WorkloadConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Collector {
    /// Megacycles.
    pub compute: f64,
    /// Sampling rate, bits/s.
    pub rate: f64,
    /// Gateway hosting this collector.
    pub gateway: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Processor {
    pub compute: f64,
    /// Bandwidth of the edge to the merger at the sink, bits/s.
    pub merge_bandwidth: f64,
}

/// Collector-to-processor edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DagEdge {
    pub collector: usize,
    pub processor: usize,
    pub bandwidth: f64,
}

/// One application: collectors feed processors, every processor feeds the
/// merger at the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct DagRequest {
    pub id: usize,
    pub collectors: Vec<Collector>,
    pub processors: Vec<Processor>,
    pub edges: Vec<DagEdge>,
}

impl DagRequest {
    pub fn collector_compute(&self) -> f64 {
        self.collectors.iter().map(|c| c.compute).sum()
    }

    pub fn processor_compute(&self) -> f64 {
        self.processors.iter().map(|p| p.compute).sum()
    }

    /// Edge bandwidth between collector `u` and processor `v`, 0 when absent.
    pub fn edge_bandwidth(&self, u: usize, v: usize) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.collector == u && e.processor == v)
            .map(|e| e.bandwidth)
            .sum()
    }

    /// Compute demand of this request's collectors at gateway `i`.
    pub fn load_at_gateway(&self, i: usize) -> f64 {
        self.collectors
            .iter()
            .filter(|c| c.gateway == i)
            .map(|c| c.compute)
            .sum()
    }

    pub fn uses_gateway(&self, i: usize) -> bool {
        self.collectors.iter().any(|c| c.gateway == i)
    }
}

/// Upload rate demanded at gateway `i`: the fastest collector hosted there.
pub fn gateway_rate(requests: &[DagRequest], i: usize) -> f64 {
    requests
        .iter()
        .flat_map(|r| &r.collectors)
        .filter(|c| c.gateway == i)
        .map(|c| c.rate)
        .fold(0.0, f64::max)
}

/// Number of collectors for a DAG of `count` VNFs.
fn collector_count<R: Rng + ?Sized>(config: &WorkloadConfig, count: usize, rng: &mut R) -> usize {
    match config.vnfc_ratio {
        Some(ratio) => ((ratio * count as f64).round() as usize).clamp(1, count - 1),
        None => {
            let extra = if count > 2 {
                Binomial::new((count - 2) as u64, 0.5)
                    .expect("valid binomial")
                    .sample(rng) as usize
            } else {
                0
            };
            1 + extra
        }
    }
}

fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Raw generation: collectors may be left without an edge.
fn generate_raw<R: Rng + ?Sized>(config: &WorkloadConfig, id: usize, rng: &mut R) -> Result<DagRequest> {
    let count = config.vnfs_per_dag;
    if count < 2 {
        return Err(Error::Config(format!("a DAG needs at least 2 VNFs, got {count}")));
    }
    let nc = collector_count(config, count, rng);
    let np = count - nc;
    let collectors = (0..nc)
        .map(|_| Collector {
            compute: uniform(config.compute_min, config.compute_max, rng),
            rate: config.data_rate,
            gateway: 0,
        })
        .collect();
    let processors = (0..np)
        .map(|_| Processor {
            compute: uniform(config.compute_min, config.compute_max, rng),
            merge_bandwidth: uniform(config.bandwidth_min, config.bandwidth_max, rng),
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..nc {
        if rng.random::<f64>() < config.edge_probability {
            edges.push(DagEdge {
                collector: u,
                processor: rng.random_range(0..np),
                bandwidth: uniform(config.bandwidth_min, config.bandwidth_max, rng),
            });
        }
    }
    Ok(DagRequest {
        id,
        collectors,
        processors,
        edges,
    })
}

/// Gives every collector without an outgoing edge one edge to a random processor.
fn reattach_dangling<R: Rng + ?Sized>(dag: &mut DagRequest, config: &WorkloadConfig, rng: &mut R) {
    for u in 0..dag.collectors.len() {
        if !dag.edges.iter().any(|e| e.collector == u) {
            dag.edges.push(DagEdge {
                collector: u,
                processor: rng.random_range(0..dag.processors.len()),
                bandwidth: uniform(config.bandwidth_min, config.bandwidth_max, rng),
            });
        }
    }
    dag.edges.sort_by_key(|e| (e.collector, e.processor));
}

/// Generates one request; collector locations are left at gateway 0 until
/// `assign_vnfc_locations` runs.
pub fn generate_dag<R: Rng + ?Sized>(config: &WorkloadConfig, id: usize, rng: &mut R) -> Result<DagRequest> {
    let mut dag = generate_raw(config, id, rng)?;
    reattach_dangling(&mut dag, config, rng);
    Ok(dag)
}

pub fn assign_vnfc_locations<R: Rng + ?Sized>(
    dags: &mut [DagRequest],
    gateways: usize,
    rng: &mut R,
) -> Result<()> {
    let any_collectors = dags.iter().any(|d| !d.collectors.is_empty());
    if gateways == 0 {
        if any_collectors {
            return Err(Error::Config("collectors need at least one gateway".into()));
        }
        return Ok(());
    }
    for dag in dags.iter_mut() {
        for c in &mut dag.collectors {
            c.gateway = rng.random_range(0..gateways);
        }
    }
    Ok(())
}

pub fn generate_requests<R: Rng + ?Sized>(
    config: &WorkloadConfig,
    gateways: usize,
    rng: &mut R,
) -> Result<Vec<DagRequest>> {
    let mut dags = (0..config.requests)
        .map(|id| generate_dag(config, id, rng))
        .collect::<Result<Vec<_>>>()?;
    assign_vnfc_locations(&mut dags, gateways, rng)?;
    Ok(dags)
}

/// Reports every structural problem of `dag`; empty when valid.
pub fn validate_dag(dag: &DagRequest, gateways: usize) -> Vec<String> {
    let mut out = Vec::new();
    if dag.collectors.is_empty() {
        out.push("no collector".to_string());
    }
    if dag.processors.is_empty() {
        out.push("no processor".to_string());
    }
    for (u, c) in dag.collectors.iter().enumerate() {
        if !dag.edges.iter().any(|e| e.collector == u) {
            out.push(format!("collector {u} is dangling"));
        }
        if c.gateway >= gateways {
            out.push(format!("collector {u} sits at unknown gateway {}", c.gateway));
        }
        if !(c.compute >= 0.0) || !(c.rate >= 0.0) {
            out.push(format!("collector {u} has negative demand"));
        }
    }
    for (v, p) in dag.processors.iter().enumerate() {
        if !(p.compute >= 0.0) || !(p.merge_bandwidth >= 0.0) {
            out.push(format!("processor {v} has negative demand"));
        }
    }
    for e in &dag.edges {
        if e.collector >= dag.collectors.len() || e.processor >= dag.processors.len() {
            out.push(format!("edge ({}, {}) references a missing VNF", e.collector, e.processor));
        }
        if !(e.bandwidth >= 0.0) {
            out.push(format!("edge ({}, {}) has negative bandwidth", e.collector, e.processor));
        }
    }
    let mut pairs: Vec<_> = dag.edges.iter().map(|e| (e.collector, e.processor)).collect();
    pairs.sort_unstable();
    if pairs.windows(2).any(|w| w[0] == w[1]) {
        out.push("duplicate edge".to_string());
    }
    out
}

/// Line-oriented text form, one VNF or edge per line.
pub fn write_dags(dags: &[DagRequest]) -> String {
    let mut s = String::new();
    for dag in dags {
        writeln!(s, "request {}", dag.id).unwrap();
        for (u, c) in dag.collectors.iter().enumerate() {
            writeln!(s, "collector {u} compute {} rate {} gateway {}", c.compute, c.rate, c.gateway)
                .unwrap();
        }
        for (v, p) in dag.processors.iter().enumerate() {
            writeln!(s, "processor {v} compute {} merge {}", p.compute, p.merge_bandwidth).unwrap();
        }
        for e in &dag.edges {
            writeln!(s, "edge {} {} bandwidth {}", e.collector, e.processor, e.bandwidth).unwrap();
        }
    }
    s
}

pub fn parse_dags(text: &str) -> Result<Vec<DagRequest>> {
    let mut dags: Vec<DagRequest> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() || tokens[0].starts_with('#') {
            continue;
        }
        let num = |k: usize| -> Result<f64> {
            tokens
                .get(k)
                .ok_or_else(|| err("missing field"))?
                .parse::<f64>()
                .map_err(|_| err("bad number"))
        };
        let idx = |k: usize| -> Result<usize> {
            tokens
                .get(k)
                .ok_or_else(|| err("missing field"))?
                .parse::<usize>()
                .map_err(|_| err("bad index"))
        };
        let expect = |k: usize, word: &str| -> Result<()> {
            if tokens.get(k) == Some(&word) {
                Ok(())
            } else {
                Err(err(&format!("expected {word:?}")))
            }
        };
        match tokens[0] {
            "request" => dags.push(DagRequest {
                id: idx(1)?,
                collectors: Vec::new(),
                processors: Vec::new(),
                edges: Vec::new(),
            }),
            kind => {
                let dag = dags.last_mut().ok_or_else(|| err("entry before any request line"))?;
                match kind {
                    "collector" => {
                        if idx(1)? != dag.collectors.len() {
                            return Err(err("collectors must be listed in order"));
                        }
                        expect(2, "compute")?;
                        expect(4, "rate")?;
                        expect(6, "gateway")?;
                        dag.collectors.push(Collector {
                            compute: num(3)?,
                            rate: num(5)?,
                            gateway: idx(7)?,
                        });
                    }
                    "processor" => {
                        if idx(1)? != dag.processors.len() {
                            return Err(err("processors must be listed in order"));
                        }
                        expect(2, "compute")?;
                        expect(4, "merge")?;
                        dag.processors.push(Processor {
                            compute: num(3)?,
                            merge_bandwidth: num(5)?,
                        });
                    }
                    "edge" => {
                        expect(3, "bandwidth")?;
                        dag.edges.push(DagEdge {
                            collector: idx(1)?,
                            processor: idx(2)?,
                            bandwidth: num(4)?,
                        });
                    }
                    _ => return Err(err(&format!("unknown entry {kind:?}"))),
                }
            }
        }
    }
    Ok(dags)
}

/// Per-request age and service history.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AosTrace {
    /// `ages[r][t]`
    pub ages: Vec<Vec<u32>>,
    /// `served[r][t]`
    pub served: Vec<Vec<bool>>,
}

impl AosTrace {
    pub fn new(requests: usize) -> Self {
        Self {
            ages: vec![Vec::new(); requests],
            served: vec![Vec::new(); requests],
        }
    }

    pub fn push(&mut self, r: usize, served: bool) -> u32 {
        let prev = self.ages[r].last().copied().unwrap_or(0);
        let age = if served { 1 } else { prev + 1 };
        self.ages[r].push(age);
        self.served[r].push(served);
        age
    }

    pub fn current(&self, r: usize) -> u32 {
        self.ages[r].last().copied().unwrap_or(0)
    }

    pub fn sum(&self, r: usize) -> u64 {
        self.ages[r].iter().map(|&a| a as u64).sum()
    }
}
