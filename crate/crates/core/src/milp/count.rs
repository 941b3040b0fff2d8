use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{InstanceSnapshot, MilpModel, RowKind, VarKind};

/// Every equation tag a complete model must carry.
pub const REQUIRED_EQUATIONS: [u8; 23] = [
    2, 3, 4, 5, 7, 8, 9, 10, 12, 13, 14, 16, 17, 18, 19, 20, 21, 22, 23, 27, 28, 29, 30,
];

/// Instance dimensions that determine the model size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dimensions {
    pub slots: usize,
    pub devices: usize,
    pub gateways: usize,
    pub servers: usize,
    /// Per request: collectors, processors, collector-to-processor edges.
    pub collectors: Vec<usize>,
    pub processors: Vec<usize>,
    pub edges: Vec<usize>,
    pub gateway_server_links: usize,
}

impl Dimensions {
    pub fn of(snap: &InstanceSnapshot<'_>) -> Self {
        Self {
            slots: snap.horizon(),
            devices: snap.network.devices.len(),
            gateways: snap.network.gateways.len(),
            servers: snap.network.servers.len(),
            collectors: snap.requests.iter().map(|r| r.collectors.len()).collect(),
            processors: snap.requests.iter().map(|r| r.processors.len()).collect(),
            edges: snap.requests.iter().map(|r| r.edges.len()).collect(),
            gateway_server_links: snap.network.gateway_server_links.len(),
        }
    }

    pub fn requests(&self) -> usize {
        self.collectors.len()
    }

    pub fn nodes(&self) -> usize {
        self.devices + self.gateways + self.servers
    }

    /// Scheduling binaries in one slot.
    pub fn binaries_per_slot(&self) -> usize {
        let (g, s) = (self.gateways, self.servers);
        self.devices
            + self.collectors.iter().map(|c| c * g).sum::<usize>()
            + self.processors.iter().map(|p| p * s).sum::<usize>()
            + self
                .collectors
                .iter()
                .zip(&self.processors)
                .map(|(c, p)| c * p * g * s)
                .sum::<usize>()
            + self.requests()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelCounts {
    pub variables: usize,
    pub constraints: usize,
}

/// Closed-form size of the model: scheduling binaries and constraints, with
/// each "place at most once" row counted together with its service row.
pub fn count_model(dims: &Dimensions) -> ModelCounts {
    let (g, s) = (dims.gateways, dims.servers);
    let per_request: usize = (0..dims.requests())
        .map(|r| dims.collectors[r] + dims.processors[r] + dims.edges[r] * g + dims.edges[r] * s)
        .sum();
    let per_slot = per_request
        + dims.gateway_server_links
        + 4 * s
        + 4 * dims.requests()
        + 2 * dims.nodes()
        + 5 * g
        + dims.devices;
    ModelCounts {
        variables: dims.binaries_per_slot() * dims.slots,
        constraints: per_slot * dims.slots,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelAudit {
    pub binaries: usize,
    pub continuous: usize,
    pub raw_rows: usize,
    /// Rows under the closed-form accounting (pairs merged, epigraph excluded).
    pub accounted_rows: usize,
    pub epigraph_rows: usize,
    pub rows_by_equation: BTreeMap<u8, usize>,
    pub missing_equations: Vec<u8>,
    pub binaries_with_bad_bounds: usize,
    pub dangling_references: usize,
}

impl ModelAudit {
    pub fn report(&self) -> String {
        let mut s = String::new();
        writeln!(s, "binaries {}", self.binaries).unwrap();
        writeln!(s, "continuous {}", self.continuous).unwrap();
        writeln!(s, "rows {}", self.raw_rows).unwrap();
        writeln!(s, "accounted_rows {}", self.accounted_rows).unwrap();
        writeln!(s, "epigraph_rows {}", self.epigraph_rows).unwrap();
        for (eq, n) in &self.rows_by_equation {
            writeln!(s, "eq{eq} {n}").unwrap();
        }
        let missing: Vec<String> = self.missing_equations.iter().map(|e| format!("eq{e}")).collect();
        writeln!(s, "missing {}", if missing.is_empty() { "none".into() } else { missing.join(",") })
            .unwrap();
        writeln!(s, "bad_binary_bounds {}", self.binaries_with_bad_bounds).unwrap();
        writeln!(s, "dangling_references {}", self.dangling_references).unwrap();
        s
    }
}

pub fn audit(model: &MilpModel) -> ModelAudit {
    let binaries = model.binary_count();
    let mut rows_by_equation = BTreeMap::new();
    let mut epigraph_rows = 0;
    let mut dangling = 0;
    for row in &model.constraints {
        match row.kind.equation() {
            Some(eq) => *rows_by_equation.entry(eq).or_insert(0) += 1,
            None => epigraph_rows += 1,
        }
        dangling += row
            .terms
            .iter()
            .filter(|(v, _)| *v >= model.variables.len())
            .count();
    }
    let paired: usize = [RowKind::CollectorOnce, RowKind::ProcessorOnce]
        .iter()
        .map(|k| rows_by_equation.get(&k.equation().unwrap()).copied().unwrap_or(0))
        .sum();
    let missing_equations = REQUIRED_EQUATIONS
        .iter()
        .copied()
        .filter(|e| !rows_by_equation.contains_key(e))
        .collect();
    ModelAudit {
        binaries,
        continuous: model.variables.len() - binaries,
        raw_rows: model.constraints.len(),
        accounted_rows: model.constraints.len() - paired - epigraph_rows,
        epigraph_rows,
        rows_by_equation,
        missing_equations,
        binaries_with_bad_bounds: model
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary && (v.lower != 0.0 || v.upper != 1.0))
            .count(),
        dangling_references: dangling,
    }
}
