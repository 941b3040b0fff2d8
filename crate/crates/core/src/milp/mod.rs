//! Solver-agnostic mixed-integer model of the min-max age-of-service
//! embedding problem.

mod build;
mod count;
mod lp;
mod snapshot;

pub use build::{build_model, linearize_aos, AosRows, Layout, SlotLayout};
pub use count::{audit, count_model, Dimensions, ModelAudit, ModelCounts, REQUIRED_EQUATIONS};
pub use lp::export_lp;
pub use snapshot::InstanceSnapshot;

/// Absolute tolerance for constraint checks.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// What a row encodes. `equation()` is the provenance tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKind {
    HarvestArrival,
    HarvestCapacity,
    GatewayCpu,
    CollectorOnce,
    GatewayLevel,
    GatewayEnergy,
    DeviceSelect,
    DeviceOnce,
    DeviceEnergy,
    ServerCpu,
    ProcessorOnce,
    ServerLevel,
    ServerEnergy,
    ServeCollectors,
    ServeProcessors,
    RouteFromGateway,
    RouteToServer,
    LinkBandwidth,
    SinkBandwidth,
    AgeProductUpper,
    AgeProductLow,
    AgeProductHigh,
    AgeUpdate,
    /// Min-max epigraph; not part of the original constraint list.
    Epigraph,
}

impl RowKind {
    pub const ALL: [RowKind; 24] = [
        RowKind::HarvestArrival,
        RowKind::HarvestCapacity,
        RowKind::GatewayCpu,
        RowKind::CollectorOnce,
        RowKind::GatewayLevel,
        RowKind::GatewayEnergy,
        RowKind::DeviceSelect,
        RowKind::DeviceOnce,
        RowKind::DeviceEnergy,
        RowKind::ServerCpu,
        RowKind::ProcessorOnce,
        RowKind::ServerLevel,
        RowKind::ServerEnergy,
        RowKind::ServeCollectors,
        RowKind::ServeProcessors,
        RowKind::RouteFromGateway,
        RowKind::RouteToServer,
        RowKind::LinkBandwidth,
        RowKind::SinkBandwidth,
        RowKind::AgeProductUpper,
        RowKind::AgeProductLow,
        RowKind::AgeProductHigh,
        RowKind::AgeUpdate,
        RowKind::Epigraph,
    ];

    pub fn equation(self) -> Option<u8> {
        Some(match self {
            RowKind::HarvestArrival => 2,
            RowKind::HarvestCapacity => 3,
            RowKind::GatewayCpu => 4,
            RowKind::CollectorOnce => 5,
            RowKind::GatewayLevel => 7,
            RowKind::GatewayEnergy => 8,
            RowKind::DeviceSelect => 9,
            RowKind::DeviceOnce => 10,
            RowKind::DeviceEnergy => 12,
            RowKind::ServerCpu => 13,
            RowKind::ProcessorOnce => 14,
            RowKind::ServerLevel => 16,
            RowKind::ServerEnergy => 17,
            RowKind::ServeCollectors => 18,
            RowKind::ServeProcessors => 19,
            RowKind::RouteFromGateway => 20,
            RowKind::RouteToServer => 21,
            RowKind::LinkBandwidth => 22,
            RowKind::SinkBandwidth => 23,
            RowKind::AgeProductUpper => 27,
            RowKind::AgeProductLow => 28,
            RowKind::AgeProductHigh => 29,
            RowKind::AgeUpdate => 30,
            RowKind::Epigraph => return None,
        })
    }

    pub fn tag(self) -> String {
        match self.equation() {
            Some(n) => format!("eq{n}"),
            None => "epigraph".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub kind: RowKind,
}

impl Constraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[*v]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.lhs(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub name: String,
    pub tag: String,
    pub amount: f64,
}

/// Minimize `variables[objective]` subject to `constraints`.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: usize,
    pub layout: Layout,
    pub psi: f64,
}

impl MilpModel {
    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Independent evaluation of bounds, integrality and every row.
    pub fn check(&self, values: &[f64]) -> Vec<Violation> {
        let mut out = Vec::new();
        if values.len() != self.variables.len() {
            out.push(Violation {
                name: "values".into(),
                tag: "shape".into(),
                amount: (values.len() as f64 - self.variables.len() as f64).abs(),
            });
            return out;
        }
        for (var, &x) in self.variables.iter().zip(values) {
            let below = (var.lower - x).max(0.0);
            let above = (x - var.upper).max(0.0);
            if below > FEAS_TOL || above > FEAS_TOL || !x.is_finite() {
                out.push(Violation {
                    name: var.name.clone(),
                    tag: "bounds".into(),
                    amount: below.max(above),
                });
            }
            if var.kind == VarKind::Binary && x != 0.0 && x != 1.0 {
                out.push(Violation {
                    name: var.name.clone(),
                    tag: "integrality".into(),
                    amount: x.min(1.0 - x).abs(),
                });
            }
        }
        for row in &self.constraints {
            let amount = row.violation(values);
            if amount > FEAS_TOL {
                out.push(Violation {
                    name: row.name.clone(),
                    tag: row.kind.tag(),
                    amount,
                });
            }
        }
        out
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        values[self.objective]
    }
}
