use super::{Constraint, InstanceSnapshot, MilpModel, RowKind, Sense, VarKind, Variable};
use crate::error::Result;

/// Variable indices of one window slot.
#[derive(Debug, Clone, Default)]
pub struct SlotLayout {
    /// `[d]`
    pub phi: Vec<usize>,
    /// `[r][u]` first index; gateway `i` at `+ i`.
    pub x: Vec<Vec<usize>>,
    /// `[r][v]` first index; server `s` at `+ s`.
    pub y: Vec<Vec<usize>>,
    /// `[r][u][v]` first index; link `(i, s)` at `+ i * servers + s`.
    pub l: Vec<Vec<Vec<usize>>>,
    pub z: Vec<usize>,
    pub lambda: Vec<usize>,
    pub a: Vec<usize>,
    /// `[node]`
    pub w: Vec<usize>,
    pub e: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Layout {
    pub slots: Vec<SlotLayout>,
    pub eta: usize,
    pub gateways: usize,
    pub servers: usize,
}

impl Layout {
    pub fn x(&self, k: usize, r: usize, u: usize, i: usize) -> usize {
        self.slots[k].x[r][u] + i
    }

    pub fn y(&self, k: usize, r: usize, v: usize, s: usize) -> usize {
        self.slots[k].y[r][v] + s
    }

    pub fn l(&self, k: usize, r: usize, u: usize, v: usize, i: usize, s: usize) -> usize {
        self.slots[k].l[r][u][v] + i * self.servers + s
    }
}

/// Either a model variable or a known constant (the state before the window).
#[derive(Debug, Clone, Copy)]
enum Prev {
    Var(usize),
    Const(f64),
}

struct Builder {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    fn binary(&mut self, name: String) -> usize {
        self.var(name, VarKind::Binary, 0.0, 1.0)
    }

    fn row(&mut self, kind: RowKind, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
            kind,
        });
    }

    /// Appends `coef * prev` to `terms`, moving constants to the right side.
    fn add_prev(terms: &mut Vec<(usize, f64)>, rhs: &mut f64, prev: Prev, coef: f64) {
        match prev {
            Prev::Var(v) => terms.push((v, coef)),
            Prev::Const(c) => *rhs -= coef * c,
        }
    }
}

/// The four rows tying `lambda = z * a_prev` and the age update together.
#[derive(Debug, Clone)]
pub struct AosRows {
    pub rows: Vec<Constraint>,
}

fn aos_rows(
    z: usize,
    lambda: usize,
    a: usize,
    a_prev: Prev,
    psi: f64,
    suffix: &str,
) -> Vec<Constraint> {
    let mut rows = Vec::with_capacity(4);
    let mk = |kind, name: &str, terms, sense, rhs| Constraint {
        name: format!("{name}_{suffix}"),
        terms,
        sense,
        rhs,
        kind,
    };
    // lambda <= z * psi
    rows.push(mk(
        RowKind::AgeProductUpper,
        "age_product_upper",
        vec![(lambda, 1.0), (z, -psi)],
        Sense::Le,
        0.0,
    ));
    // lambda >= a_prev - (1 - z) psi
    let mut terms = vec![(lambda, 1.0), (z, -psi)];
    let mut rhs = -psi;
    Builder::add_prev(&mut terms, &mut rhs, a_prev, -1.0);
    rows.push(mk(RowKind::AgeProductLow, "age_product_low", terms, Sense::Ge, rhs));
    // lambda <= a_prev + (1 - z) psi
    let mut terms = vec![(lambda, 1.0), (z, psi)];
    let mut rhs = psi;
    Builder::add_prev(&mut terms, &mut rhs, a_prev, -1.0);
    rows.push(mk(RowKind::AgeProductHigh, "age_product_high", terms, Sense::Le, rhs));
    // a = a_prev - lambda + 1
    let mut terms = vec![(a, 1.0), (lambda, 1.0)];
    let mut rhs = 1.0;
    Builder::add_prev(&mut terms, &mut rhs, a_prev, -1.0);
    rows.push(mk(RowKind::AgeUpdate, "age_update", terms, Sense::Eq, rhs));
    rows
}

/// Standalone linearization of `a = (1 - z) a_prev + 1` over variables
/// `[z, a_prev, lambda, a]` (indices 0..4), with `lambda` in `[0, psi]`.
pub fn linearize_aos(psi: f64) -> (Vec<Variable>, AosRows) {
    let vars = vec![
        Variable {
            name: "z".into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        },
        Variable {
            name: "a_prev".into(),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: psi,
        },
        Variable {
            name: "lambda".into(),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: psi,
        },
        Variable {
            name: "a".into(),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: f64::INFINITY,
        },
    ];
    let rows = aos_rows(0, 2, 3, Prev::Var(1), psi, "r0");
    (vars, AosRows { rows })
}

pub fn build_model(snap: &InstanceSnapshot<'_>) -> Result<MilpModel> {
    snap.validate()?;
    let net = snap.network;
    let reqs = snap.requests;
    let horizon = snap.horizon();
    let nd = net.devices.len();
    let ng = net.gateways.len();
    let ns = net.servers.len();
    let nodes = net.node_count();
    let psi = snap.psi();
    let total_collectors: usize = reqs.iter().map(|r| r.collectors.len()).sum();

    let mut b = Builder {
        variables: Vec::new(),
        constraints: Vec::new(),
    };
    let mut layout = Layout {
        slots: Vec::with_capacity(horizon),
        eta: 0,
        gateways: ng,
        servers: ns,
    };

    let node_label = |n: usize| -> String {
        if n < nd {
            format!("dev{n}")
        } else if n < nd + ng {
            format!("gw{}", n - nd)
        } else {
            format!("srv{}", n - nd - ng)
        }
    };

    for k in 0..horizon {
        let mut sl = SlotLayout::default();
        for (r, _) in reqs.iter().enumerate() {
            sl.z.push(b.binary(format!("z_t{k}_r{r}")));
        }
        for (r, dag) in reqs.iter().enumerate() {
            let mut per_v = Vec::new();
            for v in 0..dag.processors.len() {
                let first = b.variables.len();
                for s in 0..ns {
                    b.binary(format!("y_t{k}_r{r}_v{v}_s{s}"));
                }
                per_v.push(first);
            }
            sl.y.push(per_v);
        }
        for (r, dag) in reqs.iter().enumerate() {
            let mut per_u = Vec::new();
            for u in 0..dag.collectors.len() {
                let first = b.variables.len();
                for i in 0..ng {
                    b.binary(format!("x_t{k}_r{r}_u{u}_g{i}"));
                }
                per_u.push(first);
            }
            sl.x.push(per_u);
        }
        for (r, dag) in reqs.iter().enumerate() {
            let mut per_u = Vec::new();
            for u in 0..dag.collectors.len() {
                let mut per_v = Vec::new();
                for v in 0..dag.processors.len() {
                    let first = b.variables.len();
                    for i in 0..ng {
                        for s in 0..ns {
                            b.binary(format!("l_t{k}_r{r}_u{u}_v{v}_g{i}_s{s}"));
                        }
                    }
                    per_v.push(first);
                }
                per_u.push(per_v);
            }
            sl.l.push(per_u);
        }
        for d in 0..nd {
            sl.phi.push(b.binary(format!("phi_t{k}_d{d}")));
        }
        for r in 0..reqs.len() {
            sl.lambda
                .push(b.var(format!("lambda_t{k}_r{r}"), VarKind::Continuous, 0.0, psi));
        }
        for r in 0..reqs.len() {
            sl.a
                .push(b.var(format!("a_t{k}_r{r}"), VarKind::Continuous, 0.0, f64::INFINITY));
        }
        for n in 0..nodes {
            sl.w.push(b.var(
                format!("w_t{k}_{}", node_label(n)),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
            ));
        }
        for n in 0..nodes {
            let cap = net.caps(n).battery_capacity;
            sl.e
                .push(b.var(format!("lev_t{k}_{}", node_label(n)), VarKind::Continuous, 0.0, cap));
        }
        layout.slots.push(sl);
    }
    layout.eta = b.var("max_avg_age".into(), VarKind::Continuous, 0.0, f64::INFINITY);

    for k in 0..horizon {
        let sl = layout.slots[k].clone();
        let prev_e = |n: usize| -> Prev {
            if k == 0 {
                Prev::Const(snap.initial_levels[n])
            } else {
                Prev::Var(layout.slots[k - 1].e[n])
            }
        };

        // harvest bounds
        for n in 0..nodes {
            let label = node_label(n);
            b.row(
                RowKind::HarvestArrival,
                format!("harvest_arrival_t{k}_{label}"),
                vec![(sl.w[n], 1.0)],
                Sense::Le,
                snap.arrivals[k][n],
            );
            let mut terms = vec![(sl.w[n], 1.0)];
            let mut rhs = net.caps(n).battery_capacity;
            Builder::add_prev(&mut terms, &mut rhs, prev_e(n), 1.0);
            b.row(
                RowKind::HarvestCapacity,
                format!("harvest_capacity_t{k}_{label}"),
                terms,
                Sense::Le,
                rhs,
            );
        }

        // gateways
        for i in 0..ng {
            let node = net.gateway_node(i);
            let caps = &net.gateways[i].caps;
            let mut located = Vec::new();
            for (r, dag) in reqs.iter().enumerate() {
                for (u, c) in dag.collectors.iter().enumerate() {
                    if c.gateway == i {
                        located.push((layout.x(k, r, u, i), c.compute));
                    }
                }
            }
            b.row(
                RowKind::GatewayCpu,
                format!("gateway_cpu_t{k}_g{i}"),
                located.iter().map(|&(x, c)| (x, c)).collect(),
                Sense::Le,
                caps.cpu_capacity,
            );
            b.row(
                RowKind::GatewayLevel,
                format!("gateway_level_t{k}_g{i}"),
                vec![(sl.e[node], 1.0)],
                Sense::Le,
                caps.battery_capacity,
            );
            let kappa = snap.drain_per_megacycle(node);
            let mut terms = vec![(sl.e[node], 1.0), (sl.w[node], -1.0)];
            let mut rhs = 0.0;
            Builder::add_prev(&mut terms, &mut rhs, prev_e(node), -1.0);
            terms.extend(located.iter().map(|&(x, c)| (x, kappa * c)));
            b.row(
                RowKind::GatewayEnergy,
                format!("gateway_energy_t{k}_g{i}"),
                terms,
                Sense::Eq,
                rhs,
            );
            let mut terms: Vec<(usize, f64)> =
                net.association[i].iter().map(|&d| (sl.phi[d], 1.0)).collect();
            if total_collectors > 0 {
                let frac = 1.0 / total_collectors as f64;
                terms.extend(located.iter().map(|&(x, _)| (x, -frac)));
            }
            b.row(
                RowKind::DeviceSelect,
                format!("device_select_t{k}_g{i}"),
                terms,
                Sense::Ge,
                0.0,
            );
            b.row(
                RowKind::DeviceOnce,
                format!("device_once_t{k}_g{i}"),
                net.association[i].iter().map(|&d| (sl.phi[d], 1.0)).collect(),
                Sense::Le,
                1.0,
            );
        }

        // devices
        for d in 0..nd {
            let node = net.device_node(d);
            let mut terms = vec![(sl.e[node], 1.0), (sl.w[node], -1.0)];
            let mut rhs = 0.0;
            Builder::add_prev(&mut terms, &mut rhs, prev_e(node), -1.0);
            terms.push((sl.phi[d], snap.device_cost(k, d)));
            b.row(
                RowKind::DeviceEnergy,
                format!("device_energy_t{k}_d{d}"),
                terms,
                Sense::Eq,
                rhs,
            );
        }

        // servers
        for s in 0..ns {
            let node = net.server_node(s);
            let caps = &net.servers[s].caps;
            let mut hosted = Vec::new();
            for (r, dag) in reqs.iter().enumerate() {
                for (v, p) in dag.processors.iter().enumerate() {
                    hosted.push((layout.y(k, r, v, s), p.compute, p.merge_bandwidth));
                }
            }
            b.row(
                RowKind::ServerCpu,
                format!("server_cpu_t{k}_s{s}"),
                hosted.iter().map(|&(y, c, _)| (y, c)).collect(),
                Sense::Le,
                caps.cpu_capacity,
            );
            b.row(
                RowKind::ServerLevel,
                format!("server_level_t{k}_s{s}"),
                vec![(sl.e[node], 1.0)],
                Sense::Le,
                caps.battery_capacity,
            );
            let kappa = snap.drain_per_megacycle(node);
            let mut terms = vec![(sl.e[node], 1.0), (sl.w[node], -1.0)];
            let mut rhs = 0.0;
            Builder::add_prev(&mut terms, &mut rhs, prev_e(node), -1.0);
            terms.extend(hosted.iter().map(|&(y, c, _)| (y, kappa * c)));
            b.row(
                RowKind::ServerEnergy,
                format!("server_energy_t{k}_s{s}"),
                terms,
                Sense::Eq,
                rhs,
            );
            b.row(
                RowKind::SinkBandwidth,
                format!("sink_bandwidth_t{k}_s{s}"),
                hosted.iter().map(|&(y, _, bw)| (y, bw)).collect(),
                Sense::Le,
                net.wired_capacity,
            );
        }

        // per-request placement, service and routing
        for (r, dag) in reqs.iter().enumerate() {
            for (u, c) in dag.collectors.iter().enumerate() {
                let x = layout.x(k, r, u, c.gateway);
                b.row(
                    RowKind::CollectorOnce,
                    format!("collector_once_t{k}_r{r}_u{u}"),
                    vec![(x, 1.0)],
                    Sense::Le,
                    1.0,
                );
                b.row(
                    RowKind::ServeCollectors,
                    format!("serve_collectors_t{k}_r{r}_u{u}"),
                    vec![(sl.z[r], 1.0), (x, -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
            for v in 0..dag.processors.len() {
                let ys: Vec<(usize, f64)> = (0..ns).map(|s| (layout.y(k, r, v, s), 1.0)).collect();
                b.row(
                    RowKind::ProcessorOnce,
                    format!("processor_once_t{k}_r{r}_v{v}"),
                    ys.clone(),
                    Sense::Le,
                    1.0,
                );
                let mut terms = vec![(sl.z[r], 1.0)];
                terms.extend(ys.iter().map(|&(y, _)| (y, -1.0)));
                b.row(
                    RowKind::ServeProcessors,
                    format!("serve_processors_t{k}_r{r}_v{v}"),
                    terms,
                    Sense::Le,
                    0.0,
                );
            }
            for edge in &dag.edges {
                let (u, v) = (edge.collector, edge.processor);
                for i in 0..ng {
                    let mut terms = Vec::with_capacity(ns + 1);
                    if dag.collectors[u].gateway == i {
                        terms.push((layout.x(k, r, u, i), 1.0));
                    }
                    terms.extend((0..ns).map(|s| (layout.l(k, r, u, v, i, s), -1.0)));
                    b.row(
                        RowKind::RouteFromGateway,
                        format!("route_from_gateway_t{k}_r{r}_u{u}_v{v}_g{i}"),
                        terms,
                        Sense::Eq,
                        0.0,
                    );
                }
                for s in 0..ns {
                    let mut terms: Vec<(usize, f64)> =
                        (0..ng).map(|i| (layout.l(k, r, u, v, i, s), 1.0)).collect();
                    terms.push((layout.y(k, r, v, s), -1.0));
                    b.row(
                        RowKind::RouteToServer,
                        format!("route_to_server_t{k}_r{r}_u{u}_v{v}_s{s}"),
                        terms,
                        Sense::Eq,
                        0.0,
                    );
                }
            }
        }

        for &(i, s) in &net.gateway_server_links {
            let mut terms = Vec::new();
            for (r, dag) in reqs.iter().enumerate() {
                for u in 0..dag.collectors.len() {
                    for v in 0..dag.processors.len() {
                        terms.push((layout.l(k, r, u, v, i, s), dag.edge_bandwidth(u, v)));
                    }
                }
            }
            b.row(
                RowKind::LinkBandwidth,
                format!("link_bandwidth_t{k}_g{i}_s{s}"),
                terms,
                Sense::Le,
                net.wired_capacity,
            );
        }

        for r in 0..reqs.len() {
            let a_prev = if k == 0 {
                Prev::Const(snap.initial_ages[r] as f64)
            } else {
                Prev::Var(layout.slots[k - 1].a[r])
            };
            let rows = aos_rows(sl.z[r], sl.lambda[r], sl.a[r], a_prev, psi, &format!("t{k}_r{r}"));
            b.constraints.extend(rows);
        }
    }

    for r in 0..reqs.len() {
        let mut terms = vec![(layout.eta, 1.0)];
        terms.extend((0..horizon).map(|k| (layout.slots[k].a[r], -1.0 / snap.age_divisor)));
        b.row(
            RowKind::Epigraph,
            format!("epigraph_r{r}"),
            terms,
            Sense::Ge,
            snap.accumulated_age[r] as f64 / snap.age_divisor,
        );
    }

    Ok(MilpModel {
        objective: layout.eta,
        variables: b.variables,
        constraints: b.constraints,
        layout,
        psi,
    })
}
