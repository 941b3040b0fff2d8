//! Depth-first branch-and-bound over the served set of each slot.
//!
//! Collector activity and processor placement of unserved requests only
//! cost energy, so a served set fixes all `x`, every `l` and which `y` are
//! on. What remains per slot is the uploading device at each gateway and
//! the server of every placed processor; among those only the resulting
//! battery levels matter for later slots, and more energy never hurts.
//! Children are therefore the Pareto-maximal level vectors, compared after
//! the next slot's harvest (levels that refill to capacity are equivalent).
//!
//! Bounds: each request's best achievable age sum given how many more times
//! it could be served, with the service counts limited jointly by pooled
//! gateway, server and device energy.

use std::collections::HashSet;
use std::time::Instant;

use super::{replay, Solution, SolveOptions, SolveStats, SolveStatus};
use crate::decision::ScheduleDecision;
use crate::energy::ENERGY_TOL;
use crate::error::{Error, Result};
use crate::milp::{InstanceSnapshot, MilpModel};

fn fits(used: f64, limit: f64) -> bool {
    used <= limit + ENERGY_TOL * limit.abs().max(1.0)
}

#[derive(Debug, Clone)]
struct Plan {
    /// Server of every processor, for served requests.
    placement: Vec<Option<Vec<usize>>>,
    devices: Vec<Option<usize>>,
}

#[derive(Debug)]
struct RequestData {
    gw_load: Vec<f64>,
    gw_count: Vec<usize>,
    /// `(compute, merge bandwidth)` per processor.
    procs: Vec<(f64, f64)>,
    /// Incoming `(gateway, bandwidth)` per processor.
    incoming: Vec<Vec<(usize, f64)>>,
    proc_total: f64,
    merge_total: f64,
    /// A single service fits the capacities at all.
    servable: bool,
}

#[derive(Debug, Clone)]
struct State {
    /// Level of every node available to this slot's decision.
    avail: Vec<f64>,
    ages: Vec<u32>,
    sums: Vec<u64>,
}

/// Energy budgets from a slot to the end of the window.
struct Pools {
    gateway: Vec<f64>,
    server: f64,
    uploads: Vec<usize>,
}

struct Candidate {
    bound: u64,
    mask: usize,
    gateway_levels: Vec<f64>,
}

struct Search<'a> {
    snap: &'a InstanceSnapshot<'a>,
    horizon: usize,
    ng: usize,
    ns: usize,
    caps: Vec<f64>,
    kappa: Vec<f64>,
    cpu: Vec<f64>,
    server_kappa_min: f64,
    server_cpu_total: f64,
    reqs: Vec<RequestData>,
    costs: Vec<Vec<f64>>,
    fixed: Vec<Vec<Option<bool>>>,
    /// `suffix_w[k][n]`: arrivals at `n` over slots `k..`.
    suffix_w: Vec<Vec<f64>>,
    /// `allowed[k][r]`: slots from `k` on where `r` may be served.
    allowed: Vec<Vec<usize>>,
    /// `min_cost[k][i]`: cheapest upload at gateway `i` from slot `k` on.
    min_cost: Vec<Vec<f64>>,
    /// `affordable[k][i]`: slots from `k` on with some upload under capacity.
    affordable: Vec<Vec<usize>>,
    /// `age_table[a][m][n]`: least age sum over `m` slots starting from age
    /// `a` with at most `n` services.
    age_table: Vec<Vec<Vec<u64>>>,
    total_collectors: usize,
    wired: f64,
    options: SolveOptions,
    start: Instant,
    nodes: u64,
    stopped: bool,
    truncated: bool,
    best: Option<(u64, Vec<Plan>)>,
    path: Vec<Plan>,
}

/// Least sum of ages over `m` slots starting after age `a` with exactly
/// `n` services: an initial unserved run, then `n` balanced runs.
fn exact_age_sum(a: u64, m: u64, n: u64) -> u64 {
    let tri = |q: u64| q * (q + 1) / 2;
    if n == 0 {
        return m * a + tri(m);
    }
    (0..=m - n)
        .map(|g0| {
            let rest = m - g0;
            let (q, rem) = (rest / n, rest % n);
            g0 * a + tri(g0) + rem * tri(q + 1) + (n - rem) * tri(q)
        })
        .min()
        .unwrap_or(u64::MAX)
}

fn age_row(a: u64, m: u64) -> Vec<u64> {
    let mut row: Vec<u64> = (0..=m).map(|n| exact_age_sum(a, m, n)).collect();
    for n in 1..row.len() {
        row[n] = row[n].min(row[n - 1]);
    }
    row
}

/// Leaf sets above this size skip the dominance filter; it only trims
/// children and costs quadratic time.
const PARETO_LIMIT: usize = 512;

/// Frontier caps of the warm-up passes.
const STAGE_CAPS: [usize; 2] = [64, 1024];

/// Keeps the vectors not dominated componentwise by another; among equal
/// vectors the first survives.
fn pareto<T>(mut items: Vec<(Vec<f64>, T)>) -> Vec<(Vec<f64>, T)> {
    items.sort_by(|a, b| {
        let sa: f64 = a.0.iter().sum();
        let sb: f64 = b.0.iter().sum();
        sb.total_cmp(&sa)
    });
    let mut kept: Vec<(Vec<f64>, T)> = Vec::new();
    for item in items {
        let dominated = kept
            .iter()
            .any(|(k, _)| k.iter().zip(&item.0).all(|(x, y)| x >= y));
        if !dominated {
            kept.push(item);
        }
    }
    kept
}

impl<'a> Search<'a> {
    fn new(model: &MilpModel, snap: &'a InstanceSnapshot<'a>, options: &SolveOptions) -> Self {
        let net = snap.network;
        let h = snap.horizon();
        let (ng, ns, nd) = (net.gateways.len(), net.servers.len(), net.devices.len());
        let nodes = net.node_count();
        let caps: Vec<f64> = (0..nodes).map(|n| net.caps(n).battery_capacity).collect();
        let kappa: Vec<f64> = (0..nodes).map(|n| snap.drain_per_megacycle(n)).collect();
        let cpu: Vec<f64> = (0..nodes).map(|n| net.caps(n).cpu_capacity).collect();
        let server_nodes: Vec<usize> = (0..ns).map(|s| net.server_node(s)).collect();
        let server_kappa_min = server_nodes
            .iter()
            .map(|&n| kappa[n])
            .fold(f64::INFINITY, f64::min);
        let server_cpu_total: f64 = server_nodes.iter().map(|&n| cpu[n]).sum();
        let wired = net.wired_capacity;

        let reqs: Vec<RequestData> = snap
            .requests
            .iter()
            .map(|dag| {
                let mut gw_load = vec![0.0; ng];
                let mut gw_count = vec![0; ng];
                for c in &dag.collectors {
                    gw_load[c.gateway] += c.compute;
                    gw_count[c.gateway] += 1;
                }
                let procs: Vec<(f64, f64)> = dag
                    .processors
                    .iter()
                    .map(|p| (p.compute, p.merge_bandwidth))
                    .collect();
                let mut incoming = vec![Vec::new(); procs.len()];
                for e in &dag.edges {
                    incoming[e.processor].push((dag.collectors[e.collector].gateway, e.bandwidth));
                }
                let gateways_fit = (0..ng).all(|i| {
                    let node = net.gateway_node(i);
                    fits(gw_load[i], cpu[node]) && fits(kappa[node] * gw_load[i], caps[node])
                });
                let procs_fit = procs.iter().all(|&(c, m)| {
                    server_nodes.iter().any(|&n| {
                        fits(c, cpu[n]) && fits(kappa[n] * c, caps[n]) && fits(m, wired)
                    })
                });
                let edges_fit = dag.edges.iter().all(|e| fits(e.bandwidth, wired));
                RequestData {
                    proc_total: procs.iter().map(|p| p.0).sum(),
                    merge_total: procs.iter().map(|p| p.1).sum(),
                    servable: gateways_fit && procs_fit && edges_fit && (ns > 0 || procs.is_empty()),
                    gw_load,
                    gw_count,
                    procs,
                    incoming,
                }
            })
            .collect();

        let costs: Vec<Vec<f64>> = (0..h)
            .map(|k| (0..nd).map(|d| snap.device_cost(k, d)).collect())
            .collect();
        let fixed: Vec<Vec<Option<bool>>> = (0..h)
            .map(|k| {
                model.layout.slots[k]
                    .z
                    .iter()
                    .map(|&z| {
                        let v = &model.variables[z];
                        if v.lower > 0.5 {
                            Some(true)
                        } else if v.upper < 0.5 {
                            Some(false)
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        let mut suffix_w = vec![vec![0.0; nodes]; h + 1];
        for k in (0..h).rev() {
            for n in 0..nodes {
                suffix_w[k][n] = suffix_w[k + 1][n] + snap.arrivals[k][n];
            }
        }
        let mut allowed = vec![vec![0; snap.requests.len()]; h + 1];
        for k in (0..h).rev() {
            for r in 0..snap.requests.len() {
                allowed[k][r] = allowed[k + 1][r] + usize::from(fixed[k][r] != Some(false));
            }
        }
        let mut min_cost = vec![vec![f64::INFINITY; ng]; h + 1];
        let mut affordable = vec![vec![0; ng]; h + 1];
        for k in (0..h).rev() {
            for i in 0..ng {
                let devs = &net.association[i];
                let here = devs.iter().map(|&d| costs[k][d]).fold(f64::INFINITY, f64::min);
                min_cost[k][i] = min_cost[k + 1][i].min(here);
                let ok = devs.iter().any(|&d| fits(costs[k][d], caps[net.device_node(d)]));
                affordable[k][i] = affordable[k + 1][i] + usize::from(ok);
            }
        }
        let max_age = snap.initial_ages.iter().copied().max().unwrap_or(0) as usize + h;
        let age_table = (0..=max_age)
            .map(|a| (0..=h).map(|m| age_row(a as u64, m as u64)).collect())
            .collect();

        Self {
            snap,
            horizon: h,
            ng,
            ns,
            caps,
            kappa,
            cpu,
            server_kappa_min,
            server_cpu_total,
            reqs,
            costs,
            fixed,
            suffix_w,
            allowed,
            min_cost,
            affordable,
            age_table,
            total_collectors: snap.requests.iter().map(|r| r.collectors.len()).sum(),
            wired,
            options: options.clone(),
            start: Instant::now(),
            nodes: 0,
            stopped: false,
            truncated: false,
            best: None,
            path: Vec::new(),
        }
    }

    fn net(&self) -> &'a crate::substrate::SubstrateNetwork {
        self.snap.network
    }

    fn best_value(&self) -> u64 {
        self.best.as_ref().map_or(u64::MAX, |b| b.0)
    }

    /// Budgets for slots `from..`: the given levels plus arrivals from
    /// slot `arrivals_from` on.
    fn pools(
        &self,
        from: usize,
        arrivals_from: usize,
        gateway_levels: &[f64],
        server_total: f64,
        device_levels: &[f64],
    ) -> Pools {
        let net = self.net();
        let future = &self.suffix_w[arrivals_from];
        let gateway = (0..self.ng)
            .map(|i| gateway_levels[i] + future[net.gateway_node(i)])
            .collect();
        let server = server_total + (0..self.ns).map(|s| future[net.server_node(s)]).sum::<f64>();
        let uploads = (0..self.ng)
            .map(|i| {
                let slots = self.affordable[from][i];
                let cost = self.min_cost[from][i];
                if !(cost > 0.0) {
                    return slots;
                }
                let energy: f64 = net.association[i]
                    .iter()
                    .map(|&d| device_levels[d] + future[net.device_node(d)])
                    .sum();
                let by_energy = (energy / cost + 1e-9).floor().max(0.0);
                if by_energy < slots as f64 {
                    by_energy as usize
                } else {
                    slots
                }
            })
            .collect();
        Pools {
            gateway,
            server,
            uploads,
        }
    }

    /// Budgets of a node at slot `k`; `avail` already holds slot `k`'s arrival.
    fn state_pools(&self, k: usize, avail: &[f64]) -> Pools {
        let net = self.net();
        let gw: Vec<f64> = (0..self.ng).map(|i| avail[net.gateway_node(i)]).collect();
        let srv: f64 = (0..self.ns).map(|s| avail[net.server_node(s)]).sum();
        let dev: Vec<f64> = (0..net.devices.len()).map(|d| avail[net.device_node(d)]).collect();
        self.pools(k, k + 1, &gw, srv, &dev)
    }

    fn pools_admit(&self, m: usize, pools: &Pools, counts: &[usize]) -> bool {
        let net = self.net();
        let mf = m as f64;
        for i in 0..self.ng {
            let node = net.gateway_node(i);
            let (mut energy, mut cycles) = (0.0, 0.0);
            for (r, req) in self.reqs.iter().enumerate() {
                let n = counts[r] as f64;
                energy += n * self.kappa[node] * req.gw_load[i];
                cycles += n * req.gw_load[i];
            }
            if !fits(energy, pools.gateway[i]) || !fits(cycles, mf * self.cpu[node]) {
                return false;
            }
        }
        if self.ns > 0 {
            let (mut energy, mut cycles, mut merge) = (0.0, 0.0, 0.0);
            for (r, req) in self.reqs.iter().enumerate() {
                let n = counts[r] as f64;
                energy += n * self.server_kappa_min * req.proc_total;
                cycles += n * req.proc_total;
                merge += n * req.merge_total;
            }
            if !fits(energy, pools.server)
                || !fits(cycles, mf * self.server_cpu_total)
                || !fits(merge, mf * self.ns as f64 * self.wired)
            {
                return false;
            }
        }
        true
    }

    /// Lower bound on the final worst age sum from slot `k` on.
    fn bound(&self, k: usize, pools: &Pools, ages: &[u32], sums: &[u64]) -> u64 {
        let m = self.horizon - k;
        if m == 0 || self.reqs.is_empty() {
            return sums.iter().copied().max().unwrap_or(0);
        }
        let rows: Vec<&Vec<u64>> = ages
            .iter()
            .map(|&a| &self.age_table[a as usize][m])
            .collect();
        let ncap: Vec<usize> = self
            .reqs
            .iter()
            .enumerate()
            .map(|(r, req)| {
                if !req.servable {
                    return 0;
                }
                let mut c = m.min(self.allowed[k][r]);
                for i in 0..self.ng {
                    if req.gw_count[i] > 0 && self.total_collectors > 0 {
                        c = c.min(pools.uploads[i]);
                    }
                }
                c
            })
            .collect();
        let value = |r: usize, n: usize| sums[r] + rows[r][n];
        let floor = (0..self.reqs.len()).map(|r| value(r, ncap[r])).max().unwrap_or(0);
        let mut cands: Vec<u64> = (0..self.reqs.len())
            .flat_map(|r| (0..=ncap[r]).map(move |n| (r, n)))
            .map(|(r, n)| value(r, n))
            .filter(|&v| v >= floor)
            .collect();
        cands.push(floor);
        cands.sort_unstable();
        cands.dedup();
        let admits = |t: u64| -> bool {
            let counts: Vec<usize> = (0..self.reqs.len())
                .map(|r| (0..=ncap[r]).find(|&n| value(r, n) <= t).unwrap_or(ncap[r]))
                .collect();
            self.pools_admit(m, pools, &counts)
        };
        let (mut lo, mut hi) = (0, cands.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if admits(cands[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        cands[lo]
    }

    fn next_ages(&self, state: &State, mask: usize) -> (Vec<u32>, Vec<u64>) {
        let mut ages = state.ages.clone();
        let mut sums = state.sums.clone();
        for r in 0..ages.len() {
            ages[r] = if mask >> r & 1 == 1 { 1 } else { ages[r] + 1 };
            sums[r] += ages[r] as u64;
        }
        (ages, sums)
    }

    fn candidates(&self, k: usize, state: &State) -> Vec<Candidate> {
        let net = self.net();
        let nr = self.reqs.len();
        let mut out = Vec::new();
        'mask: for mask in 0..(1usize << nr) {
            for r in 0..nr {
                if let Some(f) = self.fixed[k][r] {
                    if f != (mask >> r & 1 == 1) {
                        continue 'mask;
                    }
                }
            }
            let served: Vec<usize> = (0..nr).filter(|r| mask >> r & 1 == 1).collect();
            if served.iter().any(|&r| !self.reqs[r].servable) {
                continue;
            }
            let mut gateway_levels = vec![0.0; self.ng];
            for i in 0..self.ng {
                let node = net.gateway_node(i);
                let load: f64 = served.iter().map(|&r| self.reqs[r].gw_load[i]).sum();
                let count: usize = served.iter().map(|&r| self.reqs[r].gw_count[i]).sum();
                let drain = self.kappa[node] * load;
                if !fits(load, self.cpu[node]) || !fits(drain, state.avail[node]) {
                    continue 'mask;
                }
                if count > 0 && self.total_collectors > 0 {
                    let any = net.association[i].iter().any(|&d| {
                        fits(self.costs[k][d], state.avail[net.device_node(d)])
                    });
                    if !any {
                        continue 'mask;
                    }
                }
                gateway_levels[i] = (state.avail[node] - drain).max(0.0);
            }
            let proc_load: f64 = served.iter().map(|&r| self.reqs[r].proc_total).sum();
            let server_avail: f64 = (0..self.ns).map(|s| state.avail[net.server_node(s)]).sum();
            if !fits(self.server_kappa_min * proc_load, server_avail) {
                continue;
            }
            let (ages, sums) = self.next_ages(state, mask);
            let devices: Vec<f64> = (0..net.devices.len())
                .map(|d| state.avail[net.device_node(d)])
                .collect();
            let pools = self.pools(
                k + 1,
                k + 1,
                &gateway_levels,
                server_avail - self.server_kappa_min * proc_load,
                &devices,
            );
            out.push(Candidate {
                bound: self.bound(k + 1, &pools, &ages, &sums),
                mask,
                gateway_levels,
            });
        }
        out.sort_by_key(|c| (c.bound, std::cmp::Reverse(c.mask.count_ones()), c.mask));
        out
    }

    /// Level after slot `k` carried into slot `k + 1`'s decision.
    fn carry(&self, k: usize, node: usize, level: f64) -> f64 {
        if k + 1 < self.horizon {
            (level.max(0.0) + self.snap.arrivals[k + 1][node]).min(self.caps[node])
        } else {
            0.0
        }
    }

    /// Uploading-device options at gateway `i`: `(carried levels of the
    /// gateway's devices, device)`.
    fn device_frontier(&self, k: usize, state: &State, i: usize) -> Vec<(Vec<f64>, usize)> {
        let net = self.net();
        let devs = &net.association[i];
        let mut opts = Vec::new();
        for &d in devs {
            let node = net.device_node(d);
            if !fits(self.costs[k][d], state.avail[node]) {
                continue;
            }
            let levels = devs
                .iter()
                .map(|&e| {
                    let n = net.device_node(e);
                    let drain = if e == d { self.costs[k][d] } else { 0.0 };
                    self.carry(k, n, state.avail[n] - drain)
                })
                .collect();
            opts.push((levels, d));
        }
        pareto(opts)
    }

    /// Server assignments of every processor of the served requests:
    /// `(carried server levels, server per processor per served request)`,
    /// at most `frontier_cap` of them; the flag reports a cut.
    fn server_frontier(
        &self,
        k: usize,
        state: &State,
        served: &[usize],
    ) -> (Vec<(Vec<f64>, Vec<Vec<usize>>)>, bool) {
        let mut items: Vec<(usize, usize)> = served
            .iter()
            .flat_map(|&r| (0..self.reqs[r].procs.len()).map(move |v| (r, v)))
            .collect();
        items.sort_by(|a, b| {
            let ca = self.reqs[a.0].procs[a.1].0;
            let cb = self.reqs[b.0].procs[b.1].0;
            cb.total_cmp(&ca)
        });
        let mut walk = ServerWalk {
            search: self,
            k,
            state,
            items: &items,
            load: vec![0.0; self.ns],
            merge: vec![0.0; self.ns],
            link: vec![vec![0.0; self.ns]; self.ng],
            assign: vec![0; items.len()],
            seen: HashSet::new(),
            leaves: Vec::new(),
            first_only: k + 1 == self.horizon,
            limit: self.options.frontier_cap.max(1),
            overflow: false,
        };
        walk.run(0);
        let overflow = walk.overflow;
        let leaves = walk.leaves;
        let frontier = if leaves.len() <= PARETO_LIMIT {
            pareto(leaves)
        } else {
            leaves
        };
        let out = frontier
            .into_iter()
            .map(|(levels, assign)| {
                let mut per_req: Vec<Vec<usize>> = served
                    .iter()
                    .map(|&r| vec![0; self.reqs[r].procs.len()])
                    .collect();
                for (j, &(r, v)) in items.iter().enumerate() {
                    let pos = served.iter().position(|&x| x == r).unwrap();
                    per_req[pos][v] = assign[j];
                }
                (levels, per_req)
            })
            .collect();
        (out, overflow)
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes >= self.options.node_limit
            || (self.nodes.is_multiple_of(256) && self.start.elapsed() >= self.options.time_limit)
        {
            self.stopped = true;
        }
        self.stopped
    }

    fn expand(&mut self, k: usize, state: State) {
        if k == self.horizon {
            let value = state.sums.iter().copied().max().unwrap_or(0);
            if value < self.best_value() {
                self.best = Some((value, self.path.clone()));
            }
            return;
        }
        let pools = self.state_pools(k, &state.avail);
        if self.bound(k, &pools, &state.ages, &state.sums) >= self.best_value() {
            return;
        }
        let net = self.net();
        let nr = self.reqs.len();
        for cand in self.candidates(k, &state) {
            if cand.bound >= self.best_value() {
                break;
            }
            let served: Vec<usize> = (0..nr).filter(|r| cand.mask >> r & 1 == 1).collect();
            let (servers, cut) = self.server_frontier(k, &state, &served);
            self.truncated |= cut;
            if servers.is_empty() {
                continue;
            }
            let mut device_parts: Vec<(usize, Vec<(Vec<f64>, usize)>)> = Vec::new();
            for i in 0..self.ng {
                let count: usize = served.iter().map(|&r| self.reqs[r].gw_count[i]).sum();
                if count > 0 && self.total_collectors > 0 {
                    let mut part = self.device_frontier(k, &state, i);
                    if k + 1 == self.horizon {
                        part.truncate(1);
                    }
                    device_parts.push((i, part));
                }
            }
            let mut combos: usize = servers.len();
            for (_, part) in &device_parts {
                combos *= part.len();
            }
            let (ages, sums) = self.next_ages(&state, cand.mask);
            let mut base = vec![0.0; state.avail.len()];
            for i in 0..self.ng {
                let node = net.gateway_node(i);
                base[node] = self.carry(k, node, cand.gateway_levels[i]);
            }
            for d in 0..net.devices.len() {
                let node = net.device_node(d);
                base[node] = self.carry(k, node, state.avail[node]);
            }
            for idx in 0..combos {
                // an earlier sibling may have reached this candidate's bound
                if cand.bound >= self.best_value() {
                    break;
                }
                // Mixed-radix index into servers x device parts.
                let mut rest = idx;
                let si = rest % servers.len();
                rest /= servers.len();
                let mut avail = base.clone();
                for (s, &lv) in servers[si].0.iter().enumerate() {
                    avail[net.server_node(s)] = lv;
                }
                let mut devices = vec![None; self.ng];
                for (i, part) in &device_parts {
                    let pi = rest % part.len();
                    rest /= part.len();
                    devices[*i] = Some(part[pi].1);
                    for (j, &d) in net.association[*i].iter().enumerate() {
                        avail[net.device_node(d)] = part[pi].0[j];
                    }
                }
                let mut placement = vec![None; nr];
                for (pos, &r) in served.iter().enumerate() {
                    placement[r] = Some(servers[si].1[pos].clone());
                }
                if self.tick() {
                    return;
                }
                self.path.push(Plan { placement, devices });
                let child = State {
                    avail,
                    ages: ages.clone(),
                    sums: sums.clone(),
                };
                self.expand(k + 1, child);
                self.path.pop();
                if self.stopped {
                    return;
                }
            }
        }
    }
}

struct ServerWalk<'s, 'a> {
    search: &'s Search<'a>,
    k: usize,
    state: &'s State,
    items: &'s [(usize, usize)],
    load: Vec<f64>,
    merge: Vec<f64>,
    link: Vec<Vec<f64>>,
    assign: Vec<usize>,
    seen: HashSet<Vec<u64>>,
    leaves: Vec<(Vec<f64>, Vec<usize>)>,
    first_only: bool,
    limit: usize,
    overflow: bool,
}

impl ServerWalk<'_, '_> {
    fn run(&mut self, j: usize) {
        if (self.first_only && !self.leaves.is_empty()) || self.overflow {
            return;
        }
        let s_ = self.search;
        let net = s_.net();
        if j == self.items.len() {
            let levels: Vec<f64> = (0..s_.ns)
                .map(|s| {
                    let node = net.server_node(s);
                    let left = self.state.avail[node] - s_.kappa[node] * self.load[s];
                    s_.carry(self.k, node, left)
                })
                .collect();
            let key: Vec<u64> = levels.iter().map(|x| x.to_bits()).collect();
            if self.seen.contains(&key) {
                return;
            }
            if self.leaves.len() == self.limit {
                self.overflow = true;
                return;
            }
            self.seen.insert(key);
            self.leaves.push((levels, self.assign.clone()));
            return;
        }
        let (r, v) = self.items[j];
        let (c, m) = s_.reqs[r].procs[v];
        let incoming = &s_.reqs[r].incoming[v];
        for s in 0..s_.ns {
            let node = net.server_node(s);
            let load = self.load[s] + c;
            if !fits(load, s_.cpu[node])
                || !fits(s_.kappa[node] * load, self.state.avail[node])
                || !fits(self.merge[s] + m, s_.wired)
            {
                continue;
            }
            for &(i, bw) in incoming {
                self.link[i][s] += bw;
            }
            let joint_ok = incoming.iter().all(|&(i, _)| fits(self.link[i][s], s_.wired));
            if joint_ok {
                self.load[s] = load;
                self.merge[s] += m;
                self.assign[j] = s;
                self.run(j + 1);
                self.load[s] -= c;
                self.merge[s] -= m;
            }
            for &(i, bw) in incoming {
                self.link[i][s] -= bw;
            }
        }
    }
}

/// Exact minimum of `model`, built from `snap`, within the budgets of
/// `options`. Fixed bounds on `z` variables are honored.
pub fn solve_exact(model: &MilpModel, snap: &InstanceSnapshot<'_>, options: &SolveOptions) -> Result<Solution> {
    snap.validate()?;
    if model.layout.slots.len() != snap.horizon() {
        return Err(Error::Build(format!(
            "model covers {} slots, snapshot {}",
            model.layout.slots.len(),
            snap.horizon()
        )));
    }
    let net = snap.network;
    let start = Instant::now();
    // Narrow passes find incumbents fast; only the last pass at the full
    // cap can prove optimality, and it starts from their best.
    let mut caps: Vec<usize> = STAGE_CAPS
        .iter()
        .copied()
        .filter(|&c| c < options.frontier_cap)
        .collect();
    caps.push(options.frontier_cap);
    let mut best = None;
    let mut nodes = 0;
    let (mut complete, mut truncated) = (false, false);
    for cap in caps {
        let mut search = Search::new(model, snap, &SolveOptions { frontier_cap: cap, ..options.clone() });
        search.start = start;
        search.nodes = nodes;
        search.best = best.take();
        let avail: Vec<f64> = (0..net.node_count())
            .map(|n| (snap.initial_levels[n] + snap.arrivals[0][n]).min(search.caps[n]))
            .collect();
        let root = State {
            avail,
            ages: snap.initial_ages.clone(),
            sums: snap.accumulated_age.clone(),
        };
        search.expand(0, root);
        nodes = search.nodes;
        best = search.best;
        truncated = search.truncated;
        complete = !search.stopped && !search.truncated;
        if complete || search.stopped {
            break;
        }
    }
    let stats = SolveStats {
        nodes,
        wall_time: start.elapsed(),
        truncated,
    };
    let Some((_, plans)) = best else {
        let status = if complete {
            SolveStatus::Infeasible
        } else {
            SolveStatus::Timeout
        };
        return Ok(Solution::without_solution(status, stats));
    };
    let schedule: Vec<ScheduleDecision> = plans
        .iter()
        .map(|p| ScheduleDecision::from_plan(net, snap.requests, &p.placement, &p.devices))
        .collect();
    let values = replay(model, snap, &schedule);
    let violations = model.check(&values);
    if let Some(v) = violations.first() {
        return Err(Error::Build(format!(
            "search produced an infeasible point: {} ({}) off by {:e}",
            v.name, v.tag, v.amount
        )));
    }
    Ok(Solution {
        status: if complete {
            SolveStatus::Optimal
        } else {
            SolveStatus::Feasible
        },
        objective: Some(model.objective_value(&values)),
        values,
        schedule,
        stats,
    })
}
