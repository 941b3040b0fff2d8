//! One slot's scheduling binaries in structured form.

use crate::substrate::SubstrateNetwork;
use crate::workload::DagRequest;

/// Per-slot decision. Collectors can only run at their fixed gateway, so
/// `active[r][u]` stands for `x` at that gateway; `x` elsewhere is always 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScheduleDecision {
    /// `z[r]`: request completes this slot.
    pub served: Vec<bool>,
    /// `phi[d]`: device uploads to its gateway.
    pub uploads: Vec<bool>,
    /// `x[r][u]`.
    pub active: Vec<Vec<bool>>,
    /// `y[r][v]`: hosting server, if placed.
    pub placement: Vec<Vec<Option<usize>>>,
    /// `l[r][u][v]`: the `(gateway, server)` link carrying edge `(u, v)`.
    pub routes: Vec<Vec<Vec<Option<(usize, usize)>>>>,
}

impl ScheduleDecision {
    /// Nothing active.
    pub fn empty(network: &SubstrateNetwork, requests: &[DagRequest]) -> Self {
        Self {
            served: vec![false; requests.len()],
            uploads: vec![false; network.devices.len()],
            active: requests
                .iter()
                .map(|r| vec![false; r.collectors.len()])
                .collect(),
            placement: requests
                .iter()
                .map(|r| vec![None; r.processors.len()])
                .collect(),
            routes: requests
                .iter()
                .map(|r| vec![vec![None; r.processors.len()]; r.collectors.len()])
                .collect(),
        }
    }

    /// Serves exactly the requests whose `placement` row is `Some`: all
    /// collectors active, every edge routed from the collector's gateway to
    /// the processor's server, and `devices[i]` uploading at gateway `i`.
    pub fn from_plan(
        network: &SubstrateNetwork,
        requests: &[DagRequest],
        placement: &[Option<Vec<usize>>],
        devices: &[Option<usize>],
    ) -> Self {
        let mut dec = Self::empty(network, requests);
        for (r, dag) in requests.iter().enumerate() {
            let Some(servers) = &placement[r] else {
                continue;
            };
            dec.served[r] = true;
            dec.active[r].iter_mut().for_each(|x| *x = true);
            for (v, &s) in servers.iter().enumerate() {
                dec.placement[r][v] = Some(s);
            }
            for e in &dag.edges {
                let i = dag.collectors[e.collector].gateway;
                dec.routes[r][e.collector][e.processor] = Some((i, servers[e.processor]));
            }
        }
        for d in devices.iter().flatten() {
            dec.uploads[*d] = true;
        }
        dec
    }

    pub fn served_count(&self) -> usize {
        self.served.iter().filter(|z| **z).count()
    }

    /// Device uploading at each gateway, if any.
    pub fn devices_by_gateway(&self, network: &SubstrateNetwork) -> Vec<Option<usize>> {
        network
            .association
            .iter()
            .map(|devs| devs.iter().copied().find(|&d| self.uploads[d]))
            .collect()
    }
}
