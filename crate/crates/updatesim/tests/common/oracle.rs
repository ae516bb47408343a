//! Straight-line reference evaluator for tiny runs.
//!
//! For topologies of at most 3 nodes and at most 2 releases it enumerates
//! every message directly from the protocol rules — no event queue, no
//! shared engine code — sums per-node transmit/receive time, and applies
//! the energy equation. Used to cross-check `run()` end to end.
//!
//! Restrictions (asserted): auto-approve policy, release times at least 1 s
//! in (so the registration exchange sees empty catalogs), release instants
//! far enough apart that one release's cascade finishes before the next
//! starts, and everything completes well before the horizon.

use std::collections::{BTreeMap, BTreeSet};

use updatesim::catalog::{ApprovalPolicy, UpdateId};
use updatesim::protocol::ProtocolMode;
use updatesim::simulator::ScenarioConfig;
use updatesim::topology::{NodeId, NodeKind, Topology};

#[derive(Debug, Clone)]
pub struct OracleMessage {
    pub time: f64,
    pub src: usize,
    pub dst: usize,
    pub kind: &'static str,
    pub size: u64,
}

#[derive(Debug, Default, Clone)]
pub struct OracleOutcome {
    pub messages: Vec<OracleMessage>,
    /// (t_tx, t_rx) per node id.
    pub phase_times: Vec<(f64, f64)>,
    pub total_energy_j: f64,
    pub counts: BTreeMap<&'static str, u64>,
}

struct OracleRun<'a> {
    config: &'a ScenarioConfig,
    topo: Topology,
    messages: Vec<OracleMessage>,
    /// When each node can serve the payload of each update downstream
    /// (origin: publish time; servers: download completion).
    available: Vec<BTreeMap<UpdateId, f64>>,
}

impl<'a> OracleRun<'a> {
    fn bandwidth(&self, child: usize) -> f64 {
        self.topo.link_bandwidth(NodeId(child)).unwrap()
    }

    fn duration(&self, size: u64, child: usize) -> f64 {
        size.max(1) as f64 / self.bandwidth(child)
    }

    fn meta(&self, id: UpdateId) -> u64 {
        self.config
            .releases
            .iter()
            .find(|a| a.id == id)
            .unwrap()
            .metadata_bytes
    }

    fn payload(&self, id: UpdateId) -> u64 {
        self.config
            .releases
            .iter()
            .find(|a| a.id == id)
            .unwrap()
            .payload_bytes
    }

    fn push(&mut self, time: f64, src: usize, dst: usize, kind: &'static str, size: u64) {
        assert!(
            time <= self.config.horizon_s,
            "oracle config lets a message cross the horizon"
        );
        self.messages.push(OracleMessage {
            time,
            src,
            dst,
            kind,
            size,
        });
    }

    /// Request up, response down. Returns (response size, response arrival).
    fn catalog_exchange(
        &mut self,
        t_emit: f64,
        node: usize,
        parent: usize,
        request_kind: &'static str,
        diff: &[UpdateId],
    ) -> f64 {
        let sizes = self.config.sizes;
        self.push(t_emit, node, parent, request_kind, sizes.request_bytes);
        let t_req_arr = t_emit + self.duration(sizes.request_bytes, node);
        let resp_size =
            sizes.catalog_header_bytes + diff.iter().map(|id| self.meta(*id)).sum::<u64>();
        self.push(t_req_arr, parent, node, "catalog_response", resp_size);
        t_req_arr + self.duration(resp_size, node)
    }

    /// Download of `ids` starting at `t`, one request per id in parallel.
    /// Returns when the last payload lands (or `t` if nothing to fetch).
    fn download_all(&mut self, t: f64, node: usize, parent: usize, ids: &[UpdateId]) -> f64 {
        let request = self.config.sizes.request_bytes;
        let is_client = self.topo.kind(NodeId(node)) == NodeKind::Client;
        let mut done = t;
        for id in ids {
            self.push(t, node, parent, "download_request", request);
            let t_req_arr = t + self.duration(request, node);
            let payload = self.payload(*id);
            self.push(t_req_arr, parent, node, "download_payload", payload);
            let t_payload = t_req_arr + self.duration(payload, node);
            if is_client {
                self.push(t_payload, node, parent, "status_report", request);
            }
            self.available[node].insert(*id, t_payload);
            done = done.max(t_payload);
        }
        done
    }

    /// Push cascade below `parent` for a batch announced at `t_emit`.
    fn cascade(&mut self, parent: usize, t_emit: f64, ids: &[UpdateId]) {
        let signal = self.config.sizes.signal_bytes;
        for child in self.topo.children(NodeId(parent)) {
            let child = child.0;
            self.push(t_emit, parent, child, "update_signal", signal);
            let t_sig_arr = t_emit + self.duration(signal, child);
            // the whole batch is new to the child: every id is announced
            // exactly once per edge
            let t_resp_arr =
                self.catalog_exchange(t_sig_arr, child, parent, "catalog_request", ids);
            let done = self.download_all(t_resp_arr, child, parent, ids);
            if self.topo.kind(NodeId(child)) == NodeKind::UpdateServer && !ids.is_empty() {
                self.cascade(child, done, ids);
            }
        }
    }

    fn run_push(&mut self) {
        let mut batches: BTreeMap<u64, Vec<UpdateId>> = BTreeMap::new();
        for artifact in &self.config.releases {
            self.available[0].insert(artifact.id, artifact.release_time);
            batches
                .entry(artifact.release_time.to_bits())
                .or_default()
                .push(artifact.id);
        }
        let mut sorted: Vec<(f64, Vec<UpdateId>)> = batches
            .into_values()
            .map(|ids| {
                let t = self
                    .config
                    .releases
                    .iter()
                    .find(|a| a.id == ids[0])
                    .unwrap()
                    .release_time;
                (t, ids)
            })
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, mut ids) in sorted {
            ids.sort();
            self.cascade(0, t, &ids);
        }
    }

    fn run_pull(&mut self) {
        for artifact in &self.config.releases {
            self.available[0].insert(artifact.id, artifact.release_time);
        }
        // parents always have lower ids, so ascending order sees a node's
        // upstream availability fully computed before the node itself
        let node_ids: Vec<usize> = (1..self.topo.node_count()).collect();
        for node in node_ids {
            let parent = self.topo.parent(NodeId(node)).unwrap().0;
            let hops = self.topo.hops_to_origin(NodeId(node)).unwrap();
            let mut known: BTreeSet<UpdateId> = BTreeSet::new();
            for poll_t in self.config.poll.fire_times(hops, self.config.horizon_s) {
                let t_req_arr = poll_t + self.duration(self.config.sizes.request_bytes, node);
                // ordered by (release_time, id), as responses carry them
                let mut diff: Vec<UpdateId> = self.available[parent]
                    .iter()
                    .filter(|(id, ready)| **ready <= t_req_arr && !known.contains(id))
                    .map(|(id, _)| *id)
                    .collect();
                diff.sort_by(|a, b| {
                    let ra = self.config.releases.iter().find(|x| x.id == *a).unwrap();
                    let rb = self.config.releases.iter().find(|x| x.id == *b).unwrap();
                    ra.release_time.total_cmp(&rb.release_time).then(a.cmp(b))
                });
                let t_resp_arr = self.catalog_exchange(poll_t, node, parent, "poll_check", &diff);
                known.extend(diff.iter().copied());
                self.download_all(t_resp_arr, node, parent, &diff);
            }
        }
    }

    fn registration(&mut self) {
        for node in 1..self.topo.node_count() {
            let parent = self.topo.parent(NodeId(node)).unwrap().0;
            self.catalog_exchange(0.0, node, parent, "catalog_request", &[]);
        }
    }
}

/// Evaluates `config` by direct enumeration. Panics if the config is
/// outside the oracle's domain.
pub fn evaluate(config: &ScenarioConfig) -> OracleOutcome {
    assert!(
        config.releases.len() <= 2,
        "oracle domain: at most 2 releases"
    );
    assert_eq!(
        config.approval,
        ApprovalPolicy::AutoApproveAll,
        "oracle domain: auto-approve only"
    );
    for artifact in &config.releases {
        assert!(
            artifact.release_time >= 1.0,
            "oracle domain: releases after t=1"
        );
    }
    let topo = config.topology.build().unwrap();
    assert!(topo.node_count() <= 3, "oracle domain: at most 3 nodes");

    let node_count = topo.node_count();
    let mut oracle = OracleRun {
        config,
        topo,
        messages: Vec::new(),
        available: vec![BTreeMap::new(); node_count],
    };
    oracle.registration();
    match config.mode {
        ProtocolMode::Push => oracle.run_push(),
        ProtocolMode::Pull => oracle.run_pull(),
    }

    let mut phase_times = vec![(0.0, 0.0); node_count];
    let mut counts: BTreeMap<&'static str, u64> = BTreeMap::new();
    for msg in &oracle.messages {
        let child = if oracle.topo.parent(NodeId(msg.src)) == Some(NodeId(msg.dst)) {
            msg.src
        } else {
            msg.dst
        };
        let d = oracle.duration(msg.size, child);
        phase_times[msg.src].0 += d;
        phase_times[msg.dst].1 += d;
        *counts.entry(msg.kind).or_default() += 1;
    }
    let mut total_energy_j = 0.0;
    for node in oracle.topo.nodes() {
        let (t_tx, t_rx) = phase_times[node.id.0];
        let idle = config.horizon_s - t_tx - t_rx;
        total_energy_j +=
            node.power.idle_w * idle + node.power.tx_w * t_tx + node.power.rx_w * t_rx;
    }
    OracleOutcome {
        messages: oracle.messages,
        phase_times,
        total_energy_j,
        counts,
    }
}
