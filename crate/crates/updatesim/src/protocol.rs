//! The pull and push protocol state machines.
//!
//! Pull: every non-origin node checks its parent on a fixed schedule,
//! whether or not anything new exists, via a PollCheck/CatalogResponse
//! exchange. Push: the origin signals its children when updates are
//! published; a signalled node runs a CatalogRequest/CatalogResponse
//! exchange, downloads what it needs, and an update server re-signals its
//! own children once its downloads are complete (a child cannot download
//! from a parent that does not hold the payload yet).
//!
//! The engine is a deterministic transition function: [`ProtocolEngine::step`]
//! consumes an input event and returns the messages to put on the wire.
//! All timing (transfer durations, poll scheduling, energy accrual) belongs
//! to the simulator layer.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    audit, ApprovalPolicy, CatalogError, ClientInventory, InstallOutcome, UpdateArtifact, UpdateId,
    UpdateStore,
};
use crate::topology::{NodeId, NodeKind, Topology, TopologyError};

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("bandwidth must be positive, got {0}")]
    ZeroBandwidth(f64),
    #[error("invalid poll schedule: {0}")]
    InvalidSchedule(String),
    #[error("unknown event: {0}")]
    UnknownEvent(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Which protocol a run uses. Fixed for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    Pull,
    Push,
}

impl ProtocolMode {
    pub fn label(&self) -> &'static str {
        match self {
            ProtocolMode::Pull => "pull",
            ProtocolMode::Push => "push",
        }
    }
}

/// Wire sizes of the fixed-format messages, in bytes.
///
/// The signal must be the smallest message in any run; catalog responses
/// are `catalog_header_bytes` plus the metadata they carry; payloads use
/// the artifact's payload size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageSizes {
    pub signal_bytes: u64,
    pub request_bytes: u64,
    pub catalog_header_bytes: u64,
}

impl Default for MessageSizes {
    fn default() -> Self {
        MessageSizes {
            signal_bytes: 64,
            request_bytes: 512,
            catalog_header_bytes: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageKind {
    /// Pull-mode scheduled check; doubles as the catalog request of the
    /// poll exchange.
    PollCheck,
    /// Catalog request outside the poll schedule (initial synchronization
    /// and the push path after a signal).
    CatalogRequest,
    /// Metadata for entries the requester had not seen.
    CatalogResponse {
        entries: Vec<UpdateId>,
    },
    /// Client reporting an install result upstream.
    StatusReport,
    /// Push-mode availability announcement.
    UpdateSignal {
        ids: Vec<UpdateId>,
    },
    DownloadRequest {
        id: UpdateId,
    },
    DownloadPayload {
        id: UpdateId,
    },
}

impl MessageKind {
    pub fn label(&self) -> &'static str {
        match self {
            MessageKind::PollCheck => "poll_check",
            MessageKind::CatalogRequest => "catalog_request",
            MessageKind::CatalogResponse { .. } => "catalog_response",
            MessageKind::StatusReport => "status_report",
            MessageKind::UpdateSignal { .. } => "update_signal",
            MessageKind::DownloadRequest { .. } => "download_request",
            MessageKind::DownloadPayload { .. } => "download_payload",
        }
    }
}

/// One message on a registered link.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub size_bytes: u64,
    pub src: NodeId,
    pub dst: NodeId,
}

/// Recurring poll times. A node `h` hops from the origin fires at
/// `phase_s + (h - 1) * depth_stagger_s`, then every `period_s`.
///
/// The stagger gives lower tree levels time to finish their own exchange
/// before their children check in, so a release published before the day's
/// polls cascades through the whole tree the same day. Nodes directly under
/// the origin fire at `phase_s` exactly. A zero stagger puts every node on
/// the same instant, in which case each level picks an update up one period
/// after its parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PollSchedule {
    pub period_s: f64,
    /// Offset of the first depth-1 fire from run start; for a daily period
    /// this is the second-of-day (default 54000 = 15:00).
    pub phase_s: f64,
    #[serde(default = "default_depth_stagger")]
    pub depth_stagger_s: f64,
}

pub const SECONDS_PER_DAY: f64 = 86_400.0;

fn default_depth_stagger() -> f64 {
    3_600.0
}

impl Default for PollSchedule {
    fn default() -> Self {
        PollSchedule {
            period_s: SECONDS_PER_DAY,
            phase_s: 54_000.0,
            depth_stagger_s: default_depth_stagger(),
        }
    }
}

impl PollSchedule {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.period_s > 0.0) {
            return Err(ProtocolError::InvalidSchedule(format!(
                "period must be positive, got {}",
                self.period_s
            )));
        }
        if !(self.phase_s >= 0.0) {
            return Err(ProtocolError::InvalidSchedule(format!(
                "phase must be >= 0, got {}",
                self.phase_s
            )));
        }
        if self.period_s == SECONDS_PER_DAY && self.phase_s >= SECONDS_PER_DAY {
            return Err(ProtocolError::InvalidSchedule(format!(
                "daily phase must be a second-of-day below 86400, got {}",
                self.phase_s
            )));
        }
        if !(self.depth_stagger_s >= 0.0) {
            return Err(ProtocolError::InvalidSchedule(format!(
                "depth stagger must be >= 0, got {}",
                self.depth_stagger_s
            )));
        }
        Ok(())
    }

    /// First fire for a node the given number of hops from the origin.
    pub fn first_fire(&self, hops_to_origin: usize) -> f64 {
        self.phase_s + hops_to_origin.saturating_sub(1) as f64 * self.depth_stagger_s
    }

    /// Poll instants strictly before `horizon_s` for a node at the given
    /// distance from the origin.
    pub fn fire_times(&self, hops_to_origin: usize, horizon_s: f64) -> Vec<f64> {
        let first = self.first_fire(hops_to_origin);
        let mut times = Vec::new();
        let mut k = 0u64;
        loop {
            let t = first + k as f64 * self.period_s;
            if t >= horizon_s {
                break;
            }
            times.push(t);
            k += 1;
        }
        times
    }
}

/// Seconds to move `size_bytes` over a link of `bandwidth_bps` bytes/second.
/// A zero-byte message is treated as the one-byte minimum.
pub fn transfer_time(size_bytes: u64, bandwidth_bps: f64) -> Result<f64, ProtocolError> {
    if !(bandwidth_bps > 0.0) {
        return Err(ProtocolError::ZeroBandwidth(bandwidth_bps));
    }
    Ok(size_bytes.max(1) as f64 / bandwidth_bps)
}

/// Input events the engine reacts to. Delivery covers both control-message
/// arrival and payload-transfer completion.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolInput {
    Publish(Vec<UpdateArtifact>),
    PollFire(NodeId),
    Deliver(Message),
}

/// Per-node protocol state.
#[derive(Debug, Clone, Default, PartialEq)]
struct NodeState {
    /// Metadata this node knows plus payloads it holds (origin/servers).
    store: UpdateStore,
    /// Install bookkeeping; populated for clients only.
    inventory: ClientInventory,
    /// Downloads in flight, to avoid re-requesting.
    requested: BTreeSet<UpdateId>,
    /// Ids already announced to children (push mode).
    announced: BTreeSet<UpdateId>,
}

/// Deterministic protocol transition function over the whole node tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolEngine {
    mode: ProtocolMode,
    sizes: MessageSizes,
    policy: ApprovalPolicy,
    topology: Topology,
    /// Every artifact that can ever appear in this run, by id.
    universe: BTreeMap<UpdateId, UpdateArtifact>,
    states: Vec<NodeState>,
}

impl ProtocolEngine {
    pub fn new(
        topology: Topology,
        mode: ProtocolMode,
        sizes: MessageSizes,
        policy: ApprovalPolicy,
        artifacts: &[UpdateArtifact],
    ) -> Self {
        let states = vec![NodeState::default(); topology.node_count()];
        let universe = artifacts.iter().map(|a| (a.id, a.clone())).collect();
        ProtocolEngine {
            mode,
            sizes,
            policy,
            topology,
            universe,
            states,
        }
    }

    pub fn mode(&self) -> ProtocolMode {
        self.mode
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn inventory(&self, node: NodeId) -> &ClientInventory {
        &self.states[node.0].inventory
    }

    pub fn store(&self, node: NodeId) -> &UpdateStore {
        &self.states[node.0].store
    }

    pub fn artifact(&self, id: UpdateId) -> Option<&UpdateArtifact> {
        self.universe.get(&id)
    }

    fn message(&self, kind: MessageKind, src: NodeId, dst: NodeId) -> Message {
        let size_bytes = match &kind {
            MessageKind::PollCheck
            | MessageKind::CatalogRequest
            | MessageKind::StatusReport
            | MessageKind::DownloadRequest { .. } => self.sizes.request_bytes,
            MessageKind::UpdateSignal { .. } => self.sizes.signal_bytes,
            MessageKind::CatalogResponse { entries } => {
                self.sizes.catalog_header_bytes
                    + entries
                        .iter()
                        .map(|id| self.universe[id].metadata_bytes)
                        .sum::<u64>()
            }
            MessageKind::DownloadPayload { id } => self.universe[id].payload_bytes,
        };
        debug_assert_ne!(src, dst);
        // messages only travel on registration links
        debug_assert!(
            self.topology.parent(src) == Some(dst) || self.topology.parent(dst) == Some(src)
        );
        Message {
            kind,
            size_bytes,
            src,
            dst,
        }
    }

    /// One CatalogRequest per non-origin node, in id order: the
    /// register-and-synchronize exchange both modes perform up front.
    pub fn initial_sync_requests(&self) -> Vec<Message> {
        self.topology
            .nodes()
            .filter(|n| n.kind != NodeKind::Origin)
            .map(|n| {
                self.message(
                    MessageKind::CatalogRequest,
                    n.id,
                    n.parent.expect("non-origin nodes are registered"),
                )
            })
            .collect()
    }

    /// Pull-mode scheduled check: one PollCheck to the parent. The caller
    /// schedules the next fire one period later.
    pub fn poll_tick(&self, node: NodeId) -> Result<Vec<Message>, ProtocolError> {
        if self.mode != ProtocolMode::Pull {
            return Err(ProtocolError::UnknownEvent(format!(
                "poll fired for node {node} in push mode"
            )));
        }
        let parent = self
            .topology
            .parent(node)
            .ok_or(TopologyError::Unregistered(node))?;
        Ok(vec![self.message(MessageKind::PollCheck, node, parent)])
    }

    /// One UpdateSignal per directly registered child: unicast fan-out of
    /// the availability announcement.
    pub fn broadcast_signal(&self, node: NodeId, ids: &BTreeSet<UpdateId>) -> Vec<Message> {
        let id_vec: Vec<UpdateId> = ids.iter().copied().collect();
        self.topology
            .children(node)
            .into_iter()
            .map(|child| {
                self.message(
                    MessageKind::UpdateSignal {
                        ids: id_vec.clone(),
                    },
                    node,
                    child,
                )
            })
            .collect()
    }

    /// Push-mode reaction to a signal: start the update process with a
    /// catalog exchange. The ids in the signal are advisory; the catalog
    /// diff decides what actually gets downloaded.
    pub fn handle_signal(
        &self,
        node: NodeId,
        msg: &Message,
    ) -> Result<Vec<Message>, ProtocolError> {
        if self.mode != ProtocolMode::Push {
            return Err(ProtocolError::UnknownEvent(format!(
                "update signal delivered to node {node} in pull mode"
            )));
        }
        debug_assert_eq!(msg.dst, node);
        let parent = self
            .topology
            .parent(node)
            .ok_or(TopologyError::Unregistered(node))?;
        Ok(vec![self.message(
            MessageKind::CatalogRequest,
            node,
            parent,
        )])
    }

    /// Announces any held-but-unannounced payloads to the children
    /// (push mode). Empty announcement sends nothing, so repeated signals
    /// stay idempotent and each id crosses each edge once.
    fn announce_new(&mut self, node: NodeId) -> Vec<Message> {
        let state = &self.states[node.0];
        let pending: BTreeSet<UpdateId> = state
            .store
            .advertised()
            .difference(&state.announced)
            .copied()
            .collect();
        if pending.is_empty() {
            return Vec::new();
        }
        let out = self.broadcast_signal(node, &pending);
        self.states[node.0].announced.extend(pending);
        out
    }

    /// Applies one input event and returns the messages it emits.
    ///
    /// Deterministic: identical engine state and input always produce the
    /// identical message list and successor state.
    pub fn step(&mut self, now: f64, input: &ProtocolInput) -> Result<Vec<Message>, ProtocolError> {
        match input {
            ProtocolInput::Publish(artifacts) => self.on_publish(artifacts),
            ProtocolInput::PollFire(node) => self.poll_tick(*node),
            ProtocolInput::Deliver(msg) => self.on_deliver(now, msg),
        }
    }

    fn on_publish(&mut self, artifacts: &[UpdateArtifact]) -> Result<Vec<Message>, ProtocolError> {
        let origin = self
            .topology
            .origin()
            .ok_or_else(|| ProtocolError::UnknownEvent("publish without an origin".into()))?;
        for artifact in artifacts {
            self.universe
                .entry(artifact.id)
                .or_insert_with(|| artifact.clone());
            self.states[origin.0].store.publish(artifact.clone())?;
        }
        if self.mode == ProtocolMode::Push {
            Ok(self.announce_new(origin))
        } else {
            Ok(Vec::new())
        }
    }

    fn on_deliver(&mut self, now: f64, msg: &Message) -> Result<Vec<Message>, ProtocolError> {
        let node = msg.dst;
        match &msg.kind {
            MessageKind::PollCheck | MessageKind::CatalogRequest => {
                self.respond_with_catalog(node, msg.src)
            }
            MessageKind::CatalogResponse { entries } => {
                self.on_catalog_response(now, node, entries)
            }
            MessageKind::UpdateSignal { .. } => self.handle_signal(node, msg),
            MessageKind::DownloadRequest { id } => {
                if !self.states[node.0].store.has_payload(*id) {
                    return Err(ProtocolError::UnknownEvent(format!(
                        "download request for {id} at node {node} which lacks the payload"
                    )));
                }
                Ok(vec![self.message(
                    MessageKind::DownloadPayload { id: *id },
                    node,
                    msg.src,
                )])
            }
            MessageKind::DownloadPayload { id } => self.on_payload(node, *id),
            MessageKind::StatusReport => Ok(Vec::new()),
        }
    }

    /// Serves a catalog request: entries the requester has not seen, among
    /// those this node can actually provide the payload for. Metadata only;
    /// payload bytes move exclusively in DownloadPayload messages.
    fn respond_with_catalog(
        &mut self,
        node: NodeId,
        requester: NodeId,
    ) -> Result<Vec<Message>, ProtocolError> {
        let served: BTreeSet<UpdateId> = if self.topology.kind(node) == NodeKind::Client {
            return Err(ProtocolError::UnknownEvent(format!(
                "catalog request delivered to client {node}"
            )));
        } else {
            self.states[node.0].store.advertised()
        };
        let known = self.states[requester.0].store.catalog.ids();
        let diff: Vec<UpdateId> = self.states[node.0]
            .store
            .catalog
            .entries()
            .iter()
            .map(|a| a.id)
            .filter(|id| served.contains(id) && !known.contains(id))
            .collect();
        Ok(vec![self.message(
            MessageKind::CatalogResponse { entries: diff },
            node,
            requester,
        )])
    }

    fn on_catalog_response(
        &mut self,
        now: f64,
        node: NodeId,
        entries: &[UpdateId],
    ) -> Result<Vec<Message>, ProtocolError> {
        for id in entries {
            let artifact = self
                .universe
                .get(id)
                .cloned()
                .ok_or_else(|| ProtocolError::UnknownEvent(format!("unknown update {id}")))?;
            self.states[node.0].store.catalog.insert(artifact);
        }
        let parent = self
            .topology
            .parent(node)
            .ok_or(TopologyError::Unregistered(node))?;
        let to_fetch: BTreeSet<UpdateId> = match self.topology.kind(node) {
            NodeKind::Origin => {
                return Err(ProtocolError::UnknownEvent(
                    "catalog response delivered to the origin".into(),
                ))
            }
            NodeKind::UpdateServer => {
                let state = &self.states[node.0];
                state
                    .store
                    .catalog
                    .ids()
                    .into_iter()
                    .filter(|id| !state.store.has_payload(*id) && !state.requested.contains(id))
                    .collect()
            }
            NodeKind::Client => {
                let state = &mut self.states[node.0];
                let needed = audit(&state.store.catalog, &state.inventory, &self.policy, now);
                state.inventory.needed = needed.clone();
                needed
                    .into_iter()
                    .filter(|id| !state.requested.contains(id))
                    .collect()
            }
        };
        let mut out: Vec<Message> = to_fetch
            .iter()
            .map(|id| self.message(MessageKind::DownloadRequest { id: *id }, node, parent))
            .collect();
        self.states[node.0].requested.extend(to_fetch);
        // nothing to fetch: a server may have fresh ids to pass down
        if self.mode == ProtocolMode::Push
            && self.topology.kind(node) == NodeKind::UpdateServer
            && self.states[node.0].requested.is_empty()
        {
            out.extend(self.announce_new(node));
        }
        Ok(out)
    }

    fn on_payload(&mut self, node: NodeId, id: UpdateId) -> Result<Vec<Message>, ProtocolError> {
        let state = &mut self.states[node.0];
        state.requested.remove(&id);
        match self.topology.kind(node) {
            NodeKind::Origin => Err(ProtocolError::UnknownEvent(
                "payload delivered to the origin".into(),
            )),
            NodeKind::UpdateServer => {
                state.store.store_payload(id);
                if self.mode == ProtocolMode::Push && self.states[node.0].requested.is_empty() {
                    Ok(self.announce_new(node))
                } else {
                    Ok(Vec::new())
                }
            }
            NodeKind::Client => {
                state
                    .inventory
                    .record_result(id, InstallOutcome::Installed)?;
                let parent = self
                    .topology
                    .parent(node)
                    .ok_or(TopologyError::Unregistered(node))?;
                Ok(vec![self.message(MessageKind::StatusReport, node, parent)])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::UpdateClassification;
    use crate::energy::PowerProfile;

    const BW: f64 = 1_048_576.0;

    fn artifact(id: u64, release_time: f64) -> UpdateArtifact {
        UpdateArtifact::new(
            UpdateId(id),
            UpdateClassification::Security,
            2048,
            10 * 1024 * 1024,
            release_time,
        )
        .unwrap()
    }

    /// origin(0) -> server(1) -> clients 2..2+n
    fn chain_topology(clients: usize) -> Topology {
        let mut topo = Topology::new();
        let origin = topo
            .add_node(NodeKind::Origin, PowerProfile::server_default())
            .unwrap();
        let server = topo
            .add_node(NodeKind::UpdateServer, PowerProfile::server_default())
            .unwrap();
        topo.register(server, origin, BW).unwrap();
        for _ in 0..clients {
            let c = topo
                .add_node(NodeKind::Client, PowerProfile::client_default())
                .unwrap();
            topo.register(c, server, BW).unwrap();
        }
        topo
    }

    fn engine(topo: Topology, mode: ProtocolMode, artifacts: &[UpdateArtifact]) -> ProtocolEngine {
        ProtocolEngine::new(
            topo,
            mode,
            MessageSizes::default(),
            ApprovalPolicy::AutoApproveAll,
            artifacts,
        )
    }

    #[test]
    fn transfer_time_hand_values() {
        // minimum one byte at 1 B/s
        assert_eq!(transfer_time(0, 1.0).unwrap(), 1.0);
        assert_eq!(transfer_time(1, 1.0).unwrap(), 1.0);
        // 10 MiB at 1 MiB/s
        assert_eq!(transfer_time(10 * 1024 * 1024, BW).unwrap(), 10.0);
        // 64-byte signal at 1 MiB/s: 64/1048576, exact in binary
        assert_eq!(transfer_time(64, BW).unwrap(), 64.0 / 1_048_576.0);
        assert_eq!(transfer_time(64, BW).unwrap(), 6.103515625e-5);
    }

    #[test]
    fn transfer_time_zero_bandwidth() {
        assert_eq!(
            transfer_time(1, 0.0),
            Err(ProtocolError::ZeroBandwidth(0.0))
        );
    }

    #[test]
    fn poll_schedule_daily_fire_times() {
        let sched = PollSchedule::default();
        // a node directly under the origin checks at 15:00 every day
        let times = sched.fire_times(1, 7.0 * SECONDS_PER_DAY);
        assert_eq!(times.len(), 7);
        for (k, t) in times.iter().enumerate() {
            assert_eq!(*t, 54_000.0 + k as f64 * 86_400.0);
        }
        // one level further down, one stagger later, still 7 fires
        let staggered = sched.fire_times(2, 7.0 * SECONDS_PER_DAY);
        assert_eq!(staggered.len(), 7);
        assert_eq!(staggered[0], 54_000.0 + 3_600.0);
    }

    #[test]
    fn poll_schedule_validation() {
        assert!(PollSchedule {
            period_s: 0.0,
            ..PollSchedule::default()
        }
        .validate()
        .is_err());
        assert!(PollSchedule {
            phase_s: 86_400.0,
            ..PollSchedule::default()
        }
        .validate()
        .is_err());
        assert!(PollSchedule {
            depth_stagger_s: -1.0,
            ..PollSchedule::default()
        }
        .validate()
        .is_err());
        assert!(PollSchedule::default().validate().is_ok());
    }

    #[test]
    fn poll_tick_emits_one_check_to_parent() {
        let topo = chain_topology(1);
        let eng = engine(topo, ProtocolMode::Pull, &[]);
        let msgs = eng.poll_tick(NodeId(2)).unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].kind, MessageKind::PollCheck);
        assert_eq!(msgs[0].src, NodeId(2));
        assert_eq!(msgs[0].dst, NodeId(1));
        assert_eq!(msgs[0].size_bytes, 512);
    }

    #[test]
    fn poll_tick_rejected_in_push_mode() {
        let topo = chain_topology(1);
        let eng = engine(topo, ProtocolMode::Push, &[]);
        assert!(matches!(
            eng.poll_tick(NodeId(2)),
            Err(ProtocolError::UnknownEvent(_))
        ));
    }

    #[test]
    fn publish_fans_out_one_signal_per_child() {
        // origin with 3 registered servers
        let mut topo = Topology::new();
        let origin = topo
            .add_node(NodeKind::Origin, PowerProfile::server_default())
            .unwrap();
        for _ in 0..3 {
            let s = topo
                .add_node(NodeKind::UpdateServer, PowerProfile::server_default())
                .unwrap();
            topo.register(s, origin, BW).unwrap();
        }
        let u1 = artifact(1, 0.0);
        let mut eng = engine(topo, ProtocolMode::Push, std::slice::from_ref(&u1));
        let msgs = eng.step(0.0, &ProtocolInput::Publish(vec![u1])).unwrap();
        assert_eq!(msgs.len(), 3);
        for m in &msgs {
            assert!(matches!(m.kind, MessageKind::UpdateSignal { .. }));
            assert_eq!(m.size_bytes, 64);
            assert_eq!(m.src, origin);
        }
    }

    #[test]
    fn publish_with_no_children_sends_nothing() {
        let mut topo = Topology::new();
        topo.add_node(NodeKind::Origin, PowerProfile::server_default())
            .unwrap();
        let u1 = artifact(1, 0.0);
        let mut eng = engine(topo, ProtocolMode::Push, std::slice::from_ref(&u1));
        let msgs = eng.step(0.0, &ProtocolInput::Publish(vec![u1])).unwrap();
        assert!(msgs.is_empty());
    }

    #[test]
    fn publish_in_pull_mode_is_silent() {
        let topo = chain_topology(1);
        let u1 = artifact(1, 0.0);
        let mut eng = engine(topo, ProtocolMode::Pull, std::slice::from_ref(&u1));
        let msgs = eng.step(0.0, &ProtocolInput::Publish(vec![u1])).unwrap();
        assert!(msgs.is_empty());
    }

    #[test]
    fn signal_triggers_catalog_exchange_then_download() {
        let topo = chain_topology(1);
        let u1 = artifact(1, 0.0);
        let mut eng = engine(topo, ProtocolMode::Push, std::slice::from_ref(&u1));
        // publish at the origin; the server gets signalled
        let signals = eng.step(0.0, &ProtocolInput::Publish(vec![u1])).unwrap();
        assert_eq!(signals.len(), 1);
        assert_eq!(signals[0].dst, NodeId(1));
        // server reacts with a catalog request to the origin
        let reqs = eng
            .step(0.001, &ProtocolInput::Deliver(signals[0].clone()))
            .unwrap();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].kind, MessageKind::CatalogRequest);
        assert_eq!(reqs[0].dst, NodeId(0));
        // origin answers with the diff
        let resp = eng
            .step(0.002, &ProtocolInput::Deliver(reqs[0].clone()))
            .unwrap();
        assert_eq!(resp.len(), 1);
        let MessageKind::CatalogResponse { entries } = &resp[0].kind else {
            panic!("expected catalog response, got {:?}", resp[0].kind);
        };
        assert_eq!(entries, &vec![UpdateId(1)]);
        assert_eq!(resp[0].size_bytes, 256 + 2048);
        // server requests the download
        let dl = eng
            .step(0.003, &ProtocolInput::Deliver(resp[0].clone()))
            .unwrap();
        assert_eq!(dl.len(), 1);
        assert_eq!(dl[0].kind, MessageKind::DownloadRequest { id: UpdateId(1) });
    }

    #[test]
    fn duplicate_signal_yields_empty_diff_and_no_download() {
        let topo = chain_topology(0);
        let u1 = artifact(1, 0.0);
        let mut eng = engine(topo, ProtocolMode::Push, std::slice::from_ref(&u1));
        let signals = eng.step(0.0, &ProtocolInput::Publish(vec![u1])).unwrap();
        // walk the full exchange: signal -> request -> response -> dl request -> payload
        let reqs = eng
            .step(0.1, &ProtocolInput::Deliver(signals[0].clone()))
            .unwrap();
        let resp = eng
            .step(0.2, &ProtocolInput::Deliver(reqs[0].clone()))
            .unwrap();
        let dl = eng
            .step(0.3, &ProtocolInput::Deliver(resp[0].clone()))
            .unwrap();
        let payload = eng
            .step(0.4, &ProtocolInput::Deliver(dl[0].clone()))
            .unwrap();
        let after = eng
            .step(10.5, &ProtocolInput::Deliver(payload[0].clone()))
            .unwrap();
        // no children: nothing to announce
        assert!(after.is_empty());
        assert!(eng.store(NodeId(1)).has_payload(UpdateId(1)));
        // duplicate signal: catalog exchange happens, diff is empty, no download
        let dup = signals[0].clone();
        let reqs2 = eng.step(20.0, &ProtocolInput::Deliver(dup)).unwrap();
        assert_eq!(reqs2[0].kind, MessageKind::CatalogRequest);
        let resp2 = eng
            .step(20.1, &ProtocolInput::Deliver(reqs2[0].clone()))
            .unwrap();
        let MessageKind::CatalogResponse { entries } = &resp2[0].kind else {
            panic!("expected catalog response");
        };
        assert!(entries.is_empty());
        assert_eq!(resp2[0].size_bytes, 256);
        let nothing = eng
            .step(20.2, &ProtocolInput::Deliver(resp2[0].clone()))
            .unwrap();
        assert!(nothing.is_empty());
    }

    #[test]
    fn server_with_partial_payloads_fetches_rest_then_announces_all_unannounced() {
        // server already holds u1 (never announced), gets signalled for {u1, u2}
        let topo = chain_topology(2);
        let u1 = artifact(1, 0.0);
        let u2 = artifact(2, 0.0);
        let mut eng = engine(topo, ProtocolMode::Push, &[u1.clone(), u2.clone()]);
        // preload server state: knows u1 and holds its payload
        eng.states[1].store.catalog.insert(u1.clone());
        eng.states[1].store.store_payload(u1.id);
        // origin publishes both and signals
        let signals = eng
            .step(0.0, &ProtocolInput::Publish(vec![u1, u2]))
            .unwrap();
        assert_eq!(signals.len(), 1);
        let reqs = eng
            .step(0.1, &ProtocolInput::Deliver(signals[0].clone()))
            .unwrap();
        let resp = eng
            .step(0.2, &ProtocolInput::Deliver(reqs[0].clone()))
            .unwrap();
        // diff carries only u2
        let MessageKind::CatalogResponse { entries } = &resp[0].kind else {
            panic!("expected catalog response");
        };
        assert_eq!(entries, &vec![UpdateId(2)]);
        // server downloads only u2
        let dl = eng
            .step(0.3, &ProtocolInput::Deliver(resp[0].clone()))
            .unwrap();
        assert_eq!(dl.len(), 1);
        assert_eq!(dl[0].kind, MessageKind::DownloadRequest { id: UpdateId(2) });
        let payload = eng
            .step(0.4, &ProtocolInput::Deliver(dl[0].clone()))
            .unwrap();
        let announce = eng
            .step(10.4, &ProtocolInput::Deliver(payload[0].clone()))
            .unwrap();
        // both clients get signalled for {u1, u2}: u1 was held but never announced
        assert_eq!(announce.len(), 2);
        for m in &announce {
            assert_eq!(
                m.kind,
                MessageKind::UpdateSignal {
                    ids: vec![UpdateId(1), UpdateId(2)]
                }
            );
        }
    }

    #[test]
    fn client_installs_and_reports_status() {
        let topo = chain_topology(1);
        let u1 = artifact(1, 0.0);
        let mut eng = engine(topo, ProtocolMode::Push, std::slice::from_ref(&u1));
        let client = NodeId(2);
        // give the client the metadata and drive the payload in
        let resp = Message {
            kind: MessageKind::CatalogResponse {
                entries: vec![UpdateId(1)],
            },
            size_bytes: 256 + 2048,
            src: NodeId(1),
            dst: client,
        };
        // the server must hold the payload to serve the download
        eng.states[1].store.catalog.insert(u1.clone());
        eng.states[1].store.store_payload(u1.id);
        let dl = eng.step(1.0, &ProtocolInput::Deliver(resp)).unwrap();
        assert_eq!(dl[0].kind, MessageKind::DownloadRequest { id: UpdateId(1) });
        assert_eq!(eng.inventory(client).needed, BTreeSet::from([UpdateId(1)]));
        let payload = eng
            .step(1.1, &ProtocolInput::Deliver(dl[0].clone()))
            .unwrap();
        assert_eq!(
            payload[0].kind,
            MessageKind::DownloadPayload { id: UpdateId(1) }
        );
        let status = eng
            .step(11.1, &ProtocolInput::Deliver(payload[0].clone()))
            .unwrap();
        assert_eq!(status.len(), 1);
        assert_eq!(status[0].kind, MessageKind::StatusReport);
        assert_eq!(status[0].dst, NodeId(1));
        assert!(eng.inventory(client).installed.contains(&UpdateId(1)));
        assert!(eng.inventory(client).is_disjoint());
    }

    #[test]
    fn step_is_a_pure_transition() {
        let topo = chain_topology(2);
        let u1 = artifact(1, 0.0);
        let mut a = engine(topo, ProtocolMode::Push, std::slice::from_ref(&u1));
        let mut b = a.clone();
        let input = ProtocolInput::Publish(vec![u1]);
        let out_a = a.step(0.0, &input).unwrap();
        let out_b = b.step(0.0, &input).unwrap();
        assert_eq!(out_a, out_b);
        assert_eq!(a, b);
    }

    #[test]
    fn initial_sync_is_one_request_per_non_origin_node() {
        let topo = chain_topology(3);
        let eng = engine(topo, ProtocolMode::Push, &[]);
        let reqs = eng.initial_sync_requests();
        assert_eq!(reqs.len(), 4); // server + 3 clients
        assert!(reqs.iter().all(|m| m.kind == MessageKind::CatalogRequest));
    }
}
