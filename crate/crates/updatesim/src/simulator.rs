//! Deterministic discrete-event engine and the two reference scenarios.
//!
//! Events are processed in (time, insertion-sequence) order, so two runs of
//! the same configuration produce bit-identical results. A run seeds the
//! initial register-and-synchronize exchanges, the poll schedule (pull mode)
//! and the publish schedule, then drains the queue. Every emitted message
//! accrues transmit time at its source and receive time at its destination
//! for the transfer duration, clipped at the horizon; each node's total
//! window is the full horizon, so waiting between polls is charged at the
//! idle rate.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    ApprovalPolicy, ClientInventory, UpdateArtifact, UpdateClassification, UpdateId,
};
use crate::energy::{self, ActivityLedger, EnergyError, Phase, PowerProfile};
use crate::protocol::{
    transfer_time, Message, MessageKind, MessageSizes, PollSchedule, ProtocolEngine, ProtocolError,
    ProtocolInput, ProtocolMode, SECONDS_PER_DAY,
};
use crate::topology::{NodeId, NodeKind, Topology, TopologyError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

fn invalid(field: &str, reason: impl Into<String>) -> SimError {
    SimError::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Shape of the distribution tree, expanded into a [`Topology`] at run time.
///
/// `server_levels[0]` servers register under the origin, each further level
/// registers round-robin under the previous one, and leaf clients register
/// round-robin under the deepest server level. `workgroup_clients` register
/// directly under the origin (the standalone-machine case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    #[serde(default = "default_server_levels")]
    pub server_levels: Vec<usize>,
    #[serde(default = "default_leaf_clients")]
    pub leaf_clients: usize,
    #[serde(default)]
    pub workgroup_clients: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bps: f64,
    #[serde(default = "PowerProfile::server_default")]
    pub origin_power: PowerProfile,
    #[serde(default = "PowerProfile::server_default")]
    pub server_power: PowerProfile,
    #[serde(default = "PowerProfile::client_default")]
    pub client_power: PowerProfile,
}

fn default_server_levels() -> Vec<usize> {
    vec![1]
}

fn default_leaf_clients() -> usize {
    10
}

/// 1 MiB/s on every link.
fn default_bandwidth() -> f64 {
    1_048_576.0
}

impl Default for TopologySpec {
    fn default() -> Self {
        TopologySpec {
            server_levels: default_server_levels(),
            leaf_clients: default_leaf_clients(),
            workgroup_clients: 0,
            bandwidth_bps: default_bandwidth(),
            origin_power: PowerProfile::server_default(),
            server_power: PowerProfile::server_default(),
            client_power: PowerProfile::client_default(),
        }
    }
}

impl TopologySpec {
    pub fn power_for(&self, kind: NodeKind) -> PowerProfile {
        match kind {
            NodeKind::Origin => self.origin_power,
            NodeKind::UpdateServer => self.server_power,
            NodeKind::Client => self.client_power,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.server_levels.contains(&0) {
            return Err(invalid(
                "server_levels",
                "levels must have at least one server",
            ));
        }
        if self.server_levels.len() > 3 {
            return Err(invalid(
                "server_levels",
                format!(
                    "{} chained server levels exceed the limit of 3",
                    self.server_levels.len()
                ),
            ));
        }
        if self.leaf_clients > 0 && self.server_levels.is_empty() {
            return Err(invalid(
                "servers",
                "leaf clients need at least one update server",
            ));
        }
        if !(self.bandwidth_bps > 0.0) {
            return Err(invalid(
                "bandwidth_bps",
                format!("must be positive, got {}", self.bandwidth_bps),
            ));
        }
        for (field, power) in [
            ("origin_power", &self.origin_power),
            ("server_power", &self.server_power),
            ("client_power", &self.client_power),
        ] {
            power
                .validate()
                .map_err(|e| invalid(field, e.to_string()))?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Topology, SimError> {
        self.validate()?;
        let as_config = |e: TopologyError| invalid("topology", e.to_string());
        let mut topo = Topology::new();
        let origin = topo
            .add_node(NodeKind::Origin, self.origin_power)
            .map_err(as_config)?;
        let mut previous = vec![origin];
        for &count in &self.server_levels {
            let mut level = Vec::with_capacity(count);
            for i in 0..count {
                let s = topo
                    .add_node(NodeKind::UpdateServer, self.server_power)
                    .map_err(as_config)?;
                topo.register(s, previous[i % previous.len()], self.bandwidth_bps)
                    .map_err(as_config)?;
                level.push(s);
            }
            previous = level;
        }
        for i in 0..self.leaf_clients {
            let c = topo
                .add_node(NodeKind::Client, self.client_power)
                .map_err(as_config)?;
            topo.register(c, previous[i % previous.len()], self.bandwidth_bps)
                .map_err(as_config)?;
        }
        for _ in 0..self.workgroup_clients {
            let c = topo
                .add_node(NodeKind::Client, self.client_power)
                .map_err(as_config)?;
            topo.register(c, origin, self.bandwidth_bps)
                .map_err(as_config)?;
        }
        Ok(topo)
    }
}

/// Everything one run needs: topology shape, release and poll schedules,
/// message sizes, protocol mode, horizon and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub horizon_s: f64,
    #[serde(default = "default_mode")]
    pub mode: ProtocolMode,
    #[serde(default)]
    pub topology: TopologySpec,
    #[serde(default)]
    pub releases: Vec<UpdateArtifact>,
    #[serde(default)]
    pub poll: PollSchedule,
    #[serde(default)]
    pub sizes: MessageSizes,
    #[serde(default)]
    pub approval: ApprovalPolicy,
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> ProtocolMode {
    ProtocolMode::Pull
}

impl ScenarioConfig {
    /// Same run with the other protocol.
    pub fn with_mode(&self, mode: ProtocolMode) -> Self {
        let mut clone = self.clone();
        clone.mode = mode;
        clone
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.horizon_s > 0.0) {
            return Err(invalid(
                "horizon_s",
                format!("must be positive, got {}", self.horizon_s),
            ));
        }
        self.topology.validate()?;
        self.poll
            .validate()
            .map_err(|e| invalid("poll", e.to_string()))?;
        self.approval
            .validate()
            .map_err(|e| invalid("approval", e))?;
        if self.sizes.signal_bytes == 0
            || self.sizes.request_bytes == 0
            || self.sizes.catalog_header_bytes == 0
        {
            return Err(invalid("sizes", "message sizes must be positive"));
        }
        if self.sizes.signal_bytes > self.sizes.request_bytes
            || self.sizes.signal_bytes > self.sizes.catalog_header_bytes
        {
            return Err(invalid(
                "signal_bytes",
                "the signal must be the smallest message in the run",
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for artifact in &self.releases {
            artifact
                .validate()
                .map_err(|e| invalid("releases", e.to_string()))?;
            if !seen.insert(artifact.id) {
                return Err(invalid(
                    "releases",
                    format!("duplicate update id {}", artifact.id),
                ));
            }
            if artifact.release_time >= self.horizon_s {
                return Err(invalid(
                    "releases",
                    format!(
                        "update {} released at {} s, at or past the horizon {} s",
                        artifact.id, artifact.release_time, self.horizon_s
                    ),
                ));
            }
            if self.sizes.signal_bytes > artifact.metadata_bytes {
                return Err(invalid(
                    "signal_bytes",
                    format!("signal larger than metadata of update {}", artifact.id),
                ));
            }
        }
        Ok(())
    }
}

/// Knobs for the two reference scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub servers: usize,
    pub clients_per_server: usize,
    pub bandwidth_bps: f64,
    pub metadata_bytes: u64,
    pub payload_bytes: u64,
    pub signal_bytes: u64,
    pub horizon_days: u64,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            servers: 1,
            clients_per_server: 10,
            bandwidth_bps: default_bandwidth(),
            metadata_bytes: 2 * 1024,
            payload_bytes: 10 * 1024 * 1024,
            signal_bytes: 64,
            horizon_days: 7,
            seed: 0,
        }
    }
}

impl ScenarioParams {
    fn base_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            horizon_s: self.horizon_days as f64 * SECONDS_PER_DAY,
            mode: ProtocolMode::Pull,
            topology: TopologySpec {
                server_levels: vec![self.servers],
                leaf_clients: self.servers * self.clients_per_server,
                workgroup_clients: 0,
                bandwidth_bps: self.bandwidth_bps,
                ..TopologySpec::default()
            },
            releases: Vec::new(),
            poll: PollSchedule::default(),
            sizes: MessageSizes {
                signal_bytes: self.signal_bytes,
                ..MessageSizes::default()
            },
            approval: ApprovalPolicy::AutoApproveAll,
            seed: self.seed,
        }
    }

    fn artifact(&self, id: u64, release_time: f64) -> UpdateArtifact {
        UpdateArtifact {
            id: UpdateId(id),
            classification: UpdateClassification::ALL
                [(id as usize - 1) % UpdateClassification::ALL.len()],
            metadata_bytes: self.metadata_bytes,
            payload_bytes: self.payload_bytes,
            release_time,
        }
    }
}

/// One release every day, just after midnight, so the same-day 15:00 poll
/// already sees it and both protocols carry identical payload traffic.
pub fn scenario_daily(params: &ScenarioParams) -> ScenarioConfig {
    let mut config = params.base_config();
    config.releases = (0..params.horizon_days)
        .map(|k| params.artifact(k + 1, k as f64 * SECONDS_PER_DAY + 1.0))
        .collect();
    config
}

/// A single release in the whole horizon, mid-week at noon.
pub fn scenario_weekly(params: &ScenarioParams) -> ScenarioConfig {
    let mut config = params.base_config();
    let release_day = params.horizon_days / 2;
    config.releases = vec![params.artifact(1, release_day as f64 * SECONDS_PER_DAY + 43_200.0)];
    config
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Publish(Vec<UpdateArtifact>),
    PollFire(NodeId),
    MessageArrival(Message),
    TransferComplete(Message),
}

/// A queued occurrence. `(time, seq)` totally orders all events; `seq` is
/// the monotone insertion counter that breaks time ties deterministically.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    /// Part of the initial register-and-synchronize traffic.
    pub registration: bool,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One row of the message trace, in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time_s: f64,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: &'static str,
    pub size_bytes: u64,
    pub registration: bool,
}

/// Point on the cumulative system-energy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub time_s: f64,
    pub cumulative_j: f64,
}

/// Message totals by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MessageCounts {
    pub poll_check: u64,
    pub catalog_request: u64,
    pub catalog_response: u64,
    pub status_report: u64,
    pub update_signal: u64,
    pub download_request: u64,
    pub download_payload: u64,
}

impl MessageCounts {
    fn record(&mut self, kind: &MessageKind) {
        match kind {
            MessageKind::PollCheck => self.poll_check += 1,
            MessageKind::CatalogRequest => self.catalog_request += 1,
            MessageKind::CatalogResponse { .. } => self.catalog_response += 1,
            MessageKind::StatusReport => self.status_report += 1,
            MessageKind::UpdateSignal { .. } => self.update_signal += 1,
            MessageKind::DownloadRequest { .. } => self.download_request += 1,
            MessageKind::DownloadPayload { .. } => self.download_payload += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.poll_check
            + self.catalog_request
            + self.catalog_response
            + self.status_report
            + self.update_signal
            + self.download_request
            + self.download_payload
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub ledgers: BTreeMap<NodeId, ActivityLedger>,
    pub node_energy_j: BTreeMap<NodeId, f64>,
    pub total_energy_j: f64,
    pub counts: MessageCounts,
    /// Messages belonging to the initial synchronization exchanges.
    pub registration_messages: u64,
    /// Bytes moved in DownloadPayload messages.
    pub payload_bytes_transferred: u64,
    pub inventories: BTreeMap<NodeId, ClientInventory>,
    pub node_kinds: BTreeMap<NodeId, NodeKind>,
    pub trace: Vec<TraceRecord>,
    pub energy_series: Vec<EnergySample>,
}

impl RunResult {
    pub fn messages_after_registration(&self) -> u64 {
        self.counts.total() - self.registration_messages
    }
}

/// Integrates total system draw over time, sampling at event boundaries and
/// daily midnight ticks. Between samples the in-flight transfer set is
/// constant, so the cumulative curve is exactly piecewise linear.
struct EnergyMeter {
    draw_w: f64,
    cumulative_j: f64,
    last_t: f64,
    next_midnight: f64,
    samples: Vec<EnergySample>,
}

impl EnergyMeter {
    fn new(idle_draw_w: f64) -> Self {
        EnergyMeter {
            draw_w: idle_draw_w,
            cumulative_j: 0.0,
            last_t: 0.0,
            next_midnight: SECONDS_PER_DAY,
            samples: vec![EnergySample {
                time_s: 0.0,
                cumulative_j: 0.0,
            }],
        }
    }

    fn advance(&mut self, to: f64) {
        while self.next_midnight < to {
            let midnight = self.next_midnight;
            self.cumulative_j += self.draw_w * (midnight - self.last_t);
            self.last_t = midnight;
            self.push_sample(midnight);
            self.next_midnight += SECONDS_PER_DAY;
        }
        self.cumulative_j += self.draw_w * (to - self.last_t);
        self.last_t = to;
        self.push_sample(to);
    }

    fn push_sample(&mut self, t: f64) {
        match self.samples.last() {
            Some(last) if last.time_s == t => {}
            _ => self.samples.push(EnergySample {
                time_s: t,
                cumulative_j: self.cumulative_j,
            }),
        }
    }
}

struct Simulation {
    engine: ProtocolEngine,
    horizon_s: f64,
    poll_period: f64,
    queue: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    ledgers: Vec<ActivityLedger>,
    meter: EnergyMeter,
    counts: MessageCounts,
    registration_messages: u64,
    payload_bytes: u64,
    trace: Vec<TraceRecord>,
}

impl Simulation {
    fn schedule(&mut self, time: f64, registration: bool, kind: EventKind) {
        let event = Event {
            time,
            seq: self.next_seq,
            registration,
            kind,
        };
        self.next_seq += 1;
        self.queue.push(Reverse(event));
    }

    fn surplus(&self, node: NodeId, phase: Phase) -> f64 {
        let power = self.engine.topology().power(node);
        match phase {
            Phase::Tx => power.tx_w - power.idle_w,
            Phase::Rx => power.rx_w - power.idle_w,
        }
    }

    /// Puts a message on the wire at `now`: accrues Tx at the source and Rx
    /// at the destination for the transfer duration (clipped at the
    /// horizon), raises the meter draw, and schedules the delivery.
    fn emit(&mut self, now: f64, msg: Message, registration: bool) -> Result<(), SimError> {
        let topo = self.engine.topology();
        // the link is keyed by whichever endpoint is the child
        let child = if topo.parent(msg.src) == Some(msg.dst) {
            msg.src
        } else {
            msg.dst
        };
        let bandwidth = topo
            .link_bandwidth(child)
            .map_err(|e| invalid("topology", e.to_string()))?;
        let duration = transfer_time(msg.size_bytes, bandwidth)?;
        let active = duration.min(self.horizon_s - now).max(0.0);
        self.ledgers[msg.src.0].accrue(Phase::Tx, active)?;
        self.ledgers[msg.dst.0].accrue(Phase::Rx, active)?;
        self.meter.draw_w += self.surplus(msg.src, Phase::Tx) + self.surplus(msg.dst, Phase::Rx);
        self.counts.record(&msg.kind);
        if registration {
            self.registration_messages += 1;
        }
        if let MessageKind::DownloadPayload { .. } = msg.kind {
            self.payload_bytes += msg.size_bytes;
        }
        self.trace.push(TraceRecord {
            time_s: now,
            src: msg.src,
            dst: msg.dst,
            kind: msg.kind.label(),
            size_bytes: msg.size_bytes,
            registration,
        });
        let arrival = now + duration;
        if arrival <= self.horizon_s {
            let kind = match msg.kind {
                MessageKind::DownloadPayload { .. } => EventKind::TransferComplete(msg),
                _ => EventKind::MessageArrival(msg),
            };
            self.schedule(arrival, registration, kind);
        }
        // a transfer cut off by the horizon keeps its endpoints active to
        // the end; the meter stops integrating there anyway
        Ok(())
    }

    fn handle(&mut self, event: Event) -> Result<(), SimError> {
        let now = event.time;
        let emitted = match event.kind {
            EventKind::Publish(artifacts) => {
                self.engine.step(now, &ProtocolInput::Publish(artifacts))?
            }
            EventKind::PollFire(node) => {
                let out = self.engine.step(now, &ProtocolInput::PollFire(node))?;
                let next = now + self.poll_period;
                if next < self.horizon_s {
                    self.schedule(next, false, EventKind::PollFire(node));
                }
                out
            }
            EventKind::MessageArrival(msg) | EventKind::TransferComplete(msg) => {
                // transfer over: endpoints go back to idle
                self.meter.draw_w -=
                    self.surplus(msg.src, Phase::Tx) + self.surplus(msg.dst, Phase::Rx);
                self.engine.step(now, &ProtocolInput::Deliver(msg))?
            }
        };
        for msg in emitted {
            self.emit(now, msg, event.registration)?;
        }
        Ok(())
    }
}

/// Runs one scenario to completion. Identical configs produce bit-identical
/// results.
///
/// ```
/// use updatesim::protocol::ProtocolMode;
/// use updatesim::simulator::{compare, run, scenario_weekly, ScenarioParams};
///
/// let config = scenario_weekly(&ScenarioParams::default());
/// let pull = run(&config).unwrap();
/// let push = run(&config.with_mode(ProtocolMode::Push)).unwrap();
/// let report = compare(&pull, &push).unwrap();
/// assert!(report.energy_delta_j > 0.0); // the push arm saves energy
/// ```
pub fn run(config: &ScenarioConfig) -> Result<RunResult, SimError> {
    config.validate()?;
    let topology = config.topology.build()?;
    let engine = ProtocolEngine::new(
        topology,
        config.mode,
        config.sizes,
        config.approval.clone(),
        &config.releases,
    );
    let idle_draw: f64 = engine.topology().nodes().map(|n| n.power.idle_w).sum();
    let node_count = engine.topology().node_count();
    let mut sim = Simulation {
        engine,
        horizon_s: config.horizon_s,
        queue: BinaryHeap::new(),
        next_seq: 0,
        ledgers: vec![ActivityLedger::new(); node_count],
        meter: EnergyMeter::new(idle_draw),
        counts: MessageCounts::default(),
        registration_messages: 0,
        payload_bytes: 0,
        trace: Vec::new(),
        poll_period: config.poll.period_s,
    };

    // initial synchronization: both modes start from the same exchanges
    for msg in sim.engine.initial_sync_requests() {
        sim.emit(0.0, msg, true)?;
    }
    // poll schedule (pull mode only); each fire chains the next one
    if config.mode == ProtocolMode::Pull {
        let firsts: Vec<(NodeId, f64)> = sim
            .engine
            .topology()
            .nodes()
            .filter(|n| n.kind != NodeKind::Origin)
            .map(|n| {
                let hops = sim
                    .engine
                    .topology()
                    .hops_to_origin(n.id)
                    .expect("non-origin nodes are registered");
                (n.id, config.poll.first_fire(hops))
            })
            .collect();
        for (node, first) in firsts {
            if first < config.horizon_s {
                sim.schedule(first, false, EventKind::PollFire(node));
            }
        }
    }
    // publish schedule, one event per distinct release instant
    let mut releases = config.releases.clone();
    releases.sort_by(|a, b| {
        a.release_time
            .total_cmp(&b.release_time)
            .then(a.id.cmp(&b.id))
    });
    let mut batch: Vec<UpdateArtifact> = Vec::new();
    for artifact in releases {
        if let Some(first) = batch.first() {
            if first.release_time != artifact.release_time {
                let time = first.release_time;
                sim.schedule(time, false, EventKind::Publish(std::mem::take(&mut batch)));
            }
        }
        batch.push(artifact);
    }
    if let Some(first) = batch.first() {
        let time = first.release_time;
        sim.schedule(time, false, EventKind::Publish(std::mem::take(&mut batch)));
    }

    while let Some(Reverse(event)) = sim.queue.pop() {
        if event.time > config.horizon_s {
            break;
        }
        sim.meter.advance(event.time);
        sim.handle(event)?;
    }
    sim.meter.advance(config.horizon_s);

    let topo = sim.engine.topology();
    let mut ledgers = BTreeMap::new();
    let mut powers = BTreeMap::new();
    let mut node_energy_j = BTreeMap::new();
    let mut inventories = BTreeMap::new();
    let mut node_kinds = BTreeMap::new();
    for node in topo.nodes() {
        let mut ledger = sim.ledgers[node.id.0];
        ledger.finalize(config.horizon_s)?;
        node_energy_j.insert(node.id, energy::node_energy(&ledger, &node.power)?);
        ledgers.insert(node.id, ledger);
        powers.insert(node.id, node.power);
        node_kinds.insert(node.id, node.kind);
        if node.kind == NodeKind::Client {
            inventories.insert(node.id, sim.engine.inventory(node.id).clone());
        }
    }
    let total_energy_j = energy::total_energy(&ledgers, &powers)?;

    Ok(RunResult {
        config: config.clone(),
        ledgers,
        node_energy_j,
        total_energy_j,
        counts: sim.counts,
        registration_messages: sim.registration_messages,
        payload_bytes_transferred: sim.payload_bytes,
        inventories,
        node_kinds,
        trace: sim.trace,
        energy_series: sim.meter.samples,
    })
}

/// One arm of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub mode: ProtocolMode,
    pub total_energy_j: f64,
    pub message_count: u64,
    pub update_signals: u64,
    pub payload_bytes: u64,
    pub series: Vec<EnergySample>,
}

impl ArmSummary {
    fn of(result: &RunResult) -> Self {
        ArmSummary {
            mode: result.config.mode,
            total_energy_j: result.total_energy_j,
            message_count: result.counts.total(),
            update_signals: result.counts.update_signal,
            payload_bytes: result.payload_bytes_transferred,
            series: result.energy_series.clone(),
        }
    }
}

/// Pull-vs-push comparison over two runs of the same configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub first: ArmSummary,
    pub second: ArmSummary,
    /// `first - second`, computed from per-node ledger differences rather
    /// than by subtracting the (much larger) totals.
    pub energy_delta_j: f64,
    /// Delta as a percentage of the first arm's total.
    pub energy_delta_pct: f64,
    pub message_count_delta: i64,
}

/// Compares two runs whose configs are identical except for the protocol
/// mode, reporting the energy and message-count differences.
pub fn compare(a: &RunResult, b: &RunResult) -> Result<ComparisonReport, SimError> {
    if a.config.with_mode(b.config.mode) != b.config {
        return Err(SimError::IncomparableRuns(
            "configs differ beyond the protocol mode".into(),
        ));
    }
    // same config shape implies the same node set and power profiles
    let mut delta = 0.0;
    for (id, la) in &a.ledgers {
        let lb = &b.ledgers[id];
        let power = a.config.topology.power_for(a.node_kinds[id]);
        delta += (power.tx_w - power.idle_w) * (la.t_tx - lb.t_tx)
            + (power.rx_w - power.idle_w) * (la.t_rx - lb.t_rx);
    }
    let pct = if a.total_energy_j != 0.0 {
        100.0 * delta / a.total_energy_j
    } else {
        0.0
    };
    Ok(ComparisonReport {
        first: ArmSummary::of(a),
        second: ArmSummary::of(b),
        energy_delta_j: delta,
        energy_delta_pct: pct,
        message_count_delta: a.counts.total() as i64 - b.counts.total() as i64,
    })
}
