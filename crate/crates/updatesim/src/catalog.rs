//! Published updates and what each node knows about them.
//!
//! An update has two parts: a small metadata record that travels in catalog
//! responses, and the payload itself, transferred only by an explicit
//! download. A [`Catalog`] holds metadata only. Clients track their own
//! state in a [`ClientInventory`] (installed / failed / needed, pairwise
//! disjoint), and an [`ApprovalPolicy`] stands in for the administrator who
//! would approve or decline updates by hand.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("update {0} is already published")]
    DuplicateUpdateId(UpdateId),
    #[error("update {0} is not in the needed set")]
    NotNeeded(UpdateId),
    #[error("invalid update artifact {id}: {reason}")]
    InvalidArtifact { id: UpdateId, reason: String },
}

/// Identifier of one published update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UpdateId(pub u64);

impl fmt::Display for UpdateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateClassification {
    Critical,
    Definition,
    Security,
    Rollup,
    ServicePack,
    Tool,
}

impl UpdateClassification {
    pub const ALL: [UpdateClassification; 6] = [
        UpdateClassification::Critical,
        UpdateClassification::Definition,
        UpdateClassification::Security,
        UpdateClassification::Rollup,
        UpdateClassification::ServicePack,
        UpdateClassification::Tool,
    ];
}

/// One published update: identity, classification, the size of its metadata
/// record and of its payload, and when it is released.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateArtifact {
    pub id: UpdateId,
    pub classification: UpdateClassification,
    pub metadata_bytes: u64,
    pub payload_bytes: u64,
    /// Seconds since run start.
    pub release_time: f64,
}

impl UpdateArtifact {
    pub fn new(
        id: UpdateId,
        classification: UpdateClassification,
        metadata_bytes: u64,
        payload_bytes: u64,
        release_time: f64,
    ) -> Result<Self, CatalogError> {
        let artifact = UpdateArtifact {
            id,
            classification,
            metadata_bytes,
            payload_bytes,
            release_time,
        };
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let fail = |reason: String| {
            Err(CatalogError::InvalidArtifact {
                id: self.id,
                reason,
            })
        };
        if self.metadata_bytes == 0 {
            return fail("metadata_bytes must be positive".into());
        }
        if self.payload_bytes == 0 {
            return fail("payload_bytes must be positive".into());
        }
        if self.metadata_bytes > self.payload_bytes {
            return fail(format!(
                "metadata ({} B) larger than payload ({} B)",
                self.metadata_bytes, self.payload_bytes
            ));
        }
        if !(self.release_time >= 0.0) {
            return fail(format!(
                "release_time must be >= 0, got {}",
                self.release_time
            ));
        }
        Ok(())
    }
}

/// Metadata records a node knows about, ordered by release time then id.
/// Holds no payload bytes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    entries: BTreeMap<UpdateId, UpdateArtifact>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    /// Inserts a metadata record. Re-learning an already known entry is a
    /// no-op; publishing is gated separately by [`UpdateStore::publish`].
    pub fn insert(&mut self, artifact: UpdateArtifact) {
        self.entries.entry(artifact.id).or_insert(artifact);
    }

    pub fn contains(&self, id: UpdateId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn get(&self, id: UpdateId) -> Option<&UpdateArtifact> {
        self.entries.get(&id)
    }

    pub fn ids(&self) -> BTreeSet<UpdateId> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by (release_time, id).
    pub fn entries(&self) -> Vec<&UpdateArtifact> {
        let mut out: Vec<&UpdateArtifact> = self.entries.values().collect();
        out.sort_by(|a, b| {
            a.release_time
                .total_cmp(&b.release_time)
                .then(a.id.cmp(&b.id))
        });
        out
    }
}

/// The catalog plus the set of payloads a node actually holds. The origin
/// fills it by publishing; servers fill it by downloading from upstream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStore {
    pub catalog: Catalog,
    payloads: BTreeSet<UpdateId>,
}

impl UpdateStore {
    pub fn new() -> Self {
        UpdateStore::default()
    }

    /// Publishes a new artifact at the origin: metadata goes into the
    /// catalog, the payload is held alongside it.
    pub fn publish(&mut self, artifact: UpdateArtifact) -> Result<(), CatalogError> {
        artifact.validate()?;
        if self.catalog.contains(artifact.id) {
            return Err(CatalogError::DuplicateUpdateId(artifact.id));
        }
        let id = artifact.id;
        self.catalog.insert(artifact);
        self.payloads.insert(id);
        Ok(())
    }

    /// Records that this node now holds the payload for `id`.
    pub fn store_payload(&mut self, id: UpdateId) {
        self.payloads.insert(id);
    }

    pub fn has_payload(&self, id: UpdateId) -> bool {
        self.payloads.contains(&id)
    }

    /// Ids this node can serve downstream: known metadata backed by a held
    /// payload.
    pub fn advertised(&self) -> BTreeSet<UpdateId> {
        self.catalog
            .ids()
            .intersection(&self.payloads)
            .copied()
            .collect()
    }
}

/// Stand-in for the administrator's approve/decline step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ApprovalPolicy {
    /// Every published update is approved immediately.
    #[default]
    AutoApproveAll,
    /// Approved once `delay_s` seconds have passed since release.
    AutoApproveAfterDelay { delay_s: f64 },
    /// Everything approved except the listed ids.
    DenyList { ids: BTreeSet<UpdateId> },
}

impl ApprovalPolicy {
    pub fn approves(&self, artifact: &UpdateArtifact, now: f64) -> bool {
        match self {
            ApprovalPolicy::AutoApproveAll => true,
            ApprovalPolicy::AutoApproveAfterDelay { delay_s } => {
                now >= artifact.release_time + delay_s
            }
            ApprovalPolicy::DenyList { ids } => !ids.contains(&artifact.id),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let ApprovalPolicy::AutoApproveAfterDelay { delay_s } = self {
            if !(*delay_s >= 0.0) {
                return Err(format!("approval delay must be >= 0, got {delay_s}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstallOutcome {
    Installed,
    Failed,
}

/// What one client has installed, what failed to install, and what it still
/// needs. The three sets stay pairwise disjoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClientInventory {
    pub installed: BTreeSet<UpdateId>,
    pub failed: BTreeSet<UpdateId>,
    pub needed: BTreeSet<UpdateId>,
}

impl ClientInventory {
    pub fn new() -> Self {
        ClientInventory::default()
    }

    /// Moves `id` out of the needed set into installed or failed.
    pub fn record_result(
        &mut self,
        id: UpdateId,
        outcome: InstallOutcome,
    ) -> Result<(), CatalogError> {
        if !self.needed.remove(&id) {
            return Err(CatalogError::NotNeeded(id));
        }
        match outcome {
            InstallOutcome::Installed => self.installed.insert(id),
            InstallOutcome::Failed => self.failed.insert(id),
        };
        Ok(())
    }

    pub fn is_disjoint(&self) -> bool {
        self.installed.is_disjoint(&self.failed)
            && self.installed.is_disjoint(&self.needed)
            && self.failed.is_disjoint(&self.needed)
    }
}

/// Ids in `catalog` that are approved at `now` and that the client has
/// neither installed nor already failed to install (failed installs are not
/// retried). The caller assigns the result to `inventory.needed`.
pub fn audit(
    catalog: &Catalog,
    inventory: &ClientInventory,
    policy: &ApprovalPolicy,
    now: f64,
) -> BTreeSet<UpdateId> {
    catalog
        .entries()
        .iter()
        .filter(|a| policy.approves(a, now))
        .map(|a| a.id)
        .filter(|id| !inventory.installed.contains(id) && !inventory.failed.contains(id))
        .collect()
}
