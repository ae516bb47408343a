//! The update-distribution hierarchy: one origin server at the root, update
//! servers cached below it, clients at the leaves.
//!
//! Registration links always form a tree rooted at the origin and the chain
//! of update servers between any node and the origin is limited to three.
//! Clients do not count toward the limit; a client registered directly under
//! the origin models the standalone (workgroup) case. The tree is built
//! top-down: a parent must be the origin or already registered itself.

use std::fmt;

use thiserror::Error;

use crate::energy::PowerProfile;

/// Maximum number of chained update servers between any node and the origin.
pub const MAX_SERVER_DEPTH: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("topology already has an origin node")]
    DuplicateOrigin,
    #[error("node {0} is already registered")]
    AlreadyRegistered(NodeId),
    #[error("registering {child} under {parent} would chain {depth} update servers (limit {MAX_SERVER_DEPTH})")]
    DepthExceeded {
        child: NodeId,
        parent: NodeId,
        depth: usize,
    },
    #[error("registering {child} under {parent} would create a cycle")]
    CycleDetected { child: NodeId, parent: NodeId },
    #[error("node {0} cannot act as a parent: {1}")]
    InvalidParent(NodeId, &'static str),
    #[error("link bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
    #[error("node {0} is not registered")]
    Unregistered(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

/// Dense index of a node within one [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeKind {
    Origin,
    UpdateServer,
    Client,
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Origin => "origin",
            NodeKind::UpdateServer => "update_server",
            NodeKind::Client => "client",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub power: PowerProfile,
}

/// Registration link from a child to its parent, with the link bandwidth in
/// bytes per second. Keyed by the child: each registered node has exactly
/// one upstream link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub child: NodeId,
    pub parent: NodeId,
    pub bandwidth_bps: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    // links[i] is the upstream link of node i, if registered
    links: Vec<Option<Link>>,
}

impl Topology {
    pub fn new() -> Self {
        Topology::default()
    }

    /// Adds an unregistered node of the given kind. At most one origin may
    /// exist; the origin needs no registration.
    pub fn add_node(
        &mut self,
        kind: NodeKind,
        power: PowerProfile,
    ) -> Result<NodeId, TopologyError> {
        if kind == NodeKind::Origin && self.origin().is_some() {
            return Err(TopologyError::DuplicateOrigin);
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            id,
            kind,
            parent: None,
            power,
        });
        self.links.push(None);
        Ok(id)
    }

    /// Registers `child` under `parent` with the given link bandwidth.
    ///
    /// The parent must be the origin or already registered, so the links
    /// always form a tree rooted at the origin; clients cannot be parents;
    /// the resulting update-server chain must stay within
    /// [`MAX_SERVER_DEPTH`]. Rejected calls leave the topology unchanged.
    pub fn register(
        &mut self,
        child: NodeId,
        parent: NodeId,
        bandwidth_bps: f64,
    ) -> Result<(), TopologyError> {
        let child_node = self.node(child)?;
        let parent_node = self.node(parent)?;
        if child == parent {
            return Err(TopologyError::CycleDetected { child, parent });
        }
        if child_node.kind == NodeKind::Origin {
            // the origin is the root; it is attached by construction
            return Err(TopologyError::AlreadyRegistered(child));
        }
        if child_node.parent.is_some() {
            return Err(TopologyError::AlreadyRegistered(child));
        }
        if parent_node.kind == NodeKind::Client {
            return Err(TopologyError::InvalidParent(
                parent,
                "clients cannot serve updates",
            ));
        }
        if parent_node.kind != NodeKind::Origin && parent_node.parent.is_none() {
            return Err(TopologyError::InvalidParent(
                parent,
                "parent is not registered yet",
            ));
        }
        if !(bandwidth_bps > 0.0) {
            return Err(TopologyError::InvalidBandwidth(bandwidth_bps));
        }
        // the ancestor chain of the parent must not contain the child
        let mut cursor = Some(parent);
        while let Some(n) = cursor {
            if n == child {
                return Err(TopologyError::CycleDetected { child, parent });
            }
            cursor = self.node(n)?.parent;
        }
        let parent_servers = self.server_depth(parent)?;
        let depth = parent_servers + usize::from(child_node.kind == NodeKind::UpdateServer);
        if depth > MAX_SERVER_DEPTH {
            return Err(TopologyError::DepthExceeded {
                child,
                parent,
                depth,
            });
        }
        self.nodes[child.0].parent = Some(parent);
        self.links[child.0] = Some(Link {
            child,
            parent,
            bandwidth_bps,
        });
        Ok(())
    }

    /// Number of registration links between `node` and the origin.
    pub fn hops_to_origin(&self, node: NodeId) -> Result<usize, TopologyError> {
        let n = self.node(node)?;
        if n.kind != NodeKind::Origin && n.parent.is_none() {
            return Err(TopologyError::Unregistered(node));
        }
        let mut hops = 0;
        let mut cursor = self.nodes[node.0].parent;
        while let Some(id) = cursor {
            hops += 1;
            cursor = self.nodes[id.0].parent;
        }
        Ok(hops)
    }

    /// Number of update servers on the path from `node` (inclusive, if it is
    /// one) up to the origin (exclusive). The origin itself is depth 0.
    pub fn server_depth(&self, node: NodeId) -> Result<usize, TopologyError> {
        let n = self.node(node)?;
        if n.kind != NodeKind::Origin && n.parent.is_none() {
            return Err(TopologyError::Unregistered(node));
        }
        let mut depth = 0;
        let mut cursor = Some(node);
        while let Some(id) = cursor {
            let n = &self.nodes[id.0];
            if n.kind == NodeKind::UpdateServer {
                depth += 1;
            }
            cursor = n.parent;
        }
        Ok(depth)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, TopologyError> {
        self.nodes.get(id.0).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn power(&self, id: NodeId) -> &PowerProfile {
        &self.nodes[id.0].power
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    /// Bandwidth of the upstream link of `child`, in bytes per second.
    pub fn link_bandwidth(&self, child: NodeId) -> Result<f64, TopologyError> {
        self.links
            .get(child.0)
            .ok_or(TopologyError::UnknownNode(child))?
            .map(|l| l.bandwidth_bps)
            .ok_or(TopologyError::Unregistered(child))
    }

    pub fn origin(&self) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::Origin)
            .map(|n| n.id)
    }

    /// Directly registered children of `id`, in id order.
    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.parent == Some(id))
            .map(|n| n.id)
            .collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.iter().flatten()
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().flatten().count()
    }

    /// True once every non-origin node has been registered.
    pub fn fully_registered(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.kind == NodeKind::Origin || n.parent.is_some())
    }
}
