//! Software primal phase of the blossom algorithm.
//!
//! Maintains the node registry (defect singletons and blossoms with their
//! dual variables), alternating trees and matched pairs, and resolves
//! conflicts reported by the accelerator by issuing `setDirection` /
//! `setCover` instructions back to it. Defect nodes are created lazily, the
//! first time a conflict mentions them; defects whose isolated conflicts stay
//! pre-matched in hardware never appear here at all.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::accelerator::{Conflict, DualAccelerator, GrowthDirection, PreMatchKind};
use crate::graph::Weight;
use crate::shortest_path;
use crate::{EdgeIndex, NodeIndex, VertexIndex};

/// Tight connection between two nodes, witnessed by the touching defects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    /// Defect inside the owning node.
    pub touch: VertexIndex,
    /// Defect inside the peer (or the virtual vertex for boundary matches).
    pub peer_touch: VertexIndex,
}

impl Link {
    fn reversed(self) -> Self {
        Link {
            touch: self.peer_touch,
            peer_touch: self.touch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchTarget {
    Node(NodeIndex),
    /// Matched into the boundary through a virtual (or not-yet-loaded) vertex.
    Boundary(VertexIndex),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodePosition {
    /// Lone growing root.
    Free,
    Matched {
        target: MatchTarget,
        link: Link,
    },
    Tree {
        parent: Option<(NodeIndex, Link)>,
        children: Vec<NodeIndex>,
        /// Even depth from the root: growing (+1); odd: shrinking (-1).
        positive: bool,
    },
}

/// One entry of a blossom's odd cycle: `link_to_next` connects this member to
/// the following one (wrapping around).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleMember {
    pub node: NodeIndex,
    pub link_to_next: Link,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Defect(VertexIndex),
    Blossom { cycle: Vec<CycleMember> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: NodeIndex,
    pub kind: NodeKind,
    /// Dual variable, always non-negative. Authoritative for blossoms and
    /// interior nodes only: an outermost singleton's dual lives in hardware
    /// as its defect residue (pre-matching may freeze it behind software's
    /// back), so it is read back on demand instead.
    pub dual: Weight,
    pub parent_blossom: Option<NodeIndex>,
    pub position: NodePosition,
    /// Bumped on every direction change; stale queue entries check it.
    generation: u64,
}

impl NodeRecord {
    pub fn direction(&self) -> GrowthDirection {
        match &self.position {
            NodePosition::Free => GrowthDirection::Grow,
            NodePosition::Matched { .. } => GrowthDirection::Stay,
            NodePosition::Tree { positive, .. } => {
                if *positive {
                    GrowthDirection::Grow
                } else {
                    GrowthDirection::Shrink
                }
            }
        }
    }

    fn is_matched(&self) -> bool {
        matches!(self.position, NodePosition::Matched { .. })
    }

    fn in_tree(&self) -> bool {
        matches!(self.position, NodePosition::Tree { .. })
    }
}

/// Matched defect pairs and boundary matches extracted at termination.
///
/// Every defect appears in exactly one pair, boundary match, or surviving
/// pre-matched edge. `total_weight` is the sum of syndrome-graph distances.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchingSolution {
    pub pairs: Vec<(VertexIndex, VertexIndex)>,
    pub boundary_matches: Vec<(VertexIndex, VertexIndex)>,
    /// Edges whose isolated conflicts survived to the end; included in the
    /// matching without software involvement.
    pub prematched_edges: Vec<EdgeIndex>,
    pub total_weight: Weight,
}

/// Complementary-slackness witness for one matched syndrome-graph edge:
/// the separating dual sum must equal the distance exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualCertificate {
    pub defect: VertexIndex,
    /// `None` for a boundary match.
    pub peer: Option<VertexIndex>,
    pub dual_sum: Weight,
    pub distance: Weight,
}

/// Node registry plus the zero-dual watch for shrinking nodes.
#[derive(Debug, Clone)]
pub struct PrimalState {
    nodes: Vec<Option<NodeRecord>>,
    vertex_count: usize,
    free_blossom_ids: Vec<NodeIndex>,
    next_blossom_id: NodeIndex,
    /// Lazy-deletion priority queue over shrinking nodes, keyed by
    /// `dual + shrink_offset` at push time.
    zero_watch: BinaryHeap<Reverse<(Weight, NodeIndex, u64)>>,
    shrink_offset: Weight,
    /// Conflict reports delivered from the accelerator.
    pub interactions: u64,
}

impl PrimalState {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            nodes: vec![None; 2 * vertex_count],
            vertex_count,
            free_blossom_ids: Vec::new(),
            next_blossom_id: vertex_count,
            zero_watch: BinaryHeap::new(),
            shrink_offset: 0,
            interactions: 0,
        }
    }

    pub fn node(&self, id: NodeIndex) -> Option<&NodeRecord> {
        self.nodes[id].as_ref()
    }

    /// All registry records, interior nodes included (diagnostics).
    pub fn all_nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter_map(|n| n.as_ref())
    }

    pub fn live_outer_nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes
            .iter()
            .filter_map(|n| n.as_ref())
            .filter(|n| n.parent_blossom.is_none())
    }

    fn record(&self, id: NodeIndex) -> &NodeRecord {
        self.nodes[id].as_ref().expect("node must exist")
    }

    fn record_mut(&mut self, id: NodeIndex) -> &mut NodeRecord {
        self.nodes[id].as_mut().expect("node must exist")
    }

    /// Creates the defect-singleton record for a node id first mentioned by a
    /// conflict report.
    fn ensure_node(&mut self, accel: &DualAccelerator<'_>, id: NodeIndex) {
        if self.nodes[id].is_some() {
            return;
        }
        assert!(id < self.vertex_count, "only defect singletons appear lazily");
        let state = accel.vertex_state(id);
        assert!(state.is_defect, "lazy node must be a defect vertex");
        self.nodes[id] = Some(NodeRecord {
            id,
            kind: NodeKind::Defect(id),
            dual: 0, // outer singletons read back from hardware
            parent_blossom: None,
            position: NodePosition::Free,
            generation: 0,
        });
    }

    /// Current dual variable of a live node. An outermost singleton's value
    /// is its hardware residue; everything else is tracked in software.
    pub fn node_dual(&self, accel: &DualAccelerator<'_>, id: NodeIndex) -> Weight {
        let record = self.record(id);
        if record.parent_blossom.is_none() {
            if let NodeKind::Defect(v) = record.kind {
                return accel.defect_residue(v);
            }
        }
        record.dual
    }

    /// Applies the node's structural direction to the accelerator and keeps
    /// the zero-dual watch in sync.
    fn sync_direction(&mut self, accel: &mut DualAccelerator<'_>, id: NodeIndex) {
        let direction = self.record(id).direction();
        accel.set_direction(id, direction);
        let key = self.node_dual(accel, id) + self.shrink_offset;
        let record = self.record_mut(id);
        record.generation += 1;
        if direction == GrowthDirection::Shrink {
            let entry = (key, id, record.generation);
            self.zero_watch.push(Reverse(entry));
        }
    }

    /// Advances the software-tracked (blossom) dual variables by a uniform
    /// growth; singleton residues advance inside the accelerator.
    pub fn apply_growth(&mut self, length: Weight) {
        for node in self.nodes.iter_mut().filter_map(|n| n.as_mut()) {
            if node.parent_blossom.is_none() && matches!(node.kind, NodeKind::Blossom { .. }) {
                node.dual += length * node.direction().unit();
                debug_assert!(node.dual >= 0, "dual feasibility");
            }
        }
        self.shrink_offset += length;
    }

    /// Advances only the named nodes (one-sided growth for parity fixups).
    pub fn apply_growth_subset(
        &mut self,
        accel: &DualAccelerator<'_>,
        nodes: &[NodeIndex],
        length: Weight,
    ) {
        for &id in nodes {
            if self.nodes[id].is_none() {
                continue;
            }
            if matches!(self.record(id).kind, NodeKind::Blossom { .. }) {
                let node = self.record_mut(id);
                node.dual += length * node.direction().unit();
                debug_assert!(node.dual >= 0, "dual feasibility");
            }
            let key = self.node_dual(accel, id) + self.shrink_offset;
            let node = self.record_mut(id);
            node.generation += 1;
            if node.direction() == GrowthDirection::Shrink {
                let entry = (key, id, node.generation);
                self.zero_watch.push(Reverse(entry));
            }
        }
    }

    /// Smallest current dual among shrinking outer nodes, if any.
    pub fn min_shrinking_dual(&mut self, accel: &DualAccelerator<'_>) -> Option<(NodeIndex, Weight)> {
        while let Some(&Reverse((key, id, generation))) = self.zero_watch.peek() {
            let valid = self.nodes[id].as_ref().is_some_and(|n| {
                n.generation == generation
                    && n.parent_blossom.is_none()
                    && n.direction() == GrowthDirection::Shrink
            });
            if !valid {
                self.zero_watch.pop();
                continue;
            }
            let current = key - self.shrink_offset;
            debug_assert_eq!(current, self.node_dual(accel, id));
            return Some((id, current));
        }
        None
    }

    /// Dispatches one conflict report.
    pub fn resolve(&mut self, accel: &mut DualAccelerator<'_>, conflict: &Conflict) {
        if accel.vertex_state(conflict.vertex_2).is_boundary {
            self.ensure_node(accel, conflict.node_1);
            self.resolve_conflict_boundary(
                accel,
                conflict.node_1,
                conflict.touch_1,
                conflict.vertex_2,
            );
        } else {
            self.ensure_node(accel, conflict.node_1);
            self.ensure_node(accel, conflict.node_2);
            self.resolve_conflict(
                accel,
                conflict.node_1,
                conflict.node_2,
                conflict.touch_1,
                conflict.touch_2,
            );
        }
    }

    /// Standard four-way case analysis over two conflicting outer nodes.
    pub fn resolve_conflict(
        &mut self,
        accel: &mut DualAccelerator<'_>,
        node_1: NodeIndex,
        node_2: NodeIndex,
        touch_1: VertexIndex,
        touch_2: VertexIndex,
    ) {
        assert_ne!(node_1, node_2, "a node cannot conflict with itself");
        debug_assert!(self.record(node_1).parent_blossom.is_none());
        debug_assert!(self.record(node_2).parent_blossom.is_none());
        let link = Link {
            touch: touch_1,
            peer_touch: touch_2,
        };
        let free_1 = matches!(self.record(node_1).position, NodePosition::Free);
        let free_2 = matches!(self.record(node_2).position, NodePosition::Free);

        if free_1 && free_2 {
            self.match_pair(accel, node_1, node_2, link);
            return;
        }

        if (free_1 && self.record(node_2).is_matched())
            || (free_2 && self.record(node_1).is_matched())
        {
            let (free, matched, link) = if free_1 {
                (node_1, node_2, link)
            } else {
                (node_2, node_1, link.reversed())
            };
            match self.record(matched).position.clone() {
                NodePosition::Matched {
                    target: MatchTarget::Node(peer),
                    link: match_link,
                } => {
                    // grow an alternating tree: free root, matched node
                    // shrinking, its partner growing at the leaf
                    self.record_mut(free).position = NodePosition::Tree {
                        parent: None,
                        children: vec![matched],
                        positive: true,
                    };
                    self.record_mut(matched).position = NodePosition::Tree {
                        parent: Some((free, link.reversed())),
                        children: vec![peer],
                        positive: false,
                    };
                    self.record_mut(peer).position = NodePosition::Tree {
                        parent: Some((matched, match_link.reversed())),
                        children: Vec::new(),
                        positive: true,
                    };
                    self.sync_direction(accel, matched);
                    self.sync_direction(accel, peer);
                }
                NodePosition::Matched {
                    target: MatchTarget::Boundary(_),
                    ..
                } => {
                    // augment through the boundary: the pair matches and the
                    // boundary vertex is released
                    self.match_pair(accel, free, matched, link);
                }
                _ => unreachable!(),
            }
            return;
        }

        if (free_1 && self.record(node_2).in_tree()) || (free_2 && self.record(node_1).in_tree()) {
            let in_tree = if free_1 { node_2 } else { node_1 };
            self.augment_tree(accel, in_tree);
            self.match_pair(accel, node_1, node_2, link);
            return;
        }

        let tree_1 = self.record(node_1).in_tree();
        let tree_2 = self.record(node_2).in_tree();
        if (tree_1 && self.record(node_2).is_matched())
            || (tree_2 && self.record(node_1).is_matched())
        {
            let (in_tree, matched, link) = if tree_1 {
                (node_1, node_2, link)
            } else {
                (node_2, node_1, link.reversed())
            };
            match self.record(matched).position.clone() {
                NodePosition::Matched {
                    target: MatchTarget::Node(peer),
                    link: match_link,
                } => {
                    // absorb the matched pair into the tree
                    self.record_mut(matched).position = NodePosition::Tree {
                        parent: Some((in_tree, link.reversed())),
                        children: vec![peer],
                        positive: false,
                    };
                    self.record_mut(peer).position = NodePosition::Tree {
                        parent: Some((matched, match_link.reversed())),
                        children: Vec::new(),
                        positive: true,
                    };
                    if let NodePosition::Tree { children, .. } = &mut self.record_mut(in_tree).position
                    {
                        children.push(matched);
                    }
                    self.sync_direction(accel, matched);
                    self.sync_direction(accel, peer);
                }
                NodePosition::Matched {
                    target: MatchTarget::Boundary(_),
                    ..
                } => {
                    self.augment_tree(accel, in_tree);
                    self.match_pair(accel, in_tree, matched, link);
                }
                _ => unreachable!(),
            }
            return;
        }

        assert!(tree_1 && tree_2, "conflict between {node_1} and {node_2}");
        let root_1 = self.tree_root(node_1);
        let root_2 = self.tree_root(node_2);
        if root_1 == root_2 {
            self.form_blossom(accel, node_1, node_2, link);
        } else {
            self.augment_tree(accel, node_1);
            self.augment_tree(accel, node_2);
            self.match_pair(accel, node_1, node_2, link);
        }
    }

    /// Conflict against a virtual (or fusion-boundary) vertex.
    pub fn resolve_conflict_boundary(
        &mut self,
        accel: &mut DualAccelerator<'_>,
        node: NodeIndex,
        touch: VertexIndex,
        boundary_vertex: VertexIndex,
    ) {
        if self.record(node).in_tree() {
            self.augment_tree(accel, node);
        }
        debug_assert!(matches!(self.record(node).position, NodePosition::Free));
        self.record_mut(node).position = NodePosition::Matched {
            target: MatchTarget::Boundary(boundary_vertex),
            link: Link {
                touch,
                peer_touch: boundary_vertex,
            },
        };
        self.sync_direction(accel, node);
    }

    fn match_pair(
        &mut self,
        accel: &mut DualAccelerator<'_>,
        node_1: NodeIndex,
        node_2: NodeIndex,
        link: Link,
    ) {
        self.record_mut(node_1).position = NodePosition::Matched {
            target: MatchTarget::Node(node_2),
            link,
        };
        self.record_mut(node_2).position = NodePosition::Matched {
            target: MatchTarget::Node(node_1),
            link: link.reversed(),
        };
        self.sync_direction(accel, node_1);
        self.sync_direction(accel, node_2);
    }

    fn tree_root(&self, mut node: NodeIndex) -> NodeIndex {
        loop {
            match &self.record(node).position {
                NodePosition::Tree {
                    parent: Some((p, _)),
                    ..
                } => node = *p,
                NodePosition::Tree { parent: None, .. } => return node,
                _ => unreachable!("tree_root outside a tree"),
            }
        }
    }

    fn path_to_root(&self, node: NodeIndex) -> Vec<NodeIndex> {
        let mut path = vec![node];
        let mut current = node;
        while let NodePosition::Tree {
            parent: Some((p, _)),
            ..
        } = &self.record(current).position
        {
            path.push(*p);
            current = *p;
        }
        path
    }

    fn tree_nodes(&self, root: NodeIndex) -> Vec<NodeIndex> {
        let mut all = vec![root];
        let mut cursor = 0;
        while cursor < all.len() {
            let node = all[cursor];
            cursor += 1;
            if let NodePosition::Tree { children, .. } = &self.record(node).position {
                all.extend(children.iter().copied());
            }
        }
        all
    }

    /// Flips the matching along the path from `node` to its root; the whole
    /// tree dissolves into matched pairs and `node` is left free for the
    /// caller to match against the conflict peer.
    fn augment_tree(&mut self, accel: &mut DualAccelerator<'_>, node: NodeIndex) {
        let path = self.path_to_root(node);
        debug_assert!(path.len() % 2 == 1, "augmenting from a + node");
        let root = *path.last().unwrap();
        let all = self.tree_nodes(root);
        let on_path = |id: NodeIndex| path.contains(&id);

        // negative nodes re-match: along the path to their parent, off the
        // path to their single child (their old partner)
        let mut rematch: Vec<(NodeIndex, NodeIndex, Link)> = Vec::new();
        for &id in &all {
            let NodePosition::Tree {
                parent,
                children,
                positive,
            } = &self.record(id).position
            else {
                unreachable!()
            };
            if *positive {
                continue;
            }
            if on_path(id) {
                let (parent, link) = parent.expect("negative nodes have parents");
                rematch.push((id, parent, link));
            } else {
                debug_assert_eq!(children.len(), 1, "negative node has its partner as child");
                let child = children[0];
                let NodePosition::Tree {
                    parent: Some((_, child_link)),
                    ..
                } = &self.record(child).position
                else {
                    unreachable!()
                };
                rematch.push((id, child, child_link.reversed()));
            }
        }
        // dissolve positions first, then write the new matches
        for &id in &all {
            self.record_mut(id).position = NodePosition::Free;
        }
        for (a, b, link) in rematch {
            self.match_pair(accel, a, b, link);
        }
        for &id in &all {
            if matches!(self.record(id).position, NodePosition::Free) && id != node {
                // the old root when the path has odd length > 1 is matched by
                // its path child; only `node` itself stays free
                unreachable!("augmented tree left node {id} unmatched");
            }
        }
        self.sync_direction(accel, node);
    }

    /// Collapses the odd cycle through `node_1 .. lca .. node_2` (plus the
    /// conflict edge) into a fresh blossom occupying the LCA's tree position.
    fn form_blossom(
        &mut self,
        accel: &mut DualAccelerator<'_>,
        node_1: NodeIndex,
        node_2: NodeIndex,
        link: Link,
    ) {
        let path_1 = self.path_to_root(node_1);
        let path_2 = self.path_to_root(node_2);
        let lca = *path_1
            .iter()
            .find(|n| path_2.contains(n))
            .expect("same tree");
        let side_1: Vec<NodeIndex> = path_1.iter().copied().take_while(|&n| n != lca).collect();
        let side_2: Vec<NodeIndex> = path_2.iter().copied().take_while(|&n| n != lca).collect();

        // cycle order: lca, .., node_1, node_2, .., back to lca
        let mut members: Vec<NodeIndex> = Vec::with_capacity(side_1.len() + side_2.len() + 1);
        members.push(lca);
        members.extend(side_1.iter().rev());
        members.extend(side_2.iter());
        assert!(members.len() % 2 == 1, "blossom cycles are odd");

        let parent_link_of = |state: &Self, id: NodeIndex| -> Link {
            match &state.record(id).position {
                NodePosition::Tree {
                    parent: Some((_, link)),
                    ..
                } => *link,
                _ => unreachable!("cycle members below the LCA have parents"),
            }
        };
        let mut cycle: Vec<CycleMember> = Vec::with_capacity(members.len());
        for (i, &member) in members.iter().enumerate() {
            let next = members[(i + 1) % members.len()];
            let link_to_next = if i < side_1.len() {
                // walking down side 1: next is our tree child there
                parent_link_of(self, next).reversed()
            } else if member == node_1 && next == node_2 {
                link
            } else {
                // walking up side 2 (and closing into the lca)
                parent_link_of(self, member)
            };
            cycle.push(CycleMember {
                node: member,
                link_to_next,
            });
        }

        let blossom_id = self.allocate_blossom_id();
        // the blossom takes over the LCA's place in the tree
        let lca_position = self.record(lca).position.clone();
        let NodePosition::Tree {
            parent: lca_parent,
            positive,
            ..
        } = lca_position
        else {
            unreachable!()
        };
        assert!(positive, "the LCA of two growing nodes grows");

        // children of cycle members that are not themselves in the cycle
        // re-hang under the blossom
        let mut outside_children: Vec<NodeIndex> = Vec::new();
        for &member in &members {
            let NodePosition::Tree { children, .. } = &self.record(member).position else {
                unreachable!()
            };
            for &child in children {
                if !members.contains(&child) {
                    outside_children.push(child);
                }
            }
        }
        for &child in &outside_children {
            if let NodePosition::Tree {
                parent: Some((p, _)),
                ..
            } = &mut self.record_mut(child).position
            {
                *p = blossom_id;
            }
        }
        if let Some((parent, _)) = lca_parent {
            if let NodePosition::Tree { children, .. } = &mut self.record_mut(parent).position {
                for c in children.iter_mut() {
                    if *c == lca {
                        *c = blossom_id;
                    }
                }
            }
        }

        for &member in &members {
            // freeze singleton duals from hardware as they become interior
            let frozen = match self.record(member).kind {
                NodeKind::Defect(v) => Some(accel.defect_residue(v)),
                NodeKind::Blossom { .. } => None,
            };
            let record = self.record_mut(member);
            if let Some(dual) = frozen {
                record.dual = dual;
            }
            record.parent_blossom = Some(blossom_id);
            record.position = NodePosition::Free;
            record.generation += 1;
        }
        let position = if lca_parent.is_none() && outside_children.is_empty() {
            NodePosition::Free
        } else {
            NodePosition::Tree {
                parent: lca_parent,
                children: outside_children,
                positive: true,
            }
        };
        self.nodes[blossom_id] = Some(NodeRecord {
            id: blossom_id,
            kind: NodeKind::Blossom { cycle },
            dual: 0,
            parent_blossom: None,
            position,
            generation: 0,
        });

        for &member in &members {
            accel.set_cover(member, blossom_id);
        }
        self.sync_direction(accel, blossom_id);
    }

    fn allocate_blossom_id(&mut self) -> NodeIndex {
        if let Some(id) = self.free_blossom_ids.pop() {
            return id;
        }
        let id = self.next_blossom_id;
        assert!(id < 2 * self.vertex_count, "blossom ids stay within 2|V|");
        self.next_blossom_id += 1;
        id
    }

    /// Which defects a node contains, recursively.
    fn collect_defects(&self, id: NodeIndex, out: &mut Vec<VertexIndex>) {
        match &self.record(id).kind {
            NodeKind::Defect(v) => out.push(*v),
            NodeKind::Blossom { cycle } => {
                for member in cycle {
                    self.collect_defects(member.node, out);
                }
            }
        }
    }

    fn contains_defect(&self, id: NodeIndex, defect: VertexIndex) -> bool {
        match &self.record(id).kind {
            NodeKind::Defect(v) => *v == defect,
            NodeKind::Blossom { cycle } => cycle
                .iter()
                .any(|m| self.contains_defect(m.node, defect)),
        }
    }

    /// Dissolves a shrinking blossom whose dual variable reached zero. The
    /// even-length cycle path between the members touching the tree parent
    /// and the matched child stays in the tree; the rest match pairwise.
    pub fn handle_blossom_expand(&mut self, accel: &mut DualAccelerator<'_>, blossom: NodeIndex) {
        let record = self.record(blossom).clone();
        assert!(
            matches!(record.kind, NodeKind::Blossom { .. }),
            "only blossoms expand"
        );
        assert_eq!(record.dual, 0, "expansion requires a zero dual");
        let NodeKind::Blossom { cycle } = record.kind else {
            unreachable!()
        };
        let NodePosition::Tree {
            parent: Some((parent, parent_link)),
            children,
            positive: false,
        } = record.position
        else {
            panic!("expanding blossoms are shrinking tree nodes");
        };
        debug_assert_eq!(children.len(), 1);
        let child = children[0];
        let NodePosition::Tree {
            parent: Some((_, child_link)),
            ..
        } = self.record(child).position.clone()
        else {
            unreachable!()
        };

        // hardware split: retarget every covered vertex to the member that
        // owns its touch
        let mut defects = Vec::new();
        self.collect_defects(blossom, &mut defects);
        let member_of = |state: &Self, defect: VertexIndex| -> usize {
            cycle
                .iter()
                .position(|m| state.contains_defect(m.node, defect))
                .expect("touch belongs to the cycle")
        };
        for &defect in &defects {
            let member = cycle[member_of(self, defect)].node;
            accel.set_cover(defect, member);
        }

        let n = cycle.len();
        let entry = member_of(self, parent_link.touch);
        let exit = member_of(self, child_link.peer_touch);

        // walk from entry to exit in the direction with an even edge count
        let forward_len = (exit + n - entry) % n;
        let tree_path: Vec<usize> = if forward_len % 2 == 0 {
            (0..=forward_len).map(|k| (entry + k) % n).collect()
        } else {
            (0..=n - forward_len).map(|k| (entry + n - k) % n).collect()
        };
        // oriented touch in `from`, peer touch in `to` (adjacent members)
        let link_between = |from: usize, to: usize| -> Link {
            if (from + 1) % n == to {
                cycle[from].link_to_next
            } else {
                debug_assert_eq!((to + 1) % n, from);
                cycle[to].link_to_next.reversed()
            }
        };

        // members on the tree path alternate shrink, grow, .., shrink
        for (k, &idx) in tree_path.iter().enumerate() {
            let member = cycle[idx].node;
            let parent_entry = if k == 0 {
                Some((parent, parent_link))
            } else {
                let prev_idx = tree_path[k - 1];
                Some((cycle[prev_idx].node, link_between(idx, prev_idx)))
            };
            let child_entry = if k + 1 < tree_path.len() {
                vec![cycle[tree_path[k + 1]].node]
            } else {
                vec![child]
            };
            let record = self.record_mut(member);
            record.parent_blossom = None;
            record.position = NodePosition::Tree {
                parent: parent_entry,
                children: child_entry,
                positive: k % 2 == 1,
            };
        }
        // re-link the surrounding tree
        if let NodePosition::Tree { children, .. } = &mut self.record_mut(parent).position {
            for c in children.iter_mut() {
                if *c == blossom {
                    *c = cycle[tree_path[0]].node;
                }
            }
        }
        let last_member = cycle[*tree_path.last().unwrap()].node;
        if let NodePosition::Tree {
            parent: Some((p, _)),
            ..
        } = &mut self.record_mut(child).position
        {
            *p = last_member;
        }

        // the remaining members (even count) match pairwise along the cycle
        let mut remaining: Vec<usize> = (0..n).filter(|i| !tree_path.contains(i)).collect();
        // order them walking forward from the exit so consecutive entries are
        // cycle-adjacent
        remaining.sort_unstable_by_key(|&i| (i + n - tree_path[0]) % n);
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut taken = vec![false; n];
        for &i in &remaining {
            if taken[i] {
                continue;
            }
            let next = (i + 1) % n;
            debug_assert!(remaining.contains(&next) && !taken[next]);
            taken[i] = true;
            taken[next] = true;
            pairs.push((i, next));
        }
        for (i, j) in pairs {
            let (a, b) = (cycle[i].node, cycle[j].node);
            let link = link_between(i, j);
            for id in [a, b] {
                self.record_mut(id).parent_blossom = None;
            }
            self.match_pair(accel, a, b, link);
        }

        for &idx in tree_path.iter() {
            self.sync_direction(accel, cycle[idx].node);
        }

        self.nodes[blossom] = None;
        self.free_blossom_ids.push(blossom);
    }

    /// A shrinking singleton at dual zero wedges its alternating tree; by the
    /// triangle inequality the syndrome edge between its tree parent and its
    /// child is tight, so the conflict is synthesized and resolved (forming a
    /// blossom through the exhausted singleton).
    pub fn handle_singleton_exhausted(
        &mut self,
        accel: &mut DualAccelerator<'_>,
        node: NodeIndex,
    ) {
        let record = self.record(node);
        let NodeKind::Defect(vertex) = record.kind else {
            panic!("only singletons exhaust here");
        };
        assert_eq!(accel.defect_residue(vertex), 0);
        let NodePosition::Tree {
            parent: Some((parent, parent_link)),
            children,
            positive: false,
        } = record.position.clone()
        else {
            panic!("exhausted singletons are shrinking tree nodes");
        };
        debug_assert_eq!(children.len(), 1);
        let child = children[0];
        let NodePosition::Tree {
            parent: Some((_, child_link)),
            ..
        } = self.record(child).position.clone()
        else {
            unreachable!()
        };
        self.resolve_conflict(
            accel,
            parent,
            child,
            parent_link.peer_touch,
            child_link.touch,
        );
    }

    /// Breaks matches whose boundary endpoint just stopped being boundary
    /// (newly loaded fusion layer); the affected nodes resume growing.
    pub fn break_boundary_matches(
        &mut self,
        accel: &mut DualAccelerator<'_>,
        mut is_broken: impl FnMut(VertexIndex) -> bool,
    ) -> usize {
        let ids: Vec<NodeIndex> = self
            .live_outer_nodes()
            .filter(|n| {
                matches!(
                    &n.position,
                    NodePosition::Matched {
                        target: MatchTarget::Boundary(v),
                        ..
                    } if is_broken(*v)
                )
            })
            .map(|n| n.id)
            .collect();
        for &id in &ids {
            self.record_mut(id).position = NodePosition::Free;
            self.sync_direction(accel, id);
        }
        ids.len()
    }

    /// Re-issues every live outer node's structural direction (used after
    /// one-sided growth steps).
    pub fn sync_all_directions(&mut self, accel: &mut DualAccelerator<'_>) {
        let ids: Vec<NodeIndex> = self.live_outer_nodes().map(|n| n.id).collect();
        for id in ids {
            self.sync_direction(accel, id);
        }
    }

    /// Every node of the alternating structure containing `node`: the whole
    /// tree, both ends of a matched pair, or the node alone.
    pub fn structure_of(&self, node: NodeIndex) -> Vec<NodeIndex> {
        match &self.record(node).position {
            NodePosition::Free => vec![node],
            NodePosition::Matched {
                target: MatchTarget::Node(peer),
                ..
            } => vec![node, *peer],
            NodePosition::Matched { .. } => vec![node],
            NodePosition::Tree { .. } => self.tree_nodes(self.tree_root(node)),
        }
    }

    /// Recursively resolves a matched node into defect pairs; the member
    /// chain holding `external` takes the outside connection and the rest of
    /// each odd cycle matches internally.
    fn resolve_interior(
        &self,
        id: NodeIndex,
        external: VertexIndex,
        pairs: &mut Vec<(VertexIndex, VertexIndex)>,
    ) {
        match &self.record(id).kind {
            NodeKind::Defect(v) => debug_assert_eq!(*v, external),
            NodeKind::Blossom { cycle } => {
                let n = cycle.len();
                let ext = cycle
                    .iter()
                    .position(|m| self.contains_defect(m.node, external))
                    .expect("external touch inside the blossom");
                self.resolve_interior(cycle[ext].node, external, pairs);
                // remaining 2k members pair up adjacently around the cycle
                let mut k = (ext + 1) % n;
                while k != ext {
                    let next = (k + 1) % n;
                    debug_assert_ne!(next, ext, "even remainder");
                    let link = cycle[k].link_to_next;
                    pairs.push((link.touch, link.peer_touch));
                    self.resolve_interior(cycle[k].node, link.touch, pairs);
                    self.resolve_interior(cycle[next].node, link.peer_touch, pairs);
                    k = (next + 1) % n;
                }
            }
        }
    }

    /// Collects the final matching and its dual certificates.
    ///
    /// Must run at quiescence: every live outer node matched, plus surviving
    /// pre-matched edges straight from the accelerator.
    pub fn extract_matching(
        &self,
        accel: &DualAccelerator<'_>,
    ) -> (MatchingSolution, Vec<DualCertificate>) {
        let graph = accel.graph();
        let mut solution = MatchingSolution::default();
        let mut certificates = Vec::new();
        let mut covered = vec![false; graph.vertex_count()];

        // surviving isolated conflicts first; one per defect (kind, then
        // edge id)
        let mut flags: Vec<(EdgeIndex, PreMatchKind)> = accel.prematched_edges().collect();
        flags.sort_unstable_by_key(|&(e, kind)| {
            let rank = match kind {
                PreMatchKind::Regular => 0,
                PreMatchKind::Boundary => 1,
                PreMatchKind::Fusion => 2,
            };
            (rank, e)
        });
        let mut claimed = vec![false; graph.vertex_count()];
        for (e, kind) in flags {
            let [a, b] = graph.edge(e).endpoints;
            match kind {
                PreMatchKind::Regular => {
                    if claimed[a] || claimed[b] {
                        continue;
                    }
                    claimed[a] = true;
                    claimed[b] = true;
                }
                PreMatchKind::Boundary | PreMatchKind::Fusion => {
                    let defect = if accel.vertex_state(a).is_boundary { b } else { a };
                    if claimed[defect] {
                        continue;
                    }
                    claimed[defect] = true;
                }
            }
            solution.prematched_edges.push(e);
        }

        for node in self.live_outer_nodes() {
            match &node.position {
                NodePosition::Matched {
                    target: MatchTarget::Node(peer),
                    link,
                } => {
                    if node.id < *peer {
                        solution.pairs.push((link.touch, link.peer_touch));
                        self.resolve_interior(node.id, link.touch, &mut solution.pairs);
                        self.resolve_interior(*peer, link.peer_touch, &mut solution.pairs);
                    }
                }
                NodePosition::Matched {
                    target: MatchTarget::Boundary(v),
                    link,
                } => {
                    solution.boundary_matches.push((link.touch, *v));
                    self.resolve_interior(node.id, link.touch, &mut solution.pairs);
                }
                // a known free singleton may have been pre-matched again
                // behind software's back; the flag covers it
                NodePosition::Free
                    if matches!(node.kind, NodeKind::Defect(v) if claimed[v]) => {}
                other => panic!("node {} not matched at termination: {other:?}", node.id),
            }
        }

        // weights and certificates from syndrome-graph distances
        let mut distance_cache: alloc::collections::BTreeMap<VertexIndex, Vec<Weight>> =
            alloc::collections::BTreeMap::new();
        let mut dist = |from: VertexIndex, to: VertexIndex| -> Weight {
            distance_cache
                .entry(from)
                .or_insert_with(|| shortest_path::distances(graph, from))[to]
        };

        for &(a, b) in &solution.pairs {
            let d = dist(a, b);
            solution.total_weight += d;
            certificates.push(DualCertificate {
                defect: a,
                peer: Some(b),
                dual_sum: self.separating_dual_sum(accel, a, b),
                distance: d,
            });
            for v in [a, b] {
                assert!(!covered[v], "defect {v} covered twice");
                covered[v] = true;
            }
        }
        for &(v, target) in &solution.boundary_matches {
            let (bd, _) = shortest_path::boundary_distance(graph, v);
            debug_assert_eq!(bd, dist(v, target));
            solution.total_weight += bd;
            certificates.push(DualCertificate {
                defect: v,
                peer: None,
                dual_sum: self.ancestor_dual_sum(accel, v),
                distance: bd,
            });
            assert!(!covered[v], "defect {v} covered twice");
            covered[v] = true;
        }
        for &e in &solution.prematched_edges {
            let [a, b] = graph.edge(e).endpoints;
            let (defect, peer) = if accel.vertex_state(a).is_boundary {
                (b, None)
            } else if accel.vertex_state(b).is_boundary {
                (a, None)
            } else {
                (a, Some(b))
            };
            let dual_sum = accel.defect_residue(defect)
                + peer.map_or(0, |p| accel.defect_residue(p));
            let d = match peer {
                Some(p) => dist(defect, p),
                None => shortest_path::boundary_distance(graph, defect).0,
            };
            solution.total_weight += d;
            certificates.push(DualCertificate {
                defect,
                peer,
                dual_sum,
                distance: d,
            });
            assert!(!covered[defect], "defect {defect} covered twice");
            covered[defect] = true;
            if let Some(p) = peer {
                assert!(!covered[p], "defect {p} covered twice");
                covered[p] = true;
            }
        }

        for v in 0..graph.vertex_count() {
            if accel.vertex_state(v).is_defect {
                assert!(covered[v], "defect {v} left uncovered");
            }
        }
        (solution, certificates)
    }

    /// Sum of dual variables of nodes containing `a` but not `b`, plus those
    /// containing `b` but not `a`.
    fn separating_dual_sum(
        &self,
        accel: &DualAccelerator<'_>,
        a: VertexIndex,
        b: VertexIndex,
    ) -> Weight {
        self.chain_dual_sum(accel, a, Some(b)) + self.chain_dual_sum(accel, b, Some(a))
    }

    fn ancestor_dual_sum(&self, accel: &DualAccelerator<'_>, v: VertexIndex) -> Weight {
        self.chain_dual_sum(accel, v, None)
    }

    fn chain_dual_sum(
        &self,
        accel: &DualAccelerator<'_>,
        v: VertexIndex,
        exclude_containing: Option<VertexIndex>,
    ) -> Weight {
        let mut sum = 0;
        let mut current = Some(v as NodeIndex);
        while let Some(id) = current {
            let record = self.record(id);
            let contains_other = exclude_containing
                .map(|other| self.contains_defect(id, other))
                .unwrap_or(false);
            if !contains_other {
                sum += self.node_dual(accel, id);
            }
            current = record.parent_blossom;
        }
        sum
    }

    /// Total dual objective: live node duals plus frozen pre-matched
    /// residues; equals the matching weight at optimality.
    pub fn dual_objective(&self, accel: &DualAccelerator<'_>, solution: &MatchingSolution) -> Weight {
        let mut total: Weight = self
            .nodes
            .iter()
            .flatten()
            .map(|n| self.node_dual(accel, n.id))
            .sum();
        for &e in &solution.prematched_edges {
            let [a, b] = accel.graph().edge(e).endpoints;
            for v in [a, b] {
                if !accel.vertex_state(v).is_boundary && self.nodes[v].is_none() {
                    total += accel.defect_residue(v);
                }
            }
        }
        total
    }
}
