use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Network, ParamId, VarValue};

/// Index of a node in a [`Circuit`]. Children always have smaller ids than
/// their parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Identity of a polynomial variable: an evidence indicator `λ_x` or a
/// network parameter `θ_xu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leaf {
    Indicator(VarValue),
    Parameter(ParamId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(Leaf),
    Add(Vec<NodeId>),
    Mul(Vec<NodeId>),
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Leaf(_) => &[],
            Node::Add(c) | Node::Mul(c) => c,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }
}

/// A rooted DAG of sums and products over indicator and parameter leaves.
///
/// Nodes are stored in topological order and every leaf identity occurs at
/// most once.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    nodes: Vec<Node>,
    root: NodeId,
    leaves: HashMap<Leaf, NodeId>,
}

impl Circuit {
    pub fn new(nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::CircuitMismatch("circuit has no nodes".into()));
        }
        if root.0 >= nodes.len() {
            return Err(Error::CircuitMismatch(format!(
                "root {} is not a node",
                root.0
            )));
        }
        let mut leaves = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Leaf(leaf) => {
                    if leaves.insert(*leaf, NodeId(i)).is_some() {
                        return Err(Error::CircuitMismatch(format!(
                            "node {i} duplicates leaf {leaf:?}"
                        )));
                    }
                }
                Node::Add(children) | Node::Mul(children) => {
                    if children.is_empty() {
                        return Err(Error::CircuitMismatch(format!("node {i} has no children")));
                    }
                    if let Some(c) = children.iter().find(|c| c.0 >= i) {
                        return Err(Error::CircuitMismatch(format!(
                            "node {i} references later node {}",
                            c.0
                        )));
                    }
                }
            }
        }
        Ok(Self {
            nodes,
            root,
            leaves,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children().len()).sum()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_node(&self, leaf: Leaf) -> Option<NodeId> {
        self.leaves.get(&leaf).copied()
    }

    pub fn indicator(&self, vv: VarValue) -> Option<NodeId> {
        self.leaf_node(Leaf::Indicator(vv))
    }

    pub fn parameter(&self, p: ParamId) -> Option<NodeId> {
        self.leaf_node(Leaf::Parameter(p))
    }

    /// Leaves in node order.
    pub fn leaves(&self) -> impl Iterator<Item = (NodeId, Leaf)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Leaf(l) => Some((NodeId(i), *l)),
            _ => None,
        })
    }

    /// Checks that every leaf names an indicator or parameter of `net`.
    pub fn check_leaves(&self, net: &Network) -> Result<()> {
        for (_, leaf) in self.leaves() {
            let ok = match leaf {
                Leaf::Indicator(vv) => vv.var < net.len() && vv.value < net.card(vv.var),
                Leaf::Parameter(p) => {
                    p.family < net.len() && p.entry < net.family(p.family).table.len()
                }
            };
            if !ok {
                return Err(Error::CircuitMismatch(format!(
                    "leaf {leaf:?} is not part of the network"
                )));
            }
        }
        Ok(())
    }
}

/// Append-only construction of a [`Circuit`] with leaf deduplication.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
    leaves: HashMap<Leaf, NodeId>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, leaf: Leaf) -> NodeId {
        if let Some(&id) = self.leaves.get(&leaf) {
            return id;
        }
        let id = self.push(Node::Leaf(leaf));
        self.leaves.insert(leaf, id);
        id
    }

    pub fn indicator(&mut self, vv: VarValue) -> NodeId {
        self.leaf(Leaf::Indicator(vv))
    }

    pub fn parameter(&mut self, p: ParamId) -> NodeId {
        self.leaf(Leaf::Parameter(p))
    }

    /// Sum node; a single child is returned as is.
    pub fn add(&mut self, children: Vec<NodeId>) -> NodeId {
        debug_assert!(!children.is_empty());
        if children.len() == 1 {
            return children[0];
        }
        self.push(Node::Add(children))
    }

    /// Product node; a single child is returned as is.
    pub fn mul(&mut self, children: Vec<NodeId>) -> NodeId {
        debug_assert!(!children.is_empty());
        if children.len() == 1 {
            return children[0];
        }
        self.push(Node::Mul(children))
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn finish(self, root: NodeId) -> Circuit {
        Circuit {
            nodes: self.nodes,
            root,
            leaves: self.leaves,
        }
    }
}
