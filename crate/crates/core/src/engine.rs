//! Evaluation and differentiation of compiled circuits.
//!
//! An upward pass computes `val(i)` for every node in topological order. A
//! downward pass then accumulates `pd(i) = ∂F/∂v_i` in reverse topological
//! order, starting from `pd(root) = 1`. Together they visit every edge
//! exactly twice.
//!
//! Second partials use multilinearity: `∂F/∂a` is affine in any other leaf
//! `b`, so pinning `b` to 1 and to 0 and differencing the two gradients gives
//! `∂²F/∂a∂b` exactly, for all `a` at once.

use crate::compiler::{Circuit, Leaf, Node, NodeId};
use crate::error::{Error, Result};
use crate::model::{Evidence, Network};

/// A value for every indicator and parameter of a network, shaped like the
/// network itself so that it is total by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafAssignment {
    indicators: Vec<Vec<f64>>,
    parameters: Vec<Vec<f64>>,
}

impl LeafAssignment {
    pub fn from_fn(net: &Network, mut f: impl FnMut(Leaf) -> f64) -> Self {
        let indicators = (0..net.len())
            .map(|var| {
                (0..net.card(var))
                    .map(|value| f(Leaf::Indicator(crate::model::VarValue { var, value })))
                    .collect()
            })
            .collect();
        let parameters = net
            .families()
            .iter()
            .enumerate()
            .map(|(family, fam)| {
                (0..fam.table.len())
                    .map(|entry| f(Leaf::Parameter(crate::model::ParamId { family, entry })))
                    .collect()
            })
            .collect();
        Self {
            indicators,
            parameters,
        }
    }

    /// Indicators at `e(x)` and parameters at the network's CPT values.
    pub fn from_evidence(net: &Network, evidence: &Evidence) -> Self {
        Self::from_fn(net, |leaf| match leaf {
            Leaf::Indicator(vv) => match evidence.get(vv.var) {
                Some(v) if v != vv.value => 0.0,
                _ => 1.0,
            },
            Leaf::Parameter(p) => net.theta(p),
        })
    }

    pub fn get(&self, leaf: Leaf) -> Option<f64> {
        match leaf {
            Leaf::Indicator(vv) => self.indicators.get(vv.var)?.get(vv.value).copied(),
            Leaf::Parameter(p) => self.parameters.get(p.family)?.get(p.entry).copied(),
        }
    }

    pub fn set(&mut self, leaf: Leaf, value: f64) -> Result<()> {
        let slot = match leaf {
            Leaf::Indicator(vv) => self
                .indicators
                .get_mut(vv.var)
                .and_then(|v| v.get_mut(vv.value)),
            Leaf::Parameter(p) => self
                .parameters
                .get_mut(p.family)
                .and_then(|v| v.get_mut(p.entry)),
        };
        *slot.ok_or_else(|| Error::MissingLeaf(format!("{leaf:?}")))? = value;
        Ok(())
    }

    fn leaf_value(&self, leaf: Leaf) -> Result<f64> {
        self.get(leaf)
            .ok_or_else(|| Error::MissingLeaf(format!("{leaf:?}")))
    }
}

/// Per-query workspace holding `val` and `pd` for every node.
#[derive(Debug, Clone)]
pub struct PassState<'c> {
    circuit: &'c Circuit,
    assignment: LeafAssignment,
    evidence: Option<Evidence>,
    val: Vec<f64>,
    pd: Vec<f64>,
    differentiated: bool,
    up_edge_visits: usize,
    down_edge_visits: usize,
}

impl<'c> PassState<'c> {
    pub fn circuit(&self) -> &'c Circuit {
        self.circuit
    }

    pub fn assignment(&self) -> &LeafAssignment {
        &self.assignment
    }

    pub fn evidence(&self) -> Option<&Evidence> {
        self.evidence.as_ref()
    }

    pub fn val(&self, id: NodeId) -> f64 {
        self.val[id.0]
    }

    /// `∂F/∂v_id`; zero until [`downward_pass`] has run.
    pub fn pd(&self, id: NodeId) -> f64 {
        self.pd[id.0]
    }

    pub fn vals(&self) -> &[f64] {
        &self.val
    }

    pub fn pds(&self) -> &[f64] {
        &self.pd
    }

    /// `F` at the assignment, i.e. `val(root)`.
    pub fn value(&self) -> f64 {
        self.val[self.circuit.root().0]
    }

    pub fn is_differentiated(&self) -> bool {
        self.differentiated
    }

    pub fn up_edge_visits(&self) -> usize {
        self.up_edge_visits
    }

    pub fn down_edge_visits(&self) -> usize {
        self.down_edge_visits
    }

    /// `∂F/∂leaf`, or `None` if the leaf is not in the circuit.
    pub fn leaf_pd(&self, leaf: Leaf) -> Option<f64> {
        self.circuit.leaf_node(leaf).map(|id| self.pd[id.0])
    }
}

/// Upward pass under evidence: indicators at `e(x)`, parameters at `Θ`.
pub fn upward_pass<'c>(
    circuit: &'c Circuit,
    evidence: &Evidence,
    net: &Network,
) -> Result<PassState<'c>> {
    circuit.check_leaves(net)?;
    let mut state = upward_pass_at(circuit, LeafAssignment::from_evidence(net, evidence))?;
    state.evidence = Some(evidence.clone());
    Ok(state)
}

/// Upward pass at an arbitrary point.
pub fn upward_pass_at(circuit: &Circuit, assignment: LeafAssignment) -> Result<PassState<'_>> {
    let mut val = vec![0.0; circuit.len()];
    let mut visits = 0;
    for (i, node) in circuit.nodes().iter().enumerate() {
        val[i] = match node {
            Node::Leaf(leaf) => assignment.leaf_value(*leaf)?,
            Node::Add(ch) => {
                visits += ch.len();
                ch.iter().map(|c| val[c.0]).sum()
            }
            Node::Mul(ch) => {
                visits += ch.len();
                ch.iter().map(|c| val[c.0]).product()
            }
        };
    }
    Ok(PassState {
        circuit,
        assignment,
        evidence: None,
        pd: vec![0.0; circuit.len()],
        val,
        differentiated: false,
        up_edge_visits: visits,
        down_edge_visits: 0,
    })
}

/// Downward pass. Product nodes hand each child `pd(i)` times the product
/// of its siblings' values, built from prefix and suffix products so that a
/// zero-valued child never forces a division.
pub fn downward_pass(state: &mut PassState<'_>) {
    let circuit = state.circuit;
    let pd = &mut state.pd;
    let val = &state.val;
    pd.iter_mut().for_each(|p| *p = 0.0);
    pd[circuit.root().0] = 1.0;

    let mut suffix: Vec<f64> = Vec::new();
    let mut visits = 0;
    for (i, node) in circuit.nodes().iter().enumerate().rev() {
        let here = pd[i];
        match node {
            Node::Leaf(_) => {}
            Node::Add(ch) => {
                visits += ch.len();
                for c in ch {
                    pd[c.0] += here;
                }
            }
            Node::Mul(ch) => {
                visits += ch.len();
                suffix.clear();
                suffix.resize(ch.len(), 1.0);
                let mut acc = 1.0;
                for (j, c) in ch.iter().enumerate().rev() {
                    suffix[j] = acc;
                    acc *= val[c.0];
                }
                let mut prefix = here;
                for (j, c) in ch.iter().enumerate() {
                    pd[c.0] += prefix * suffix[j];
                    prefix *= val[c.0];
                }
            }
        }
    }
    state.down_edge_visits = visits;
    state.differentiated = true;
}

/// Both passes under evidence.
pub fn differentiate<'c>(
    circuit: &'c Circuit,
    evidence: &Evidence,
    net: &Network,
) -> Result<PassState<'c>> {
    let mut state = upward_pass(circuit, evidence, net)?;
    downward_pass(&mut state);
    Ok(state)
}

/// Both passes at an arbitrary point.
pub fn differentiate_at(circuit: &Circuit, assignment: LeafAssignment) -> Result<PassState<'_>> {
    let mut state = upward_pass_at(circuit, assignment)?;
    downward_pass(&mut state);
    Ok(state)
}

/// Value of the circuit polynomial at `assignment`.
pub fn evaluate_at(circuit: &Circuit, assignment: &LeafAssignment) -> Result<f64> {
    let mut val = vec![0.0f64; circuit.len()];
    for (i, node) in circuit.nodes().iter().enumerate() {
        val[i] = match node {
            Node::Leaf(leaf) => assignment.leaf_value(*leaf)?,
            Node::Add(ch) => ch.iter().map(|c| val[c.0]).sum(),
            Node::Mul(ch) => ch.iter().map(|c| val[c.0]).product(),
        };
    }
    Ok(val[circuit.root().0])
}

/// Same as [`evaluate_at`] but every leaf and every operation is in single
/// precision.
pub fn evaluate_at_single(circuit: &Circuit, assignment: &LeafAssignment) -> Result<f32> {
    let mut val = vec![0.0f32; circuit.len()];
    for (i, node) in circuit.nodes().iter().enumerate() {
        val[i] = match node {
            Node::Leaf(leaf) => assignment.leaf_value(*leaf)? as f32,
            Node::Add(ch) => ch.iter().map(|c| val[c.0]).sum(),
            Node::Mul(ch) => ch.iter().map(|c| val[c.0]).product(),
        };
    }
    Ok(val[circuit.root().0])
}

/// `∂²F/∂v_i∂pinned` for every node `i`, indexed by node id.
///
/// The base assignment is copied and `pinned` overridden; neither the
/// circuit nor the caller's assignment change.
pub fn second_derivatives_for(
    circuit: &Circuit,
    base: &LeafAssignment,
    pinned: Leaf,
) -> Result<Vec<f64>> {
    let mut at_one = base.clone();
    at_one.set(pinned, 1.0)?;
    let mut at_zero = base.clone();
    at_zero.set(pinned, 0.0)?;
    let hi = differentiate_at(circuit, at_one)?;
    let lo = differentiate_at(circuit, at_zero)?;
    Ok(hi.pd.iter().zip(&lo.pd).map(|(h, l)| h - l).collect())
}

/// `∂²F/∂a∂b` at `(e, Θ)`. A leaf paired with itself gives 0, as does a
/// leaf absent from the circuit.
pub fn second_derivative(
    circuit: &Circuit,
    evidence: &Evidence,
    net: &Network,
    a: Leaf,
    b: Leaf,
) -> Result<f64> {
    circuit.check_leaves(net)?;
    if a == b {
        return Ok(0.0);
    }
    let Some(a_node) = circuit.leaf_node(a) else {
        return Ok(0.0);
    };
    let base = LeafAssignment::from_evidence(net, evidence);
    Ok(second_derivatives_for(circuit, &base, b)?[a_node.0])
}

/// `ε Σ_{non-leaf i} |pd(i) val(i)|`, a first-order bound on the rounding
/// error of `val(root)` when each operation errs by at most `ε |val(i)|`.
pub fn rounding_error_bound(state: &PassState<'_>, epsilon: f64) -> f64 {
    let sum: f64 = state
        .circuit
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| !n.is_leaf())
        .map(|(i, _)| (state.pd[i] * state.val[i]).abs())
        .sum();
    epsilon * sum
}
