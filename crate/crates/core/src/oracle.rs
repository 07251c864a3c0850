//! Brute-force ground truth by enumerating every full instantiation.
//!
//! The canonical polynomial is `Σ_x Π_{f~x} θ_f Π_{x_i~x} λ_{x_i}`, one
//! monomial per full instantiation. Nothing here touches a compiled
//! circuit, so it can be used to check one.

use crate::compiler::Leaf;
use crate::engine::LeafAssignment;
use crate::error::{Error, Result};
use crate::model::{consistent, Evidence, Network, ParamId, VarValue};

/// The oracle refuses networks with more variables than this.
pub const MAX_ORACLE_VARS: usize = 12;

fn guard(net: &Network) -> Result<()> {
    if net.len() > MAX_ORACLE_VARS {
        return Err(Error::OracleTooLarge {
            limit: MAX_ORACLE_VARS,
            found: net.len(),
        });
    }
    Ok(())
}

/// Calls `f` with every full instantiation, last variable fastest.
fn for_each_instantiation(net: &Network, mut f: impl FnMut(&[usize])) {
    let cards: Vec<usize> = (0..net.len()).map(|v| net.card(v)).collect();
    let mut x = vec![0usize; net.len()];
    loop {
        f(&x);
        let mut k = x.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            x[k] += 1;
            if x[k] < cards[k] {
                break;
            }
            x[k] = 0;
        }
    }
}

/// The leaves of the monomial for full instantiation `x`: one parameter per
/// family and one indicator per variable.
fn monomial(net: &Network, x: &[usize]) -> Vec<Leaf> {
    let params = (0..net.len()).map(|family| {
        Leaf::Parameter(ParamId {
            family,
            entry: net.entry_index(family, |v| x[v]),
        })
    });
    let indicators = x
        .iter()
        .enumerate()
        .map(|(var, &value)| Leaf::Indicator(VarValue { var, value }));
    params.chain(indicators).collect()
}

/// `Pr(x)` for every full instantiation, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(net: &Network) -> Result<Self> {
        guard(net)?;
        let mut probs = Vec::new();
        for_each_instantiation(net, |x| {
            let p = (0..net.len())
                .map(|fam| net.theta(ParamId::new(fam, net.entry_index(fam, |v| x[v]))))
                .product();
            probs.push(p);
        });
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Partial derivative of the canonical polynomial with respect to every leaf
/// in `wrt`, evaluated at `assignment`. Each monomial containing all of
/// `wrt` contributes the product of its remaining factors. A repeated leaf
/// yields 0 since every variable has degree one.
pub fn canonical_partial(net: &Network, assignment: &LeafAssignment, wrt: &[Leaf]) -> Result<f64> {
    guard(net)?;
    for (i, l) in wrt.iter().enumerate() {
        if wrt[..i].contains(l) {
            return Ok(0.0);
        }
    }
    let mut missing = None;
    let mut total = 0.0;
    for_each_instantiation(net, |x| {
        let leaves = monomial(net, x);
        if !wrt.iter().all(|w| leaves.contains(w)) {
            return;
        }
        let mut term = 1.0;
        for leaf in leaves.iter().filter(|l| !wrt.contains(l)) {
            match assignment.get(*leaf) {
                Some(v) => term *= v,
                None => missing = Some(*leaf),
            }
        }
        total += term;
    });
    match missing {
        Some(leaf) => Err(Error::MissingLeaf(format!("{leaf:?}"))),
        None => Ok(total),
    }
}

/// The canonical polynomial at an arbitrary point.
pub fn canonical_eval(net: &Network, assignment: &LeafAssignment) -> Result<f64> {
    canonical_partial(net, assignment, &[])
}

/// Probability of a (partial) instantiation by summing the joint.
pub fn oracle_prob(net: &Network, event: &Evidence) -> Result<f64> {
    guard(net)?;
    if let Some(vv) = event
        .observed()
        .find(|vv| vv.var >= net.len() || vv.value >= net.card(vv.var))
    {
        return Err(Error::UnknownVariable(format!("#{}", vv.var)));
    }
    let joint = JointTable::new(net)?;
    let mut k = 0;
    let mut total = 0.0;
    for_each_instantiation(net, |x| {
        let full = Evidence::from_pairs(
            net.len(),
            x.iter()
                .enumerate()
                .map(|(var, &value)| VarValue { var, value }),
        );
        if consistent(event, &full) {
            total += joint.probs[k];
        }
        k += 1;
    });
    Ok(total)
}

/// `∂F(e, Θ)/∂leaf` by symbolic differentiation of the canonical polynomial.
pub fn oracle_derivative(net: &Network, evidence: &Evidence, leaf: Leaf) -> Result<f64> {
    canonical_partial(net, &LeafAssignment::from_evidence(net, evidence), &[leaf])
}

/// `∂²F(e, Θ)/∂a∂b` by symbolic differentiation of the canonical polynomial.
pub fn oracle_second(net: &Network, evidence: &Evidence, a: Leaf, b: Leaf) -> Result<f64> {
    canonical_partial(net, &LeafAssignment::from_evidence(net, evidence), &[a, b])
}

/// `Pr(y|e)` by enumeration, with the network's parameters taken as given
/// (they need not be normalized).
pub fn oracle_conditional(net: &Network, y: VarValue, evidence: &Evidence) -> Result<f64> {
    let pe = oracle_prob(net, evidence)?;
    if pe <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let mut joint = evidence.clone();
    if let Some(v) = joint.get(y.var) {
        return Ok(if v == y.value { 1.0 } else { 0.0 });
    }
    joint.set(y);
    Ok(oracle_prob(net, &joint)? / pe)
}
