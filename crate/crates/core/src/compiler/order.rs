use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::Network;

/// A permutation of the network variables together with its width on the
/// moral graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    order: Vec<usize>,
    width: usize,
}

impl EliminationOrder {
    pub fn new(net: &Network, order: Vec<usize>) -> Result<Self> {
        let width = order_width(net, &order)?;
        Ok(Self { order, width })
    }

    /// Resolves a list of variable names.
    pub fn from_names<S: AsRef<str>>(net: &Network, names: &[S]) -> Result<Self> {
        let order = names
            .iter()
            .map(|n| {
                let n = n.as_ref().trim();
                net.var_index(n)
                    .ok_or_else(|| Error::UnknownVariable(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(net, order)
    }

    /// Greedy min-fill; ties go to the smallest variable index.
    pub fn min_fill(net: &Network) -> Self {
        let mut graph = moral_graph(net);
        let mut alive: BTreeSet<usize> = (0..net.len()).collect();
        let mut order = Vec::with_capacity(net.len());
        let mut width = 0;
        while !alive.is_empty() {
            let v = alive
                .iter()
                .copied()
                .min_by_key(|&v| (fill_in(&graph, v), v))
                .unwrap();
            width = width.max(graph[v].len());
            eliminate(&mut graph, v);
            alive.remove(&v);
            order.push(v);
        }
        Self { order, width }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// Undirected graph connecting each variable to its parents, children and
/// co-parents.
pub fn moral_graph(net: &Network) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); net.len()];
    for f in net.families() {
        let scope: Vec<usize> = f.scope().collect();
        for (i, &a) in scope.iter().enumerate() {
            for &b in &scope[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    adj
}

fn fill_in(graph: &[BTreeSet<usize>], v: usize) -> usize {
    let nb: Vec<usize> = graph[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if !graph[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

fn eliminate(graph: &mut [BTreeSet<usize>], v: usize) {
    let nb: Vec<usize> = std::mem::take(&mut graph[v]).into_iter().collect();
    for &a in &nb {
        graph[a].remove(&v);
        for &b in &nb {
            if a != b {
                graph[a].insert(b);
            }
        }
    }
}

/// Largest `|clique| - 1` created while eliminating along `order`.
pub fn order_width(net: &Network, order: &[usize]) -> Result<usize> {
    let mut seen = vec![false; net.len()];
    for &v in order {
        if v >= net.len() {
            return Err(Error::BadOrder(format!("variable #{v} out of range")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::BadOrder(format!(
                "`{}` appears twice",
                net.variable(v).name
            )));
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::BadOrder(format!(
            "`{}` is missing",
            net.variable(v).name
        )));
    }
    let mut graph = moral_graph(net);
    let mut width = 0;
    for &v in order {
        width = width.max(graph[v].len());
        eliminate(&mut graph, v);
    }
    Ok(width)
}
