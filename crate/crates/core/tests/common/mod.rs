#![allow(dead_code)]

use acdiff::compiler::Leaf;
use acdiff::engine::LeafAssignment;
use acdiff::model::{Evidence, Family, Network, VarValue, Variable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TWO_NODE: &str = r#"{
    "variables": [
        {"name": "A", "values": ["true", "false"]},
        {"name": "B", "values": ["true", "false"]}
    ],
    "cpts": [
        {"child": "A", "parents": [], "table": [0.3, 0.7]},
        {"child": "B", "parents": ["A"], "table": [0.1, 0.9, 0.8, 0.2]}
    ]
}"#;

pub fn two_node() -> Network {
    acdiff::model::parse_network(TWO_NODE).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct NetSpec {
    pub vars: usize,
    pub max_card: usize,
    pub max_parents: usize,
    pub edge_prob: f64,
    pub zero_prob: f64,
}

impl NetSpec {
    pub fn binary(vars: usize) -> Self {
        Self {
            vars,
            max_card: 2,
            max_parents: 3,
            edge_prob: 0.4,
            zero_prob: 0.0,
        }
    }
}

/// A random DAG with random CPTs. Variables are shuffled so that file order
/// is not a topological order.
pub fn random_network(rng: &mut impl Rng, spec: NetSpec) -> Network {
    let n = spec.vars;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=spec.max_card)).collect();
    let vars = (0..n)
        .map(|i| Variable {
            name: format!("V{i}"),
            values: (0..cards[i]).map(|k| format!("s{k}")).collect(),
        })
        .collect();

    // topological rank r is variable perm[r]; parents come from lower ranks
    let mut families = Vec::with_capacity(n);
    for r in 0..n {
        let child = perm[r];
        let mut parents: Vec<usize> = (0..r)
            .filter(|_| rng.gen_bool(spec.edge_prob))
            .map(|q| perm[q])
            .collect();
        parents.shuffle(rng);
        parents.truncate(spec.max_parents);
        let configs: usize = parents.iter().map(|&p| cards[p]).product();
        let mut table = Vec::with_capacity(configs * cards[child]);
        for _ in 0..configs {
            table.extend(random_column(rng, cards[child], spec.zero_prob));
        }
        families.push(Family {
            child,
            parents,
            table,
        });
    }
    families.shuffle(rng);
    Network::new(vars, families).unwrap()
}

fn random_column(rng: &mut impl Rng, card: usize, zero_prob: f64) -> Vec<f64> {
    let mut col: Vec<f64> = (0..card)
        .map(|_| {
            if rng.gen_bool(zero_prob) {
                0.0
            } else {
                rng.gen_range(0.01..1.0)
            }
        })
        .collect();
    if col.iter().all(|&x| x == 0.0) {
        col[0] = 1.0;
    }
    let sum: f64 = col.iter().sum();
    col.iter_mut().for_each(|x| *x /= sum);
    col
}

pub fn random_evidence(rng: &mut impl Rng, net: &Network, observe_prob: f64) -> Evidence {
    let mut pairs = Vec::new();
    for var in 0..net.len() {
        if rng.gen_bool(observe_prob) {
            pairs.push(VarValue::new(var, rng.gen_range(0..net.card(var))));
        }
    }
    Evidence::from_pairs(net.len(), pairs)
}

/// Every leaf at an independent uniform value in `[lo, hi)`.
pub fn random_point(rng: &mut impl Rng, net: &Network, lo: f64, hi: f64) -> LeafAssignment {
    LeafAssignment::from_fn(net, |_| rng.gen_range(lo..hi))
}

pub fn all_leaves(net: &Network) -> Vec<Leaf> {
    net.var_values()
        .map(Leaf::Indicator)
        .chain(net.params().map(Leaf::Parameter))
        .collect()
}

/// Relative comparison with an absolute floor of `1e-12` for values at or
/// near zero.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let diff = (a - b).abs();
    diff <= 1e-12 || diff <= tol * a.abs().max(b.abs())
}
