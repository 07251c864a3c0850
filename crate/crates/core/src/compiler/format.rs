//! Line-oriented circuit files.
//!
//! ```text
//! dac 1
//! n <node_count>
//! l <Var>=<value>
//! p <Child>=<val>|<P1>=<v1>,...
//! + <k> <c1> ... <ck>
//! * <k> <c1> ... <ck>
//! r <root_index>
//! ```
//!
//! Node indices are 0-based in line order after the header. Leaves are
//! written by name, so reading a file needs the network it was compiled
//! from.

use std::fmt::Write as _;

use crate::compiler::circuit::{Circuit, Leaf, Node, NodeId};
use crate::error::{Error, Result};
use crate::model::Network;

const MAGIC: &str = "dac 1";

pub fn serialize_circuit(circuit: &Circuit, net: &Network) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "n {}", circuit.len()).unwrap();
    for node in circuit.nodes() {
        match node {
            Node::Leaf(Leaf::Indicator(vv)) => writeln!(out, "l {}", net.label(*vv)),
            Node::Leaf(Leaf::Parameter(p)) => writeln!(out, "p {}", net.param_label(*p)),
            Node::Add(ch) | Node::Mul(ch) => {
                let op = if matches!(node, Node::Add(_)) {
                    '+'
                } else {
                    '*'
                };
                write!(out, "{op} {}", ch.len()).unwrap();
                for c in ch {
                    write!(out, " {}", c.0).unwrap();
                }
                writeln!(out)
            }
        }
        .unwrap();
    }
    writeln!(out, "r {}", circuit.root().0).unwrap();
    out
}

pub fn deserialize_circuit(text: &str, net: &Network) -> Result<Circuit> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let err = |line: usize, msg: &str| Error::CircuitSyntax {
        line,
        msg: msg.to_string(),
    };

    let (line, magic) = lines.next().ok_or_else(|| err(1, "empty circuit file"))?;
    if magic != MAGIC {
        return Err(err(line, "expected header `dac 1`"));
    }
    let (line, count) = lines
        .next()
        .ok_or_else(|| err(line, "missing node count"))?;
    let count: usize = count
        .strip_prefix("n ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| err(line, "expected `n <node_count>`"))?;
    if count == 0 {
        return Err(err(line, "circuit has no nodes"));
    }

    let mut nodes = Vec::with_capacity(count);
    let mut last_line = line;
    while nodes.len() < count {
        let (line, text) = lines
            .next()
            .ok_or_else(|| err(last_line, "fewer nodes than announced"))?;
        last_line = line;
        let (tag, rest) = text.split_at(1);
        let rest = rest.trim();
        let node = match tag {
            "l" => {
                let (name, label) = rest
                    .split_once('=')
                    .ok_or_else(|| err(line, "expected `l Var=value`"))?;
                let vv = net
                    .lookup(name.trim(), label.trim())
                    .map_err(|e| Error::CircuitMismatch(format!("line {line}: {e}")))?;
                Node::Leaf(Leaf::Indicator(vv))
            }
            "p" => {
                let p = net
                    .parse_param(rest)
                    .map_err(|e| Error::CircuitMismatch(format!("line {line}: {e}")))?;
                Node::Leaf(Leaf::Parameter(p))
            }
            "+" | "*" => {
                let own = nodes.len();
                let mut fields = rest.split_whitespace().map(|f| f.parse::<usize>());
                let k = fields
                    .next()
                    .and_then(|k| k.ok())
                    .ok_or_else(|| err(line, "expected child count"))?;
                let children = fields
                    .map(|c| {
                        let c = c.map_err(|_| err(line, "child index is not a number"))?;
                        if c >= own {
                            return Err(err(line, "forward reference to a later node"));
                        }
                        Ok(NodeId(c))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if children.len() != k || k == 0 {
                    return Err(err(line, "child count does not match children"));
                }
                if tag == "+" {
                    Node::Add(children)
                } else {
                    Node::Mul(children)
                }
            }
            _ => return Err(err(line, "unknown node tag")),
        };
        nodes.push(node);
    }

    let (line, root) = lines
        .next()
        .ok_or_else(|| err(last_line, "missing root line"))?;
    let root: usize = root
        .strip_prefix("r ")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| err(line, "expected `r <root_index>`"))?;
    if root >= count {
        return Err(err(line, "root does not name a node"));
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, "content after root line"));
    }
    Circuit::new(nodes, NodeId(root))
}
