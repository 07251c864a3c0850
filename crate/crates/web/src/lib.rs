//! Browser bindings for the `acdiff` query engine.
//!
//! Each exported function takes the network document as JSON text and
//! returns a JSON string, either `{"ok": ...}` or `{"error": "..."}`.

use acdiff::compiler::compile;
use acdiff::model::{parse_evidence, parse_network, Network, ParamId, VarValue};
use acdiff::queries::{MetaParameter, QuerySession, Tweak};
use acdiff::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueProb {
    pub label: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableMarginal {
    pub name: String,
    pub observed: bool,
    pub values: Vec<ValueProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals {
    pub prob_evidence: f64,
    pub nodes: usize,
    pub edges: usize,
    pub variables: Vec<VariableMarginal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub param: String,
    pub target: String,
    pub current_theta: f64,
    pub current_prob: f64,
    pub slope: f64,
    pub theta: Vec<f64>,
    pub prob: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TweakReport {
    Feasible {
        delta_min: f64,
        theta_prime_min: f64,
        prob_target_after: f64,
    },
    Infeasible {
        required_theta: Option<f64>,
    },
}

fn parse_target(net: &Network, text: &str) -> Result<VarValue> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Error::MalformedEvidence(text.to_string()))?;
    net.lookup(name.trim(), value.trim())
}

/// `Pr(e)` and the posterior of every variable.
pub fn compute_marginals(network: &str, evidence: &str) -> Result<Marginals> {
    let net = parse_network(network)?;
    let circuit = compile(&net)?;
    let e = parse_evidence(evidence, &net)?;
    let session = QuerySession::new(&net, &circuit, e.clone())?;
    let mut variables = Vec::with_capacity(net.len());
    for (var, v) in net.variables().iter().enumerate() {
        let post = session.posterior_marginal(var)?;
        variables.push(VariableMarginal {
            name: v.name.clone(),
            observed: e.is_observed(var),
            values: v
                .values
                .iter()
                .zip(post)
                .map(|(label, prob)| ValueProb {
                    label: label.clone(),
                    prob,
                })
                .collect(),
        });
    }
    Ok(Marginals {
        prob_evidence: session.prob_evidence(),
        nodes: circuit.len(),
        edges: circuit.edge_count(),
        variables,
    })
}

/// The column of `p` with `θ_p` set to `t` and its siblings rescaled
/// proportionally so the column still sums to 1.
fn requantify(net: &Network, p: ParamId, t: f64) -> Network {
    let (u, x) = net.split_entry(p);
    let theta = net.theta(p);
    let rest = 1.0 - theta;
    let mut out = net.with_theta(p, t);
    for other in (0..net.card(p.family)).filter(|&o| o != x) {
        let q = net.param(p.family, u, other);
        let share = if rest > 0.0 {
            net.theta(q) / rest
        } else {
            1.0 / (net.card(p.family) - 1) as f64
        };
        out = out.with_theta(q, (1.0 - t) * share);
    }
    out
}

/// `Pr(y|e)` as `θ_p` sweeps `[0, 1]` in `points` steps, with the rest of
/// its column rescaled proportionally. The circuit is compiled once and
/// re-evaluated under each quantification. Points where the evidence has
/// zero probability are `None`.
pub fn compute_curve(
    network: &str,
    evidence: &str,
    target: &str,
    param: &str,
    points: usize,
) -> Result<Curve> {
    let net = parse_network(network)?;
    let circuit = compile(&net)?;
    let e = parse_evidence(evidence, &net)?;
    let y = parse_target(&net, target)?;
    let p = net.parse_param(param)?;
    let points = points.clamp(2, 1001);

    let session = QuerySession::new(&net, &circuit, e.clone())?;
    let current_prob = session.posterior_marginal(y.var)?[y.value];
    let (u, x) = net.split_entry(p);
    let theta = net.theta(p);
    let alphas: Vec<f64> = (0..net.card(p.family))
        .map(|o| {
            if o == x {
                1.0
            } else if theta < 1.0 {
                -net.theta(net.param(p.family, u, o)) / (1.0 - theta)
            } else {
                -1.0 / (net.card(p.family) - 1) as f64
            }
        })
        .collect();
    let meta = MetaParameter::new(&net, p.family, u, alphas)?;
    let slope = session.sensitivity_meta(y, &meta)?.derivative;

    let mut thetas = Vec::with_capacity(points);
    let mut probs = Vec::with_capacity(points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let moved = requantify(&net, p, t);
        let prob = QuerySession::new(&moved, &circuit, e.clone())
            .and_then(|s| s.posterior_marginal(y.var))
            .map(|post| post[y.value])
            .ok();
        thetas.push(t);
        probs.push(prob);
    }
    Ok(Curve {
        param: net.param_label(p).trim_end_matches('|').to_string(),
        target: net.label(y),
        current_theta: theta,
        current_prob,
        slope,
        theta: thetas,
        prob: probs,
    })
}

/// Smallest change to binary parameter `param` that brings `Pr(y|e)` down
/// to `Pr(ȳ|e)`.
pub fn compute_tweak(
    network: &str,
    evidence: &str,
    target: &str,
    param: &str,
) -> Result<TweakReport> {
    let net = parse_network(network)?;
    let circuit = compile(&net)?;
    let e = parse_evidence(evidence, &net)?;
    let y = parse_target(&net, target)?;
    let p = net.parse_param(param)?;
    let session = QuerySession::new(&net, &circuit, e.clone())?;
    Ok(match session.tweak_binary(y, p)? {
        Tweak::Feasible {
            delta_min,
            theta_prime_min,
        } => {
            let moved = requantify(&net, p, theta_prime_min);
            let after = QuerySession::new(&moved, &circuit, e)?.posterior_marginal(y.var)?[y.value];
            TweakReport::Feasible {
                delta_min,
                theta_prime_min,
                prob_target_after: after,
            }
        }
        Tweak::Infeasible { required_theta } => TweakReport::Infeasible { required_theta },
    })
}

fn respond<T: Serialize>(result: Result<T>) -> String {
    let body = match result {
        Ok(value) => serde_json::json!({ "ok": value }),
        Err(err) => serde_json::json!({ "error": err.to_string() }),
    };
    body.to_string()
}

#[wasm_bindgen]
pub fn marginals(network: &str, evidence: &str) -> String {
    respond(compute_marginals(network, evidence))
}

#[wasm_bindgen]
pub fn sensitivity_curve(
    network: &str,
    evidence: &str,
    target: &str,
    param: &str,
    points: usize,
) -> String {
    respond(compute_curve(network, evidence, target, param, points))
}

#[wasm_bindgen]
pub fn tweak(network: &str, evidence: &str, target: &str, param: &str) -> String {
    respond(compute_tweak(network, evidence, target, param))
}

/// Parameter labels of a network, for populating a picker.
#[wasm_bindgen]
pub fn parameters(network: &str) -> String {
    respond(parse_network(network).map(|net| {
        net.params()
            .map(|p| net.param_label(p).trim_end_matches('|').to_string())
            .collect::<Vec<_>>()
    }))
}
