//! Discrete Bayesian networks, their quantification, and evidence.
//!
//! Names are only used at the boundary. Internally a variable is its dense
//! index in [`Network::variables`] and a value is its index in the variable's
//! value list. Every variable owns exactly one [`Family`], stored at the same
//! index as the variable.
//!
//! CPT layout: parents vary in the listed order with the first parent
//! outermost, and the child value varies innermost. For `B | A` with binary
//! variables the table reads `[b|a, b̄|a, b|ā, b̄|ā]`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for `Σ_x Θ(x|u) = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A variable together with one of its values, i.e. the subscript of an
/// evidence indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarValue {
    pub var: usize,
    pub value: usize,
}

impl VarValue {
    pub fn new(var: usize, value: usize) -> Self {
        Self { var, value }
    }
}

/// One instantiation `xu` of a family, i.e. the subscript of a network
/// parameter. `entry` indexes the family's CPT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId {
    pub family: usize,
    pub entry: usize,
}

impl ParamId {
    pub fn new(family: usize, entry: usize) -> Self {
        Self { family, entry }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn card(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub child: usize,
    pub parents: Vec<usize>,
    pub table: Vec<f64>,
}

impl Family {
    /// Variables of the family in table order: parents first, child last.
    pub fn scope(&self) -> impl Iterator<Item = usize> + '_ {
        self.parents
            .iter()
            .copied()
            .chain(std::iter::once(self.child))
    }

    pub fn contains(&self, var: usize) -> bool {
        self.child == var || self.parents.contains(&var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    families: Vec<Family>,
    by_name: HashMap<String, usize>,
}

impl Network {
    /// Builds and validates a network. `families` may be given in any order
    /// but must contain exactly one family per variable.
    pub fn new(variables: Vec<Variable>, families: Vec<Family>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let mut by_name = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if by_name.insert(v.name.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            if v.values.len() < 2 {
                return Err(Error::TooFewValues(v.name.clone()));
            }
            for (j, label) in v.values.iter().enumerate() {
                if v.values[..j].contains(label) {
                    return Err(Error::DuplicateValue {
                        var: v.name.clone(),
                        value: label.clone(),
                    });
                }
            }
        }

        let n = variables.len();
        let mut slots: Vec<Option<Family>> = vec![None; n];
        for f in families {
            if f.child >= n || f.parents.iter().any(|&p| p >= n) {
                return Err(Error::MalformedNetwork(
                    "family references a variable index out of range".into(),
                ));
            }
            let name = &variables[f.child].name;
            if slots[f.child].is_some() {
                return Err(Error::DuplicateFamily(name.clone()));
            }
            let child = f.child;
            slots[child] = Some(f);
        }
        let families: Vec<Family> = slots
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.ok_or_else(|| Error::MissingFamily(variables[i].name.clone())))
            .collect::<Result<_>>()?;

        let net = Self {
            variables,
            families,
            by_name,
        };
        for f in &net.families {
            net.check_family(f)?;
        }
        net.check_acyclic()?;
        Ok(net)
    }

    fn check_family(&self, f: &Family) -> Result<()> {
        let child = &self.variables[f.child].name;
        for (i, &p) in f.parents.iter().enumerate() {
            if p == f.child {
                return Err(Error::Cycle(child.clone()));
            }
            if f.parents[..i].contains(&p) {
                return Err(Error::RepeatedParent(self.variables[p].name.clone()));
            }
        }
        let expected = self.family_size(f);
        if f.table.len() != expected {
            return Err(Error::TableSize {
                child: child.clone(),
                expected,
                found: f.table.len(),
            });
        }
        if let Some(&bad) = f.table.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::EntryOutOfRange {
                child: child.clone(),
                value: bad,
            });
        }
        let card = self.card(f.child);
        for (u, column) in f.table.chunks(card).enumerate() {
            let sum: f64 = column.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::NotNormalized {
                    child: child.clone(),
                    parents: self.describe_parent_config(f, u),
                    sum,
                });
            }
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.len()];
        for start in 0..self.len() {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some((v, next)) = stack.pop() {
                let parents = &self.families[v].parents;
                if next < parents.len() {
                    stack.push((v, next + 1));
                    let p = parents[next];
                    match state[p] {
                        0 => {
                            state[p] = 1;
                            stack.push((p, 0));
                        }
                        1 => return Err(Error::Cycle(self.variables[p].name.clone())),
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: usize) -> &Variable {
        &self.variables[var]
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    /// The family whose child is `var`.
    pub fn family(&self, var: usize) -> &Family {
        &self.families[var]
    }

    pub fn card(&self, var: usize) -> usize {
        self.variables[var].card()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Resolves `name=label` to indices.
    pub fn lookup(&self, name: &str, label: &str) -> Result<VarValue> {
        let var = self
            .var_index(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        let value = self.variables[var]
            .value_index(label)
            .ok_or_else(|| Error::UnknownValue {
                var: name.to_string(),
                value: label.to_string(),
            })?;
        Ok(VarValue { var, value })
    }

    pub fn family_size(&self, f: &Family) -> usize {
        f.scope().map(|v| self.card(v)).product()
    }

    /// Number of parent instantiations of the family of `var`.
    pub fn parent_configs(&self, var: usize) -> usize {
        self.families[var]
            .parents
            .iter()
            .map(|&p| self.card(p))
            .product()
    }

    pub fn theta(&self, p: ParamId) -> f64 {
        self.families[p.family].table[p.entry]
    }

    /// Every parameter of the network, family by family in variable order.
    pub fn params(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.families.iter().enumerate().flat_map(move |(i, f)| {
            (0..f.table.len()).map(move |entry| ParamId { family: i, entry })
        })
    }

    /// Every `(variable, value)` pair in file order.
    pub fn var_values(&self) -> impl Iterator<Item = VarValue> + '_ {
        self.variables
            .iter()
            .enumerate()
            .flat_map(|(var, v)| (0..v.card()).map(move |value| VarValue { var, value }))
    }

    /// CPT index of the family instantiation picked out by `value_of`, which
    /// must return a value for every variable of the family.
    pub fn entry_index(&self, family: usize, mut value_of: impl FnMut(usize) -> usize) -> usize {
        self.families[family]
            .scope()
            .fold(0, |idx, v| idx * self.card(v) + value_of(v))
    }

    /// The family instantiation of a parameter as `(var, value)` pairs,
    /// parents first in listed order, child last.
    pub fn decode_entry(&self, p: ParamId) -> Vec<VarValue> {
        let f = &self.families[p.family];
        let scope: Vec<usize> = f.scope().collect();
        let mut out = vec![VarValue::new(0, 0); scope.len()];
        let mut rest = p.entry;
        for (slot, &v) in scope.iter().enumerate().rev() {
            let c = self.card(v);
            out[slot] = VarValue::new(v, rest % c);
            rest /= c;
        }
        out
    }

    /// Parameter for child value `x` under parent configuration `u`.
    pub fn param(&self, family: usize, u: usize, x: usize) -> ParamId {
        ParamId {
            family,
            entry: u * self.card(family) + x,
        }
    }

    /// Parent configuration index and child value of a parameter.
    pub fn split_entry(&self, p: ParamId) -> (usize, usize) {
        let c = self.card(p.family);
        (p.entry / c, p.entry % c)
    }

    fn describe_parent_config(&self, f: &Family, u: usize) -> String {
        if f.parents.is_empty() {
            return "no parents".to_string();
        }
        let decoded = self.decode_entry(ParamId {
            family: f.child,
            entry: u * self.card(f.child),
        });
        decoded[..f.parents.len()]
            .iter()
            .map(|vv| self.label(*vv))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// `Var=value`.
    pub fn label(&self, vv: VarValue) -> String {
        let v = &self.variables[vv.var];
        format!("{}={}", v.name, v.values[vv.value])
    }

    /// `Child=x|P1=u1,P2=u2`; a root parameter renders as `Child=x|`.
    pub fn param_label(&self, p: ParamId) -> String {
        let decoded = self.decode_entry(p);
        let (child, parents) = decoded.split_last().expect("family scope is never empty");
        let parents: Vec<String> = parents.iter().map(|vv| self.label(*vv)).collect();
        format!("{}|{}", self.label(*child), parents.join(","))
    }

    /// Inverse of [`Network::param_label`]. Parents may be listed in any
    /// order but must be exactly the family's parents; a root parameter may
    /// omit the `|`.
    pub fn parse_param(&self, text: &str) -> Result<ParamId> {
        let malformed = || Error::MalformedParam(text.to_string());
        let (child, parents) = text.split_once('|').unwrap_or((text, ""));
        let child = parse_pair(child).ok_or_else(malformed)?;
        let child = self.lookup(child.0, child.1)?;
        let family = &self.families[child.var];
        let mut values: HashMap<usize, usize> = HashMap::new();
        let parents = parents.trim();
        if !parents.is_empty() {
            for part in parents.split(',') {
                let (name, label) = parse_pair(part).ok_or_else(malformed)?;
                let vv = self.lookup(name, label)?;
                if !family.parents.contains(&vv.var) || values.insert(vv.var, vv.value).is_some() {
                    return Err(Error::CircuitMismatch(format!(
                        "`{text}` does not name the parents of `{}`",
                        self.variables[child.var].name
                    )));
                }
            }
        }
        if values.len() != family.parents.len() {
            return Err(Error::CircuitMismatch(format!(
                "`{text}` does not name the parents of `{}`",
                self.variables[child.var].name
            )));
        }
        values.insert(child.var, child.value);
        Ok(ParamId {
            family: child.var,
            entry: self.entry_index(child.var, |v| values[&v]),
        })
    }

    /// A copy of this network with one CPT entry replaced. The copy is not
    /// re-validated, so the caller is responsible for keeping columns
    /// normalized if it matters.
    pub fn with_theta(&self, p: ParamId, value: f64) -> Network {
        let mut out = self.clone();
        out.families[p.family].table[p.entry] = value;
        out
    }

    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            variables: self
                .variables
                .iter()
                .map(|v| VariableDoc {
                    name: v.name.clone(),
                    values: v.values.clone(),
                })
                .collect(),
            cpts: self
                .families
                .iter()
                .map(|f| CptDoc {
                    child: self.variables[f.child].name.clone(),
                    parents: f
                        .parents
                        .iter()
                        .map(|&p| self.variables[p].name.clone())
                        .collect(),
                    table: f.table.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("network document always serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkDoc {
    variables: Vec<VariableDoc>,
    cpts: Vec<CptDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VariableDoc {
    name: String,
    values: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CptDoc {
    child: String,
    #[serde(default)]
    parents: Vec<String>,
    table: Vec<f64>,
}

/// Parses the JSON network format.
pub fn parse_network(text: &str) -> Result<Network> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| Error::MalformedNetwork(e.to_string()))?;
    let variables: Vec<Variable> = doc
        .variables
        .into_iter()
        .map(|v| Variable {
            name: v.name,
            values: v.values,
        })
        .collect();
    let index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let resolve = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    };
    let mut families = Vec::with_capacity(doc.cpts.len());
    for cpt in &doc.cpts {
        families.push(Family {
            child: resolve(&cpt.child)?,
            parents: cpt
                .parents
                .iter()
                .map(|p| resolve(p))
                .collect::<Result<_>>()?,
            table: cpt.table.clone(),
        });
    }
    Network::new(variables, families)
}

fn parse_pair(text: &str) -> Option<(&str, &str)> {
    let (name, label) = text.split_once('=')?;
    let (name, label) = (name.trim(), label.trim());
    if name.is_empty() || label.is_empty() {
        return None;
    }
    Some((name, label))
}

/// A partial instantiation of the network variables. The empty evidence is
/// the trivially true instantiation.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Evidence {
    values: Vec<Option<usize>>,
}

impl Evidence {
    /// No observations over `n` variables.
    pub fn empty(n: usize) -> Self {
        Self {
            values: vec![None; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = VarValue>) -> Self {
        let mut e = Self::empty(n);
        for vv in pairs {
            e.set(vv);
        }
        e
    }

    pub fn set(&mut self, vv: VarValue) {
        if vv.var >= self.values.len() {
            self.values.resize(vv.var + 1, None);
        }
        self.values[vv.var] = Some(vv.value);
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.values.get(var).copied().flatten()
    }

    pub fn is_observed(&self, var: usize) -> bool {
        self.get(var).is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    /// Number of variable slots, observed or not.
    pub fn width(&self) -> usize {
        self.values.len()
    }

    pub fn observed(&self) -> impl Iterator<Item = VarValue> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(var, v)| v.map(|value| VarValue { var, value }))
    }

    /// `e - X`: this evidence with the observation on `var` removed.
    pub fn without(&self, var: usize) -> Self {
        let mut out = self.clone();
        if let Some(slot) = out.values.get_mut(var) {
            *slot = None;
        }
        out
    }

    /// `e(x)`: 1 when `x` is consistent with the evidence, else 0.
    pub fn indicator_value(&self, x: VarValue) -> Result<f64> {
        if x.var >= self.values.len() {
            return Err(Error::UnknownVariable(format!("#{}", x.var)));
        }
        Ok(match self.values[x.var] {
            Some(v) if v != x.value => 0.0,
            _ => 1.0,
        })
    }

    pub fn display(&self, net: &Network) -> String {
        self.observed()
            .map(|vv| net.label(vv))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .observed()
            .map(|vv| format!("#{}={}", vv.var, vv.value))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Parses `Var=value(,Var=value)*`. Whitespace around names and values is
/// ignored; an empty string is the empty evidence.
pub fn parse_evidence(text: &str, net: &Network) -> Result<Evidence> {
    let mut e = Evidence::empty(net.len());
    if text.trim().is_empty() {
        return Ok(e);
    }
    for part in text.split(',') {
        let (name, label) =
            parse_pair(part).ok_or_else(|| Error::MalformedEvidence(text.to_string()))?;
        let vv = net.lookup(name, label)?;
        match e.get(vv.var) {
            Some(v) if v != vv.value => return Err(Error::ConflictingEvidence(name.to_string())),
            _ => e.set(vv),
        }
    }
    Ok(e)
}

/// Two instantiations are consistent when no variable is assigned different
/// values by them.
pub fn consistent(a: &Evidence, b: &Evidence) -> bool {
    a.values.iter().zip(&b.values).all(|pair| match pair {
        (Some(x), Some(y)) => x == y,
        _ => true,
    })
}
