use crate::compiler::circuit::{Circuit, CircuitBuilder, NodeId};
use crate::compiler::order::EliminationOrder;
use crate::error::{Error, Result};
use crate::model::{Network, VarValue};

/// A factor whose entries are circuit nodes rather than numbers.
///
/// Entries are laid out with the first scope variable outermost, the same
/// convention as CPTs.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicTable {
    scope: Vec<usize>,
    cards: Vec<usize>,
    entries: Vec<NodeId>,
}

impl SymbolicTable {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, entries: Vec<NodeId>) -> Self {
        assert_eq!(scope.len(), cards.len());
        assert_eq!(entries.len(), cards.iter().product::<usize>());
        Self {
            scope,
            cards,
            entries,
        }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn entries(&self) -> &[NodeId] {
        &self.entries
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    /// Entry at the instantiation giving `values[k]` to `scope[k]`.
    pub fn entry(&self, values: &[usize]) -> NodeId {
        let idx = values
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&v, &c)| acc * c + v);
        self.entries[idx]
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.cards.len()];
        for k in (0..self.cards.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.cards[k + 1];
        }
        strides
    }
}

/// Replaces each CPT entry `θ_xu` by the product `θ_xu · λ_x`, one table per
/// family in variable order.
pub fn parameterize_cpts(net: &Network, builder: &mut CircuitBuilder) -> Vec<SymbolicTable> {
    net.params()
        .collect::<Vec<_>>()
        .chunk_by(|a, b| a.family == b.family)
        .map(|params| {
            let family = net.family(params[0].family);
            let entries = params
                .iter()
                .map(|&p| {
                    let (_, x) = net.split_entry(p);
                    let theta = builder.parameter(p);
                    let lambda = builder.indicator(VarValue::new(family.child, x));
                    builder.mul(vec![theta, lambda])
                })
                .collect();
            let scope: Vec<usize> = family.scope().collect();
            let cards = scope.iter().map(|&v| net.card(v)).collect();
            SymbolicTable::new(scope, cards, entries)
        })
        .collect()
}

/// Pointwise product over the union of the scopes. The union keeps the
/// first table's scope order and appends new variables as they appear.
pub fn multiply_tables(
    builder: &mut CircuitBuilder,
    mut tables: Vec<SymbolicTable>,
) -> SymbolicTable {
    assert!(
        !tables.is_empty(),
        "multiply_tables needs at least one table"
    );
    if tables.len() == 1 {
        return tables.pop().unwrap();
    }

    let mut scope: Vec<usize> = Vec::new();
    let mut cards: Vec<usize> = Vec::new();
    for t in &tables {
        for (&v, &c) in t.scope.iter().zip(&t.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
    }

    // strides[t][k]: step in table t's entries for variable scope[k]
    let strides: Vec<Vec<usize>> = tables
        .iter()
        .map(|t| {
            let own = t.strides();
            scope
                .iter()
                .map(|v| t.scope.iter().position(|w| w == v).map_or(0, |k| own[k]))
                .collect()
        })
        .collect();

    let size: usize = cards.iter().product();
    let mut digits = vec![0usize; scope.len()];
    let mut entries = Vec::with_capacity(size);
    for _ in 0..size {
        let children = tables
            .iter()
            .zip(&strides)
            .map(|(t, s)| {
                let idx: usize = digits.iter().zip(s).map(|(d, s)| d * s).sum();
                t.entries[idx]
            })
            .collect();
        entries.push(builder.mul(children));
        increment(&mut digits, &cards);
    }
    SymbolicTable::new(scope, cards, entries)
}

/// Sums `var` out of `table`: every remaining instantiation becomes a sum
/// over the entries that agree with it.
pub fn sum_out(
    builder: &mut CircuitBuilder,
    table: &SymbolicTable,
    var: usize,
) -> Result<SymbolicTable> {
    let pos = table
        .scope
        .iter()
        .position(|&v| v == var)
        .ok_or_else(|| Error::NotInScope(format!("#{var}")))?;
    let strides = table.strides();
    let card = table.cards[pos];

    let mut scope = table.scope.clone();
    let mut cards = table.cards.clone();
    scope.remove(pos);
    cards.remove(pos);
    let mut kept_strides = strides.clone();
    kept_strides.remove(pos);

    let size: usize = cards.iter().product();
    let mut digits = vec![0usize; scope.len()];
    let mut entries = Vec::with_capacity(size);
    for _ in 0..size {
        let base: usize = digits.iter().zip(&kept_strides).map(|(d, s)| d * s).sum();
        let children = (0..card)
            .map(|x| table.entries[base + x * strides[pos]])
            .collect();
        entries.push(builder.add(children));
        increment(&mut digits, &cards);
    }
    Ok(SymbolicTable::new(scope, cards, entries))
}

// Mixed-radix counter, last digit fastest.
fn increment(digits: &mut [usize], cards: &[usize]) {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < cards[k] {
            return;
        }
        digits[k] = 0;
    }
}

/// Compiles `net` into a factored polynomial by variable elimination along
/// `order`.
///
/// Tables containing the eliminated variable are multiplied in the order
/// they were created. After the last elimination only empty-scope tables
/// remain; their product is the root.
pub fn ve_compile(net: &Network, order: &EliminationOrder) -> Result<Circuit> {
    if order.order().len() != net.len() {
        return Err(Error::BadOrder(format!(
            "order has {} variables, network has {}",
            order.order().len(),
            net.len()
        )));
    }
    let mut builder = CircuitBuilder::new();
    let mut tables = parameterize_cpts(net, &mut builder);

    for &var in order.order() {
        let (selected, rest): (Vec<_>, Vec<_>) = tables.into_iter().partition(|t| t.contains(var));
        tables = rest;
        if selected.is_empty() {
            continue;
        }
        let product = multiply_tables(&mut builder, selected);
        tables.push(sum_out(&mut builder, &product, var)?);
    }

    debug_assert!(tables.iter().all(|t| t.scope.is_empty()));
    let root = multiply_tables(&mut builder, tables).entries[0];
    Ok(builder.finish(root))
}

/// Compiles with the default min-fill order.
pub fn compile(net: &Network) -> Result<Circuit> {
    ve_compile(net, &EliminationOrder::min_fill(net))
}
