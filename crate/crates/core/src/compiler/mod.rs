//! Compilation of a network into an arithmetic circuit by variable
//! elimination over tables of circuit nodes.

mod circuit;
mod format;
mod order;
mod table;

pub use circuit::{Circuit, CircuitBuilder, Leaf, Node, NodeId};
pub use format::{deserialize_circuit, serialize_circuit};
pub use order::{moral_graph, order_width, EliminationOrder};
pub use table::{compile, multiply_tables, parameterize_cpts, sum_out, ve_compile, SymbolicTable};

/// Constant `C` in the size bound `nodes <= C * n * 2^(w + 1)` for binary
/// networks compiled along an order of width `w`.
///
/// Per eliminated variable the compiler creates at most `2^(w+1)` product
/// nodes and `2^w` sum nodes. Each CPT adds at most `2^(w+1)` parameter
/// leaves, as many `θλ` products, and two indicators. A final product joins
/// disconnected components. The total is at most
/// `n * (3.5 * 2^(w+1) + 2) + 1`, which stays under `5 * n * 2^(w+1)`.
pub const SIZE_BOUND_CONSTANT: usize = 5;
