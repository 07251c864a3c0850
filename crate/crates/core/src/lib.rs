//! Exact inference in discrete Bayesian networks by compiling them into
//! arithmetic circuits and differentiating those circuits.
//!
//! The pipeline is:
//!
//! 1. [`model`]: parse a network and evidence.
//! 2. [`compiler`]: compile the network into a factored multilinear
//!    polynomial by variable elimination.
//! 3. [`engine`]: evaluate the polynomial and all its first partials in two
//!    passes; second partials by toggling a leaf.
//! 4. [`queries`]: read marginals, retraction, sensitivities and parameter
//!    tweaks off those derivatives.
//!
//! [`oracle`] enumerates the joint distribution and is used to check all of
//! the above on small networks.
//!
//! ```
//! use acdiff::{compiler, model, queries::QuerySession};
//!
//! let net = model::parse_network(r#"{
//!     "variables": [{"name": "A", "values": ["true", "false"]},
//!                   {"name": "B", "values": ["true", "false"]}],
//!     "cpts": [{"child": "A", "parents": [], "table": [0.3, 0.7]},
//!              {"child": "B", "parents": ["A"], "table": [0.1, 0.9, 0.8, 0.2]}]
//! }"#).unwrap();
//! let circuit = compiler::compile(&net).unwrap();
//! let evidence = model::parse_evidence("A=true", &net).unwrap();
//! let session = QuerySession::new(&net, &circuit, evidence).unwrap();
//! assert!((session.prob_evidence() - 0.3).abs() < 1e-12);
//! assert!((session.posterior_marginal(1).unwrap()[0] - 0.1).abs() < 1e-12);
//! ```

pub mod compiler;
pub mod engine;
pub mod error;
pub mod model;
pub mod oracle;
pub mod queries;

pub use error::{Error, Result};
