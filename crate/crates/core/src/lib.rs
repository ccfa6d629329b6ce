//! Matching-equivalent classification of Boolean circuits.
//!
//! The pipeline: And-Inverter Graphs ([`aig`]), the permutation/negation
//! transform algebra ([`transform`]), function-preserving rewrites
//! ([`optimizer`]), a brute-force matching-equivalence oracle ([`oracle`]),
//! labelled dataset generation ([`dataset`]), graph encoding ([`encode`]) and a
//! small graph convolutional classifier ([`gnn`]). The [`cli`] module wires the
//! stages into the `boolclass` binary.

pub mod aig;
pub mod builtins;
pub mod transform;
pub mod optimizer;
pub mod oracle;
pub mod encode;
pub mod dataset;
pub mod gnn;
pub mod cli;
