//! Symbolic machinery for Riccati-chain equations: building the chain from
//! its parameters, linearizing it through the logarithmic-derivative
//! substitution, depressing the resulting linear equation by a gauge factor,
//! and cross-checking the algebra numerically against Schwarzian-derivative
//! identities.
//!
//! The crate is split along those lines: [`expr`] is the exact-rational
//! expression engine (parser, printer, canonical form, evaluator), [`jet`]
//! the polynomial algebra in a function and its derivatives, [`chain`] and
//! [`reduce`] the symbolic constructions, [`schwarz`] the Schwarzian and
//! Möbius layer, [`numverify`] the numeric verification harness, and [`cli`]
//! the JSON-driven command-line front end.

pub mod exec;
pub mod expr;
pub mod chain;
pub mod cli;
pub mod grid;
pub mod jet;
pub mod numverify;
pub mod reduce;
pub mod refforms;
pub mod schwarz;
