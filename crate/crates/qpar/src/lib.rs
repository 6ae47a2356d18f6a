//! qpar rewrites circuits over a small gate alphabet into equivalent
//! shallow circuits, trading depth for ancilla wires, and checks every
//! rewrite against a simulation oracle on the ancillae-restricted
//! subspace.
//!
//! The library is organized around one intermediate representation
//! ([`circuit`]), one notion of correctness ([`sim`]), and a family of
//! rewrite passes: elementary gadgets ([`par`]), controlled-not
//! resynthesis over GF(2) ([`gf2`], [`par::cnot`]), diagonal-operator
//! synthesis ([`diag`]), and a normal form for the Hadamard-plus-
//! controlled-Pauli gate class ([`clifford`]).

#[cfg(doctest)]
pub mod book;

pub mod circuit;
pub mod cli;
pub mod clifford;
pub mod error;
pub mod diag;
pub mod format;
pub mod gen;
pub mod gf2;
pub mod par;
pub mod sim;

pub use circuit::{Circuit, EmbeddedCircuit, Gate};
pub use error::{QparError, Result};
