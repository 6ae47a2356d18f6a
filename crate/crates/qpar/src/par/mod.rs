//! Depth-parallelizing rewrite passes.
//!
//! [`basic`] holds the elementary gadgets every other pass leans on:
//! constant-depth permutation routing, fan-out of a shared control,
//! entangled-copy parallelization of diagonal and commuting series.
//! [`cnot`] resynthesizes whole controlled-not circuits, and circuits of
//! controlled-nots plus diagonal gates, to logarithmic depth.

pub mod basic;
pub mod cnot;
