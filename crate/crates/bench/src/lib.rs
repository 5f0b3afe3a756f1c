//! Criterion benchmarks for the solver live in `benches/`.

pub use chemosched_core as core;
