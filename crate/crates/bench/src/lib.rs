//! Benchmarks for the carnot crate live in `benches/`.
