//! Criterion benchmarks for the `hyperstar` crate live under `benches/`.
