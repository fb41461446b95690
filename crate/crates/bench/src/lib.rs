//! Criterion benchmarks for the synthesis pipeline live in `benches/`.
