//! Criterion benchmarks for the harness hot paths; see `benches/`.
