//! Criterion benchmarks for heptad-core; see `benches/`.
