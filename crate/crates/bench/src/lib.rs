//! Criterion benchmarks for the `eqnorm-core` pipeline; see `benches/`.
