//! Criterion benchmarks for the metricgraph kernels live under `benches/`.
