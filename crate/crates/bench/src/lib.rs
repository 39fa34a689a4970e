//! Criterion benchmarks for the kernels, special functions and operator assembly; see `benches/`.
