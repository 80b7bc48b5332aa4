//! Criterion benchmarks for the quadrature kernels live in `benches/`.
