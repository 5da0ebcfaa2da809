//! Criterion benchmarks for the spectral operators and the Beltrami solver;
//! see `benches/`.
