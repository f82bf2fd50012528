//! Benchmarks for the correlation sweep and the simulators; see `benches/`.
