//! Benchmark-only crate; the workspace's microbenchmarks live under
//! `benches/`. No library code.
