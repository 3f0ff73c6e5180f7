//! Benchmark-only package; see benches/propagators.rs.
