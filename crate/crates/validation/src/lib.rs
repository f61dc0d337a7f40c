//! Benchmark acceptance suite; the checks live in `tests/acceptance.rs`.
