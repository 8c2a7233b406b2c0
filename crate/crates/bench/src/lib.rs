//! Benchmarks for penner-core live in `benches/`.
