//! Benchmarks for `krein-core`; see `benches/`.

pub use krein_core;
