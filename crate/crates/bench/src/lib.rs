//! Benchmark harness for the `dprgda` optimizers; see `benches/`.
