//! Benchmarks for the simulator, Gram construction and t-SNE gradient live
//! in `benches/`. Run them with `cargo bench -p qktsne-bench`.
