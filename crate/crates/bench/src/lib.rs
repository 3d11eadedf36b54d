//! Placeholder lib target; the benchmarks live under `benches/`.
