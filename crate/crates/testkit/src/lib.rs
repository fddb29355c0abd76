//! Test support: a seeded demo world, random workloads over it, and
//! brute-force oracles that recompute answers without the engine's indexes
//! or helpers.

pub mod oracle;
pub mod workload;

pub use oracle::Taxonomy;
pub use workload::World;
