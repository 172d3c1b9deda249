//! Benchmark and verification harness for the greedy regression toolkit.
//!
//! The binary front-end ([`main`](../benchcli/index.html)) exposes four
//! subcommands: `bench` and `sweep` run seeded experiment sweeps from a TOML
//! config and emit CSV tables plus SVG figures, `verify` runs the synthetic
//! bound-checking suites, and `datagen` exports sampled datasets.  Everything
//! the binary does is reachable through this library so the integration tests
//! can drive it in-process.

pub mod config;
pub mod emit;
pub mod metrics;
pub mod runner;
pub mod svg;
pub mod verify;
