//! Batch driver around the iteration library: problem generation, single
//! runs, eta/gap sweeps, and standalone re-certification of serialized
//! trajectories. All IO formats live here; the core crate stays pure.

pub mod artifacts;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod mtx;
pub mod numfmt;
pub mod vecio;
