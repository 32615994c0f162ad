//! Deterministic spatiotemporal relation engine.
//!
//! Per-frame object detections go in; out come object tracks, per-slot
//! relation events, a fire-and-wire neuron graph, slot-ordered text
//! descriptions and future-touch forecasts. A planar elastic-collision
//! simulator provides synthetic scenes with analytic ground truth.

pub mod config;
pub mod geometry;
pub mod ingest;
pub mod language;
pub mod network;
pub mod pipeline;
pub mod predict;
pub mod relations;
pub mod simulate;
