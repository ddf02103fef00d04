//! Where should a visual assistant stand?
//!
//! This crate turns teleoperation trial records (per-subject task times and
//! error counts, tagged by affordance and camera viewpoint) into ranked
//! manifolds of equally good viewpoints on a hemispherical work envelope,
//! validates the resulting model statistically, and answers placement queries
//! for multi-step task plans.
//!
//! The processing chain: ingest and clean trials ([`trials`]), score
//! per-viewpoint performance and build value fields ([`valuation`]), cluster
//! viewpoints into manifolds over a combined spatial/value dissimilarity
//! ([`clustering`]), check the model against held measurements ([`stats`]),
//! and serve placement advice ([`advisor`]). [`pipeline`] wires the chain
//! together behind one config; [`synth`] generates reproducible synthetic
//! trial corpora for exercising it.

pub mod advisor;
pub mod affordance;
pub mod baseline;
pub mod clustering;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod trials;
pub mod valuation;

pub use affordance::Affordance;
pub use error::{Error, ErrorKind, Result};
