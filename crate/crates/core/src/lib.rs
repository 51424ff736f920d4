//! Quantized motion matching for co-speech gesture synthesis.
//!
//! The pipeline turns a motion corpus into a searchable gesture database:
//! motion is normalized into rotation-matrix features ([`motion`]), cut into
//! fixed windows and quantized against a k-means codebook ([`codebook`]),
//! and annotated with per-step speech token windows, text embeddings and a
//! phase manifold ([`seqsim`], [`phase`]). [`matcher`] then synthesizes a
//! code sequence for new speech by rank-fused candidate search with phase
//! guided selection, and [`metrics`] scores generated motion against
//! reference data.

pub mod codebook;
pub mod error;
pub mod matcher;
pub mod metrics;
pub mod motion;
pub mod phase;
pub mod seqsim;
pub mod store;

pub use error::{Error, Result};
