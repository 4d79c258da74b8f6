//! Automatic metrics for time-lapse text-to-video generation: a temporal
//! coherence score from point-tracker visibility, retrieval- and
//! rubric-based metamorphic scores, a clip curation pipeline, rank
//! correlation, and a benchmark harness that talks to model adapters over a
//! small JSON protocol.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the harness and protocol use throughout.

pub mod backend;
pub mod chscore;
pub mod curation;
pub mod frames;
pub mod harness;
pub mod mtscore;
pub mod pool;
pub mod protocol;
mod scalar;
pub mod stats;
pub mod types;

pub use scalar::Scalar;

pub use chscore::{chscore, chscore_from_visibility, coherence_components, missing_series, CHScoreConfig};
pub use mtscore::{classify_video, gpt_mtscore, mtscore_coarse, sample_frames_uniform, GPTScoreConfig, VideoClass};
pub use stats::{kendall_tau, spearman_rho, PairedSample};
pub use types::{
    BenchmarkEntry, CoherenceComponents, EvaluationRecord, MajorCategory, MissingSeries, RetrievalProfile,
    ValidationError, VisibilityMatrix,
};

pub type CoherenceReport = chscore::CoherenceReport<f64>;
pub type Profile = RetrievalProfile<f64>;
pub type Record = EvaluationRecord<f64>;
pub type Components = CoherenceComponents<f64>;

pub type CoherenceReport32 = chscore::CoherenceReport<f32>;
pub type Profile32 = RetrievalProfile<f32>;
