//! Distant-supervision corpus construction for fine-grained entity recognition.

pub mod analysis;
pub mod bundled;
pub mod emit;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod io;
pub mod link_stats;
pub mod metrics;
pub mod model;
pub mod nds;
pub mod pipeline;
pub mod pos;
pub mod scalar;
pub mod stage1;
pub mod stage2;
pub mod stage3;

pub use error::{Error, Result};
pub use model::{Anchor, AnchorKind, Document, EntityId, KnowledgeBase, TokenSpan, TypeHierarchy};
pub use scalar::Scalar;

pub type PrfF64 = metrics::Prf<f64>;
pub type TypingScoresF64 = metrics::TypingScores<f64>;
pub type EvalReportF64 = metrics::EvalReport<f64>;
