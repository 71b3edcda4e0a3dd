//! Network-aware as-you-type top-k search over social tagging data.

pub mod corpus;
pub mod ctil;
pub mod dataset;
pub mod engine;
pub mod eval;
pub mod fixtures;
pub mod ids;
pub mod socialgraph;

pub use corpus::{Corpus, Triple};
pub use ctil::CtIlIndex;
pub use dataset::Dataset;
pub use engine::{execute, EngineConfig, Keystroke, Query, Session, TopKResult};
pub use ids::{GraphUserId, ItemId, TagId, UserId};
pub use socialgraph::{ProximityAggregator, SimilarityGraph};
