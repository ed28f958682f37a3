//! Analysis pipeline for coordinated hashtag-hijacking campaigns in
//! microblog corpora.
//!
//! The pipeline runs six stages over a line-oriented tweet corpus:
//!
//! 1. discovery of anomalous hashtags and hijacked hashtag clusters
//! 2. extraction of the coordinated agents behind them
//! 3. maneuver scoring of what those agents did (B-/D- maneuvers)
//! 4. correlation of maneuver exposure against the targeted accounts
//! 5. topic modeling of the coordinated narratives
//! 6. polarization measurement via per-subgroup E/I indices
//!
//! A seeded synthetic campaign generator ([`synthgen`]) produces labeled
//! corpora reproducing the campaign signatures so every stage can be
//! validated against ground truth.

pub mod bend;
pub mod community;
pub mod corpus;
pub mod discovery;
pub mod graph;
pub mod impact;
pub mod narrative;
pub mod pipeline;
pub mod synthgen;
pub mod targeting;

pub use corpus::{Agent, Corpus, CorpusStats, Tweet};
pub use graph::WeightedGraph;
