//! Regional cuisine-style analysis and transformation.
//!
//! * [`corpus`]: recipe ingestion, vocabularies, splits, indicator vectors
//! * [`classifier`]: two-hidden-layer softmax classifier trained with Adam
//! * [`embeddings`]: joint ingredient/country skip-gram with negative sampling
//! * [`layout`]: spectral country circle and barycentric Newton diagrams
//! * [`transform`]: analogy-driven ingredient substitution sessions

pub mod artifact;
pub mod classifier;
pub mod corpus;
pub mod embeddings;
pub mod layout;
pub mod synthetic;
pub mod transform;

pub use artifact::ArtifactError;
pub use classifier::{CuisineDistribution, MlpConfig, MlpModel};
pub use corpus::{Recipe, Vocabulary};
pub use embeddings::{EmbeddingConfig, EmbeddingSpace};
