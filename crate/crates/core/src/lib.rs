//! Contextualized concept embeddings of descriptive terms.
//!
//! Terms (tags, labels) that co-occur in documents are embedded by a deep
//! network whose input joins a term's global co-occurrence features with the
//! topic distribution of its document. A first stage learns to predict the
//! document from a term; a second, Siamese stage shapes the hidden layer so
//! Euclidean distance reflects relatedness in context. Embeddings are
//! evaluated by semantic priming.

pub mod baselines;
pub mod bundle;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod linalg;
pub mod network;
pub mod oov;
pub mod pipeline;
pub mod priming;
pub mod rng;
pub mod topics;
pub mod training;

pub use error::{Error, Result};
