//! Batch-side components of the giglite pipeline: fitted feature
//! transformations, graph-definition utilities, the tabular subgraph
//! sampler, and hash-based split generation.

pub mod builder;
pub mod error;
pub mod preprocess;
pub mod sampler;
pub mod split;

pub use error::EtlError;
