//! Shared substrate for the giglite pipeline: deterministic hashing and
//! seeded sampling primitives, the canonical tabular text format, and the
//! immutable in-memory property graph every other component reads from.

pub mod error;
pub mod graph;
pub mod hash;
pub mod table;

pub use error::{GraphError, TableError};
pub use graph::{
    Direction, EdgeId, EdgeTypeDef, EdgeTypeTriple, Graph, GraphSchema, Neighbor, NodeRef,
    NodeTypeDef,
};
pub use hash::{derive_seed, fnv1a64, fnv1a64_seeded, splitmix64, u01, DetRng};
