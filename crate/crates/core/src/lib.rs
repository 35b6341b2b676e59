//! Low-dimensional embeddings of formal contexts and closure systems, with
//! the exact formal concept analysis machinery needed to train and evaluate
//! them.

pub mod bitset;
pub mod closure2vec;
pub mod context;
pub mod error;
pub mod eval;
pub mod fc2vec;
pub mod fixtures;
pub mod lattice;
pub mod nn;
pub mod par;
pub mod rudolph;
pub mod stats;
pub mod synth;

pub use bitset::{AttrSet, BitSet, ObjSet};
pub use context::{EmptyPolicy, FormalContext};
pub use error::{Error, Result};
pub use lattice::{Concept, ConceptLattice, Implication};
pub use par::Execution;
