//! Moment minimization over finite alphabets: Rényi entropy and Sundaresan
//! divergence, Campbell coding, guessing, memoryless guessing and tasks
//! partitioning, the maps between them, and an exact-enumeration harness for
//! their i.i.d. sequence versions. All logarithms are base 2.

pub mod coding;
pub mod error;
pub mod guessing;
pub mod measures;
pub mod numeric;
pub mod sequences;
pub mod tasks;
pub mod transforms;

pub use error::{Error, Result};
pub use measures::{Alphabet, Distribution, MomentOrder, WeightFunction};
