//! Exact distributions of chained probabilistic computations.
//!
//! This crate implements probabilistic arithmetic automata (PAAs): Markov
//! chains whose states emit values and fold them into an accumulator with a
//! per-state operation. The [`paa`] module holds the generic machinery
//! (state-value recurrence, doubling, waiting times); [`textmodel`] provides
//! finite-memory random text models (i.i.d., Markov, character-emitting
//! HMMs); [`daa`] builds PAAs from deterministic automata and text models.
//!
//! On top of that core sit five application layers:
//!
//! - [`patstats`]: pattern occurrence counts, waiting times, clump sizes
//! - [`algocost`]: exact cost distributions of window-based matchers
//! - [`seedstat`]: alignment-seed hit distributions and sensitivity
//! - [`massstat`]: proteolytic fragment length/mass statistics
//! - [`flowlen`]: flow-sequencing read-length distributions
//!
//! plus [`oracle`], a set of brute-force reference implementations used to
//! validate everything else.

pub mod algocost;
pub mod daa;
pub mod dist;
pub mod error;
pub mod flowlen;
pub mod massstat;
pub mod oracle;
pub mod paa;
pub mod patstats;
pub mod seedstat;
pub mod textmodel;

pub use dist::{Distribution, StateValueDistribution, Value, ValueDomain};
pub use error::{Error, Result};
pub use paa::{DoublingKernel, MarkovChain, Method, Operation, Paa};
pub use textmodel::{Hmm, TextModel};
