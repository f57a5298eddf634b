//! Colorless-green treebank toolkit.
//!
//! The pipeline has four stages, each in its own module:
//!
//! 1. [`conllu`] reads and writes CoNLL-U treebanks losslessly.
//! 2. [`cg`] hollows every sentence into a template of function words and
//!    refills the content slots with feature-matched donor words under four
//!    gender variants, using the feature keys from [`schema`].
//! 3. [`tasks`] derives the POS, STDP, GCM and SVA probing datasets.
//! 4. [`embeddings`] and [`probe`] consume layer-wise model embeddings and
//!    train one linear probe per (task, layer).
//!
//! [`cli`] wires the stages together behind the `cgprobe` binary.

pub mod cg;
pub mod cli;
pub mod config;
pub mod conllu;
pub mod embeddings;
mod error;
pub mod probe;
pub mod schema;
pub mod synth;
pub mod tasks;

pub use error::{Error, Result};
