//! Language-oriented semantic communication.
//!
//! Text prompts are compressed to their head words ([`ssc`]), hardened
//! against character noise by swapping in longer in-context synonyms
//! ([`scc`]), optionally rewritten into a receiver's caption style from a
//! handful of demonstrations ([`skd`]), and sent word by word ([`protocol`])
//! over a 16QAM/AWGN or discrete memoryless character channel
//! ([`channel`]). [`metrics`] turns transmission traces into compression,
//! error and survival statistics; [`experiment`] wires it all into the
//! sweeps driven by the `lsc` command-line tool.

pub mod channel;
pub mod config;
pub mod experiment;
pub mod fixtures;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod protocol;
pub mod scc;
pub mod seed;
pub mod skd;
pub mod ssc;
pub mod text_model;
