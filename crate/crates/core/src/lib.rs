//! Static checker for Java API misuse in code snippets, plus the harness
//! pieces needed to benchmark code-generating models against it: prompt
//! building, response collection over HTTP, corpus evaluation and reports.
//!
//! The pipeline: a snippet is classified and wrapped into a compilation
//! unit, parsed into an AST, linearized into a call sequence (control
//! markers + method calls with inferred receiver types and dominating
//! guard conditions), and matched against usage rules by longest common
//! subsequence. A rule fully embedded in the sequence is satisfied; an API
//! whose rules all fail to embed is reported as misused.

pub mod ast;

pub mod client;
pub mod corpus;
pub mod prompt;
pub mod rules;
pub mod sequence;

pub use ast::{classify_snippet, harness_snippet, parse, parse_snippet};
