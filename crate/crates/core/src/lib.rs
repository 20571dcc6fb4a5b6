//! Toolkit for studying how commented-out code in a prompt steers code
//! completion toward reintroducing defects.
//!
//! The pipeline: find comment blocks and decide which are commented-out code
//! ([`source`], [`detector`]); ingest defect-scanner findings ([`defects`]);
//! excise defects into dataset samples ([`dataset`]); forge prompt variants
//! around each completion point ([`prompt`]); obtain completions from a
//! backend ([`generation`]); and measure reintroduction ([`metrics`]).

pub mod cli;
pub mod config;
pub mod dataset;
pub mod decimal;
pub mod defects;
pub mod prompt;
pub mod detector;
pub mod generation;
pub mod metrics;
pub mod pipeline;
pub mod source;
pub mod text;

pub use decimal::Decimal2;
pub use source::{CommentBlock, LineSpan, SourceFile};
