//! Layout-aware information extraction over stores of rendered page regions.
//!
//! This crate evaluates declarative queries that mix text predicates (regular
//! expressions, dictionaries, phrase containment) with spatial layout
//! predicates (directional, containment, alignment, aggregation) over
//! collections of rectangular regions captured from rendered documents.
//!
//! Module map:
//!
//! - [`region`]: core value types (rectangles, text spans, visual spans,
//!   region identifiers, tuples, relations).
//! - [`store`]: the immutable per-corpus region collection, its JSONL format,
//!   derived minimal/maximal region links, and a synthetic corpus generator.
//! - [`index`]: inverted text index with phrase-containment semantics and
//!   sorted coordinate indices over region bounds.
//! - [`algebra`]: the visual span operator library (extraction, predicates,
//!   consolidation, block aggregation, alignment grouping).
//! - [`query`]: the SQL-like surface language: lexer, recovering parser,
//!   validator, and canonical printer.
//! - [`engine`]: logical plans, the optimizer (predicate pushdown, index
//!   selection, join ordering), the executor, and a naive reference evaluator.
//! - [`sql`]: translation of logical plans into a single flattened SQL
//!   statement over the `Regions` schema.

pub mod algebra;
pub mod engine;
pub mod error;
pub mod index;
pub mod query;
pub mod region;
pub mod sql;
pub mod store;
pub mod text;
