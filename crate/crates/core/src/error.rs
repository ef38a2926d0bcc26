//! Error types shared across the crate.

use thiserror::Error;

/// Errors from constructing or operating on the core value types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("invalid rectangle ({xl}, {yl}, {xh}, {yh}): lower bounds must be finite and not exceed upper bounds")]
    InvalidRect { xl: f64, yl: f64, xh: f64, yh: f64 },
    #[error("operation requires a finite region")]
    InfiniteRegion,
    #[error("invalid text span: begin {begin} exceeds end {end}")]
    InvalidSpan { begin: usize, end: usize },
    #[error("invalid region id {input:?}: expected a non-empty dot-separated list of positive integers")]
    InvalidRegionId { input: String },
    #[error("tuple must contain at least one cell")]
    EmptyTuple,
    #[error("tuple width {got} does not match relation width {want}")]
    TupleWidth { want: usize, got: usize },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
}

/// A store invariant violated by a specific region.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationKind {
    #[error("rectangle is invalid or not finite")]
    BadRect,
    #[error("text offsets out of order: begin {begin} exceeds end {end}")]
    BadOffsets { begin: usize, end: usize },
    #[error("stored text has {text_len} characters but offsets cover [{start}, {end})")]
    TextLengthMismatch { start: usize, end: usize, text_len: usize },
    #[error("duplicate region id")]
    DuplicateRegionId,
    #[error("parent region {parent} does not exist")]
    MissingParent { parent: String },
    #[error("offsets [{child_start}, {child_end}) escape parent {parent} offsets [{parent_start}, {parent_end})")]
    OffsetContainment {
        parent: String,
        parent_start: usize,
        parent_end: usize,
        child_start: usize,
        child_end: usize,
    },
    #[error("region stores text but so does its descendant {descendant}")]
    NestedText { descendant: String },
    #[error("page text is not contiguous: previous text ends at {prev_end}, next starts at {next_start}")]
    TextNotContiguous { prev_end: usize, next_start: usize },
    #[error("stored {field} {stored} does not match derived value {derived}")]
    MinMaxMismatch {
        field: &'static str,
        stored: String,
        derived: String,
    },
}

/// Errors raised while loading or validating a region store.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("page {page_id:?} region {region_id}: {kind}")]
    Validation {
        page_id: String,
        region_id: String,
        kind: ValidationKind,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the algebra operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("page not found: {0:?}")]
    PageNotFound(String),
    #[error("region {region_id} not found on page {page_id:?}")]
    RegionNotFound { page_id: String, region_id: String },
    #[error("visual spans live on different pages: {0:?} vs {1:?}")]
    PageMismatch(String, String),
    #[error("expected a width-1 relation, got width {0}")]
    WidthMismatch(usize),
    #[error("operation requires a store-backed region, got a synthesized one")]
    SynthesizedRegion,
    #[error("no store region on page {page_id:?} covers span [{begin}, {end})")]
    NoCoveringRegion {
        page_id: String,
        begin: usize,
        end: usize,
    },
    #[error("empty input set")]
    EmptyInput,
    #[error("invalid regular expression: {0}")]
    BadPattern(String),
    #[error("unknown dictionary {0:?}")]
    UnknownDictionary(String),
    #[error("phrase contains no tokens")]
    EmptyPhrase,
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Errors raised while serializing or loading index sidecar files.
#[derive(Debug, Error)]
pub enum IndexError {
    #[error("not an index file (bad magic header)")]
    BadMagic,
    #[error("index file version {found} does not match supported version {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("index was built from a different store (fingerprint mismatch)")]
    StoreMismatch,
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Runtime errors surfaced by plan execution, tagged with the plan node that
/// raised them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{node}: {source}")]
    Runtime {
        node: String,
        #[source]
        source: AlgebraError,
    },
    #[error("plan references unbound external parameter {0:?}")]
    UnboundParam(String),
    #[error("malformed plan: {0}")]
    PlanShape(String),
}

impl EngineError {
    pub fn at(node: impl Into<String>, source: AlgebraError) -> Self {
        EngineError::Runtime {
            node: node.into(),
            source,
        }
    }
}

/// Errors from the SQL emitter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SqlError {
    #[error("plan node cannot be emitted as SQL: {0}")]
    UnsupportedNode(String),
}
