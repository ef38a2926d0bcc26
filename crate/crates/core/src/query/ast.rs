//! Abstract syntax for the surface query language.
//!
//! Equality on AST nodes ignores source spans, so a parsed query compares
//! equal to its canonical re-parse.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use crate::algebra::{Axis, ConsolidateKind};
use crate::region::Region;

/// A node paired with its source byte range. Equality and hashing ignore
/// the span.
#[derive(Debug, Clone)]
pub struct Spanned<T> {
    pub node: T,
    pub span: Range<usize>,
}

impl<T> Spanned<T> {
    pub fn new(node: T, span: Range<usize>) -> Spanned<T> {
        Spanned { node, span }
    }

    /// A spanned node with an empty span, for programmatic construction.
    pub fn synthetic(node: T) -> Spanned<T> {
        Spanned { node, span: 0..0 }
    }
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl<T: Eq> Eq for Spanned<T> {}

impl<T: Hash> Hash for Spanned<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.node.hash(state);
    }
}

impl<T: fmt::Display> fmt::Display for Spanned<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.fmt(f)
    }
}

/// Attribute of a bound column in the select list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attr {
    VisualSpan,
    Span,
    Region,
    Text,
    MinimalRegion,
    MaximalRegion,
}

impl Attr {
    pub fn parse_ci(s: &str) -> Option<Attr> {
        match s.to_ascii_lowercase().as_str() {
            "visualspan" => Some(Attr::VisualSpan),
            "span" => Some(Attr::Span),
            "region" => Some(Attr::Region),
            "text" => Some(Attr::Text),
            "minimalregion" => Some(Attr::MinimalRegion),
            "maximalregion" => Some(Attr::MaximalRegion),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Attr::VisualSpan => "VisualSpan",
            Attr::Span => "Span",
            Attr::Region => "Region",
            Attr::Text => "Text",
            Attr::MinimalRegion => "MinimalRegion",
            Attr::MaximalRegion => "MaximalRegion",
        }
    }
}

/// A parsed query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub select: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub where_clause: Option<Expr>,
    pub group: Option<GroupClause>,
    pub having: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectItem {
    pub alias: Spanned<String>,
    pub attr: Attr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FromItem {
    pub source: Source,
    pub alias: Spanned<String>,
}

/// A relation source in the FROM clause. Wrapping sources compose:
/// consolidation and block aggregation apply to the rows of their inner
/// source.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `R(D)`: every region of every document.
    AllSpans,
    /// `RegEx('pattern', D)`.
    Regex(Spanned<String>),
    /// `Dict('name', D)`.
    Dict(Spanned<String>),
    /// `Phrase('some words', D)`: token-boundary phrase occurrences.
    Phrase(Spanned<String>),
    /// `A(xl, yl, xh, yh)`: a constant rectangle; `inf` allowed on the
    /// upper bounds.
    Virtual(Region),
    /// `Consolidate(source, containment | overlap)`.
    Consolidate {
        input: Box<Source>,
        kind: ConsolidateKind,
    },
    /// `BlockText(source, max_gap, min_count)`.
    BlockText {
        input: Box<Source>,
        max_gap: u64,
        min_count: u64,
    },
    /// `BlockRegion(source, x_dist, y_dist, min_count)`.
    BlockRegion {
        input: Box<Source>,
        x_dist: f64,
        y_dist: f64,
        min_count: u64,
    },
    /// `( select ... )`: a one-level subquery with a width-1 select list.
    SubQuery(Box<QueryAst>),
}

/// Boolean expression in WHERE / HAVING.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Two or more disjuncts.
    Or(Vec<Expr>),
    /// Two or more conjuncts.
    And(Vec<Expr>),
    Not(Box<Expr>),
    Call(PredCall),
    Cmp {
        lhs: ScalarExpr,
        op: CmpOp,
        rhs: ScalarExpr,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredCall {
    pub name: Spanned<String>,
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    /// A bound alias.
    Ref(Spanned<String>),
    /// `Centroid(alias)`: the centroid point of the alias's region.
    Centroid(Spanned<String>),
    Str(String),
    Num(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    /// `Area(alias)`.
    Area(Spanned<String>),
    /// `Count(alias)`: group cardinality, HAVING only.
    Count(Spanned<String>),
    Num(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }
}

/// `group (vertically|horizontally) aligned(alias, params...) as alias`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupClause {
    pub axis: Axis,
    pub over: Spanned<String>,
    pub params: Vec<(Spanned<String>, GroupParam)>,
    pub alias: Spanned<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupParam {
    Num(f64),
    Bool(bool),
    Word(String),
}
