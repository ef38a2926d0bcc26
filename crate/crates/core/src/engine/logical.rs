//! Logical plans, the validated query form, and lowering.

use crate::algebra::{
    AlignmentSpec, ConsolidateKind, Direction, SpanPred, TopoKind, Which,
};
use crate::query::ast::{Attr, CmpOp};
use crate::region::Region;

/// A leaf relation source.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanSource {
    /// Every region of every page.
    AllSpans,
    /// Leftmost non-overlapping regular-expression matches per stored text.
    Regex(String),
    /// Token-boundary dictionary occurrences.
    Dict(String),
    /// Token-boundary occurrences of one phrase.
    Phrase(String),
}

impl ScanSource {
    pub fn describe(&self) -> String {
        match self {
            ScanSource::AllSpans => "all_spans".to_string(),
            ScanSource::Regex(p) => format!("regex({p:?})"),
            ScanSource::Dict(d) => format!("dict({d:?})"),
            ScanSource::Phrase(p) => format!("phrase({p:?})"),
        }
    }
}

/// Block aggregation parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    Text { max_gap: usize, min_count: usize },
    Region { x_dist: f64, y_dist: f64, min_count: usize },
}

/// Group aggregation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggKind {
    /// Minimal bounding rectangle of the group.
    Mbr,
    /// Smallest store region containing the whole group.
    SuperRegion,
}

/// One output column of a projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectCol {
    pub col: usize,
    pub attr: Attr,
    pub name: String,
}

/// The relational operator tree.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicalPlan {
    Scan {
        source: ScanSource,
        alias: String,
    },
    Select {
        input: Box<LogicalPlan>,
        pred: Pred,
    },
    Project {
        input: Box<LogicalPlan>,
        cols: Vec<ProjectCol>,
    },
    Product {
        inputs: Vec<LogicalPlan>,
    },
    Union {
        left: Box<LogicalPlan>,
        right: Box<LogicalPlan>,
    },
    Intersect {
        left: Box<LogicalPlan>,
        right: Box<LogicalPlan>,
    },
    Consolidate {
        input: Box<LogicalPlan>,
        kind: ConsolidateKind,
    },
    Block {
        input: Box<LogicalPlan>,
        kind: BlockKind,
    },
    Group {
        input: Box<LogicalPlan>,
        col: usize,
        spec: AlignmentSpec,
        alias: String,
    },
    Aggregate {
        input: Box<LogicalPlan>,
        kind: AggKind,
    },
}

impl LogicalPlan {
    /// Output width of the plan; `Group` reports the width of the grouped
    /// column stream (1).
    pub fn width(&self) -> usize {
        match self {
            LogicalPlan::Scan { .. } => 1,
            LogicalPlan::Select { input, .. } => input.width(),
            LogicalPlan::Project { cols, .. } => cols.len(),
            LogicalPlan::Product { inputs } => inputs.iter().map(|i| i.width()).sum(),
            LogicalPlan::Union { left, .. } | LogicalPlan::Intersect { left, .. } => left.width(),
            LogicalPlan::Consolidate { .. } | LogicalPlan::Block { .. } => 1,
            LogicalPlan::Group { .. } => 1,
            LogicalPlan::Aggregate { .. } => 1,
        }
    }

    /// Output column names.
    pub fn column_names(&self) -> Vec<String> {
        match self {
            LogicalPlan::Scan { alias, .. } => vec![alias.clone()],
            LogicalPlan::Select { input, .. } => input.column_names(),
            LogicalPlan::Project { cols, .. } => cols.iter().map(|c| c.name.clone()).collect(),
            LogicalPlan::Product { inputs } => {
                inputs.iter().flat_map(|i| i.column_names()).collect()
            }
            LogicalPlan::Union { left, .. } | LogicalPlan::Intersect { left, .. } => {
                left.column_names()
            }
            LogicalPlan::Consolidate { input, .. } | LogicalPlan::Block { input, .. } => {
                input.column_names()
            }
            LogicalPlan::Group { alias, .. } => vec![alias.clone()],
            LogicalPlan::Aggregate { input, .. } => input.column_names(),
        }
    }
}

/// A predicate argument: a tuple column, its centroid, a constant
/// rectangle (from a virtual region), or an unbound external parameter
/// (SQL emission only).
#[derive(Debug, Clone, PartialEq)]
pub enum ArgExpr {
    Col(usize),
    Centroid(usize),
    Rect(Region),
    Extern(String),
}

impl ArgExpr {
    pub fn col(&self) -> Option<usize> {
        match self {
            ArgExpr::Col(c) | ArgExpr::Centroid(c) => Some(*c),
            _ => None,
        }
    }
}

/// Scalar expression inside comparisons.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Area(ArgExpr),
    Lit(f64),
}

/// Predicate operators evaluable per tuple.
#[derive(Debug, Clone, PartialEq)]
pub enum PredOp {
    Dir { dir: Direction, strict: bool },
    Topo(TopoKind),
    Span(SpanPred),
    /// Proper-prefix relation on source region ids.
    AncestorOf,
    DescendantOf,
    /// Improper prefix, as in the SQL mapping's IsPrefix.
    IsPrefixOf,
    /// Source region id equality.
    IdEquals,
}

impl PredOp {
    pub fn name(&self) -> String {
        match self {
            PredOp::Dir { dir, strict } => {
                let base = match dir {
                    Direction::North => "NorthOf",
                    Direction::South => "SouthOf",
                    Direction::East => "EastOf",
                    Direction::West => "WestOf",
                };
                if *strict {
                    format!("Strict{base}")
                } else {
                    base.to_string()
                }
            }
            PredOp::Topo(TopoKind::Contains) => "Contains".to_string(),
            PredOp::Topo(TopoKind::Touches) => "Touches".to_string(),
            PredOp::Topo(TopoKind::Intersects) => "Intersects".to_string(),
            PredOp::Span(SpanPred::PrecedesWithin(d)) => format!("Precedes[{d}]"),
            PredOp::Span(SpanPred::Overlaps) => "SpanOverlaps".to_string(),
            PredOp::Span(SpanPred::StrictlyContains) => "SpanWithin".to_string(),
            PredOp::Span(SpanPred::Equals) => "SpanEquals".to_string(),
            PredOp::AncestorOf => "AncestorOf".to_string(),
            PredOp::DescendantOf => "DescendantOf".to_string(),
            PredOp::IsPrefixOf => "IsPrefixOf".to_string(),
            PredOp::IdEquals => "IdEquals".to_string(),
        }
    }
}

/// Boolean predicate tree over one tuple.
#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
    Call { op: PredOp, args: Vec<ArgExpr> },
    Cmp { lhs: Scalar, op: CmpOp, rhs: Scalar },
    Lit(bool),
}

impl Pred {
    /// Columns referenced anywhere in the predicate.
    pub fn columns(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_columns(&self, out: &mut Vec<usize>) {
        match self {
            Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|p| p.collect_columns(out)),
            Pred::Not(p) => p.collect_columns(out),
            Pred::Call { args, .. } => {
                for a in args {
                    if let Some(c) = a.col() {
                        out.push(c);
                    }
                }
            }
            Pred::Cmp { lhs, rhs, .. } => {
                for s in [lhs, rhs] {
                    if let Scalar::Area(a) = s {
                        if let Some(c) = a.col() {
                            out.push(c);
                        }
                    }
                }
            }
            Pred::Lit(_) => {}
        }
    }

    /// Rewrites column indices through `map[old] = new`.
    pub fn remap_columns(&mut self, map: &[usize]) {
        match self {
            Pred::And(ps) | Pred::Or(ps) => ps.iter_mut().for_each(|p| p.remap_columns(map)),
            Pred::Not(p) => p.remap_columns(map),
            Pred::Call { args, .. } => {
                for a in args {
                    match a {
                        ArgExpr::Col(c) | ArgExpr::Centroid(c) => *c = map[*c],
                        _ => {}
                    }
                }
            }
            Pred::Cmp { lhs, rhs, .. } => {
                for s in [lhs, rhs] {
                    if let Scalar::Area(ArgExpr::Col(c) | ArgExpr::Centroid(c)) = s {
                        *c = map[*c];
                    }
                }
            }
            Pred::Lit(_) => {}
        }
    }

    /// Splits a top-level conjunction into its conjuncts.
    pub fn into_conjuncts(self) -> Vec<Pred> {
        match self {
            Pred::And(ps) => ps,
            other => vec![other],
        }
    }

    /// Renders the predicate with column names for explain output.
    pub fn render(&self, cols: &[String]) -> String {
        let arg = |a: &ArgExpr| -> String {
            match a {
                ArgExpr::Col(c) => cols.get(*c).cloned().unwrap_or_else(|| format!("#{c}")),
                ArgExpr::Centroid(c) => format!(
                    "Centroid({})",
                    cols.get(*c).cloned().unwrap_or_else(|| format!("#{c}"))
                ),
                ArgExpr::Rect(r) => format!(
                    "A({}, {}, {}, {})",
                    fmt_f(r.x_l),
                    fmt_f(r.y_l),
                    fmt_f(r.x_h),
                    fmt_f(r.y_h)
                ),
                ArgExpr::Extern(name) => name.clone(),
            }
        };
        let scalar = |s: &Scalar| -> String {
            match s {
                Scalar::Area(a) => format!("Area({})", arg(a)),
                Scalar::Lit(n) => fmt_f(*n),
            }
        };
        match self {
            Pred::And(ps) => ps
                .iter()
                .map(|p| p.render(cols))
                .collect::<Vec<_>>()
                .join(" and "),
            Pred::Or(ps) => format!(
                "({})",
                ps.iter()
                    .map(|p| p.render(cols))
                    .collect::<Vec<_>>()
                    .join(" or ")
            ),
            Pred::Not(p) => format!("not ({})", p.render(cols)),
            Pred::Call { op, args } => format!(
                "{}({})",
                op.name(),
                args.iter().map(arg).collect::<Vec<_>>().join(", ")
            ),
            Pred::Cmp { lhs, op, rhs } => {
                format!("{} {} {}", scalar(lhs), op.symbol(), scalar(rhs))
            }
            Pred::Lit(b) => b.to_string(),
        }
    }
}

pub(crate) fn fmt_f(n: f64) -> String {
    if n == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{n}")
    }
}

/// A validated query in semantic form: resolved sources, column-indexed
/// predicates, grouping, and the select list.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedQuery {
    pub sources: Vec<TypedSource>,
    pub where_pred: Option<Pred>,
    pub group: Option<TypedGroup>,
    /// Post-aggregation predicate over the group column.
    pub having_residual: Option<Pred>,
    pub select: Vec<ProjectCol>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedSource {
    pub alias: String,
    pub kind: SourceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Scan(ScanSource),
    Consolidate {
        input: Box<SourceKind>,
        kind: ConsolidateKind,
    },
    Block {
        input: Box<SourceKind>,
        kind: BlockKind,
    },
    Sub(Box<TypedQuery>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedGroup {
    pub col: usize,
    pub spec: AlignmentSpec,
    pub agg: AggKind,
    pub alias: String,
}

/// Operators usable as select-list attribute transforms.
pub fn attr_which(attr: Attr) -> Option<Which> {
    match attr {
        Attr::MinimalRegion => Some(Which::Minimal),
        Attr::MaximalRegion => Some(Which::Maximal),
        _ => None,
    }
}

/// Lowers a validated query to its algebra plan: scans under a product,
/// the WHERE conjunction as a select chain, grouping as Group + Aggregate
/// with the having residual above, and the final projection.
pub fn lower(tq: &TypedQuery) -> LogicalPlan {
    let mut inputs: Vec<LogicalPlan> = tq
        .sources
        .iter()
        .map(|s| lower_source(&s.kind, &s.alias))
        .collect();
    let mut plan = if inputs.len() == 1 {
        inputs.pop().unwrap()
    } else {
        LogicalPlan::Product { inputs }
    };
    if let Some(pred) = &tq.where_pred {
        for conjunct in pred.clone().into_conjuncts() {
            plan = LogicalPlan::Select {
                input: Box::new(plan),
                pred: conjunct,
            };
        }
    }
    if let Some(group) = &tq.group {
        plan = LogicalPlan::Group {
            input: Box::new(plan),
            col: group.col,
            spec: group.spec.clone(),
            alias: group.alias.clone(),
        };
        plan = LogicalPlan::Aggregate {
            input: Box::new(plan),
            kind: group.agg,
        };
        if let Some(having) = &tq.having_residual {
            for conjunct in having.clone().into_conjuncts() {
                plan = LogicalPlan::Select {
                    input: Box::new(plan),
                    pred: conjunct,
                };
            }
        }
    }
    LogicalPlan::Project {
        input: Box::new(plan),
        cols: tq.select.clone(),
    }
}

fn lower_source(kind: &SourceKind, alias: &str) -> LogicalPlan {
    match kind {
        SourceKind::Scan(s) => LogicalPlan::Scan {
            source: s.clone(),
            alias: alias.to_string(),
        },
        SourceKind::Consolidate { input, kind } => LogicalPlan::Consolidate {
            input: Box::new(lower_source(input, alias)),
            kind: *kind,
        },
        SourceKind::Block { input, kind } => LogicalPlan::Block {
            input: Box::new(lower_source(input, alias)),
            kind: kind.clone(),
        },
        SourceKind::Sub(sub) => {
            // The subquery's own projection yields one column; rename it to
            // the outer alias.
            let inner = lower(sub);
            LogicalPlan::Project {
                input: Box::new(inner),
                cols: vec![ProjectCol {
                    col: 0,
                    attr: Attr::VisualSpan,
                    name: alias.to_string(),
                }],
            }
        }
    }
}
