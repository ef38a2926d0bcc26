//! Semantic validation: alias resolution, predicate signatures, dictionary
//! existence, finiteness checks for area/centroid, grouping and having
//! rules. Produces the engine's [`TypedQuery`] form; every unresolved name
//! in the input yields its own diagnostic.

use std::collections::{BTreeSet, HashMap};

use crate::algebra::{
    AlignMode, AlignmentSpec, ConsolidateKind, Direction, SpanPred, TopoKind,
};
use crate::engine::logical::{
    AggKind, ArgExpr, BlockKind, Pred, PredOp, ProjectCol, Scalar, ScanSource, SourceKind,
    TypedGroup, TypedQuery, TypedSource,
};
use crate::region::Region;
use crate::store::RegionStore;

use super::ast::*;
use super::Diagnostic;

/// Names the validator can resolve against: registered dictionaries.
/// Predicate signatures are built in.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub dictionaries: BTreeSet<String>,
}

impl Catalog {
    pub fn from_store(store: &RegionStore) -> Catalog {
        Catalog {
            dictionaries: store.dictionaries().keys().cloned().collect(),
        }
    }

    pub fn with_dictionaries<I: IntoIterator<Item = String>>(names: I) -> Catalog {
        Catalog {
            dictionaries: names.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone)]
enum Binding {
    /// Index into the non-virtual source list.
    Source { col: usize, backed: bool },
    Virtual(Region),
}

pub fn validate(ast: &QueryAst, catalog: &Catalog) -> Result<TypedQuery, Vec<Diagnostic>> {
    let mut v = Validator {
        catalog,
        diags: Vec::new(),
    };
    let tq = v.query(ast);
    if v.diags.is_empty() {
        Ok(tq.expect("no diagnostics implies a typed query"))
    } else {
        v.diags.sort_by_key(|d| (d.span.start, d.span.end));
        Err(v.diags)
    }
}

struct Validator<'a> {
    catalog: &'a Catalog,
    diags: Vec<Diagnostic>,
}

impl<'a> Validator<'a> {
    fn err(&mut self, span: std::ops::Range<usize>, message: impl Into<String>) {
        self.diags.push(Diagnostic::error(span, message));
    }

    fn query(&mut self, ast: &QueryAst) -> Option<TypedQuery> {
        let mut bindings: HashMap<String, Binding> = HashMap::new();
        let mut sources: Vec<TypedSource> = Vec::new();

        for item in &ast.from {
            if bindings.contains_key(&item.alias.node) {
                self.err(
                    item.alias.span.clone(),
                    format!("duplicate alias {:?}", item.alias.node),
                );
                continue;
            }
            match &item.source {
                Source::Virtual(rect) => {
                    bindings.insert(item.alias.node.clone(), Binding::Virtual(*rect));
                }
                other => {
                    if let Some((kind, backed)) = self.source_kind(other) {
                        bindings.insert(
                            item.alias.node.clone(),
                            Binding::Source {
                                col: sources.len(),
                                backed,
                            },
                        );
                        sources.push(TypedSource {
                            alias: item.alias.node.clone(),
                            kind,
                        });
                    }
                }
            }
        }
        if sources.is_empty() && self.diags.is_empty() {
            let span = ast
                .from
                .first()
                .map(|f| f.alias.span.clone())
                .unwrap_or(0..0);
            self.err(span, "the query needs at least one non-virtual source");
        }

        let where_pred = ast
            .where_clause
            .as_ref()
            .and_then(|e| self.expr(e, &bindings, Scope::Where));

        // Grouping.
        let mut group = None;
        let mut group_bindings = bindings.clone();
        if let Some(g) = &ast.group {
            group = self.group(g, &bindings);
            if bindings.contains_key(&g.alias.node) {
                self.err(
                    g.alias.span.clone(),
                    format!("group alias {:?} collides with a source alias", g.alias.node),
                );
            }
            group_bindings.insert(
                g.alias.node.clone(),
                Binding::Source {
                    col: 0,
                    backed: false,
                },
            );
        }

        // Having: only meaningful with grouping. Count comparisons fold into
        // the minimum group size; the rest stays as a post-aggregation
        // predicate over the group column and virtual constants.
        let mut having_residual = None;
        if let Some(h) = &ast.having {
            match (&ast.group, &mut group) {
                (Some(g), Some(tg)) => {
                    let mut post: HashMap<String, Binding> = HashMap::new();
                    post.insert(
                        g.alias.node.clone(),
                        Binding::Source {
                            col: 0,
                            backed: false,
                        },
                    );
                    for (name, b) in &bindings {
                        if let Binding::Virtual(r) = b {
                            post.insert(name.clone(), Binding::Virtual(*r));
                        }
                    }
                    let (bound, residual) = self.having(h, &post, &g.alias.node);
                    if let Some(bound) = bound {
                        tg.1.spec.min_group_size = tg.1.spec.min_group_size.max(bound);
                    }
                    having_residual = residual;
                }
                _ => {
                    self.err(0..0, "having requires a group clause");
                }
            }
        }

        // Select list.
        let mut select = Vec::new();
        let mut seen = BTreeSet::new();
        for item in &ast.select {
            let scope_bindings: &HashMap<String, Binding> = if ast.group.is_some() {
                &group_bindings
            } else {
                &bindings
            };
            let Some(binding) = scope_bindings.get(&item.alias.node) else {
                self.err(
                    item.alias.span.clone(),
                    format!("unknown alias {:?}", item.alias.node),
                );
                continue;
            };
            match binding {
                Binding::Virtual(_) => {
                    self.err(
                        item.alias.span.clone(),
                        format!(
                            "virtual region {:?} cannot be projected; it is a constant",
                            item.alias.node
                        ),
                    );
                }
                Binding::Source { col, backed } => {
                    if let Some(g) = &ast.group {
                        if item.alias.node != g.alias.node {
                            self.err(
                                item.alias.span.clone(),
                                format!(
                                    "only the group alias {:?} is visible after grouping",
                                    g.alias.node
                                ),
                            );
                            continue;
                        }
                    }
                    if matches!(item.attr, Attr::MinimalRegion | Attr::MaximalRegion) && !backed {
                        self.err(
                            item.alias.span.clone(),
                            format!(
                                "{} requires a store-backed alias, and {:?} carries synthesized regions",
                                item.attr.name(),
                                item.alias.node
                            ),
                        );
                        continue;
                    }
                    let name = format!("{}.{}", item.alias.node, item.attr.name());
                    if !seen.insert(name.clone()) {
                        self.err(
                            item.alias.span.clone(),
                            format!("duplicate select column {name:?}"),
                        );
                        continue;
                    }
                    select.push(ProjectCol {
                        col: *col,
                        attr: item.attr,
                        name,
                    });
                }
            }
        }

        if !self.diags.is_empty() {
            return None;
        }
        Some(TypedQuery {
            sources,
            where_pred,
            group: group.map(|g| g.1),
            having_residual,
            select,
        })
    }

    /// Resolves a source; the flag reports whether its rows carry store
    /// region ids.
    fn source_kind(&mut self, source: &Source) -> Option<(SourceKind, bool)> {
        match source {
            Source::AllSpans => Some((SourceKind::Scan(ScanSource::AllSpans), true)),
            Source::Regex(pat) => {
                if let Err(e) = regex::Regex::new(&pat.node) {
                    self.err(
                        pat.span.clone(),
                        format!("invalid regular expression: {e}"),
                    );
                    return None;
                }
                Some((SourceKind::Scan(ScanSource::Regex(pat.node.clone())), true))
            }
            Source::Dict(name) => {
                if !self.catalog.dictionaries.contains(&name.node) {
                    self.err(
                        name.span.clone(),
                        format!("unknown dictionary {:?}", name.node),
                    );
                    return None;
                }
                Some((SourceKind::Scan(ScanSource::Dict(name.node.clone())), true))
            }
            Source::Phrase(text) => {
                if crate::text::tokenize(&text.node).is_empty() {
                    self.err(text.span.clone(), "phrase contains no tokens");
                    return None;
                }
                Some((
                    SourceKind::Scan(ScanSource::Phrase(text.node.clone())),
                    true,
                ))
            }
            Source::Virtual(_) => unreachable!("virtual sources bind as constants"),
            Source::Consolidate { input, kind } => {
                let (inner, backed) = self.source_kind(input)?;
                Some((
                    SourceKind::Consolidate {
                        input: Box::new(inner),
                        kind: *kind,
                    },
                    // Overlap consolidation re-anchors merged rows at store
                    // regions; containment keeps input rows.
                    match kind {
                        ConsolidateKind::Containment => backed,
                        ConsolidateKind::Overlap => backed,
                    },
                ))
            }
            Source::BlockText {
                input,
                max_gap,
                min_count,
            } => {
                let (inner, _) = self.source_kind(input)?;
                if *min_count < 1 {
                    self.err(0..0, "BlockText min_count must be at least 1");
                }
                Some((
                    SourceKind::Block {
                        input: Box::new(inner),
                        kind: BlockKind::Text {
                            max_gap: *max_gap as usize,
                            min_count: *min_count as usize,
                        },
                    },
                    true,
                ))
            }
            Source::BlockRegion {
                input,
                x_dist,
                y_dist,
                min_count,
            } => {
                let (inner, _) = self.source_kind(input)?;
                if *min_count < 1 {
                    self.err(0..0, "BlockRegion min_count must be at least 1");
                }
                if *x_dist < 0.0 || *y_dist < 0.0 {
                    self.err(0..0, "BlockRegion distances must be non-negative");
                }
                Some((
                    SourceKind::Block {
                        input: Box::new(inner),
                        kind: BlockKind::Region {
                            x_dist: *x_dist,
                            y_dist: *y_dist,
                            min_count: *min_count as usize,
                        },
                    },
                    true,
                ))
            }
            Source::SubQuery(sub) => {
                let inner = match validate(sub, self.catalog) {
                    Ok(tq) => tq,
                    Err(diags) => {
                        self.diags.extend(diags);
                        return None;
                    }
                };
                if inner.select.len() != 1 {
                    self.err(
                        sub.select
                            .first()
                            .map(|s| s.alias.span.clone())
                            .unwrap_or(0..0),
                        "a subquery source must select exactly one column",
                    );
                    return None;
                }
                // Every non-grouped column carries store region ids; the
                // group aggregate may synthesize its rectangle.
                let backed = inner.group.is_none();
                Some((SourceKind::Sub(Box::new(inner)), backed))
            }
        }
    }

    fn group(
        &mut self,
        g: &GroupClause,
        bindings: &HashMap<String, Binding>,
    ) -> Option<(String, TypedGroup)> {
        let col = match bindings.get(&g.over.node) {
            Some(Binding::Source { col, .. }) => *col,
            Some(Binding::Virtual(_)) => {
                self.err(
                    g.over.span.clone(),
                    "cannot group a virtual region constant",
                );
                return None;
            }
            None => {
                self.err(
                    g.over.span.clone(),
                    format!("unknown alias {:?}", g.over.node),
                );
                return None;
            }
        };
        let mut spec = AlignmentSpec {
            axis: g.axis,
            ..AlignmentSpec::default()
        };
        let mut agg = AggKind::Mbr;
        for (key, value) in &g.params {
            match (key.node.to_ascii_lowercase().as_str(), value) {
                ("consecutive", GroupParam::Bool(b)) => spec.consecutive = *b,
                ("maxdist", GroupParam::Num(n)) if *n >= 0.0 => spec.maxdist = Some(*n),
                ("tolerance", GroupParam::Num(n)) if *n >= 0.0 => spec.tolerance = *n,
                ("mode", GroupParam::Word(w)) => match w.as_str() {
                    "leading" => spec.mode = AlignMode::LeadingEdge,
                    "center" => spec.mode = AlignMode::Center,
                    "trailing" => spec.mode = AlignMode::TrailingEdge,
                    other => {
                        self.err(
                            key.span.clone(),
                            format!("unknown alignment mode {other:?} (expected leading, center or trailing)"),
                        );
                    }
                },
                ("agg", GroupParam::Word(w)) => match w.as_str() {
                    "mbr" => agg = AggKind::Mbr,
                    "super" => agg = AggKind::SuperRegion,
                    other => {
                        self.err(
                            key.span.clone(),
                            format!("unknown aggregate {other:?} (expected mbr or super)"),
                        );
                    }
                },
                ("min", GroupParam::Num(n)) if *n >= 2.0 && n.fract() == 0.0 => {
                    spec.min_group_size = *n as usize;
                }
                (name @ ("consecutive" | "maxdist" | "tolerance" | "mode" | "agg" | "min"), _) => {
                    self.err(
                        key.span.clone(),
                        format!("invalid value for group parameter {name:?}"),
                    );
                }
                (other, _) => {
                    self.err(
                        key.span.clone(),
                        format!("unknown group parameter {other:?}"),
                    );
                }
            }
        }
        Some((
            g.alias.node.clone(),
            TypedGroup {
                col,
                spec,
                agg,
                alias: g.alias.node.clone(),
            },
        ))
    }

    /// Having analysis: folds top-level `Count(G) > n` / `>= n` conjuncts
    /// into a minimum group size and types the rest.
    fn having(
        &mut self,
        expr: &Expr,
        bindings: &HashMap<String, Binding>,
        group_alias: &str,
    ) -> (Option<usize>, Option<Pred>) {
        let terms: Vec<&Expr> = match expr {
            Expr::And(ts) => ts.iter().collect(),
            other => vec![other],
        };
        let mut bound: Option<usize> = None;
        let mut residual: Vec<Pred> = Vec::new();
        for term in terms {
            if let Expr::Cmp {
                lhs: ScalarExpr::Count(alias),
                op,
                rhs: ScalarExpr::Num(n),
            } = term
            {
                if alias.node != group_alias {
                    self.err(
                        alias.span.clone(),
                        format!("count() must reference the group alias {group_alias:?}"),
                    );
                    continue;
                }
                if n.fract() != 0.0 || *n < 0.0 {
                    self.err(alias.span.clone(), "count() bound must be a non-negative integer");
                    continue;
                }
                let min = match op {
                    CmpOp::Gt => *n as usize + 1,
                    CmpOp::Ge => *n as usize,
                    _ => {
                        self.err(
                            alias.span.clone(),
                            "count() comparisons support only > and >=",
                        );
                        continue;
                    }
                };
                if min < 2 {
                    self.err(
                        alias.span.clone(),
                        "the group size bound must require at least 2 members",
                    );
                    continue;
                }
                bound = Some(bound.map_or(min, |b| b.max(min)));
            } else {
                if contains_count(term) {
                    self.err(
                        0..0,
                        "count() may appear only as a top-level having conjunct compared with > or >=",
                    );
                    continue;
                }
                if let Some(p) = self.expr(term, bindings, Scope::Having) {
                    residual.push(p);
                }
            }
        }
        let residual = match residual.len() {
            0 => None,
            1 => residual.pop(),
            _ => Some(Pred::And(residual)),
        };
        (bound, residual)
    }

    fn expr(
        &mut self,
        expr: &Expr,
        bindings: &HashMap<String, Binding>,
        scope: Scope,
    ) -> Option<Pred> {
        match expr {
            Expr::And(ts) => {
                let preds: Vec<Option<Pred>> =
                    ts.iter().map(|t| self.expr(t, bindings, scope)).collect();
                let preds: Option<Vec<Pred>> = preds.into_iter().collect();
                Some(Pred::And(preds?))
            }
            Expr::Or(ts) => {
                let preds: Vec<Option<Pred>> =
                    ts.iter().map(|t| self.expr(t, bindings, scope)).collect();
                let preds: Option<Vec<Pred>> = preds.into_iter().collect();
                Some(Pred::Or(preds?))
            }
            Expr::Not(inner) => Some(Pred::Not(Box::new(self.expr(inner, bindings, scope)?))),
            Expr::Cmp { lhs, op, rhs } => {
                let l = self.scalar(lhs, bindings, scope)?;
                let r = self.scalar(rhs, bindings, scope)?;
                Some(Pred::Cmp {
                    lhs: l,
                    op: *op,
                    rhs: r,
                })
            }
            Expr::Call(call) => self.call(call, bindings),
        }
    }

    fn scalar(
        &mut self,
        s: &ScalarExpr,
        bindings: &HashMap<String, Binding>,
        scope: Scope,
    ) -> Option<Scalar> {
        match s {
            ScalarExpr::Num(n) => Some(Scalar::Lit(*n)),
            ScalarExpr::Area(alias) => {
                let arg = self.resolve_ref(alias, bindings)?;
                if let ArgExpr::Rect(r) = &arg {
                    if !r.is_finite() {
                        self.err(
                            alias.span.clone(),
                            "area of a virtual region with infinite bounds is undefined",
                        );
                        return None;
                    }
                }
                Some(Scalar::Area(arg))
            }
            ScalarExpr::Count(alias) => {
                let _ = scope;
                self.err(
                    alias.span.clone(),
                    "count() may appear only as a top-level having conjunct",
                );
                None
            }
        }
    }

    fn call(&mut self, call: &PredCall, bindings: &HashMap<String, Binding>) -> Option<Pred> {
        let name = call.name.node.to_ascii_lowercase();
        let (op, want_spans, want_num) = match name.as_str() {
            "northof" => (PredOp::Dir { dir: Direction::North, strict: false }, 2, false),
            "southof" => (PredOp::Dir { dir: Direction::South, strict: false }, 2, false),
            "eastof" => (PredOp::Dir { dir: Direction::East, strict: false }, 2, false),
            "westof" => (PredOp::Dir { dir: Direction::West, strict: false }, 2, false),
            "strictnorthof" => (PredOp::Dir { dir: Direction::North, strict: true }, 2, false),
            "strictsouthof" => (PredOp::Dir { dir: Direction::South, strict: true }, 2, false),
            "stricteastof" => (PredOp::Dir { dir: Direction::East, strict: true }, 2, false),
            "strictwestof" => (PredOp::Dir { dir: Direction::West, strict: true }, 2, false),
            "contains" => (PredOp::Topo(TopoKind::Contains), 2, false),
            "touches" => (PredOp::Topo(TopoKind::Touches), 2, false),
            "intersects" => (PredOp::Topo(TopoKind::Intersects), 2, false),
            "precedes" => (PredOp::Span(SpanPred::PrecedesWithin(0)), 2, true),
            "spanoverlaps" => (PredOp::Span(SpanPred::Overlaps), 2, false),
            "spanwithin" => (PredOp::Span(SpanPred::StrictlyContains), 2, false),
            "spanequals" => (PredOp::Span(SpanPred::Equals), 2, false),
            "ancestorof" => (PredOp::AncestorOf, 2, false),
            "descendantof" => (PredOp::DescendantOf, 2, false),
            _ => {
                self.err(
                    call.name.span.clone(),
                    format!("unknown predicate {:?}", call.name.node),
                );
                return None;
            }
        };
        let want_args = want_spans + usize::from(want_num);
        if call.args.len() != want_args {
            self.err(
                call.name.span.clone(),
                format!(
                    "{} takes {} argument{}, got {}",
                    call.name.node,
                    want_args,
                    if want_args == 1 { "" } else { "s" },
                    call.args.len()
                ),
            );
            return None;
        }
        let mut args = Vec::with_capacity(2);
        for a in call.args.iter().take(want_spans) {
            args.push(self.arg(a, bindings, &op, &call.name)?);
        }
        let op = if want_num {
            match &call.args[want_spans] {
                Arg::Num(n) if *n >= 0.0 && n.fract() == 0.0 => {
                    PredOp::Span(SpanPred::PrecedesWithin(*n as usize))
                }
                _ => {
                    self.err(
                        call.name.span.clone(),
                        "the distance argument must be a non-negative integer",
                    );
                    return None;
                }
            }
        } else {
            op
        };
        Some(Pred::Call { op, args })
    }

    fn arg(
        &mut self,
        arg: &Arg,
        bindings: &HashMap<String, Binding>,
        op: &PredOp,
        at: &Spanned<String>,
    ) -> Option<ArgExpr> {
        let resolved = match arg {
            Arg::Ref(alias) => self.resolve_ref(alias, bindings)?,
            Arg::Centroid(alias) => {
                let inner = self.resolve_ref(alias, bindings)?;
                match inner {
                    ArgExpr::Rect(r) => match r.centroid_point() {
                        Ok(point) => ArgExpr::Rect(point),
                        Err(_) => {
                            self.err(
                                alias.span.clone(),
                                "centroid of a virtual region with infinite bounds is undefined",
                            );
                            return None;
                        }
                    },
                    ArgExpr::Col(c) => ArgExpr::Centroid(c),
                    other => other,
                }
            }
            Arg::Str(_) => {
                self.err(at.span.clone(), "string arguments are not accepted here");
                return None;
            }
            Arg::Num(_) => {
                self.err(at.span.clone(), "numeric arguments are not accepted here");
                return None;
            }
        };
        if matches!(op, PredOp::AncestorOf | PredOp::DescendantOf) {
            let backed = match &resolved {
                ArgExpr::Col(c) => self.col_backed(*c, bindings),
                _ => false,
            };
            if !backed {
                self.err(
                    at.span.clone(),
                    format!(
                        "{} requires store-backed aliases (synthesized regions have no tree position)",
                        at.node
                    ),
                );
                return None;
            }
        }
        Some(resolved)
    }

    fn col_backed(&self, col: usize, bindings: &HashMap<String, Binding>) -> bool {
        bindings.values().any(
            |b| matches!(b, Binding::Source { col: c, backed } if *c == col && *backed),
        )
    }

    fn resolve_ref(
        &mut self,
        alias: &Spanned<String>,
        bindings: &HashMap<String, Binding>,
    ) -> Option<ArgExpr> {
        match bindings.get(&alias.node) {
            Some(Binding::Source { col, .. }) => Some(ArgExpr::Col(*col)),
            Some(Binding::Virtual(rect)) => Some(ArgExpr::Rect(*rect)),
            None => {
                self.err(
                    alias.span.clone(),
                    format!("unknown alias {:?}", alias.node),
                );
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scope {
    Where,
    Having,
}

fn contains_count(expr: &Expr) -> bool {
    match expr {
        Expr::And(ts) | Expr::Or(ts) => ts.iter().any(contains_count),
        Expr::Not(inner) => contains_count(inner),
        Expr::Call(_) => false,
        Expr::Cmp { lhs, rhs, .. } => {
            matches!(lhs, ScalarExpr::Count(_)) || matches!(rhs, ScalarExpr::Count(_))
        }
    }
}
