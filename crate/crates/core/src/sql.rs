//! Translation of logical plans into a single flattened SQL SELECT over the
//! `Regions` schema:
//!
//! `Regions(pageid, regionid, x_l, y_l, x_h, y_h, textstart, textend, text,
//! htmltag, minimalregion, maximalregion)`
//!
//! Each scan becomes one `Regions` alias (`R1..Rn` in scan order);
//! page-equality conjuncts are always emitted; predicates become coordinate
//! inequalities, `contains(text, '"phrase"') = 1` phrase conditions, or the
//! `MatchesRegex` / `MatchesDict` / `IsPrefix` functions. Consolidation,
//! block aggregation, and the non-key parts of alignment grouping have no
//! SQL equivalent: they execute natively, and emission records a hybrid
//! warning (or fails, in strict mode).

use crate::algebra::{Direction, SpanPred, TopoKind};
use crate::engine::logical::{
    AggKind, ArgExpr, LogicalPlan, Pred, PredOp, ProjectCol, Scalar, ScanSource,
};
use crate::error::SqlError;
use crate::query::ast::{Attr, CmpOp};
use crate::region::Region;

/// An emitted SQL statement. `parameters` lists the external references
/// the statement leaves unbound (for example `v` in `IsPrefix(R1.regionid,
/// v.regionid)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SqlText {
    pub statement: String,
    pub parameters: Vec<String>,
    pub warnings: Vec<String>,
}

impl SqlText {
    pub fn is_hybrid(&self) -> bool {
        !self.warnings.is_empty()
    }
}

/// Emits SQL, allowing hybrid plans (warnings carry what executes
/// natively).
pub fn emit(plan: &LogicalPlan) -> Result<SqlText, SqlError> {
    Emitter { strict: false }.emit(plan)
}

/// Emits SQL, failing with [`SqlError::UnsupportedNode`] on any node that
/// cannot be fully expressed.
pub fn emit_strict(plan: &LogicalPlan) -> Result<SqlText, SqlError> {
    Emitter { strict: true }.emit(plan)
}

struct Emitter {
    strict: bool,
}

/// Flattening state: scans become FROM entries; predicates and the select
/// list accumulate as the walk returns.
#[derive(Default)]
struct Flat {
    /// (alias in the plan, SQL alias R1..Rn), in scan order.
    scans: Vec<(String, String)>,
    wheres: Vec<String>,
    group_by: Option<String>,
    warnings: Vec<String>,
    parameters: Vec<String>,
    comments: Vec<String>,
}

impl Flat {
    fn sql_alias(&self, plan_alias: &str) -> Option<&str> {
        self.scans
            .iter()
            .find(|(a, _)| a == plan_alias)
            .map(|(_, s)| s.as_str())
    }
}

impl Emitter {
    fn emit(&self, plan: &LogicalPlan) -> Result<SqlText, SqlError> {
        let mut flat = Flat::default();
        let select_list = self.walk(plan, &mut flat)?;

        let mut statement = String::new();
        for c in &flat.comments {
            statement.push_str(&format!("-- {c}\n"));
        }
        statement.push_str(&format!("SELECT {select_list}\n"));
        let from: Vec<String> = flat
            .scans
            .iter()
            .map(|(_, sql)| format!("Regions {sql}"))
            .collect();
        statement.push_str(&format!("FROM {}", from.join(", ")));

        // Page-equality conjuncts chain the scans, as the reference SQL
        // does.
        let mut wheres = Vec::new();
        for w in flat.scans.windows(2) {
            wheres.push(format!("{}.pageid = {}.pageid", w[0].1, w[1].1));
        }
        wheres.extend(flat.wheres.iter().cloned());
        if !wheres.is_empty() {
            statement.push_str(&format!("\nWHERE {}", wheres.join("\nAND ")));
        }
        if let Some(g) = &flat.group_by {
            statement.push_str(&format!("\nGROUP BY {g}"));
        }
        let mut parameters = flat.parameters;
        parameters.sort();
        parameters.dedup();
        Ok(SqlText {
            statement,
            parameters,
            warnings: flat.warnings,
        })
    }

    /// Walks the plan, filling `flat`, and returns the SELECT list chosen
    /// by the topmost projection-like node seen so far.
    fn walk(&self, plan: &LogicalPlan, flat: &mut Flat) -> Result<String, SqlError> {
        match plan {
            LogicalPlan::Scan { source, alias } => {
                let sql = format!("R{}", flat.scans.len() + 1);
                flat.scans.push((alias.clone(), sql.clone()));
                match source {
                    ScanSource::AllSpans => {}
                    ScanSource::Regex(pattern) => {
                        flat.wheres
                            .push(format!("MatchesRegex({sql}.text, {})", quote(pattern)));
                    }
                    ScanSource::Dict(name) => {
                        flat.wheres
                            .push(format!("MatchesDict({sql}.text, {})", quote(name)));
                    }
                    ScanSource::Phrase(phrase) => {
                        flat.wheres.push(format!(
                            "contains({sql}.text, '\"{}\"') = 1",
                            phrase.replace('\'', "''")
                        ));
                    }
                }
                Ok(format!("{sql}.pageid, {sql}.regionid"))
            }
            LogicalPlan::Select { input, pred } => {
                let select_list = self.walk(input, flat)?;
                let rendered = self.pred(pred, plan_columns(input), flat)?;
                if let Some(rendered) = rendered {
                    flat.wheres.push(rendered);
                }
                Ok(select_list)
            }
            LogicalPlan::Product { inputs } => {
                let mut first = None;
                for input in inputs {
                    let list = self.walk(input, flat)?;
                    first.get_or_insert(list);
                }
                Ok(first.unwrap_or_default())
            }
            LogicalPlan::Project { input, cols } => {
                self.walk(input, flat)?;
                let names = plan_columns(input);
                let rendered: Result<Vec<String>, SqlError> = cols
                    .iter()
                    .map(|c| self.project_col(c, &names, flat))
                    .collect();
                Ok(rendered?.join(", "))
            }
            LogicalPlan::Aggregate { input, kind } => {
                self.walk(input, flat)?;
                let names = plan_columns(input);
                let col0 = self.col_sql(&names, 0, flat)?;
                match kind {
                    AggKind::Mbr => Ok(format!(
                        "min({col0}.x_l), min({col0}.y_l), max({col0}.x_h), max({col0}.y_h)"
                    )),
                    AggKind::SuperRegion => {
                        self.unsupported("minimal super region aggregation", flat)?;
                        Ok(format!("{col0}.pageid, {col0}.regionid"))
                    }
                }
            }
            LogicalPlan::Group {
                input, col, spec, ..
            } => {
                let list = self.walk(input, flat)?;
                let names = plan_columns(input);
                let sql = self.col_sql(&names, *col, flat)?;
                let key = match (spec.axis, spec.mode) {
                    (crate::algebra::Axis::Vertical, crate::algebra::AlignMode::LeadingEdge) => {
                        format!("{sql}.x_l")
                    }
                    (crate::algebra::Axis::Vertical, crate::algebra::AlignMode::Center) => {
                        format!("(({sql}.x_l + {sql}.x_h) / 2)")
                    }
                    (crate::algebra::Axis::Vertical, crate::algebra::AlignMode::TrailingEdge) => {
                        format!("{sql}.x_h")
                    }
                    (crate::algebra::Axis::Horizontal, crate::algebra::AlignMode::LeadingEdge) => {
                        format!("{sql}.y_l")
                    }
                    (crate::algebra::Axis::Horizontal, crate::algebra::AlignMode::Center) => {
                        format!("(({sql}.y_l + {sql}.y_h) / 2)")
                    }
                    (crate::algebra::Axis::Horizontal, crate::algebra::AlignMode::TrailingEdge) => {
                        format!("{sql}.y_h")
                    }
                };
                if self.strict {
                    return Err(SqlError::UnsupportedNode(
                        "alignment grouping beyond key equality".into(),
                    ));
                }
                flat.group_by = Some(key);
                flat.comments.push(
                    "groups rows sharing the alignment key; tolerance, maxdist and consecutive constraints execute natively"
                        .into(),
                );
                flat.warnings
                    .push("hybrid: alignment grouping beyond key equality executes natively".into());
                Ok(list)
            }
            LogicalPlan::Consolidate { input, kind } => {
                let list = self.walk(input, flat)?;
                let what = match kind {
                    crate::algebra::ConsolidateKind::Containment => "containment consolidation",
                    crate::algebra::ConsolidateKind::Overlap => "overlap consolidation",
                };
                self.unsupported(what, flat)?;
                Ok(list)
            }
            LogicalPlan::Block { input, .. } => {
                let list = self.walk(input, flat)?;
                self.unsupported("block aggregation", flat)?;
                Ok(list)
            }
            LogicalPlan::Union { .. } => Err(SqlError::UnsupportedNode("union".into())),
            LogicalPlan::Intersect { .. } => Err(SqlError::UnsupportedNode("intersect".into())),
        }
    }

    fn unsupported(&self, what: &str, flat: &mut Flat) -> Result<(), SqlError> {
        if self.strict {
            return Err(SqlError::UnsupportedNode(what.to_string()));
        }
        flat.warnings.push(format!("hybrid: {what} executes natively"));
        Ok(())
    }

    fn project_col(
        &self,
        col: &ProjectCol,
        names: &[String],
        flat: &Flat,
    ) -> Result<String, SqlError> {
        let sql = self.col_sql(names, col.col, flat)?;
        Ok(match col.attr {
            Attr::VisualSpan => format!("{sql}.pageid, {sql}.regionid"),
            Attr::Span => format!("{sql}.pageid, {sql}.textstart, {sql}.textend"),
            Attr::Region => {
                format!("{sql}.pageid, {sql}.x_l, {sql}.y_l, {sql}.x_h, {sql}.y_h")
            }
            Attr::Text => format!("{sql}.pageid, {sql}.text"),
            Attr::MinimalRegion => format!("{sql}.pageid, {sql}.minimalregion"),
            Attr::MaximalRegion => format!("{sql}.pageid, {sql}.maximalregion"),
        })
    }

    fn col_sql(&self, names: &[String], col: usize, flat: &Flat) -> Result<String, SqlError> {
        let plan_alias = names
            .get(col)
            .ok_or_else(|| SqlError::UnsupportedNode(format!("column #{col} out of range")))?;
        flat.sql_alias(plan_alias)
            .map(|s| s.to_string())
            .ok_or_else(|| {
                SqlError::UnsupportedNode(format!(
                    "column {plan_alias:?} does not map to a Regions scan"
                ))
            })
    }

    /// Renders a predicate; `Ok(None)` means the predicate is vacuous (for
    /// example a comparison against an infinite virtual bound).
    fn pred(
        &self,
        pred: &Pred,
        names: Vec<String>,
        flat: &mut Flat,
    ) -> Result<Option<String>, SqlError> {
        self.pred_inner(pred, &names, flat)
    }

    fn pred_inner(
        &self,
        pred: &Pred,
        names: &[String],
        flat: &mut Flat,
    ) -> Result<Option<String>, SqlError> {
        match pred {
            Pred::Lit(true) => Ok(None),
            Pred::Lit(false) => Ok(Some("1 = 0".to_string())),
            Pred::And(ps) => {
                let mut parts = Vec::new();
                for p in ps {
                    if let Some(s) = self.pred_inner(p, names, flat)? {
                        parts.push(s);
                    }
                }
                Ok(match parts.len() {
                    0 => None,
                    1 => Some(parts.pop().unwrap()),
                    _ => Some(parts.join(" AND ")),
                })
            }
            Pred::Or(ps) => {
                let mut parts = Vec::new();
                for p in ps {
                    match self.pred_inner(p, names, flat)? {
                        Some(s) => parts.push(s),
                        // A vacuous disjunct makes the whole OR vacuous.
                        None => return Ok(None),
                    }
                }
                Ok(Some(format!("({})", parts.join(" OR "))))
            }
            Pred::Not(p) => match self.pred_inner(p, names, flat)? {
                Some(s) => Ok(Some(format!("NOT ({s})"))),
                None => Ok(Some("1 = 0".to_string())),
            },
            Pred::Cmp { lhs, op, rhs } => {
                let l = self.scalar(lhs, names, flat)?;
                let r = self.scalar(rhs, names, flat)?;
                Ok(Some(format!("{l} {} {r}", cmp_sql(*op))))
            }
            Pred::Call { op, args } => self.call(op, args, names, flat),
        }
    }

    fn scalar(&self, s: &Scalar, names: &[String], flat: &mut Flat) -> Result<String, SqlError> {
        Ok(match s {
            Scalar::Lit(n) => fmt_num(*n),
            Scalar::Area(arg) => {
                let side = self.side(arg, names, flat)?;
                format!(
                    "(({xh} - {xl}) * ({yh} - {yl}))",
                    xl = side.coord("x_l"),
                    xh = side.coord("x_h"),
                    yl = side.coord("y_l"),
                    yh = side.coord("y_h"),
                )
            }
        })
    }

    fn call(
        &self,
        op: &PredOp,
        args: &[ArgExpr],
        names: &[String],
        flat: &mut Flat,
    ) -> Result<Option<String>, SqlError> {
        let a = self.side(&args[0], names, flat)?;
        let b = self.side(&args[1], names, flat)?;
        let conj = |terms: Vec<Option<String>>| -> Option<String> {
            let live: Vec<String> = terms.into_iter().flatten().collect();
            if live.is_empty() {
                None
            } else {
                Some(live.join(" AND "))
            }
        };
        let ineq = |x: &Side, xc: &str, op: &str, y: &Side, yc: &str| -> Option<String> {
            match (x.coord_opt(xc), y.coord_opt(yc)) {
                // Keep the column on the left when comparing against a
                // virtual-region literal.
                (Some(l), Some(r)) if matches!(x, Side::Rect(_)) && !matches!(y, Side::Rect(_)) => {
                    Some(format!("{r} {} {l}", flip(op)))
                }
                (Some(l), Some(r)) => Some(format!("{l} {op} {r}")),
                // A bound against +inf holds for every region.
                _ => None,
            }
        };
        Ok(match op {
            PredOp::Dir { dir, strict } => {
                let mut terms = vec![match dir {
                    Direction::North => ineq(&a, "y_h", "<=", &b, "y_l"),
                    Direction::South => ineq(&a, "y_l", ">=", &b, "y_h"),
                    Direction::East => ineq(&a, "x_l", ">=", &b, "x_h"),
                    Direction::West => ineq(&a, "x_h", "<=", &b, "x_l"),
                }];
                if *strict {
                    match dir {
                        Direction::North | Direction::South => {
                            terms.push(ineq(&a, "x_l", ">=", &b, "x_l"));
                            terms.push(ineq(&a, "x_h", "<=", &b, "x_h"));
                        }
                        Direction::East | Direction::West => {
                            terms.push(ineq(&a, "y_l", ">=", &b, "y_l"));
                            terms.push(ineq(&a, "y_h", "<=", &b, "y_h"));
                        }
                    }
                }
                conj(terms)
            }
            PredOp::Topo(TopoKind::Contains) => conj(vec![
                ineq(&b, "x_l", "<=", &a, "x_l"),
                ineq(&a, "x_h", "<=", &b, "x_h"),
                ineq(&b, "y_l", "<=", &a, "y_l"),
                ineq(&a, "y_h", "<=", &b, "y_h"),
            ]),
            PredOp::Topo(TopoKind::Intersects) => conj(vec![
                ineq(&a, "x_l", "<=", &b, "x_h"),
                ineq(&b, "x_l", "<=", &a, "x_h"),
                ineq(&a, "y_l", "<=", &b, "y_h"),
                ineq(&b, "y_l", "<=", &a, "y_h"),
            ]),
            PredOp::Topo(TopoKind::Touches) => {
                let meets = conj(vec![
                    ineq(&a, "x_l", "<=", &b, "x_h"),
                    ineq(&b, "x_l", "<=", &a, "x_h"),
                    ineq(&a, "y_l", "<=", &b, "y_h"),
                    ineq(&b, "y_l", "<=", &a, "y_h"),
                ]);
                let open = conj(vec![
                    ineq(&a, "x_l", "<", &b, "x_h"),
                    ineq(&b, "x_l", "<", &a, "x_h"),
                    ineq(&a, "y_l", "<", &b, "y_h"),
                    ineq(&b, "y_l", "<", &a, "y_h"),
                ]);
                match (meets, open) {
                    (Some(m), Some(o)) => Some(format!("{m} AND NOT ({o})")),
                    (Some(m), None) => Some(format!("{m} AND 1 = 0")),
                    (None, _) => None,
                }
            }
            PredOp::Span(SpanPred::PrecedesWithin(d)) => Some(format!(
                "{} <= {} AND {} - {} <= {d}",
                a.coord("textend"),
                b.coord("textstart"),
                b.coord("textstart"),
                a.coord("textend"),
            )),
            PredOp::Span(SpanPred::Overlaps) => Some(format!(
                "{} < {} AND {} < {}",
                a.coord("textstart"),
                b.coord("textend"),
                b.coord("textstart"),
                a.coord("textend"),
            )),
            PredOp::Span(SpanPred::StrictlyContains) => Some(format!(
                "{bs} <= {as_} AND {ae} <= {be} AND NOT ({as_} = {bs} AND {ae} = {be})",
                as_ = a.coord("textstart"),
                ae = a.coord("textend"),
                bs = b.coord("textstart"),
                be = b.coord("textend"),
            )),
            PredOp::Span(SpanPred::Equals) => Some(format!(
                "{} = {} AND {} = {}",
                a.coord("textstart"),
                b.coord("textstart"),
                a.coord("textend"),
                b.coord("textend"),
            )),
            PredOp::AncestorOf => Some(format!(
                "IsPrefix({}, {}) AND {} <> {}",
                a.coord("regionid"),
                b.coord("regionid"),
                a.coord("regionid"),
                b.coord("regionid"),
            )),
            PredOp::DescendantOf => Some(format!(
                "IsPrefix({}, {}) AND {} <> {}",
                b.coord("regionid"),
                a.coord("regionid"),
                a.coord("regionid"),
                b.coord("regionid"),
            )),
            PredOp::IsPrefixOf => Some(format!(
                "IsPrefix({}, {})",
                a.coord("regionid"),
                b.coord("regionid"),
            )),
            PredOp::IdEquals => Some(format!(
                "{} = {}",
                a.coord("regionid"),
                b.coord("regionid"),
            )),
        })
    }

    fn side(&self, arg: &ArgExpr, names: &[String], flat: &mut Flat) -> Result<Side, SqlError> {
        Ok(match arg {
            ArgExpr::Col(c) => Side::Alias(self.col_sql(names, *c, flat)?),
            ArgExpr::Centroid(c) => Side::Centroid(self.col_sql(names, *c, flat)?),
            ArgExpr::Rect(r) => Side::Rect(*r),
            ArgExpr::Extern(name) => {
                flat.parameters.push(name.clone());
                Side::Extern(name.clone())
            }
        })
    }
}

/// One side of a rendered binary predicate.
enum Side {
    Alias(String),
    Centroid(String),
    Rect(Region),
    Extern(String),
}

impl Side {
    /// SQL text for a coordinate/field, or `None` when it is an infinite
    /// virtual bound (such comparisons are vacuously true and get dropped).
    fn coord_opt(&self, field: &str) -> Option<String> {
        match self {
            Side::Alias(a) | Side::Extern(a) => Some(format!("{a}.{field}")),
            Side::Centroid(a) => Some(match field {
                "x_l" | "x_h" => format!("(({a}.x_l + {a}.x_h) / 2)"),
                "y_l" | "y_h" => format!("(({a}.y_l + {a}.y_h) / 2)"),
                other => format!("{a}.{other}"),
            }),
            Side::Rect(r) => {
                let v = match field {
                    "x_l" => r.x_l,
                    "y_l" => r.y_l,
                    "x_h" => r.x_h,
                    "y_h" => r.y_h,
                    _ => return None,
                };
                if v == f64::INFINITY {
                    None
                } else {
                    Some(fmt_num(v))
                }
            }
        }
    }

    fn coord(&self, field: &str) -> String {
        self.coord_opt(field)
            .unwrap_or_else(|| "NULL".to_string())
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn flip(op: &str) -> &str {
    match op {
        "<=" => ">=",
        ">=" => "<=",
        "<" => ">",
        ">" => "<",
        other => other,
    }
}

fn fmt_num(n: f64) -> String {
    format!("{n}")
}

fn cmp_sql(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
        CmpOp::Eq => "=",
        CmpOp::Ne => "<>",
    }
}

fn plan_columns(plan: &LogicalPlan) -> Vec<String> {
    plan.column_names()
}
