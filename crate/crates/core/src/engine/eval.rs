//! Evaluation helpers shared by the optimized executor and the naive
//! reference evaluator: predicate evaluation, projection, grouping,
//! aggregation, and the set operators. The two executors differ only in
//! access paths, pushdown, and join strategy.

use std::borrow::Cow;
use std::collections::HashMap;

use regex::Regex;

use crate::algebra::{self, AlignedGroup};
use crate::error::{AlgebraError, EngineError};
use crate::query::ast::{Attr, CmpOp};
use crate::region::{Relation, TextSpan, Tuple, VisualSpan};
use crate::store::RegionStore;
use crate::text::tokenize;

use super::logical::{AggKind, ArgExpr, Pred, PredOp, ProjectCol, Scalar, ScanSource};

/// Intermediate value flowing between plan nodes during per-page
/// evaluation.
#[derive(Debug, Clone)]
pub(crate) enum Value {
    Rel(Relation),
    Groups { alias: String, groups: Vec<AlignedGroup> },
}

impl Value {
    pub(crate) fn into_rel(self, node: &str) -> Result<Relation, EngineError> {
        match self {
            Value::Rel(rel) => Ok(rel),
            Value::Groups { .. } => Err(EngineError::PlanShape(format!(
                "{node}: group values must feed an aggregate node"
            ))),
        }
    }
}

/// Pre-compiled per-query state: regexes and tokenized phrases.
#[derive(Debug, Default)]
pub(crate) struct Caches {
    pub regexes: HashMap<String, Regex>,
    pub phrases: HashMap<String, Vec<String>>,
}

impl Caches {
    pub(crate) fn add_scan(&mut self, source: &ScanSource) -> Result<(), EngineError> {
        match source {
            ScanSource::Regex(pattern) => {
                if !self.regexes.contains_key(pattern) {
                    let re = algebra::compile_pattern(pattern)
                        .map_err(|e| EngineError::at("scan", e))?;
                    self.regexes.insert(pattern.clone(), re);
                }
            }
            ScanSource::Phrase(phrase) => {
                self.phrases.entry(phrase.clone()).or_insert_with(|| {
                    tokenize(phrase).into_iter().map(|t| t.text).collect()
                });
            }
            _ => {}
        }
        Ok(())
    }
}

pub(crate) fn relation_with_names(names: Vec<String>, rows: Vec<Tuple>) -> Relation {
    let mut rel = Relation::new(names).expect("unique column names by validation");
    for row in rows {
        rel.push(row).expect("width checked by construction");
    }
    rel
}

/// Evaluates a predicate over one tuple.
pub(crate) fn eval_pred(
    pred: &Pred,
    cells: &[VisualSpan],
    page_id: &str,
    node: &str,
) -> Result<bool, EngineError> {
    let alg = |e: AlgebraError| EngineError::at(node, e);
    match pred {
        Pred::Lit(b) => Ok(*b),
        Pred::And(ps) => {
            for p in ps {
                if !eval_pred(p, cells, page_id, node)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Pred::Or(ps) => {
            for p in ps {
                if eval_pred(p, cells, page_id, node)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Pred::Not(p) => Ok(!eval_pred(p, cells, page_id, node)?),
        Pred::Call { op, args } => {
            let a = resolve_arg(&args[0], cells, page_id, node)?;
            let b = resolve_arg(&args[1], cells, page_id, node)?;
            match op {
                PredOp::Dir { dir, strict } => {
                    algebra::directional(*dir, *strict, &a, &b).map_err(alg)
                }
                PredOp::Topo(kind) => algebra::topo(*kind, &a, &b).map_err(alg),
                PredOp::Span(kind) => Ok(algebra::span_pred(*kind, a.span, b.span)),
                PredOp::AncestorOf => {
                    let (ia, ib) = source_ids(&a, &b, node)?;
                    Ok(ia.is_proper_prefix_of(&ib))
                }
                PredOp::DescendantOf => {
                    let (ia, ib) = source_ids(&a, &b, node)?;
                    Ok(ib.is_proper_prefix_of(&ia))
                }
                PredOp::IsPrefixOf => {
                    let (ia, ib) = source_ids(&a, &b, node)?;
                    Ok(ia.is_prefix_of(&ib))
                }
                PredOp::IdEquals => {
                    let (ia, ib) = source_ids(&a, &b, node)?;
                    Ok(ia == ib)
                }
            }
        }
        Pred::Cmp { lhs, op, rhs } => {
            let l = eval_scalar(lhs, cells, page_id, node)?;
            let r = eval_scalar(rhs, cells, page_id, node)?;
            Ok(match op {
                CmpOp::Lt => l < r,
                CmpOp::Le => l <= r,
                CmpOp::Gt => l > r,
                CmpOp::Ge => l >= r,
                CmpOp::Eq => l == r,
                CmpOp::Ne => l != r,
            })
        }
    }
}

fn source_ids(
    a: &VisualSpan,
    b: &VisualSpan,
    node: &str,
) -> Result<(crate::region::RegionId, crate::region::RegionId), EngineError> {
    let ia = a
        .source_region_id
        .clone()
        .ok_or_else(|| EngineError::at(node, AlgebraError::SynthesizedRegion))?;
    let ib = b
        .source_region_id
        .clone()
        .ok_or_else(|| EngineError::at(node, AlgebraError::SynthesizedRegion))?;
    Ok((ia, ib))
}

fn resolve_arg<'a>(
    arg: &ArgExpr,
    cells: &'a [VisualSpan],
    page_id: &str,
    node: &str,
) -> Result<Cow<'a, VisualSpan>, EngineError> {
    match arg {
        ArgExpr::Col(c) => Ok(Cow::Borrowed(&cells[*c])),
        ArgExpr::Centroid(c) => Ok(Cow::Owned(
            cells[*c]
                .centroid()
                .map_err(|e| EngineError::at(node, AlgebraError::Region(e)))?,
        )),
        ArgExpr::Rect(rect) => Ok(Cow::Owned(VisualSpan {
            page_id: page_id.to_string(),
            span: TextSpan { begin: 0, end: 0 },
            region: *rect,
            source_region_id: None,
        })),
        ArgExpr::Extern(name) => Err(EngineError::UnboundParam(name.clone())),
    }
}

fn eval_scalar(
    s: &Scalar,
    cells: &[VisualSpan],
    page_id: &str,
    node: &str,
) -> Result<f64, EngineError> {
    match s {
        Scalar::Lit(n) => Ok(*n),
        Scalar::Area(arg) => {
            let v = resolve_arg(arg, cells, page_id, node)?;
            v.region
                .area()
                .map_err(|e| EngineError::at(node, AlgebraError::Region(e)))
        }
    }
}

/// Applies a projection, including the minimal/maximal-region attribute
/// transforms.
pub(crate) fn project(
    store: &RegionStore,
    rel: Relation,
    cols: &[ProjectCol],
) -> Result<Relation, EngineError> {
    let names: Vec<String> = cols.iter().map(|c| c.name.clone()).collect();
    let mut rows = Vec::with_capacity(rel.len());
    for tuple in rel.rows() {
        let mut cells = Vec::with_capacity(cols.len());
        for c in cols {
            let cell = &tuple.cells()[c.col];
            let cell = match c.attr {
                Attr::MinimalRegion => {
                    algebra::min_max_region(store, cell, algebra::Which::Minimal)
                        .map_err(|e| EngineError::at("project", e))?
                }
                Attr::MaximalRegion => {
                    algebra::min_max_region(store, cell, algebra::Which::Maximal)
                        .map_err(|e| EngineError::at("project", e))?
                }
                _ => cell.clone(),
            };
            cells.push(cell);
        }
        rows.push(Tuple::new(cells).expect("projection width >= 1"));
    }
    Ok(relation_with_names(names, rows))
}

/// Projects one column of a relation as a width-1 relation, keeping
/// multiplicity.
pub(crate) fn column_relation(rel: &Relation, col: usize, name: &str) -> Relation {
    let rows = rel
        .rows()
        .iter()
        .map(|t| Tuple::single(t.cells()[col].clone()))
        .collect();
    relation_with_names(vec![name.to_string()], rows)
}

/// Turns grouped values into one row per group.
pub(crate) fn aggregate_groups(
    store: &RegionStore,
    alias: &str,
    groups: Vec<AlignedGroup>,
    kind: AggKind,
) -> Result<Relation, EngineError> {
    let mut rows = Vec::with_capacity(groups.len());
    for g in groups {
        let cell = match kind {
            AggKind::Mbr => g.bounding,
            AggKind::SuperRegion => algebra::minimal_super_region(store, &g.members)
                .map_err(|e| EngineError::at("aggregate", e))?,
        };
        rows.push(Tuple::single(cell));
    }
    Ok(relation_with_names(vec![alias.to_string()], rows))
}

/// Multiset union: bag concatenation.
pub(crate) fn union(left: Relation, right: Relation) -> Result<Relation, EngineError> {
    if left.width() != right.width() {
        return Err(EngineError::PlanShape(format!(
            "union of widths {} and {}",
            left.width(),
            right.width()
        )));
    }
    let names = left.column_names().to_vec();
    let mut rows = left.into_rows();
    rows.extend(right.into_rows());
    Ok(relation_with_names(names, rows))
}

/// Multiset intersection: per-row minimum multiplicity.
pub(crate) fn intersect(left: Relation, right: Relation) -> Result<Relation, EngineError> {
    if left.width() != right.width() {
        return Err(EngineError::PlanShape(format!(
            "intersect of widths {} and {}",
            left.width(),
            right.width()
        )));
    }
    let names = left.column_names().to_vec();
    let mut a = left.into_rows();
    let mut b = right.into_rows();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].total_cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    Ok(relation_with_names(names, out))
}

/// Nested-loop cross product of per-page relations.
pub(crate) fn product(rels: Vec<Relation>) -> Relation {
    let names: Vec<String> = rels
        .iter()
        .flat_map(|r| r.column_names().to_vec())
        .collect();
    let mut rows: Vec<Vec<VisualSpan>> = vec![Vec::new()];
    for rel in &rels {
        let mut next = Vec::with_capacity(rows.len() * rel.len().max(1));
        for base in &rows {
            for t in rel.rows() {
                let mut cells = base.clone();
                cells.extend(t.cells().iter().cloned());
                next.push(cells);
            }
        }
        rows = next;
    }
    let tuples = rows
        .into_iter()
        .filter(|cells| !cells.is_empty())
        .map(|cells| Tuple::new(cells).expect("non-empty"))
        .collect();
    relation_with_names(names, tuples)
}
