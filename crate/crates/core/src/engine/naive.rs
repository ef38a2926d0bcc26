//! The naive reference evaluator: direct interpretation of the logical
//! plan with full scans, nested-loop products, no indices, and no
//! pushdown. It is the canonical answer for equivalence testing.

use crate::algebra;
use crate::error::EngineError;
use crate::store::RegionStore;

use super::eval::{self, Caches, Value};
use super::logical::{BlockKind, LogicalPlan, ScanSource};
use super::result::ResultSet;

pub fn execute_naive(plan: &LogicalPlan, store: &RegionStore) -> Result<ResultSet, EngineError> {
    let mut caches = Caches::default();
    collect_caches(plan, &mut caches)?;
    let mut rows = Vec::new();
    for page in store.pages() {
        let value = eval_page(plan, store, page.page_id(), &caches)?;
        let rel = value.into_rel("plan root")?;
        rows.extend(rel.into_rows());
    }
    Ok(ResultSet::from_plan_output(plan, rows))
}

fn collect_caches(plan: &LogicalPlan, caches: &mut Caches) -> Result<(), EngineError> {
    match plan {
        LogicalPlan::Scan { source, .. } => caches.add_scan(source),
        LogicalPlan::Select { input, .. }
        | LogicalPlan::Project { input, .. }
        | LogicalPlan::Consolidate { input, .. }
        | LogicalPlan::Block { input, .. }
        | LogicalPlan::Group { input, .. }
        | LogicalPlan::Aggregate { input, .. } => collect_caches(input, caches),
        LogicalPlan::Product { inputs } => {
            for i in inputs {
                collect_caches(i, caches)?;
            }
            Ok(())
        }
        LogicalPlan::Union { left, right } | LogicalPlan::Intersect { left, right } => {
            collect_caches(left, caches)?;
            collect_caches(right, caches)
        }
    }
}

fn eval_page(
    plan: &LogicalPlan,
    store: &RegionStore,
    page_id: &str,
    caches: &Caches,
) -> Result<Value, EngineError> {
    match plan {
        LogicalPlan::Scan { source, alias } => {
            let rel = scan_page(source, store, page_id, caches)?;
            Ok(Value::Rel(eval::relation_with_names(
                vec![alias.clone()],
                rel.into_rows(),
            )))
        }
        LogicalPlan::Select { input, pred } => {
            let rel = eval_page(input, store, page_id, caches)?.into_rel("select")?;
            let names = rel.column_names().to_vec();
            let mut rows = Vec::new();
            for t in rel.into_rows() {
                if eval::eval_pred(pred, t.cells(), page_id, "select")? {
                    rows.push(t);
                }
            }
            Ok(Value::Rel(eval::relation_with_names(names, rows)))
        }
        LogicalPlan::Project { input, cols } => {
            let rel = eval_page(input, store, page_id, caches)?.into_rel("project")?;
            Ok(Value::Rel(eval::project(store, rel, cols)?))
        }
        LogicalPlan::Product { inputs } => {
            let mut rels = Vec::with_capacity(inputs.len());
            for i in inputs {
                rels.push(eval_page(i, store, page_id, caches)?.into_rel("product")?);
            }
            Ok(Value::Rel(eval::product(rels)))
        }
        LogicalPlan::Union { left, right } => {
            let l = eval_page(left, store, page_id, caches)?.into_rel("union")?;
            let r = eval_page(right, store, page_id, caches)?.into_rel("union")?;
            Ok(Value::Rel(eval::union(l, r)?))
        }
        LogicalPlan::Intersect { left, right } => {
            let l = eval_page(left, store, page_id, caches)?.into_rel("intersect")?;
            let r = eval_page(right, store, page_id, caches)?.into_rel("intersect")?;
            Ok(Value::Rel(eval::intersect(l, r)?))
        }
        LogicalPlan::Consolidate { input, kind } => {
            let rel = eval_page(input, store, page_id, caches)?.into_rel("consolidate")?;
            let names = rel.column_names().to_vec();
            let out = match kind {
                algebra::ConsolidateKind::Containment => algebra::consolidate_containment(&rel),
                algebra::ConsolidateKind::Overlap => algebra::consolidate_overlap(store, &rel),
            }
            .map_err(|e| EngineError::at("consolidate", e))?;
            Ok(Value::Rel(eval::relation_with_names(
                names,
                out.into_rows(),
            )))
        }
        LogicalPlan::Block { input, kind } => {
            let rel = eval_page(input, store, page_id, caches)?.into_rel("block")?;
            let names = rel.column_names().to_vec();
            let out = match kind {
                BlockKind::Text { max_gap, min_count } => {
                    algebra::block_text(store, &rel, *max_gap, *min_count)
                }
                BlockKind::Region {
                    x_dist,
                    y_dist,
                    min_count,
                } => algebra::block_region(store, &rel, *x_dist, *y_dist, *min_count),
            }
            .map_err(|e| EngineError::at("block", e))?;
            Ok(Value::Rel(eval::relation_with_names(
                names,
                out.into_rows(),
            )))
        }
        LogicalPlan::Group {
            input,
            col,
            spec,
            alias,
        } => {
            let rel = eval_page(input, store, page_id, caches)?.into_rel("group")?;
            let col_rel = eval::column_relation(&rel, *col, alias);
            let groups =
                algebra::aligned_groups(&col_rel, spec).map_err(|e| EngineError::at("group", e))?;
            Ok(Value::Groups {
                alias: alias.clone(),
                groups,
            })
        }
        LogicalPlan::Aggregate { input, kind } => {
            match eval_page(input, store, page_id, caches)? {
                Value::Groups { alias, groups } => Ok(Value::Rel(eval::aggregate_groups(
                    store, &alias, groups, *kind,
                )?)),
                Value::Rel(rel) => {
                    // Aggregating a plain relation treats all rows as one
                    // group per page; empty pages contribute nothing.
                    if rel.is_empty() {
                        return Ok(Value::Rel(eval::relation_with_names(
                            rel.column_names().to_vec(),
                            Vec::new(),
                        )));
                    }
                    let members: Vec<_> =
                        rel.rows().iter().map(|t| t.cells()[0].clone()).collect();
                    let cell = match kind {
                        super::logical::AggKind::Mbr => algebra::minimal_bounding_region(&members)
                            .map_err(|e| EngineError::at("aggregate", e))?,
                        super::logical::AggKind::SuperRegion => {
                            algebra::minimal_super_region(store, &members)
                                .map_err(|e| EngineError::at("aggregate", e))?
                        }
                    };
                    Ok(Value::Rel(eval::relation_with_names(
                        rel.column_names().to_vec(),
                        vec![crate::region::Tuple::single(cell)],
                    )))
                }
            }
        }
    }
}

fn scan_page(
    source: &ScanSource,
    store: &RegionStore,
    page_id: &str,
    caches: &Caches,
) -> Result<crate::region::Relation, EngineError> {
    let out = match source {
        ScanSource::AllSpans => algebra::all_spans(store, page_id),
        ScanSource::Regex(pattern) => {
            let re = caches.regexes.get(pattern).expect("regex cached in prepass");
            algebra::regex_extract_compiled(store, page_id, re)
        }
        ScanSource::Dict(name) => algebra::dict_extract(store, page_id, name),
        ScanSource::Phrase(phrase) => algebra::phrase_extract(store, page_id, phrase),
    };
    out.map_err(|e| EngineError::at("scan", e))
}
