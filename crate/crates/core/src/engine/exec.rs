//! Executor for physical plans. Pages are independent units of work:
//! evaluation may run across pages in parallel, and results are identical
//! to sequential execution because per-page outputs concatenate in page
//! order and the final result is canonically sorted.

use rayon::prelude::*;

use crate::algebra::{self};
use crate::error::EngineError;
use crate::index::{BoundConstraint, RegionRef};
use crate::query::ast::Attr;
use crate::region::{Relation, Tuple, VisualSpan};
use crate::store::RegionStore;
use crate::text::tokenize;

use super::eval::{self, Caches, Value};
use super::logical::{BlockKind, ScanSource};
use super::optimize::{Access, BoundTemplate, IndexSet, PhysScan, PhysicalPlan};
use super::result::{ColumnMeta, ResultSet};

#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// Worker threads for page-parallel execution; `None` uses the global
    /// pool, `Some(1)` forces sequential evaluation.
    pub threads: Option<usize>,
}

pub fn execute(
    plan: &PhysicalPlan,
    store: &RegionStore,
    indices: IndexSet,
    opts: &ExecOptions,
) -> Result<ResultSet, EngineError> {
    let mut state = ExecState {
        store,
        indices,
        caches: Caches::default(),
        candidates: Vec::new(),
        dict_tokens: std::collections::HashMap::new(),
    };
    state.prepare(plan)?;

    let n_pages = store.page_count();
    let run_page = |p: usize| -> Result<Vec<Tuple>, EngineError> {
        let value = state.eval_page(plan, p as u32)?;
        Ok(value.into_rel("plan root")?.into_rows())
    };

    let per_page: Vec<Result<Vec<Tuple>, EngineError>> = match opts.threads {
        Some(1) => (0..n_pages).map(run_page).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| EngineError::PlanShape(format!("thread pool: {e}")))?
            .install(|| (0..n_pages).into_par_iter().map(run_page).collect()),
        None => (0..n_pages).into_par_iter().map(run_page).collect(),
    };
    let mut rows = Vec::new();
    for page_rows in per_page {
        rows.extend(page_rows?);
    }
    Ok(ResultSet::from_tuples(physical_columns(plan), rows))
}

fn physical_columns(plan: &PhysicalPlan) -> Vec<ColumnMeta> {
    match plan {
        PhysicalPlan::Project { cols, .. } => cols
            .iter()
            .map(|c| ColumnMeta {
                name: c.name.clone(),
                attr: c.attr,
            })
            .collect(),
        other => other
            .column_names()
            .into_iter()
            .map(|name| ColumnMeta {
                name,
                attr: Attr::VisualSpan,
            })
            .collect(),
    }
}

struct ExecState<'a> {
    store: &'a RegionStore,
    indices: IndexSet<'a>,
    caches: Caches,
    /// Per text-index scan id: sorted candidate regions over the whole
    /// store.
    candidates: Vec<Option<Vec<RegionRef>>>,
    dict_tokens: std::collections::HashMap<String, Vec<Vec<String>>>,
}

impl<'a> ExecState<'a> {
    fn prepare(&mut self, plan: &PhysicalPlan) -> Result<(), EngineError> {
        match plan {
            PhysicalPlan::Scan(scan) => self.prepare_scan(scan),
            PhysicalPlan::Select { input, .. }
            | PhysicalPlan::Project { input, .. }
            | PhysicalPlan::Permute { input, .. }
            | PhysicalPlan::Consolidate { input, .. }
            | PhysicalPlan::Block { input, .. }
            | PhysicalPlan::Group { input, .. }
            | PhysicalPlan::Aggregate { input, .. } => self.prepare(input),
            PhysicalPlan::Join { left, right, .. } => {
                self.prepare(left)?;
                self.prepare(right)
            }
            PhysicalPlan::Union { left, right } | PhysicalPlan::Intersect { left, right } => {
                self.prepare(left)?;
                self.prepare(right)
            }
        }
    }

    fn prepare_scan(&mut self, scan: &PhysScan) -> Result<(), EngineError> {
        self.caches.add_scan(&scan.source)?;
        if let ScanSource::Dict(name) = &scan.source {
            if !self.dict_tokens.contains_key(name) {
                let dict = self.store.dictionary(name).ok_or_else(|| {
                    EngineError::at(
                        "scan",
                        crate::error::AlgebraError::UnknownDictionary(name.clone()),
                    )
                })?;
                self.dict_tokens.insert(
                    name.clone(),
                    dict.phrases.iter().map(|p| p.tokens.clone()).collect(),
                );
            }
        }
        if scan.access == Access::TextIndex {
            let text = self.indices.text.ok_or_else(|| {
                EngineError::PlanShape("plan requires a text index that is unavailable".into())
            })?;
            let cands = match &scan.source {
                ScanSource::Phrase(p) => {
                    let toks: Vec<String> = tokenize(p).into_iter().map(|t| t.text).collect();
                    if toks.is_empty() {
                        return Err(EngineError::at(
                            "scan",
                            crate::error::AlgebraError::EmptyPhrase,
                        ));
                    }
                    text.contains_tokens(&toks)
                }
                ScanSource::Dict(name) => {
                    let mut all = Vec::new();
                    for toks in &self.dict_tokens[name] {
                        if !toks.is_empty() {
                            all.extend(text.contains_tokens(toks));
                        }
                    }
                    all.sort();
                    all.dedup();
                    all
                }
                other => {
                    return Err(EngineError::PlanShape(format!(
                        "text index access on {}",
                        other.describe()
                    )))
                }
            };
            if self.candidates.len() <= scan.id {
                self.candidates.resize(scan.id + 1, None);
            }
            self.candidates[scan.id] = Some(cands);
        }
        Ok(())
    }

    fn page_candidates(&self, scan_id: usize, page: u32) -> &[RegionRef] {
        let all = self.candidates[scan_id].as_deref().unwrap_or(&[]);
        let start = all.partition_point(|r| r.page < page);
        let end = all.partition_point(|r| r.page <= page);
        &all[start..end]
    }

    fn eval_page(&self, plan: &PhysicalPlan, page: u32) -> Result<Value, EngineError> {
        let page_id = self.store.pages()[page as usize].page_id().to_string();
        match plan {
            PhysicalPlan::Scan(scan) => Ok(Value::Rel(self.eval_scan(scan, page, &page_id)?)),
            PhysicalPlan::Select { input, pred } => {
                let rel = self.eval_page(input, page)?.into_rel("select")?;
                let names = rel.column_names().to_vec();
                let mut rows = Vec::new();
                for t in rel.into_rows() {
                    if eval::eval_pred(pred, t.cells(), &page_id, "select")? {
                        rows.push(t);
                    }
                }
                Ok(Value::Rel(eval::relation_with_names(names, rows)))
            }
            PhysicalPlan::Project { input, cols } => {
                let rel = self.eval_page(input, page)?.into_rel("project")?;
                Ok(Value::Rel(eval::project(self.store, rel, cols)?))
            }
            PhysicalPlan::Permute { input, map } => {
                let rel = self.eval_page(input, page)?.into_rel("permute")?;
                let inner_names = rel.column_names().to_vec();
                let names: Vec<String> = map.iter().map(|&i| inner_names[i].clone()).collect();
                let rows: Vec<Tuple> = rel
                    .into_rows()
                    .into_iter()
                    .map(|t| {
                        let cells = t.into_cells();
                        Tuple::new(map.iter().map(|&i| cells[i].clone()).collect())
                            .expect("non-empty permutation")
                    })
                    .collect();
                Ok(Value::Rel(eval::relation_with_names(names, rows)))
            }
            PhysicalPlan::Join {
                left,
                right,
                probe,
                preds,
                ..
            } => {
                let left_rel = self.eval_page(left, page)?.into_rel("join")?;
                let mut names = left_rel.column_names().to_vec();
                let mut rows = Vec::new();
                match probe {
                    Some(templates) => {
                        let PhysicalPlan::Scan(scan) = right.as_ref() else {
                            return Err(EngineError::PlanShape(
                                "probe join requires a scan on the right".into(),
                            ));
                        };
                        names.push(scan.alias.clone());
                        let region_index = self.indices.region.ok_or_else(|| {
                            EngineError::PlanShape(
                                "plan requires a region index that is unavailable".into(),
                            )
                        })?;
                        let page_regions = self.store.pages()[page as usize].regions();
                        for lt in left_rel.rows() {
                            let mut bounds = scan.bounds.clone();
                            bounds.extend(instantiate(templates, lt.cells()));
                            for local in
                                region_index.range_query_page(self.store, page, &bounds)
                            {
                                let cell = page_regions[local as usize].visual_span();
                                if !self.scan_row_passes(scan, &cell, &page_id)? {
                                    continue;
                                }
                                let mut cells = lt.cells().to_vec();
                                cells.push(cell);
                                if eval_join_preds(preds, &cells, &page_id)? {
                                    rows.push(Tuple::new(cells).expect("non-empty"));
                                }
                            }
                        }
                    }
                    None => {
                        let right_rel = self.eval_page(right, page)?.into_rel("join")?;
                        names.extend(right_rel.column_names().to_vec());
                        for lt in left_rel.rows() {
                            for rt in right_rel.rows() {
                                let mut cells = lt.cells().to_vec();
                                cells.extend(rt.cells().iter().cloned());
                                if eval_join_preds(preds, &cells, &page_id)? {
                                    rows.push(Tuple::new(cells).expect("non-empty"));
                                }
                            }
                        }
                    }
                }
                Ok(Value::Rel(eval::relation_with_names(names, rows)))
            }
            PhysicalPlan::Union { left, right } => {
                let l = self.eval_page(left, page)?.into_rel("union")?;
                let r = self.eval_page(right, page)?.into_rel("union")?;
                Ok(Value::Rel(eval::union(l, r)?))
            }
            PhysicalPlan::Intersect { left, right } => {
                let l = self.eval_page(left, page)?.into_rel("intersect")?;
                let r = self.eval_page(right, page)?.into_rel("intersect")?;
                Ok(Value::Rel(eval::intersect(l, r)?))
            }
            PhysicalPlan::Consolidate { input, kind } => {
                let rel = self.eval_page(input, page)?.into_rel("consolidate")?;
                let names = rel.column_names().to_vec();
                let out = match kind {
                    algebra::ConsolidateKind::Containment => {
                        algebra::consolidate_containment(&rel)
                    }
                    algebra::ConsolidateKind::Overlap => {
                        algebra::consolidate_overlap(self.store, &rel)
                    }
                }
                .map_err(|e| EngineError::at("consolidate", e))?;
                Ok(Value::Rel(eval::relation_with_names(
                    names,
                    out.into_rows(),
                )))
            }
            PhysicalPlan::Block { input, kind } => {
                let rel = self.eval_page(input, page)?.into_rel("block")?;
                let names = rel.column_names().to_vec();
                let out = match kind {
                    BlockKind::Text { max_gap, min_count } => {
                        algebra::block_text(self.store, &rel, *max_gap, *min_count)
                    }
                    BlockKind::Region {
                        x_dist,
                        y_dist,
                        min_count,
                    } => algebra::block_region(self.store, &rel, *x_dist, *y_dist, *min_count),
                }
                .map_err(|e| EngineError::at("block", e))?;
                Ok(Value::Rel(eval::relation_with_names(
                    names,
                    out.into_rows(),
                )))
            }
            PhysicalPlan::Group {
                input,
                col,
                spec,
                alias,
            } => {
                let rel = self.eval_page(input, page)?.into_rel("group")?;
                let col_rel = eval::column_relation(&rel, *col, alias);
                let groups = algebra::aligned_groups(&col_rel, spec)
                    .map_err(|e| EngineError::at("group", e))?;
                Ok(Value::Groups {
                    alias: alias.clone(),
                    groups,
                })
            }
            PhysicalPlan::Aggregate { input, kind } => {
                match self.eval_page(input, page)? {
                    Value::Groups { alias, groups } => Ok(Value::Rel(eval::aggregate_groups(
                        self.store, &alias, groups, *kind,
                    )?)),
                    Value::Rel(rel) => {
                        if rel.is_empty() {
                            return Ok(Value::Rel(eval::relation_with_names(
                                rel.column_names().to_vec(),
                                Vec::new(),
                            )));
                        }
                        let members: Vec<_> =
                            rel.rows().iter().map(|t| t.cells()[0].clone()).collect();
                        let cell = match kind {
                            super::logical::AggKind::Mbr => {
                                algebra::minimal_bounding_region(&members)
                                    .map_err(|e| EngineError::at("aggregate", e))?
                            }
                            super::logical::AggKind::SuperRegion => {
                                algebra::minimal_super_region(self.store, &members)
                                    .map_err(|e| EngineError::at("aggregate", e))?
                            }
                        };
                        Ok(Value::Rel(eval::relation_with_names(
                            rel.column_names().to_vec(),
                            vec![Tuple::single(cell)],
                        )))
                    }
                }
            }
        }
    }

    fn eval_scan(
        &self,
        scan: &PhysScan,
        page: u32,
        page_id: &str,
    ) -> Result<Relation, EngineError> {
        let page_ref = &self.store.pages()[page as usize];
        let mut rows: Vec<VisualSpan> = Vec::new();
        match scan.access {
            Access::TextIndex => {
                for cand in self.page_candidates(scan.id, page) {
                    let r = page_ref.region(cand.region);
                    if !scan.bounds.iter().all(|b| b.satisfied_by(&r.region)) {
                        continue;
                    }
                    match &scan.source {
                        ScanSource::Phrase(p) => {
                            let toks = &self.caches.phrases[p];
                            algebra::extract_phrase_into(r, toks, &mut rows);
                        }
                        ScanSource::Dict(name) => {
                            for toks in &self.dict_tokens[name] {
                                algebra::extract_phrase_into(r, toks, &mut rows);
                            }
                        }
                        other => {
                            return Err(EngineError::PlanShape(format!(
                                "text index access on {}",
                                other.describe()
                            )))
                        }
                    }
                }
            }
            Access::RegionIndex => {
                let region_index = self.indices.region.ok_or_else(|| {
                    EngineError::PlanShape(
                        "plan requires a region index that is unavailable".into(),
                    )
                })?;
                for local in region_index.range_query_page(self.store, page, &scan.bounds) {
                    rows.push(page_ref.region(local).visual_span());
                }
            }
            Access::FullScan => {
                let rel = match &scan.source {
                    ScanSource::AllSpans => algebra::all_spans(self.store, page_id),
                    ScanSource::Regex(p) => {
                        let re = &self.caches.regexes[p];
                        algebra::regex_extract_compiled(self.store, page_id, re)
                    }
                    ScanSource::Dict(name) => algebra::dict_extract(self.store, page_id, name),
                    ScanSource::Phrase(p) => algebra::phrase_extract(self.store, page_id, p),
                }
                .map_err(|e| EngineError::at("scan", e))?;
                rows = rel
                    .into_rows()
                    .into_iter()
                    .map(|t| t.into_cells().pop().expect("width 1"))
                    .filter(|v| scan.bounds.iter().all(|b| b.satisfied_by(&v.region)))
                    .collect();
            }
        }
        let mut out = Vec::with_capacity(rows.len());
        for v in rows {
            if self.scan_row_passes(scan, &v, page_id)? {
                out.push(v);
            }
        }
        Ok(eval::relation_with_names(
            vec![scan.alias.clone()],
            out.into_iter().map(Tuple::single).collect(),
        ))
    }

    fn scan_row_passes(
        &self,
        scan: &PhysScan,
        v: &VisualSpan,
        page_id: &str,
    ) -> Result<bool, EngineError> {
        if !scan.bounds.iter().all(|b| b.satisfied_by(&v.region)) {
            return Ok(false);
        }
        let cells = std::slice::from_ref(v);
        for f in &scan.filters {
            if !eval::eval_pred(f, cells, page_id, "scan filter")? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn instantiate(templates: &[BoundTemplate], outer: &[VisualSpan]) -> Vec<BoundConstraint> {
    templates
        .iter()
        .map(|t| BoundConstraint {
            coord: t.coord,
            op: t.op,
            value: t.outer_coord.of(&outer[t.outer_col].region),
        })
        .collect()
}

fn eval_join_preds(
    preds: &[super::logical::Pred],
    cells: &[VisualSpan],
    page_id: &str,
) -> Result<bool, EngineError> {
    for p in preds {
        if !eval::eval_pred(p, cells, page_id, "join")? {
            return Ok(false);
        }
    }
    Ok(true)
}
