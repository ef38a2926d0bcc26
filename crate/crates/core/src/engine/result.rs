//! Query results: a sorted, deterministic set of rows with per-row
//! provenance, serializable to JSONL and CSV.

use serde_json::json;

use crate::query::ast::Attr;
use crate::region::{Tuple, VisualSpan};
use crate::store::RegionStore;

use super::logical::LogicalPlan;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMeta {
    pub name: String,
    pub attr: Attr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub page_id: String,
    pub cells: Vec<VisualSpan>,
}

/// A deterministic query result: rows sorted by page, then by cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub columns: Vec<ColumnMeta>,
    pub rows: Vec<ResultRow>,
}

impl ResultSet {
    pub(crate) fn from_plan_output(plan: &LogicalPlan, rows: Vec<Tuple>) -> ResultSet {
        let columns = plan_columns(plan);
        ResultSet::from_tuples(columns, rows)
    }

    pub(crate) fn from_tuples(columns: Vec<ColumnMeta>, rows: Vec<Tuple>) -> ResultSet {
        let mut rows: Vec<ResultRow> = rows
            .into_iter()
            .map(|t| {
                let cells = t.into_cells();
                ResultRow {
                    page_id: cells[0].page_id.clone(),
                    cells,
                }
            })
            .collect();
        rows.sort_by(|a, b| {
            a.page_id.cmp(&b.page_id).then_with(|| {
                for (x, y) in a.cells.iter().zip(b.cells.iter()) {
                    let ord = x.total_cmp(y);
                    if ord != std::cmp::Ordering::Equal {
                        return ord;
                    }
                }
                std::cmp::Ordering::Equal
            })
        });
        ResultSet { columns, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Multiset equality on rows (both sides are canonically sorted).
    pub fn same_rows(&self, other: &ResultSet) -> bool {
        self.rows == other.rows
    }

    /// One JSON object per row. The `text` field carries the characters the
    /// span covers in the page document text.
    pub fn to_jsonl(&self, store: &RegionStore) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let cols: Vec<serde_json::Value> = row
                .cells
                .iter()
                .zip(self.columns.iter())
                .map(|(cell, meta)| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("column".into(), json!(meta.name));
                    let fields = attr_fields(meta.attr);
                    if fields.region_id {
                        obj.insert(
                            "region_id".into(),
                            match &cell.source_region_id {
                                Some(id) => json!(id.to_string()),
                                None => serde_json::Value::Null,
                            },
                        );
                    }
                    if fields.rect {
                        obj.insert("xl".into(), json!(cell.region.x_l));
                        obj.insert("yl".into(), json!(cell.region.y_l));
                        obj.insert("xh".into(), json!(cell.region.x_h));
                        obj.insert("yh".into(), json!(cell.region.y_h));
                    }
                    if fields.span {
                        obj.insert("begin".into(), json!(cell.span.begin));
                        obj.insert("end".into(), json!(cell.span.end));
                    }
                    if fields.text {
                        let text = store
                            .page(&row.page_id)
                            .map(|p| p.slice_text(cell.span.begin, cell.span.end))
                            .unwrap_or_default();
                        obj.insert("text".into(), json!(text));
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            let line = json!({ "page_id": row.page_id, "cols": cols });
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self, store: &RegionStore) -> String {
        let mut out = String::new();
        out.push_str("page_id");
        for meta in &self.columns {
            let f = attr_fields(meta.attr);
            let n = &meta.name;
            if f.region_id {
                out.push_str(&format!(",{n}.region_id"));
            }
            if f.rect {
                out.push_str(&format!(",{n}.xl,{n}.yl,{n}.xh,{n}.yh"));
            }
            if f.span {
                out.push_str(&format!(",{n}.begin,{n}.end"));
            }
            if f.text {
                out.push_str(&format!(",{n}.text"));
            }
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&csv_quote(&row.page_id));
            for (cell, meta) in row.cells.iter().zip(self.columns.iter()) {
                let f = attr_fields(meta.attr);
                if f.region_id {
                    let id = cell
                        .source_region_id
                        .as_ref()
                        .map(|i| i.to_string())
                        .unwrap_or_default();
                    out.push(',');
                    out.push_str(&csv_quote(&id));
                }
                if f.rect {
                    out.push_str(&format!(
                        ",{},{},{},{}",
                        cell.region.x_l, cell.region.y_l, cell.region.x_h, cell.region.y_h
                    ));
                }
                if f.span {
                    out.push_str(&format!(",{},{}", cell.span.begin, cell.span.end));
                }
                if f.text {
                    let text = store
                        .page(&row.page_id)
                        .map(|p| p.slice_text(cell.span.begin, cell.span.end))
                        .unwrap_or_default();
                    out.push(',');
                    out.push_str(&csv_quote(&text));
                }
            }
            out.push('\n');
        }
        out
    }
}

struct AttrFields {
    region_id: bool,
    rect: bool,
    span: bool,
    text: bool,
}

fn attr_fields(attr: Attr) -> AttrFields {
    match attr {
        Attr::VisualSpan | Attr::MinimalRegion | Attr::MaximalRegion => AttrFields {
            region_id: true,
            rect: true,
            span: true,
            text: true,
        },
        Attr::Span => AttrFields {
            region_id: false,
            rect: false,
            span: true,
            text: true,
        },
        Attr::Region => AttrFields {
            region_id: true,
            rect: true,
            span: false,
            text: false,
        },
        Attr::Text => AttrFields {
            region_id: false,
            rect: false,
            span: false,
            text: true,
        },
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn plan_columns(plan: &LogicalPlan) -> Vec<ColumnMeta> {
    match plan {
        LogicalPlan::Project { cols, .. } => cols
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
