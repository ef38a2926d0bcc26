//! Stable, line-oriented plan rendering for golden tests and the CLI.

use super::logical::fmt_f;
use super::optimize::{PhysicalPlan, PhysScan};

/// Renders a physical plan as an indented tree including access paths and
/// estimated cardinalities. Two renderings of the same plan are identical.
pub fn explain(plan: &PhysicalPlan) -> String {
    let mut out = String::new();
    render(plan, 0, &mut out);
    out
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn render(plan: &PhysicalPlan, depth: usize, out: &mut String) {
    indent(depth, out);
    match plan {
        PhysicalPlan::Scan(scan) => {
            render_scan(scan, out);
            out.push('\n');
        }
        PhysicalPlan::Select { input, pred } => {
            let cols = input.column_names();
            out.push_str(&format!("select [{}]\n", pred.render(&cols)));
            render(input, depth + 1, out);
        }
        PhysicalPlan::Project { input, cols } => {
            let names: Vec<String> = cols.iter().map(|c| c.name.clone()).collect();
            out.push_str(&format!("project [{}]\n", names.join(", ")));
            render(input, depth + 1, out);
        }
        PhysicalPlan::Join {
            left,
            right,
            probe,
            preds,
            est,
        } => {
            let mut cols = left.column_names();
            cols.extend(right.column_names());
            let strategy = match probe {
                Some(templates) => {
                    let probes: Vec<String> = templates
                        .iter()
                        .map(|t| {
                            format!(
                                "{} {} {}.{}",
                                t.coord.name(),
                                match t.op {
                                    crate::index::BoundOp::Le => "<=",
                                    crate::index::BoundOp::Ge => ">=",
                                },
                                cols.get(t.outer_col)
                                    .cloned()
                                    .unwrap_or_else(|| format!("#{}", t.outer_col)),
                                t.outer_coord.name()
                            )
                        })
                        .collect();
                    format!("index_nested_loop probes=[{}]", probes.join(", "))
                }
                None => "nested_loop".to_string(),
            };
            let rendered: Vec<String> = preds.iter().map(|p| p.render(&cols)).collect();
            out.push_str(&format!(
                "join {strategy} preds=[{}] est={}\n",
                rendered.join(", "),
                fmt_est(*est)
            ));
            render(left, depth + 1, out);
            render(right, depth + 1, out);
        }
        PhysicalPlan::Permute { input, map } => {
            let maps: Vec<String> = map.iter().map(|m| m.to_string()).collect();
            out.push_str(&format!("permute [{}]\n", maps.join(", ")));
            render(input, depth + 1, out);
        }
        PhysicalPlan::Union { left, right } => {
            out.push_str("union\n");
            render(left, depth + 1, out);
            render(right, depth + 1, out);
        }
        PhysicalPlan::Intersect { left, right } => {
            out.push_str("intersect\n");
            render(left, depth + 1, out);
            render(right, depth + 1, out);
        }
        PhysicalPlan::Consolidate { input, kind } => {
            out.push_str(&format!(
                "consolidate {}\n",
                match kind {
                    crate::algebra::ConsolidateKind::Containment => "containment",
                    crate::algebra::ConsolidateKind::Overlap => "overlap",
                }
            ));
            render(input, depth + 1, out);
        }
        PhysicalPlan::Block { input, kind } => {
            match kind {
                super::logical::BlockKind::Text { max_gap, min_count } => {
                    out.push_str(&format!("block text max_gap={max_gap} min_count={min_count}\n"));
                }
                super::logical::BlockKind::Region {
                    x_dist,
                    y_dist,
                    min_count,
                } => {
                    out.push_str(&format!(
                        "block region x_dist={} y_dist={} min_count={min_count}\n",
                        fmt_f(*x_dist),
                        fmt_f(*y_dist)
                    ));
                }
            }
            render(input, depth + 1, out);
        }
        PhysicalPlan::Group {
            input,
            col,
            spec,
            alias,
        } => {
            let cols = input.column_names();
            let over = cols.get(*col).cloned().unwrap_or_else(|| format!("#{col}"));
            out.push_str(&format!(
                "group {} aligned over {over} as {alias} mode={:?} tolerance={} consecutive={} maxdist={} min_size={}\n",
                match spec.axis {
                    crate::algebra::Axis::Vertical => "vertically",
                    crate::algebra::Axis::Horizontal => "horizontally",
                },
                spec.mode,
                fmt_f(spec.tolerance),
                spec.consecutive,
                spec.maxdist.map_or("none".to_string(), fmt_f),
                spec.min_group_size
            ));
            render(input, depth + 1, out);
        }
        PhysicalPlan::Aggregate { input, kind } => {
            out.push_str(&format!(
                "aggregate {}\n",
                match kind {
                    super::logical::AggKind::Mbr => "mbr",
                    super::logical::AggKind::SuperRegion => "super_region",
                }
            ));
            render(input, depth + 1, out);
        }
    }
}

fn render_scan(scan: &PhysScan, out: &mut String) {
    out.push_str(&format!(
        "scan {}: {} access={}",
        scan.alias,
        scan.source.describe(),
        scan.access.name()
    ));
    if !scan.bounds.is_empty() {
        let bounds: Vec<String> = scan
            .bounds
            .iter()
            .map(|b| {
                format!(
                    "{} {} {}",
                    b.coord.name(),
                    match b.op {
                        crate::index::BoundOp::Le => "<=",
                        crate::index::BoundOp::Ge => ">=",
                    },
                    fmt_f(b.value)
                )
            })
            .collect();
        out.push_str(&format!(" bounds=[{}]", bounds.join(", ")));
    }
    if !scan.filters.is_empty() {
        let cols = vec![scan.alias.clone()];
        let filters: Vec<String> = scan.filters.iter().map(|f| f.render(&cols)).collect();
        out.push_str(&format!(" filters=[{}]", filters.join(", ")));
    }
    out.push_str(&format!(" est={}", fmt_est(scan.est)));
}

fn fmt_est(est: f64) -> String {
    format!("{est:.2}")
}
