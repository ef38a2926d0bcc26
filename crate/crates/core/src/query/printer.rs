//! Canonical query formatter. `parse(print(ast)) == ast` for every valid
//! AST; the engine and tests rely on this round trip.

use super::ast::*;
use crate::algebra::{Axis, ConsolidateKind};

pub fn print(ast: &QueryAst) -> String {
    let mut out = String::new();
    write_query(ast, &mut out);
    out
}

fn write_query(ast: &QueryAst, out: &mut String) {
    out.push_str("select ");
    for (i, item) in ast.select.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&item.alias.node);
        out.push('.');
        out.push_str(item.attr.name());
    }
    out.push_str(" from ");
    for (i, item) in ast.from.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_source(&item.source, out);
        out.push_str(" as ");
        out.push_str(&item.alias.node);
    }
    if let Some(w) = &ast.where_clause {
        out.push_str(" where ");
        write_expr(w, out, false);
    }
    if let Some(g) = &ast.group {
        out.push_str(" group ");
        out.push_str(match g.axis {
            Axis::Vertical => "vertically",
            Axis::Horizontal => "horizontally",
        });
        out.push_str(" aligned(");
        out.push_str(&g.over.node);
        for (key, value) in &g.params {
            out.push_str(", ");
            out.push_str(&key.node);
            out.push('=');
            match value {
                GroupParam::Num(n) => out.push_str(&fmt_num(*n)),
                GroupParam::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
                GroupParam::Word(w) => out.push_str(w),
            }
        }
        out.push_str(") as ");
        out.push_str(&g.alias.node);
    }
    if let Some(h) = &ast.having {
        out.push_str(" having ");
        write_expr(h, out, false);
    }
}

fn write_source(source: &Source, out: &mut String) {
    match source {
        Source::AllSpans => out.push_str("R(D)"),
        Source::Regex(pat) => {
            out.push_str("RegEx(");
            write_str(&pat.node, out);
            out.push_str(", D)");
        }
        Source::Dict(name) => {
            out.push_str("Dict(");
            write_str(&name.node, out);
            out.push_str(", D)");
        }
        Source::Phrase(text) => {
            out.push_str("Phrase(");
            write_str(&text.node, out);
            out.push_str(", D)");
        }
        Source::Virtual(rect) => {
            out.push_str("A(");
            out.push_str(&fmt_num(rect.x_l));
            out.push_str(", ");
            out.push_str(&fmt_num(rect.y_l));
            out.push_str(", ");
            out.push_str(&fmt_num(rect.x_h));
            out.push_str(", ");
            out.push_str(&fmt_num(rect.y_h));
            out.push(')');
        }
        Source::Consolidate { input, kind } => {
            out.push_str("Consolidate(");
            write_source(input, out);
            out.push_str(match kind {
                ConsolidateKind::Containment => ", containment)",
                ConsolidateKind::Overlap => ", overlap)",
            });
        }
        Source::BlockText {
            input,
            max_gap,
            min_count,
        } => {
            out.push_str("BlockText(");
            write_source(input, out);
            out.push_str(&format!(", {max_gap}, {min_count})"));
        }
        Source::BlockRegion {
            input,
            x_dist,
            y_dist,
            min_count,
        } => {
            out.push_str("BlockRegion(");
            write_source(input, out);
            out.push_str(&format!(
                ", {}, {}, {min_count})",
                fmt_num(*x_dist),
                fmt_num(*y_dist)
            ));
        }
        Source::SubQuery(sub) => {
            out.push('(');
            write_query(sub, out);
            out.push(')');
        }
    }
}

/// `parenthesize` wraps Or nodes appearing under And.
fn write_expr(expr: &Expr, out: &mut String, parenthesize: bool) {
    match expr {
        Expr::Or(terms) => {
            if parenthesize {
                out.push('(');
            }
            for (i, t) in terms.iter().enumerate() {
                if i > 0 {
                    out.push_str(" or ");
                }
                write_expr(t, out, false);
            }
            if parenthesize {
                out.push(')');
            }
        }
        Expr::And(terms) => {
            for (i, t) in terms.iter().enumerate() {
                if i > 0 {
                    out.push_str(" and ");
                }
                write_expr(t, out, true);
            }
        }
        Expr::Not(inner) => {
            out.push_str("not (");
            write_expr(inner, out, false);
            out.push(')');
        }
        Expr::Call(call) => {
            out.push_str(&call.name.node);
            out.push('(');
            for (i, arg) in call.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match arg {
                    Arg::Ref(r) => out.push_str(&r.node),
                    Arg::Centroid(r) => {
                        out.push_str("Centroid(");
                        out.push_str(&r.node);
                        out.push(')');
                    }
                    Arg::Str(s) => write_str(s, out),
                    Arg::Num(n) => out.push_str(&fmt_num(*n)),
                }
            }
            out.push(')');
        }
        Expr::Cmp { lhs, op, rhs } => {
            write_scalar(lhs, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_scalar(rhs, out);
        }
    }
}

fn write_scalar(s: &ScalarExpr, out: &mut String) {
    match s {
        ScalarExpr::Area(a) => {
            out.push_str("Area(");
            out.push_str(&a.node);
            out.push(')');
        }
        ScalarExpr::Count(a) => {
            out.push_str("Count(");
            out.push_str(&a.node);
            out.push(')');
        }
        ScalarExpr::Num(n) => out.push_str(&fmt_num(*n)),
    }
}

fn write_str(s: &str, out: &mut String) {
    out.push('\'');
    for ch in s.chars() {
        if ch == '\'' {
            out.push('\'');
        }
        out.push(ch);
    }
    out.push('\'');
}

fn fmt_num(n: f64) -> String {
    if n == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{n}")
    }
}
