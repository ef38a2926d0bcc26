//! Randomized AST generation for round-trip testing. Test machinery, not
//! part of the public contract.
#![doc(hidden)]

use rand::rngs::StdRng;
use rand::Rng;

use super::ast::*;
use crate::algebra::{Axis, ConsolidateKind};
use crate::region::Region;

fn sp(s: &str) -> Spanned<String> {
    Spanned::synthetic(s.to_string())
}

fn gen_num(rng: &mut StdRng) -> f64 {
    (rng.random_range(-200i32..2000) as f64) / 2.0
}

fn gen_string(rng: &mut StdRng) -> String {
    let words = ["windows", "operating", "systems", "it's", "x86 64", "a+b"];
    words[rng.random_range(0..words.len())].to_string()
}

fn gen_source(rng: &mut StdRng, depth: usize) -> Source {
    match rng.random_range(0..if depth > 0 { 8 } else { 5 }) {
        0 => Source::AllSpans,
        1 => Source::Regex(sp("[0-9]+")),
        2 => Source::Dict(sp("os")),
        3 => Source::Phrase(sp(&gen_string(rng))),
        4 => {
            let x_l = gen_num(rng).abs();
            let y_l = gen_num(rng).abs();
            Source::Virtual(
                Region::new(
                    x_l,
                    y_l,
                    if rng.random_bool(0.3) {
                        f64::INFINITY
                    } else {
                        x_l + 100.0
                    },
                    if rng.random_bool(0.3) {
                        f64::INFINITY
                    } else {
                        y_l + 100.0
                    },
                )
                .unwrap(),
            )
        }
        5 => Source::Consolidate {
            input: Box::new(gen_source(rng, depth - 1)),
            kind: if rng.random_bool(0.5) {
                ConsolidateKind::Containment
            } else {
                ConsolidateKind::Overlap
            },
        },
        6 => Source::BlockText {
            input: Box::new(gen_source(rng, depth - 1)),
            max_gap: rng.random_range(0..40),
            min_count: rng.random_range(1..4),
        },
        _ => Source::BlockRegion {
            input: Box::new(gen_source(rng, depth - 1)),
            x_dist: gen_num(rng).abs(),
            y_dist: gen_num(rng).abs(),
            min_count: rng.random_range(1..4),
        },
    }
}

fn gen_arg(rng: &mut StdRng, aliases: &[String]) -> Arg {
    let alias = aliases[rng.random_range(0..aliases.len())].clone();
    if rng.random_bool(0.2) {
        Arg::Centroid(sp(&alias))
    } else {
        Arg::Ref(sp(&alias))
    }
}

fn gen_call(rng: &mut StdRng, aliases: &[String]) -> Expr {
    let preds = [
        "NorthOf",
        "StrictSouthOf",
        "EastOf",
        "Contains",
        "Touches",
        "Intersects",
        "SpanOverlaps",
        "SpanWithin",
        "SpanEquals",
        "AncestorOf",
        "DescendantOf",
    ];
    if rng.random_bool(0.15) {
        return Expr::Call(PredCall {
            name: sp("Precedes"),
            args: vec![
                gen_arg(rng, aliases),
                gen_arg(rng, aliases),
                Arg::Num(rng.random_range(0..50) as f64),
            ],
        });
    }
    let name = preds[rng.random_range(0..preds.len())];
    Expr::Call(PredCall {
        name: sp(name),
        args: (0..2).map(|_| gen_arg(rng, aliases)).collect(),
    })
}

/// `forbid`: 1 = no direct And child, 2 = no direct Or child; keeps
/// generated trees canonical (the parser flattens same-kind nesting).
fn gen_expr(rng: &mut StdRng, aliases: &[String], depth: usize, forbid: u8) -> Expr {
    if depth == 0 || rng.random_bool(0.5) {
        if rng.random_bool(0.2) {
            return Expr::Cmp {
                lhs: ScalarExpr::Area(sp(&aliases[rng.random_range(0..aliases.len())])),
                op: [
                    CmpOp::Lt,
                    CmpOp::Le,
                    CmpOp::Gt,
                    CmpOp::Ge,
                    CmpOp::Eq,
                    CmpOp::Ne,
                ][rng.random_range(0..6)],
                rhs: ScalarExpr::Num(gen_num(rng)),
            };
        }
        return gen_call(rng, aliases);
    }
    let mut choices: Vec<u8> = vec![0];
    if forbid != 1 {
        choices.push(1);
    }
    if forbid != 2 {
        choices.push(2);
    }
    match choices[rng.random_range(0..choices.len())] {
        1 => Expr::And(
            (0..rng.random_range(2..4))
                .map(|_| gen_expr(rng, aliases, depth - 1, 1))
                .collect(),
        ),
        2 => Expr::Or(
            (0..rng.random_range(2..4))
                .map(|_| gen_expr(rng, aliases, depth - 1, 2))
                .collect(),
        ),
        _ => Expr::Not(Box::new(gen_expr(rng, aliases, depth - 1, 0))),
    }
}

/// A random syntactically valid query AST in the printer's canonical form.
pub fn gen_query(rng: &mut StdRng, depth: usize) -> QueryAst {
    let n_sources = rng.random_range(1..4);
    let mut from = Vec::new();
    for i in 0..n_sources {
        let source = if depth > 0 && rng.random_bool(0.15) {
            Source::SubQuery(Box::new(gen_query(rng, depth - 1)))
        } else {
            gen_source(rng, depth)
        };
        from.push(FromItem {
            source,
            alias: sp(&format!("R{}", i + 1)),
        });
    }
    let aliases: Vec<String> = from.iter().map(|f| f.alias.node.clone()).collect();
    let where_clause = if rng.random_bool(0.7) {
        Some(gen_expr(rng, &aliases, 2, 0))
    } else {
        None
    };
    let group = if rng.random_bool(0.3) {
        let mut params = Vec::new();
        if rng.random_bool(0.5) {
            params.push((
                sp("maxdist"),
                GroupParam::Num(rng.random_range(0..60) as f64),
            ));
        }
        if rng.random_bool(0.5) {
            params.push((sp("consecutive"), GroupParam::Bool(rng.random_bool(0.5))));
        }
        if rng.random_bool(0.3) {
            params.push((
                sp("mode"),
                GroupParam::Word(
                    ["leading", "center", "trailing"][rng.random_range(0..3)].to_string(),
                ),
            ));
        }
        Some(GroupClause {
            axis: if rng.random_bool(0.5) {
                Axis::Vertical
            } else {
                Axis::Horizontal
            },
            over: sp(&aliases[rng.random_range(0..aliases.len())]),
            params,
            alias: sp("G"),
        })
    } else {
        None
    };
    let having = if group.is_some() && rng.random_bool(0.7) {
        Some(Expr::Cmp {
            lhs: ScalarExpr::Count(sp("G")),
            op: if rng.random_bool(0.5) {
                CmpOp::Gt
            } else {
                CmpOp::Ge
            },
            rhs: ScalarExpr::Num(rng.random_range(2..6) as f64),
        })
    } else {
        None
    };
    let select_alias = if group.is_some() {
        "G".to_string()
    } else {
        aliases[rng.random_range(0..aliases.len())].clone()
    };
    let attrs = [
        Attr::VisualSpan,
        Attr::Span,
        Attr::Region,
        Attr::Text,
        Attr::MinimalRegion,
        Attr::MaximalRegion,
    ];
    QueryAst {
        select: vec![SelectItem {
            alias: sp(&select_alias),
            attr: attrs[rng.random_range(0..attrs.len())],
        }],
        from,
        where_clause,
        group,
        having,
    }
}
