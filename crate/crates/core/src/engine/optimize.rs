//! Plan optimization: single-alias predicate pushdown below products,
//! index selection for text and coordinate predicates, and greedy
//! smallest-first join ordering with index-nested-loop probes.
//!
//! Optimization never changes result semantics; enabling or disabling
//! indices only changes access paths and timing.

use crate::algebra::{AlignmentSpec, ConsolidateKind, Direction, TopoKind};
use crate::index::{BoundConstraint, BoundOp, Coord, RegionIndex, TextIndex};
use crate::store::RegionStore;
use crate::text::tokenize;

use super::logical::{
    AggKind, ArgExpr, BlockKind, LogicalPlan, Pred, PredOp, ProjectCol, ScanSource,
};

/// Which indices the optimizer (and executor) may use.
#[derive(Debug, Clone, Copy, Default)]
pub struct IndexSet<'a> {
    pub text: Option<&'a TextIndex>,
    pub region: Option<&'a RegionIndex>,
}

/// Access path chosen for a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    FullScan,
    TextIndex,
    RegionIndex,
}

impl Access {
    pub fn name(&self) -> &'static str {
        match self {
            Access::FullScan => "full_scan",
            Access::TextIndex => "text_index",
            Access::RegionIndex => "region_index",
        }
    }
}

/// A scan with its chosen access path, pushed-down coordinate bounds, and
/// residual row filters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysScan {
    pub id: usize,
    pub source: ScanSource,
    pub alias: String,
    pub access: Access,
    pub bounds: Vec<BoundConstraint>,
    pub filters: Vec<Pred>,
    pub est: f64,
}

/// One probe constraint of an index-nested-loop join: the inner region's
/// `coord` compared against a coordinate of an outer tuple column.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTemplate {
    pub coord: Coord,
    pub op: BoundOp,
    pub outer_col: usize,
    pub outer_coord: Coord,
}

/// The executable plan: the logical tree annotated with access paths and
/// join strategies. Columns inside a join chain are in join order; a
/// `Permute` node restores the original column order above it.
#[derive(Debug, Clone, PartialEq)]
pub enum PhysicalPlan {
    Scan(PhysScan),
    Select {
        input: Box<PhysicalPlan>,
        pred: Pred,
    },
    Project {
        input: Box<PhysicalPlan>,
        cols: Vec<ProjectCol>,
    },
    Join {
        left: Box<PhysicalPlan>,
        right: Box<PhysicalPlan>,
        /// Present for index-nested-loop joins: the right side must be an
        /// `AllSpans` scan probed through the region index per outer row.
        probe: Option<Vec<BoundTemplate>>,
        preds: Vec<Pred>,
        est: f64,
    },
    /// output[i] = input[map[i]].
    Permute {
        input: Box<PhysicalPlan>,
        map: Vec<usize>,
    },
    Union {
        left: Box<PhysicalPlan>,
        right: Box<PhysicalPlan>,
    },
    Intersect {
        left: Box<PhysicalPlan>,
        right: Box<PhysicalPlan>,
    },
    Consolidate {
        input: Box<PhysicalPlan>,
        kind: ConsolidateKind,
    },
    Block {
        input: Box<PhysicalPlan>,
        kind: BlockKind,
    },
    Group {
        input: Box<PhysicalPlan>,
        col: usize,
        spec: AlignmentSpec,
        alias: String,
    },
    Aggregate {
        input: Box<PhysicalPlan>,
        kind: AggKind,
    },
}

impl PhysicalPlan {
    pub fn column_names(&self) -> Vec<String> {
        match self {
            PhysicalPlan::Scan(s) => vec![s.alias.clone()],
            PhysicalPlan::Select { input, .. } => input.column_names(),
            PhysicalPlan::Project { cols, .. } => cols.iter().map(|c| c.name.clone()).collect(),
            PhysicalPlan::Join { left, right, .. } => {
                let mut names = left.column_names();
                names.extend(right.column_names());
                names
            }
            PhysicalPlan::Permute { input, map } => {
                let inner = input.column_names();
                map.iter().map(|&i| inner[i].clone()).collect()
            }
            PhysicalPlan::Union { left, .. } | PhysicalPlan::Intersect { left, .. } => {
                left.column_names()
            }
            PhysicalPlan::Consolidate { input, .. } | PhysicalPlan::Block { input, .. } => {
                input.column_names()
            }
            PhysicalPlan::Group { alias, .. } => vec![alias.clone()],
            PhysicalPlan::Aggregate { input, .. } => input.column_names(),
        }
    }

    pub fn estimate(&self) -> f64 {
        match self {
            PhysicalPlan::Scan(s) => s.est,
            PhysicalPlan::Select { input, .. } => input.estimate() * 0.5,
            PhysicalPlan::Project { input, .. } | PhysicalPlan::Permute { input, .. } => {
                input.estimate()
            }
            PhysicalPlan::Join { est, .. } => *est,
            PhysicalPlan::Union { left, right } => left.estimate() + right.estimate(),
            PhysicalPlan::Intersect { left, right } => left.estimate().min(right.estimate()),
            PhysicalPlan::Consolidate { input, .. } | PhysicalPlan::Block { input, .. } => {
                input.estimate() * 0.6
            }
            PhysicalPlan::Group { input, .. } => input.estimate() * 0.2,
            PhysicalPlan::Aggregate { input, .. } => input.estimate(),
        }
    }
}

pub fn optimize(plan: &LogicalPlan, store: &RegionStore, indices: IndexSet) -> PhysicalPlan {
    let texty = store
        .pages()
        .iter()
        .flat_map(|p| p.regions())
        .filter(|r| r.is_texty())
        .count() as f64;
    let mut cx = Cx {
        store,
        indices,
        texty,
        next_scan_id: 0,
    };
    cx.go(plan)
}

struct Cx<'a> {
    store: &'a RegionStore,
    indices: IndexSet<'a>,
    texty: f64,
    next_scan_id: usize,
}

impl<'a> Cx<'a> {
    fn go(&mut self, plan: &LogicalPlan) -> PhysicalPlan {
        // Collect the select chain above this node.
        let mut conjuncts: Vec<Pred> = Vec::new();
        let mut cur = plan;
        while let LogicalPlan::Select { input, pred } = cur {
            conjuncts.extend(pred.clone().into_conjuncts());
            cur = input;
        }
        match cur {
            LogicalPlan::Product { inputs } => self.plan_join(inputs, conjuncts),
            LogicalPlan::Scan { source, alias } => {
                let (bounds, filters) = split_pushable(conjuncts, 0);
                PhysicalPlan::Scan(self.make_scan(source, alias, bounds, filters, &[0]))
            }
            other => {
                let mut phys = self.go_base(other);
                for pred in conjuncts {
                    phys = PhysicalPlan::Select {
                        input: Box::new(phys),
                        pred,
                    };
                }
                phys
            }
        }
    }

    fn go_base(&mut self, plan: &LogicalPlan) -> PhysicalPlan {
        match plan {
            LogicalPlan::Select { .. } => unreachable!("handled by go()"),
            LogicalPlan::Scan { source, alias } => {
                PhysicalPlan::Scan(self.make_scan(source, alias, Vec::new(), Vec::new(), &[0]))
            }
            LogicalPlan::Product { inputs } => self.plan_join(inputs, Vec::new()),
            LogicalPlan::Project { input, cols } => PhysicalPlan::Project {
                input: Box::new(self.go(input)),
                cols: cols.clone(),
            },
            LogicalPlan::Union { left, right } => PhysicalPlan::Union {
                left: Box::new(self.go(left)),
                right: Box::new(self.go(right)),
            },
            LogicalPlan::Intersect { left, right } => PhysicalPlan::Intersect {
                left: Box::new(self.go(left)),
                right: Box::new(self.go(right)),
            },
            LogicalPlan::Consolidate { input, kind } => PhysicalPlan::Consolidate {
                input: Box::new(self.go(input)),
                kind: *kind,
            },
            LogicalPlan::Block { input, kind } => PhysicalPlan::Block {
                input: Box::new(self.go(input)),
                kind: kind.clone(),
            },
            LogicalPlan::Group {
                input,
                col,
                spec,
                alias,
            } => PhysicalPlan::Group {
                input: Box::new(self.go(input)),
                col: *col,
                spec: spec.clone(),
                alias: alias.clone(),
            },
            LogicalPlan::Aggregate { input, kind } => PhysicalPlan::Aggregate {
                input: Box::new(self.go(input)),
                kind: *kind,
            },
        }
    }

    fn make_scan(
        &mut self,
        source: &ScanSource,
        alias: &str,
        mut bounds: Vec<BoundConstraint>,
        mut filters: Vec<Pred>,
        col_map: &[usize],
    ) -> PhysScan {
        for f in &mut filters {
            f.remap_columns(col_map);
        }
        let access = match source {
            ScanSource::Phrase(_) | ScanSource::Dict(_) if self.indices.text.is_some() => {
                Access::TextIndex
            }
            ScanSource::AllSpans if !bounds.is_empty() && self.indices.region.is_some() => {
                Access::RegionIndex
            }
            _ => Access::FullScan,
        };
        // Vacuous bounds (comparisons against +inf upper limits) hold for
        // every region and are dropped.
        bounds.retain(|b| !b.is_vacuous());
        let est = self.estimate_scan(source, &bounds, filters.len());
        let id = self.next_scan_id;
        self.next_scan_id += 1;
        PhysScan {
            id,
            source: source.clone(),
            alias: alias.to_string(),
            access,
            bounds,
            filters,
            est,
        }
    }

    fn estimate_scan(&self, source: &ScanSource, bounds: &[BoundConstraint], filters: usize) -> f64 {
        let base = match source {
            ScanSource::AllSpans => self.store.region_count() as f64,
            ScanSource::Regex(_) => 0.2 * self.texty,
            ScanSource::Phrase(p) => match self.indices.text {
                Some(text) => {
                    let toks: Vec<String> = tokenize(p).into_iter().map(|t| t.text).collect();
                    toks.iter()
                        .map(|t| text.token_region_count(t) as f64)
                        .fold(f64::INFINITY, f64::min)
                        .min(self.texty)
                }
                None => 0.1 * self.texty,
            },
            ScanSource::Dict(name) => match (self.indices.text, self.store.dictionary(name)) {
                (Some(text), Some(dict)) => dict
                    .phrases
                    .iter()
                    .map(|p| {
                        p.tokens
                            .iter()
                            .map(|t| text.token_region_count(t) as f64)
                            .fold(f64::INFINITY, f64::min)
                    })
                    .filter(|v| v.is_finite())
                    .sum(),
                _ => 0.2 * self.texty,
            },
        };
        let bound_sel = match self.indices.region {
            Some(region) => region.selectivity(bounds),
            None => 0.4f64.powi(bounds.len() as i32),
        };
        (base * bound_sel * 0.5f64.powi(filters as i32)).max(0.01)
    }

    /// Plans a product with its select conjuncts: pushdown, ordering, and
    /// probe extraction. Inputs must each be width 1 (always true for
    /// lowered queries); wider inputs fall back to an unordered
    /// nested-loop chain.
    fn plan_join(&mut self, inputs: &[LogicalPlan], conjuncts: Vec<Pred>) -> PhysicalPlan {
        let n = inputs.len();
        if inputs.iter().any(|i| i.width() != 1) {
            let mut phys = self.fallback_chain(inputs);
            for pred in conjuncts {
                phys = PhysicalPlan::Select {
                    input: Box::new(phys),
                    pred,
                };
            }
            return phys;
        }

        // Classify conjuncts by the set of columns they touch.
        let mut single: Vec<Vec<Pred>> = vec![Vec::new(); n];
        let mut multi: Vec<Pred> = Vec::new();
        let mut residual: Vec<Pred> = Vec::new();
        for pred in conjuncts {
            let cols = pred.columns();
            match cols.len() {
                0 => residual.push(pred),
                1 => single[cols[0]].push(pred),
                _ => multi.push(pred),
            }
        }

        // Physical input per original column, with single-column conjuncts
        // pushed into it.
        let mut phys_inputs: Vec<Option<PhysicalPlan>> = Vec::with_capacity(n);
        let mut ests: Vec<f64> = Vec::with_capacity(n);
        for (c, input) in inputs.iter().enumerate() {
            let preds = std::mem::take(&mut single[c]);
            let mut map = vec![0usize; n];
            map[c] = 0;
            let phys = match input {
                LogicalPlan::Scan { source, alias } => {
                    let (bounds, filters) = split_pushable(preds, c);
                    PhysicalPlan::Scan(self.make_scan(source, alias, bounds, filters, &map))
                }
                other => {
                    let mut phys = self.go(other);
                    for mut pred in preds {
                        pred.remap_columns(&map);
                        phys = PhysicalPlan::Select {
                            input: Box::new(phys),
                            pred,
                        };
                    }
                    phys
                }
            };
            ests.push(phys.estimate());
            phys_inputs.push(Some(phys));
        }

        // Greedy smallest-first join order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ests[a].total_cmp(&ests[b]).then(a.cmp(&b)));

        // Original column -> join position.
        let mut pos = vec![0usize; n];
        for (join_pos, &orig) in order.iter().enumerate() {
            pos[orig] = join_pos;
        }

        let mut acc = phys_inputs[order[0]].take().unwrap();
        let mut acc_est = ests[order[0]];
        let mut remaining = multi;
        for step in 1..n {
            let orig = order[step];
            let mut right = phys_inputs[orig].take().unwrap();
            let available: Vec<usize> = order[..=step].to_vec();
            let (mut step_preds, rest): (Vec<Pred>, Vec<Pred>) =
                remaining.into_iter().partition(|p| {
                    p.columns().iter().all(|c| available.contains(c))
                });
            remaining = rest;

            // Probe templates when the right side is a plain AllSpans scan
            // and the region index is available.
            let mut probe: Option<Vec<BoundTemplate>> = None;
            if self.indices.region.is_some() {
                if let PhysicalPlan::Scan(scan) = &right {
                    if scan.source == ScanSource::AllSpans {
                        let mut templates = Vec::new();
                        let mut kept = Vec::new();
                        for pred in step_preds {
                            match join_templates(&pred, orig, &pos) {
                                Some(ts) => templates.extend(ts),
                                None => kept.push(pred),
                            }
                        }
                        step_preds = kept;
                        if !templates.is_empty() {
                            probe = Some(templates);
                        }
                    }
                }
            }
            if probe.is_some() {
                if let PhysicalPlan::Scan(scan) = &mut right {
                    scan.access = Access::RegionIndex;
                }
            }

            // Join predicates are evaluated on the joined tuple in join
            // order.
            for p in &mut step_preds {
                p.remap_columns(&pos);
            }
            let sel = 0.2f64.powi(step_preds.len() as i32)
                * if probe.is_some() { 0.05 } else { 1.0 };
            let est = (acc_est * right.estimate() * sel).max(0.01);
            acc = PhysicalPlan::Join {
                left: Box::new(acc),
                right: Box::new(right),
                probe,
                preds: step_preds,
                est,
            };
            acc_est = est;
        }

        // Restore original column order.
        if n > 1 && order != (0..n).collect::<Vec<_>>() {
            acc = PhysicalPlan::Permute {
                input: Box::new(acc),
                map: pos.clone(),
            };
        }
        for pred in residual {
            acc = PhysicalPlan::Select {
                input: Box::new(acc),
                pred,
            };
        }
        if !remaining.is_empty() {
            // Conjuncts referencing columns outside the product (never
            // produced by lowering); keep them as filters for safety.
            for pred in remaining {
                acc = PhysicalPlan::Select {
                    input: Box::new(acc),
                    pred,
                };
            }
        }
        acc
    }

    fn fallback_chain(&mut self, inputs: &[LogicalPlan]) -> PhysicalPlan {
        let mut iter = inputs.iter();
        let first = iter.next().expect("product has inputs");
        let mut acc = self.go(first);
        let mut acc_est = acc.estimate();
        for input in iter {
            let right = self.go(input);
            let est = (acc_est * right.estimate()).max(0.01);
            acc = PhysicalPlan::Join {
                left: Box::new(acc),
                right: Box::new(right),
                probe: None,
                preds: Vec::new(),
                est,
            };
            acc_est = est;
        }
        acc
    }
}

/// Splits single-column conjuncts into index-friendly coordinate bounds
/// and residual filters. Filters are remapped to column 0 (the scan's own
/// column).
fn split_pushable(preds: Vec<Pred>, col: usize) -> (Vec<BoundConstraint>, Vec<Pred>) {
    let mut bounds = Vec::new();
    let mut filters = Vec::new();
    for pred in preds {
        match constant_bounds(&pred, col) {
            Some(bs) => bounds.extend(bs),
            None => {
                let mut map = vec![0usize; col + 1];
                map[col] = 0;
                let mut p = pred;
                p.remap_columns(&map);
                filters.push(p);
            }
        }
    }
    (bounds, filters)
}

/// `(coord on the column side, op, coord on the other side)` rows encoding
/// a decomposable predicate. `col_first` says whether the column is the
/// predicate's first argument.
fn decompose(op: &PredOp, col_first: bool) -> Option<Vec<(Coord, BoundOp, Coord)>> {
    use BoundOp::{Ge, Le};
    use Coord::{Xh, Xl, Yh, Yl};
    let rows = match op {
        PredOp::Dir { dir, strict } => {
            let mut rows = match (dir, col_first) {
                (Direction::North, true) => vec![(Yh, Le, Yl)],
                (Direction::North, false) => vec![(Yl, Ge, Yh)],
                (Direction::South, true) => vec![(Yl, Ge, Yh)],
                (Direction::South, false) => vec![(Yh, Le, Yl)],
                (Direction::East, true) => vec![(Xl, Ge, Xh)],
                (Direction::East, false) => vec![(Xh, Le, Xl)],
                (Direction::West, true) => vec![(Xh, Le, Xl)],
                (Direction::West, false) => vec![(Xl, Ge, Xh)],
            };
            if *strict {
                let perp = match dir {
                    Direction::North | Direction::South => {
                        if col_first {
                            vec![(Xl, Ge, Xl), (Xh, Le, Xh)]
                        } else {
                            vec![(Xl, Le, Xl), (Xh, Ge, Xh)]
                        }
                    }
                    Direction::East | Direction::West => {
                        if col_first {
                            vec![(Yl, Ge, Yl), (Yh, Le, Yh)]
                        } else {
                            vec![(Yl, Le, Yl), (Yh, Ge, Yh)]
                        }
                    }
                };
                rows.extend(perp);
            }
            rows
        }
        PredOp::Topo(TopoKind::Contains) => {
            if col_first {
                vec![(Xl, Ge, Xl), (Xh, Le, Xh), (Yl, Ge, Yl), (Yh, Le, Yh)]
            } else {
                vec![(Xl, Le, Xl), (Xh, Ge, Xh), (Yl, Le, Yl), (Yh, Ge, Yh)]
            }
        }
        PredOp::Topo(TopoKind::Intersects) => {
            vec![(Xl, Le, Xh), (Xh, Ge, Xl), (Yl, Le, Yh), (Yh, Ge, Yl)]
        }
        _ => return None,
    };
    Some(rows)
}

/// Extracts constant coordinate bounds from a predicate over one column
/// and a virtual-region rectangle.
fn constant_bounds(pred: &Pred, col: usize) -> Option<Vec<BoundConstraint>> {
    let Pred::Call { op, args } = pred else {
        return None;
    };
    if args.len() != 2 {
        return None;
    }
    let (col_first, rect) = match (&args[0], &args[1]) {
        (ArgExpr::Col(c), ArgExpr::Rect(r)) if *c == col => (true, r),
        (ArgExpr::Rect(r), ArgExpr::Col(c)) if *c == col => (false, r),
        _ => return None,
    };
    let rows = decompose(op, col_first)?;
    Some(
        rows.into_iter()
            .map(|(coord, op, other)| BoundConstraint {
                coord,
                op,
                value: other.of(rect),
            })
            .collect(),
    )
}

/// Extracts probe templates from a join predicate between the inner column
/// and one outer column. `pos` maps original columns to join positions;
/// the outer column index in the template is its join position (the
/// position within the assembled left tuple).
fn join_templates(pred: &Pred, inner_col: usize, pos: &[usize]) -> Option<Vec<BoundTemplate>> {
    let Pred::Call { op, args } = pred else {
        return None;
    };
    if args.len() != 2 {
        return None;
    }
    let (inner_first, outer) = match (&args[0], &args[1]) {
        (ArgExpr::Col(a), ArgExpr::Col(b)) if *a == inner_col && *b != inner_col => (true, *b),
        (ArgExpr::Col(a), ArgExpr::Col(b)) if *b == inner_col && *a != inner_col => (false, *a),
        _ => return None,
    };
    let rows = decompose(op, inner_first)?;
    Some(
        rows.into_iter()
            .map(|(coord, op, outer_coord)| BoundTemplate {
                coord,
                op,
                outer_col: pos[outer],
                outer_coord,
            })
            .collect(),
    )
}
