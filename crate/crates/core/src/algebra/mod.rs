//! The visual span operator library.
//!
//! Span extraction (regular expressions, dictionaries, phrases), directional
//! and containment predicates over rectangles, text-span predicates,
//! ancestor/descendant navigation, consolidation, block aggregation,
//! alignment grouping, and the region aggregates. All operators are pure
//! functions over immutable inputs; results do not depend on evaluation
//! order.

use std::cmp::Ordering;

use regex::Regex;

use crate::error::AlgebraError;
use crate::region::{Region, Relation, TextSpan, Tuple, VisualSpan};
use crate::store::{Page, RegionStore, StoredRegion};
use crate::text::{tokenize, Token};

/// Compass direction for the directional predicates. `y` grows downward, so
/// North means "above".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

/// Containment-family predicates over rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopoKind {
    /// First argument lies inside the second.
    Contains,
    /// Closed rectangles meet but their interiors stay disjoint.
    Touches,
    /// Closed rectangles share at least one point.
    Intersects,
}

/// Predicates over the text-span part of visual spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpanPred {
    /// First span ends before the second begins, with at most `d` characters
    /// between them.
    PrecedesWithin(usize),
    Overlaps,
    /// First span lies strictly within the second.
    StrictlyContains,
    Equals,
}

/// Which derived link of a stored region to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    Minimal,
    Maximal,
}

/// Kind of consolidation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConsolidateKind {
    Containment,
    Overlap,
}

/// Alignment axis: `Vertical` groups spans stacked in a column (equal x
/// keys), `Horizontal` groups spans laid out in a row (equal y keys).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Vertical,
    Horizontal,
}

/// Which edge of the alignment axis supplies the grouping key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignMode {
    LeadingEdge,
    Center,
    TrailingEdge,
}

/// Parameters for alignment grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSpec {
    pub axis: Axis,
    pub mode: AlignMode,
    /// Key clustering tolerance in pixels.
    pub tolerance: f64,
    /// Split groups when another input region interposes between two
    /// consecutive members.
    pub consecutive: bool,
    /// Maximum gap along the stacking direction; `None` means unlimited.
    pub maxdist: Option<f64>,
    pub min_group_size: usize,
}

impl Default for AlignmentSpec {
    fn default() -> Self {
        AlignmentSpec {
            axis: Axis::Vertical,
            mode: AlignMode::LeadingEdge,
            tolerance: 0.0,
            consecutive: false,
            maxdist: None,
            min_group_size: 2,
        }
    }
}

/// A group of aligned spans plus its minimal bounding region.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedGroup {
    pub members: Vec<VisualSpan>,
    pub bounding: VisualSpan,
}

fn relation1(rows: Vec<VisualSpan>) -> Relation {
    let mut rel = Relation::new(vec!["vs".to_string()]).expect("fixed name");
    for row in rows {
        rel.push(Tuple::single(row)).expect("width 1");
    }
    rel
}

fn require_width1(rel: &Relation) -> Result<(), AlgebraError> {
    if rel.width() != 1 {
        return Err(AlgebraError::WidthMismatch(rel.width()));
    }
    Ok(())
}

fn require_same_page<'a>(
    rows: impl Iterator<Item = &'a VisualSpan>,
) -> Result<Option<String>, AlgebraError> {
    let mut page: Option<&str> = None;
    for row in rows {
        match page {
            None => page = Some(&row.page_id),
            Some(p) if p != row.page_id => {
                return Err(AlgebraError::PageMismatch(
                    p.to_string(),
                    row.page_id.clone(),
                ))
            }
            _ => {}
        }
    }
    Ok(page.map(|p| p.to_string()))
}

fn page_of<'a>(store: &'a RegionStore, page_id: &str) -> Result<&'a Page, AlgebraError> {
    store
        .page(page_id)
        .ok_or_else(|| AlgebraError::PageNotFound(page_id.to_string()))
}

// ---------------------------------------------------------------------------
// Span extraction.

/// All visual spans of a page, one per stored region.
pub fn all_spans(store: &RegionStore, page_id: &str) -> Result<Relation, AlgebraError> {
    let page = page_of(store, page_id)?;
    Ok(relation1(
        page.regions().iter().map(|r| r.visual_span()).collect(),
    ))
}

/// Leftmost, non-overlapping matches of `re` in `text`, as local character
/// spans.
pub fn regex_matches_local(text: &str, re: &Regex) -> Vec<(usize, usize)> {
    if text.is_empty() {
        return Vec::new();
    }
    // Byte offsets of char boundaries, for byte-to-char conversion.
    let byte_of_char: Vec<usize> = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect();
    let char_of_byte = |byte: usize| byte_of_char.partition_point(|&b| b < byte);
    re.find_iter(text)
        .map(|m| (char_of_byte(m.start()), char_of_byte(m.end())))
        .collect()
}

/// Compiles a pattern, mapping failures to [`AlgebraError::BadPattern`].
pub fn compile_pattern(pattern: &str) -> Result<Regex, AlgebraError> {
    Regex::new(pattern).map_err(|e| AlgebraError::BadPattern(e.to_string()))
}

/// Regular-expression extraction: for each region with non-empty stored text
/// and each leftmost non-overlapping match, one visual span whose text span
/// is the match shifted into page offsets and whose region is the region's
/// rectangle.
pub fn regex_extract(
    store: &RegionStore,
    page_id: &str,
    pattern: &str,
) -> Result<Relation, AlgebraError> {
    let re = compile_pattern(pattern)?;
    regex_extract_compiled(store, page_id, &re)
}

pub fn regex_extract_compiled(
    store: &RegionStore,
    page_id: &str,
    re: &Regex,
) -> Result<Relation, AlgebraError> {
    let page = page_of(store, page_id)?;
    let mut rows = Vec::new();
    for r in page.regions() {
        extract_regex_into(r, re, &mut rows);
    }
    Ok(relation1(rows))
}

/// Appends the regex matches of one stored region as visual spans.
pub fn extract_regex_into(r: &StoredRegion, re: &Regex, rows: &mut Vec<VisualSpan>) {
    if !r.is_texty() {
        return;
    }
    for (b, e) in regex_matches_local(&r.text, re) {
        rows.push(VisualSpan {
            page_id: r.page_id.clone(),
            span: TextSpan {
                begin: r.text_start + b,
                end: r.text_start + e,
            },
            region: r.region,
            source_region_id: Some(r.region_id.clone()),
        });
    }
}

/// Token-boundary occurrences of a token sequence within `tokens`, as local
/// character spans covering the matched characters.
pub fn phrase_occurrences_local(tokens: &[Token], phrase: &[String]) -> Vec<(usize, usize)> {
    if phrase.is_empty() || tokens.len() < phrase.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for w in 0..=tokens.len() - phrase.len() {
        if (0..phrase.len()).all(|k| tokens[w + k].text == phrase[k]) {
            out.push((tokens[w].start, tokens[w + phrase.len() - 1].end));
        }
    }
    out
}

/// Appends token-boundary occurrences of `phrase` in one stored region.
pub fn extract_phrase_into(r: &StoredRegion, phrase: &[String], rows: &mut Vec<VisualSpan>) {
    if !r.is_texty() {
        return;
    }
    let tokens = tokenize(&r.text);
    for (b, e) in phrase_occurrences_local(&tokens, phrase) {
        rows.push(VisualSpan {
            page_id: r.page_id.clone(),
            span: TextSpan {
                begin: r.text_start + b,
                end: r.text_start + e,
            },
            region: r.region,
            source_region_id: Some(r.region_id.clone()),
        });
    }
}

/// Dictionary extraction: token-boundary, case-insensitive occurrences of
/// any dictionary phrase in the stored texts.
pub fn dict_extract(
    store: &RegionStore,
    page_id: &str,
    dictionary_name: &str,
) -> Result<Relation, AlgebraError> {
    let dict = store
        .dictionary(dictionary_name)
        .ok_or_else(|| AlgebraError::UnknownDictionary(dictionary_name.to_string()))?;
    let page = page_of(store, page_id)?;
    let mut rows = Vec::new();
    for r in page.regions() {
        if !r.is_texty() {
            continue;
        }
        let tokens = tokenize(&r.text);
        for phrase in &dict.phrases {
            for (b, e) in phrase_occurrences_local(&tokens, &phrase.tokens) {
                rows.push(VisualSpan {
                    page_id: r.page_id.clone(),
                    span: TextSpan {
                        begin: r.text_start + b,
                        end: r.text_start + e,
                    },
                    region: r.region,
                    source_region_id: Some(r.region_id.clone()),
                });
            }
        }
    }
    Ok(relation1(rows))
}

/// Single-phrase extraction with dictionary matching semantics.
pub fn phrase_extract(
    store: &RegionStore,
    page_id: &str,
    phrase: &str,
) -> Result<Relation, AlgebraError> {
    let want: Vec<String> = tokenize(phrase).into_iter().map(|t| t.text).collect();
    if want.is_empty() {
        return Err(AlgebraError::EmptyPhrase);
    }
    let page = page_of(store, page_id)?;
    let mut rows = Vec::new();
    for r in page.regions() {
        extract_phrase_into(r, &want, &mut rows);
    }
    Ok(relation1(rows))
}

// ---------------------------------------------------------------------------
// Scalar predicates.

fn check_pages(v1: &VisualSpan, v2: &VisualSpan) -> Result<(), AlgebraError> {
    if v1.page_id != v2.page_id {
        return Err(AlgebraError::PageMismatch(
            v1.page_id.clone(),
            v2.page_id.clone(),
        ));
    }
    Ok(())
}

/// Directional predicate. Inclusive inequalities: abutting rectangles
/// satisfy the predicate. `strict` additionally requires the first span's
/// extent on the perpendicular axis to lie within the second's.
pub fn directional(
    dir: Direction,
    strict: bool,
    v1: &VisualSpan,
    v2: &VisualSpan,
) -> Result<bool, AlgebraError> {
    check_pages(v1, v2)?;
    let (a, b) = (&v1.region, &v2.region);
    let beyond = match dir {
        Direction::North => a.y_h <= b.y_l,
        Direction::South => a.y_l >= b.y_h,
        Direction::East => a.x_l >= b.x_h,
        Direction::West => a.x_h <= b.x_l,
    };
    if !beyond {
        return Ok(false);
    }
    if !strict {
        return Ok(true);
    }
    Ok(match dir {
        Direction::North | Direction::South => a.x_l >= b.x_l && a.x_h <= b.x_h,
        Direction::East | Direction::West => a.y_l >= b.y_l && a.y_h <= b.y_h,
    })
}

/// Containment-family predicate. Argument order for `Contains`: the first
/// span inside the second.
pub fn topo(kind: TopoKind, v1: &VisualSpan, v2: &VisualSpan) -> Result<bool, AlgebraError> {
    check_pages(v1, v2)?;
    let (a, b) = (&v1.region, &v2.region);
    Ok(match kind {
        TopoKind::Contains => a.contained_in(b),
        TopoKind::Intersects => a.intersects(b),
        TopoKind::Touches => a.intersects(b) && !a.interiors_overlap(b),
    })
}

/// Text-span predicate.
pub fn span_pred(kind: SpanPred, s1: TextSpan, s2: TextSpan) -> bool {
    match kind {
        SpanPred::PrecedesWithin(d) => s1.end <= s2.begin && s2.begin - s1.end <= d,
        SpanPred::Overlaps => s1.overlaps(&s2),
        SpanPred::StrictlyContains => s1.contained_in(&s2) && s1 != s2,
        SpanPred::Equals => s1 == s2,
    }
}

// ---------------------------------------------------------------------------
// Tree navigation.

fn store_backed<'a>(
    store: &'a RegionStore,
    v: &VisualSpan,
) -> Result<(&'a Page, u32), AlgebraError> {
    let id = v
        .source_region_id
        .as_ref()
        .ok_or(AlgebraError::SynthesizedRegion)?;
    let page = page_of(store, &v.page_id)?;
    let idx = page
        .region_index(id)
        .ok_or_else(|| AlgebraError::RegionNotFound {
            page_id: v.page_id.clone(),
            region_id: id.to_string(),
        })?;
    Ok((page, idx))
}

/// All store regions whose id is a proper prefix of the span's source id.
pub fn ancestors(store: &RegionStore, v: &VisualSpan) -> Result<Relation, AlgebraError> {
    let (page, idx) = store_backed(store, v)?;
    let mut rows = Vec::new();
    let mut up = page.parent_of(idx);
    while let Some(p) = up {
        rows.push(page.region(p).visual_span());
        up = page.parent_of(p);
    }
    rows.reverse();
    Ok(relation1(rows))
}

/// All store regions of which the span's source id is a proper prefix.
pub fn descendants(store: &RegionStore, v: &VisualSpan) -> Result<Relation, AlgebraError> {
    let (page, idx) = store_backed(store, v)?;
    let range = page.subtree_range(idx);
    let rows = page.regions()[range]
        .iter()
        .skip(1)
        .map(|r| r.visual_span())
        .collect();
    Ok(relation1(rows))
}

/// The precomputed minimal or maximal region of the span's source region,
/// emitted with its own rectangle and text offsets.
pub fn min_max_region(
    store: &RegionStore,
    v: &VisualSpan,
    which: Which,
) -> Result<VisualSpan, AlgebraError> {
    let (page, idx) = store_backed(store, v)?;
    let region = page.region(idx);
    let target = match which {
        Which::Minimal => &region.minimal_region_id,
        Which::Maximal => &region.maximal_region_id,
    };
    let t = page
        .region_index(target)
        .ok_or_else(|| AlgebraError::RegionNotFound {
            page_id: v.page_id.clone(),
            region_id: target.to_string(),
        })?;
    Ok(page.region(t).visual_span())
}

// ---------------------------------------------------------------------------
// Consolidation.

fn span_and_region_contained(inner: &VisualSpan, outer: &VisualSpan) -> bool {
    inner.region.contained_in(&outer.region) && inner.span.contained_in(&outer.span)
}

/// Containment consolidation: drops rows whose span and region are both
/// contained in another row's; identical rows collapse to one.
pub fn consolidate_containment(rel: &Relation) -> Result<Relation, AlgebraError> {
    require_width1(rel)?;
    let mut rows: Vec<&VisualSpan> = rel.rows().iter().map(|t| &t.cells()[0]).collect();
    rows.sort_by(|a, b| a.total_cmp(b));
    let mut keep: Vec<VisualSpan> = Vec::new();
    'outer: for (i, &u) in rows.iter().enumerate() {
        for (j, &w) in rows.iter().enumerate() {
            if i == j || u.page_id != w.page_id {
                continue;
            }
            let u_in_w = span_and_region_contained(u, w);
            let w_in_u = span_and_region_contained(w, u);
            if u_in_w && !w_in_u {
                continue 'outer; // strictly dominated
            }
            if u_in_w && w_in_u && j < i {
                continue 'outer; // duplicate geometry, keep the first
            }
        }
        keep.push(u.clone());
    }
    Ok(relation1(keep))
}

/// Index of the innermost store region (longest id path, then smallest id)
/// whose text offsets cover `[begin, end)`.
pub fn innermost_covering(page: &Page, begin: usize, end: usize) -> Option<u32> {
    let mut best: Option<u32> = None;
    for (i, r) in page.regions().iter().enumerate() {
        if r.text_start <= begin && end <= r.text_end {
            let better = match best {
                None => true,
                Some(b) => r.region_id.depth() > page.region(b).region_id.depth(),
            };
            if better {
                best = Some(i as u32);
            }
        }
    }
    best
}

fn covering_span(
    store: &RegionStore,
    page_id: &str,
    begin: usize,
    end: usize,
) -> Result<VisualSpan, AlgebraError> {
    let page = page_of(store, page_id)?;
    let idx = innermost_covering(page, begin, end).ok_or(AlgebraError::NoCoveringRegion {
        page_id: page_id.to_string(),
        begin,
        end,
    })?;
    let r = page.region(idx);
    Ok(VisualSpan {
        page_id: r.page_id.clone(),
        span: TextSpan { begin, end },
        region: r.region,
        source_region_id: Some(r.region_id.clone()),
    })
}

/// Overlap consolidation: connected components under text-span overlap merge
/// into one span anchored at the innermost store region covering it.
/// Singleton components (including all zero-length spans, which overlap
/// nothing) pass through unchanged.
pub fn consolidate_overlap(store: &RegionStore, rel: &Relation) -> Result<Relation, AlgebraError> {
    require_width1(rel)?;
    let page_id = match require_same_page(rel.rows().iter().map(|t| &t.cells()[0]))? {
        Some(p) => p,
        None => return Ok(relation1(Vec::new())),
    };
    let mut out = Vec::new();
    let mut rows: Vec<&VisualSpan> = Vec::new();
    for t in rel.rows() {
        let v = &t.cells()[0];
        if v.span.is_empty() {
            out.push(v.clone());
        } else {
            rows.push(v);
        }
    }
    rows.sort_by(|a, b| a.total_cmp(b));

    let mut comp: Vec<&VisualSpan> = Vec::new();
    let mut comp_end = 0usize;
    for row in rows {
        if !comp.is_empty() && row.span.begin < comp_end {
            comp_end = comp_end.max(row.span.end);
        } else {
            flush_component(store, &page_id, &mut comp, &mut out)?;
            comp_end = row.span.end;
        }
        comp.push(row);
    }
    flush_component(store, &page_id, &mut comp, &mut out)?;
    Ok(relation1(out))
}

fn flush_component(
    store: &RegionStore,
    page_id: &str,
    comp: &mut Vec<&VisualSpan>,
    out: &mut Vec<VisualSpan>,
) -> Result<(), AlgebraError> {
    match comp.len() {
        0 => {}
        1 => out.push(comp[0].clone()),
        _ => {
            let begin = comp.iter().map(|v| v.span.begin).min().unwrap();
            let end = comp.iter().map(|v| v.span.end).max().unwrap();
            out.push(covering_span(store, page_id, begin, end)?);
        }
    }
    comp.clear();
    Ok(())
}

// ---------------------------------------------------------------------------
// Block aggregation.

/// Text block aggregation: maximal runs of spans (ordered by begin) whose
/// consecutive gaps stay within `max_gap` emit one covering span per run
/// with at least `min_count` members, anchored at the innermost covering
/// store region.
pub fn block_text(
    store: &RegionStore,
    rel: &Relation,
    max_gap: usize,
    min_count: usize,
) -> Result<Relation, AlgebraError> {
    require_width1(rel)?;
    let page_id = match require_same_page(rel.rows().iter().map(|t| &t.cells()[0]))? {
        Some(p) => p,
        None => return Ok(relation1(Vec::new())),
    };
    let mut spans: Vec<TextSpan> = rel.rows().iter().map(|t| t.cells()[0].span).collect();
    spans.sort();
    let mut out = Vec::new();
    let mut run: Vec<TextSpan> = Vec::new();
    for span in spans {
        if let Some(prev) = run.last() {
            if span.begin as i64 - prev.end as i64 > max_gap as i64 {
                flush_run(store, &page_id, min_count, &mut run, &mut out)?;
            }
        }
        run.push(span);
    }
    flush_run(store, &page_id, min_count, &mut run, &mut out)?;
    Ok(relation1(out))
}

fn flush_run(
    store: &RegionStore,
    page_id: &str,
    min_count: usize,
    run: &mut Vec<TextSpan>,
    out: &mut Vec<VisualSpan>,
) -> Result<(), AlgebraError> {
    if !run.is_empty() && run.len() >= min_count {
        let begin = run[0].begin;
        let end = run.iter().map(|s| s.end).max().unwrap();
        out.push(covering_span(store, page_id, begin, end)?);
    }
    run.clear();
    Ok(())
}

/// Region block aggregation: emits each store region containing at least
/// `min_count` input spans whose (y_l, x_l)-ordered sequence keeps
/// consecutive centroid distances strictly below `x_dist` and `y_dist`;
/// containers of other qualifying regions are consolidated away so only the
/// innermost qualifying regions remain.
pub fn block_region(
    store: &RegionStore,
    rel: &Relation,
    x_dist: f64,
    y_dist: f64,
    min_count: usize,
) -> Result<Relation, AlgebraError> {
    require_width1(rel)?;
    let page_id = match require_same_page(rel.rows().iter().map(|t| &t.cells()[0]))? {
        Some(p) => p,
        None => return Ok(relation1(Vec::new())),
    };
    let page = page_of(store, &page_id)?;
    let mut members: Vec<&VisualSpan> = rel.rows().iter().map(|t| &t.cells()[0]).collect();
    members.sort_by(|a, b| {
        a.region
            .y_l
            .total_cmp(&b.region.y_l)
            .then(a.region.x_l.total_cmp(&b.region.x_l))
            .then(a.total_cmp(b))
    });
    let mut qualifying: Vec<VisualSpan> = Vec::new();
    for t in page.regions() {
        let inside: Vec<&&VisualSpan> = members
            .iter()
            .filter(|m| m.region.contained_in(&t.region))
            .collect();
        if inside.len() < min_count {
            continue;
        }
        let ordered_ok = inside.windows(2).all(|w| {
            let a = w[0].region.centroid_point().expect("store regions are finite");
            let b = w[1].region.centroid_point().expect("store regions are finite");
            (a.x_l - b.x_l).abs() < x_dist && (a.y_l - b.y_l).abs() < y_dist
        });
        if ordered_ok {
            qualifying.push(t.visual_span());
        }
    }
    // Keep only the innermost qualifying regions.
    let mut keep = Vec::new();
    'outer: for (i, u) in qualifying.iter().enumerate() {
        for (j, w) in qualifying.iter().enumerate() {
            if i == j {
                continue;
            }
            let w_in_u = span_and_region_contained(w, u);
            let u_in_w = span_and_region_contained(u, w);
            if w_in_u && !u_in_w {
                continue 'outer; // a smaller qualifying region exists inside
            }
            if w_in_u && u_in_w && j < i {
                continue 'outer;
            }
        }
        keep.push(u.clone());
    }
    Ok(relation1(keep))
}

// ---------------------------------------------------------------------------
// Alignment grouping.

fn align_key(v: &VisualSpan, axis: Axis, mode: AlignMode) -> f64 {
    let r = &v.region;
    match (axis, mode) {
        (Axis::Vertical, AlignMode::LeadingEdge) => r.x_l,
        (Axis::Vertical, AlignMode::Center) => (r.x_l + r.x_h) / 2.0,
        (Axis::Vertical, AlignMode::TrailingEdge) => r.x_h,
        (Axis::Horizontal, AlignMode::LeadingEdge) => r.y_l,
        (Axis::Horizontal, AlignMode::Center) => (r.y_l + r.y_h) / 2.0,
        (Axis::Horizontal, AlignMode::TrailingEdge) => r.y_h,
    }
}

/// Extent along the stacking direction (perpendicular to the alignment key).
fn stack_extent(v: &VisualSpan, axis: Axis) -> (f64, f64) {
    match axis {
        Axis::Vertical => (v.region.y_l, v.region.y_h),
        Axis::Horizontal => (v.region.x_l, v.region.x_h),
    }
}

/// Groups of aligned visual spans: cluster by alignment key within
/// `tolerance`, order along the stacking direction, split on gaps larger
/// than `maxdist` (and on interposing input rows when `consecutive` is
/// set), and keep groups of at least `min_group_size` members.
pub fn aligned_groups(
    rel: &Relation,
    spec: &AlignmentSpec,
) -> Result<Vec<AlignedGroup>, AlgebraError> {
    require_width1(rel)?;
    require_same_page(rel.rows().iter().map(|t| &t.cells()[0]))?;
    let all: Vec<&VisualSpan> = rel.rows().iter().map(|t| &t.cells()[0]).collect();
    if all.is_empty() {
        return Ok(Vec::new());
    }

    let mut sorted: Vec<&VisualSpan> = all.clone();
    sorted.sort_by(|a, b| {
        align_key(a, spec.axis, spec.mode)
            .total_cmp(&align_key(b, spec.axis, spec.mode))
            .then(stack_extent(a, spec.axis).0.total_cmp(&stack_extent(b, spec.axis).0))
            .then(a.total_cmp(b))
    });

    let mut groups: Vec<Vec<&VisualSpan>> = Vec::new();
    let mut cluster: Vec<&VisualSpan> = Vec::new();
    let mut prev_key = f64::NEG_INFINITY;
    for (i, v) in sorted.iter().enumerate() {
        let k = align_key(v, spec.axis, spec.mode);
        if i > 0 && k - prev_key > spec.tolerance {
            split_cluster(&cluster, spec, &all, &mut groups);
            cluster.clear();
        }
        cluster.push(v);
        prev_key = k;
    }
    split_cluster(&cluster, spec, &all, &mut groups);

    groups
        .into_iter()
        .filter(|g| g.len() >= spec.min_group_size)
        .map(|g| {
            let members: Vec<VisualSpan> = g.iter().map(|v| (*v).clone()).collect();
            let bounding = minimal_bounding_region(&members)?;
            Ok(AlignedGroup { members, bounding })
        })
        .collect()
}

fn split_cluster<'a>(
    cluster: &[&'a VisualSpan],
    spec: &AlignmentSpec,
    all: &[&'a VisualSpan],
    groups: &mut Vec<Vec<&'a VisualSpan>>,
) {
    if cluster.is_empty() {
        return;
    }
    let mut ordered: Vec<&VisualSpan> = cluster.to_vec();
    ordered.sort_by(|a, b| {
        let ea = stack_extent(a, spec.axis);
        let eb = stack_extent(b, spec.axis);
        ea.0.total_cmp(&eb.0)
            .then(ea.1.total_cmp(&eb.1))
            .then(a.total_cmp(b))
    });
    let mut current: Vec<&VisualSpan> = Vec::new();
    for v in ordered {
        let mut split = false;
        if let Some(prev) = current.last() {
            if let Some(maxdist) = spec.maxdist {
                if stack_extent(v, spec.axis).0 - stack_extent(prev, spec.axis).1 > maxdist {
                    split = true;
                }
            }
            if !split && spec.consecutive && interposed(prev, v, all, spec.axis) {
                split = true;
            }
        }
        if split {
            groups.push(std::mem::take(&mut current));
        }
        current.push(v);
    }
    if !current.is_empty() {
        groups.push(current);
    }
}

/// True when any other input row's region intersects the axis-aligned band
/// strictly between `a` and `b`.
fn interposed(a: &VisualSpan, b: &VisualSpan, all: &[&VisualSpan], axis: Axis) -> bool {
    let (gap_lo, gap_hi, side_lo, side_hi) = match axis {
        Axis::Vertical => (
            a.region.y_h,
            b.region.y_l,
            a.region.x_l.min(b.region.x_l),
            a.region.x_h.max(b.region.x_h),
        ),
        Axis::Horizontal => (
            a.region.x_h,
            b.region.x_l,
            a.region.y_l.min(b.region.y_l),
            a.region.y_h.max(b.region.y_h),
        ),
    };
    if gap_lo >= gap_hi {
        return false;
    }
    all.iter().any(|r| {
        if std::ptr::eq(*r, a) || std::ptr::eq(*r, b) {
            return false;
        }
        let (rl, rh, pl, ph) = match axis {
            Axis::Vertical => (r.region.y_l, r.region.y_h, r.region.x_l, r.region.x_h),
            Axis::Horizontal => (r.region.x_l, r.region.x_h, r.region.y_l, r.region.y_h),
        };
        rl < gap_hi && rh > gap_lo && pl <= side_hi && ph >= side_lo
    })
}

// ---------------------------------------------------------------------------
// Region aggregates.

/// The store region of smallest area whose rectangle contains every input
/// rectangle (ties: deepest path, then smallest id), with its own offsets.
pub fn minimal_super_region(
    store: &RegionStore,
    spans: &[VisualSpan],
) -> Result<VisualSpan, AlgebraError> {
    if spans.is_empty() {
        return Err(AlgebraError::EmptyInput);
    }
    let page_id = require_same_page(spans.iter())?.expect("non-empty");
    let page = page_of(store, &page_id)?;
    let mut best: Option<(&StoredRegion, f64)> = None;
    for r in page.regions() {
        if !spans.iter().all(|s| s.region.contained_in(&r.region)) {
            continue;
        }
        let area = r.region.area().expect("store regions are finite");
        let better = match best {
            None => true,
            Some((b, barea)) => {
                area < barea || (area == barea && r.region_id.depth() > b.region_id.depth())
            }
        };
        if better {
            best = Some((r, area));
        }
    }
    match best {
        Some((r, _)) => Ok(r.visual_span()),
        None => {
            let begin = spans.iter().map(|s| s.span.begin).min().unwrap();
            let end = spans.iter().map(|s| s.span.end).max().unwrap();
            Err(AlgebraError::NoCoveringRegion {
                page_id,
                begin,
                end,
            })
        }
    }
}

/// The synthesized min/max hull of the input rectangles; the text span is
/// the merged extent and no source region is attached.
pub fn minimal_bounding_region(spans: &[VisualSpan]) -> Result<VisualSpan, AlgebraError> {
    if spans.is_empty() {
        return Err(AlgebraError::EmptyInput);
    }
    let page_id = require_same_page(spans.iter())?.expect("non-empty");
    let x_l = spans
        .iter()
        .map(|s| s.region.x_l)
        .fold(f64::INFINITY, f64::min);
    let y_l = spans
        .iter()
        .map(|s| s.region.y_l)
        .fold(f64::INFINITY, f64::min);
    let x_h = spans
        .iter()
        .map(|s| s.region.x_h)
        .fold(f64::NEG_INFINITY, f64::max);
    let y_h = spans
        .iter()
        .map(|s| s.region.y_h)
        .fold(f64::NEG_INFINITY, f64::max);
    let begin = spans.iter().map(|s| s.span.begin).min().unwrap();
    let end = spans.iter().map(|s| s.span.end).max().unwrap();
    Ok(VisualSpan {
        page_id,
        span: TextSpan { begin, end },
        region: Region { x_l, y_l, x_h, y_h },
        source_region_id: None,
    })
}

/// Deterministic row ordering shared by the engine and tests.
pub fn cmp_rows(a: &Tuple, b: &Tuple) -> Ordering {
    a.total_cmp(b)
}

#[cfg(test)]
mod tests;
