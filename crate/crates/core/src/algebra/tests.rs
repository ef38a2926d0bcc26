use super::*;
use crate::error::AlgebraError;
use crate::region::{Region, RegionId, TextSpan, VisualSpan};
use crate::store::tests::input;
use crate::store::RegionStore;

fn rect(x_l: f64, y_l: f64, x_h: f64, y_h: f64) -> Region {
    Region::new(x_l, y_l, x_h, y_h).unwrap()
}

fn vs(page: &str, region: Region, begin: usize, end: usize) -> VisualSpan {
    VisualSpan {
        page_id: page.to_string(),
        span: TextSpan::new(begin, end).unwrap(),
        region,
        source_region_id: None,
    }
}

fn sourced(page: &str, id: &str, region: Region, begin: usize, end: usize) -> VisualSpan {
    VisualSpan {
        source_region_id: Some(id.parse().unwrap()),
        ..vs(page, region, begin, end)
    }
}

fn rel_of(rows: Vec<VisualSpan>) -> Relation {
    let mut rel = Relation::new(vec!["vs".to_string()]).unwrap();
    for row in rows {
        rel.push(crate::region::Tuple::single(row)).unwrap();
    }
    rel
}

fn rows_of(rel: &Relation) -> Vec<VisualSpan> {
    let mut rows: Vec<VisualSpan> = rel.rows().iter().map(|t| t.cells()[0].clone()).collect();
    rows.sort_by(|a, b| a.total_cmp(b));
    rows
}

fn id(s: &str) -> RegionId {
    s.parse().unwrap()
}

// ---------------------------------------------------------------------------
// Extraction.

fn two_region_store() -> RegionStore {
    RegionStore::from_inputs(vec![
        input("p1", "1", (0.0, 0.0, 100.0, 100.0), (0, 5), "", "body"),
        input("p1", "1.1", (10.0, 10.0, 90.0, 30.0), (0, 5), "hello", "div"),
    ])
    .unwrap()
}

#[test]
fn all_spans_one_row_per_region() {
    let store = two_region_store();
    let rel = all_spans(&store, "p1").unwrap();
    assert_eq!(rel.len(), 2);
    assert_eq!(rel.width(), 1);
    assert_eq!(
        all_spans(&store, "nope").unwrap_err(),
        AlgebraError::PageNotFound("nope".to_string())
    );
}

#[test]
fn regex_extract_shifts_matches_into_page_offsets() {
    let store = RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 100.0, 100.0), (100, 108), "", "body"),
        input("p", "1.1", (10.0, 10.0, 90.0, 30.0), (100, 108), "2 GB RAM", "td"),
    ])
    .unwrap();
    let rel = regex_extract(&store, "p", "[0-9]+ ?GB").unwrap();
    assert_eq!(rel.len(), 1);
    let row = &rel.rows()[0].cells()[0];
    assert_eq!((row.span.begin, row.span.end), (100, 104));
    assert_eq!(row.region, rect(10.0, 10.0, 90.0, 30.0));
    assert_eq!(row.source_region_id, Some(id("1.1")));

    // Oracle: the regex crate over the raw text agrees.
    let m = regex::Regex::new("[0-9]+ ?GB").unwrap().find("2 GB RAM").unwrap();
    assert_eq!((100 + m.start(), 100 + m.end()), (100, 104));
}

#[test]
fn regex_extract_no_match_is_empty() {
    let store = two_region_store();
    assert!(regex_extract(&store, "p1", "zz+").unwrap().is_empty());
    assert!(matches!(
        regex_extract(&store, "p1", "["),
        Err(AlgebraError::BadPattern(_))
    ));
}

#[test]
fn regex_extract_two_matches_share_region() {
    let store = RegionStore::from_inputs(vec![input(
        "p",
        "1",
        (0.0, 0.0, 50.0, 20.0),
        (0, 11),
        "a1 b22 c333",
        "div",
    )])
    .unwrap();
    let rel = regex_extract(&store, "p", "[0-9]+").unwrap();
    assert_eq!(rel.len(), 3);
    let rows = rows_of(&rel);
    assert!(rows.iter().all(|r| r.region == rect(0.0, 0.0, 50.0, 20.0)));
    let spans: Vec<(usize, usize)> = rows.iter().map(|r| (r.span.begin, r.span.end)).collect();
    assert_eq!(spans, vec![(1, 2), (4, 6), (8, 11)]);
}

fn dict_store() -> RegionStore {
    let mut store = RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 200.0, 100.0), (0, 21), "", "body"),
        input("p", "1.1", (0.0, 0.0, 100.0, 50.0), (0, 17), "Windows and Linux", "td"),
        input("p", "1.2", (0.0, 50.0, 100.0, 100.0), (17, 21), "FAIX", "td"),
    ])
    .unwrap();
    store.register_dictionary(
        "os",
        crate::store::Dictionary::from_phrases(
            ["Windows", "Linux", "AIX"].iter().map(|s| s.to_string()),
        ),
    );
    store.register_dictionary("empty", crate::store::Dictionary::from_phrases(Vec::new()));
    store
}

#[test]
fn dict_extract_matches_at_token_boundaries() {
    let store = dict_store();
    let rel = dict_extract(&store, "p", "os").unwrap();
    let spans: Vec<(usize, usize)> = rows_of(&rel)
        .iter()
        .map(|r| (r.span.begin, r.span.end))
        .collect();
    // "Windows" at [0,7), "Linux" at [12,17); "AIX" does not match inside
    // "FAIX".
    assert_eq!(spans, vec![(0, 7), (12, 17)]);
}

#[test]
fn dict_extract_empty_dictionary_and_unknown_name() {
    let store = dict_store();
    assert!(dict_extract(&store, "p", "empty").unwrap().is_empty());
    assert_eq!(
        dict_extract(&store, "p", "nope").unwrap_err(),
        AlgebraError::UnknownDictionary("nope".to_string())
    );
}

#[test]
fn phrase_extract_token_semantics() {
    let store = dict_store();
    let rel = phrase_extract(&store, "p", "windows AND linux").unwrap();
    assert_eq!(rel.len(), 1);
    assert_eq!(
        phrase_extract(&store, "p", " .. ").unwrap_err(),
        AlgebraError::EmptyPhrase
    );
}

// ---------------------------------------------------------------------------
// Predicates.

#[test]
fn strict_south_and_east_match_the_requirements_layout() {
    let h = vs("p", rect(100.0, 200.0, 300.0, 220.0), 0, 0);
    let w = vs("p", rect(100.0, 240.0, 300.0, 260.0), 0, 0);
    let r = vs("p", rect(320.0, 240.0, 500.0, 260.0), 0, 0);
    assert!(directional(Direction::South, true, &w, &h).unwrap());
    assert!(directional(Direction::East, true, &r, &w).unwrap());
    // Without strictness the perpendicular containment is not required.
    let off = vs("p", rect(50.0, 240.0, 90.0, 260.0), 0, 0);
    assert!(directional(Direction::South, false, &off, &h).unwrap());
    assert!(!directional(Direction::South, true, &off, &h).unwrap());
}

#[test]
fn directional_requires_same_page() {
    let a = vs("p", rect(0.0, 0.0, 1.0, 1.0), 0, 0);
    let b = vs("q", rect(0.0, 0.0, 1.0, 1.0), 0, 0);
    assert!(matches!(
        directional(Direction::North, false, &a, &b),
        Err(AlgebraError::PageMismatch(_, _))
    ));
    assert!(matches!(
        topo(TopoKind::Contains, &a, &b),
        Err(AlgebraError::PageMismatch(_, _))
    ));
}

#[test]
fn topo_examples() {
    let small = vs("p", rect(10.0, 10.0, 20.0, 20.0), 0, 0);
    let big = vs("p", rect(0.0, 0.0, 100.0, 100.0), 0, 0);
    assert!(topo(TopoKind::Contains, &small, &big).unwrap());
    assert!(!topo(TopoKind::Contains, &big, &small).unwrap());

    let left = vs("p", rect(0.0, 0.0, 10.0, 10.0), 0, 0);
    let right = vs("p", rect(10.0, 0.0, 20.0, 10.0), 0, 0);
    assert!(topo(TopoKind::Touches, &left, &right).unwrap());

    let far = vs("p", rect(20.0, 20.0, 30.0, 30.0), 0, 0);
    assert!(!topo(TopoKind::Intersects, &left, &far).unwrap());
}

#[test]
fn span_predicates() {
    let s = |b, e| TextSpan::new(b, e).unwrap();
    assert!(span_pred(SpanPred::PrecedesWithin(5), s(0, 5), s(7, 12)));
    assert!(!span_pred(SpanPred::PrecedesWithin(1), s(0, 5), s(7, 12)));
    assert!(!span_pred(SpanPred::Overlaps, s(0, 5), s(5, 9)));
    assert!(span_pred(SpanPred::Overlaps, s(0, 5), s(4, 9)));
    assert!(span_pred(SpanPred::Equals, s(3, 8), s(3, 8)));
    assert!(span_pred(SpanPred::StrictlyContains, s(3, 5), s(3, 8)));
    assert!(!span_pred(SpanPred::StrictlyContains, s(3, 8), s(3, 8)));
}

proptest::proptest! {
    #[test]
    fn prop_directional_duality_and_strictness(
        ax in -100i32..100, ay in -100i32..100, aw in 0i32..50, ah in 0i32..50,
        bx in -100i32..100, by in -100i32..100, bw in 0i32..50, bh in 0i32..50,
    ) {
        let a = vs("p", rect(ax as f64, ay as f64, (ax + aw) as f64, (ay + ah) as f64), 0, 0);
        let b = vs("p", rect(bx as f64, by as f64, (bx + bw) as f64, (by + bh) as f64), 0, 0);
        // Non-strict duality is exact. The strict predicates are not dual:
        // the perpendicular containment always binds the first argument, so
        // StrictNorthOf(a, b) pairs with StrictSouthOf(b, a) only when the
        // perpendicular extents coincide.
        proptest::prop_assert_eq!(
            directional(Direction::North, false, &a, &b).unwrap(),
            directional(Direction::South, false, &b, &a).unwrap()
        );
        proptest::prop_assert_eq!(
            directional(Direction::East, false, &a, &b).unwrap(),
            directional(Direction::West, false, &b, &a).unwrap()
        );
        if a.region.x_l == b.region.x_l && a.region.x_h == b.region.x_h {
            proptest::prop_assert_eq!(
                directional(Direction::North, true, &a, &b).unwrap(),
                directional(Direction::South, true, &b, &a).unwrap()
            );
        }
        for dir in [Direction::North, Direction::South, Direction::East, Direction::West] {
            if directional(dir, true, &a, &b).unwrap() {
                proptest::prop_assert!(directional(dir, false, &a, &b).unwrap());
                // Strict implies the non-strict dual as well.
                let dual = match dir {
                    Direction::North => Direction::South,
                    Direction::South => Direction::North,
                    Direction::East => Direction::West,
                    Direction::West => Direction::East,
                };
                proptest::prop_assert!(directional(dual, false, &b, &a).unwrap());
            }
        }
    }

    #[test]
    fn prop_contains_transitivity(
        coords in proptest::collection::vec((-100i32..100, -100i32..100, 0i32..60, 0i32..60), 3)
    ) {
        let r: Vec<VisualSpan> = coords
            .iter()
            .map(|&(x, y, w, h)| vs("p", rect(x as f64, y as f64, (x + w) as f64, (y + h) as f64), 0, 0))
            .collect();
        if topo(TopoKind::Contains, &r[0], &r[1]).unwrap()
            && topo(TopoKind::Contains, &r[1], &r[2]).unwrap()
        {
            proptest::prop_assert!(topo(TopoKind::Contains, &r[0], &r[2]).unwrap());
        }
    }
}

// ---------------------------------------------------------------------------
// Tree navigation.

fn chain_store() -> RegionStore {
    RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 100.0, 100.0), (0, 1), "", "body"),
        input("p", "1.2", (10.0, 10.0, 90.0, 90.0), (0, 1), "", "div"),
        input("p", "1.2.3", (20.0, 20.0, 80.0, 80.0), (0, 1), "x", "span"),
    ])
    .unwrap()
}

#[test]
fn ancestors_and_descendants_follow_id_prefixes() {
    let store = chain_store();
    let leaf = sourced("p", "1.2.3", rect(20.0, 20.0, 80.0, 80.0), 0, 1);
    let anc = ancestors(&store, &leaf).unwrap();
    let ids: Vec<String> = rows_of(&anc)
        .iter()
        .map(|r| r.source_region_id.as_ref().unwrap().to_string())
        .collect();
    assert_eq!(ids, vec!["1".to_string(), "1.2".to_string()]);

    let root = sourced("p", "1", rect(0.0, 0.0, 100.0, 100.0), 0, 1);
    assert!(ancestors(&store, &root).unwrap().is_empty());

    let desc = descendants(&store, &root).unwrap();
    let ids: Vec<String> = rows_of(&desc)
        .iter()
        .map(|r| r.source_region_id.as_ref().unwrap().to_string())
        .collect();
    assert_eq!(ids, vec!["1.2".to_string(), "1.2.3".to_string()]);

    let synth = vs("p", rect(0.0, 0.0, 1.0, 1.0), 0, 0);
    assert_eq!(
        ancestors(&store, &synth).unwrap_err(),
        AlgebraError::SynthesizedRegion
    );
}

#[test]
fn min_max_region_follows_derived_links() {
    let store = chain_store();
    let leaf = sourced("p", "1.2.3", rect(20.0, 20.0, 80.0, 80.0), 0, 1);
    let maximal = min_max_region(&store, &leaf, Which::Maximal).unwrap();
    assert_eq!(maximal.source_region_id, Some(id("1")));
    let minimal = min_max_region(&store, &leaf, Which::Minimal).unwrap();
    assert_eq!(minimal.source_region_id, Some(id("1.2.3")));

    // A region with unique text maps to itself.
    let store2 = dict_store();
    let v = sourced("p", "1.1", rect(0.0, 0.0, 100.0, 50.0), 0, 17);
    assert_eq!(
        min_max_region(&store2, &v, Which::Maximal)
            .unwrap()
            .source_region_id,
        Some(id("1.1"))
    );

    let synth = vs("p", rect(0.0, 0.0, 1.0, 1.0), 0, 0);
    assert_eq!(
        min_max_region(&store, &synth, Which::Minimal).unwrap_err(),
        AlgebraError::SynthesizedRegion
    );
}

// ---------------------------------------------------------------------------
// Consolidation.

#[test]
fn containment_consolidation_drops_dominated_rows() {
    let inner = vs("p", rect(10.0, 10.0, 20.0, 20.0), 5, 10);
    let outer = vs("p", rect(0.0, 0.0, 100.0, 100.0), 0, 20);
    let out = consolidate_containment(&rel_of(vec![inner.clone(), outer.clone()])).unwrap();
    assert_eq!(rows_of(&out), vec![outer.clone()]);

    // Region not contained: both survive.
    let elsewhere = vs("p", rect(50.0, 50.0, 60.0, 60.0), 0, 20);
    let out = consolidate_containment(&rel_of(vec![inner.clone(), elsewhere.clone()])).unwrap();
    assert_eq!(out.len(), 2);

    // Identical rows dedupe to one.
    let out = consolidate_containment(&rel_of(vec![inner.clone(), inner.clone()])).unwrap();
    assert_eq!(rows_of(&out), vec![inner]);
}

#[test]
fn containment_consolidation_checks_width() {
    let a = vs("p", rect(0.0, 0.0, 1.0, 1.0), 0, 1);
    let mut rel = Relation::new(vec!["a".into(), "b".into()]).unwrap();
    rel.push(crate::region::Tuple::new(vec![a.clone(), a]).unwrap())
        .unwrap();
    assert_eq!(
        consolidate_containment(&rel).unwrap_err(),
        AlgebraError::WidthMismatch(2)
    );
}

fn overlap_store() -> RegionStore {
    RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 100.0, 100.0), (0, 10), "", "body"),
        input("p", "1.1", (0.0, 0.0, 100.0, 50.0), (0, 10), "", "div"),
        input("p", "1.1.1", (0.0, 0.0, 50.0, 50.0), (0, 5), "aaaaa", "span"),
        input("p", "1.1.2", (50.0, 0.0, 100.0, 50.0), (5, 10), "bbbbb", "span"),
    ])
    .unwrap()
}

#[test]
fn overlap_consolidation_merges_and_anchors_to_innermost_cover() {
    let store = overlap_store();
    let a = sourced("p", "1.1.1", rect(0.0, 0.0, 50.0, 50.0), 0, 5);
    let b = vs("p", rect(10.0, 0.0, 60.0, 50.0), 3, 9);
    let out = consolidate_overlap(&store, &rel_of(vec![a, b])).unwrap();
    assert_eq!(out.len(), 1);
    let merged = &out.rows()[0].cells()[0];
    assert_eq!((merged.span.begin, merged.span.end), (0, 9));
    // Innermost covering region of [0, 9) is "1.1" (deeper than "1").
    assert_eq!(merged.source_region_id, Some(id("1.1")));
    assert_eq!(merged.region, rect(0.0, 0.0, 100.0, 50.0));
}

#[test]
fn overlap_consolidation_leaves_disjoint_rows_unchanged() {
    let store = overlap_store();
    let a = vs("p", rect(0.0, 0.0, 10.0, 10.0), 0, 2);
    let b = vs("p", rect(20.0, 0.0, 30.0, 10.0), 5, 7);
    let out = consolidate_overlap(&store, &rel_of(vec![a.clone(), b.clone()])).unwrap();
    assert_eq!(rows_of(&out), vec![a.clone(), b]);

    let out = consolidate_overlap(&store, &rel_of(vec![a.clone()])).unwrap();
    assert_eq!(rows_of(&out), vec![a]);
}

#[test]
fn overlap_consolidation_errors_without_cover() {
    let store = overlap_store();
    let a = vs("p", rect(0.0, 0.0, 10.0, 10.0), 0, 9);
    let b = vs("p", rect(0.0, 0.0, 10.0, 10.0), 5, 60);
    assert!(matches!(
        consolidate_overlap(&store, &rel_of(vec![a, b])),
        Err(AlgebraError::NoCoveringRegion { .. })
    ));
}

/// Oracle for overlap components: repeated pairwise merging to a fixpoint.
fn brute_overlap_components(rows: &[VisualSpan]) -> Vec<(usize, usize)> {
    let mut comps: Vec<(TextSpan, usize)> = rows
        .iter()
        .map(|r| (r.span, 1usize))
        .collect();
    loop {
        let mut merged = false;
        'search: for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                if comps[i].0.overlaps(&comps[j].0) {
                    let (sj, nj) = comps.remove(j);
                    let (si, ni) = comps[i];
                    comps[i] = (
                        TextSpan {
                            begin: si.begin.min(sj.begin),
                            end: si.end.max(sj.end),
                        },
                        ni + nj,
                    );
                    merged = true;
                    break 'search;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut out: Vec<(usize, usize)> = comps
        .into_iter()
        .map(|(s, _)| (s.begin, s.end))
        .collect();
    out.sort();
    out
}

proptest::proptest! {
    #[test]
    fn prop_overlap_consolidation_matches_component_oracle(
        spans in proptest::collection::vec((0usize..10, 0usize..6), 1..12)
    ) {
        let store = overlap_store();
        let rows: Vec<VisualSpan> = spans
            .iter()
            .map(|&(b, len)| vs("p", rect(0.0, 0.0, 10.0, 10.0), b, (b + len).min(10)))
            .collect();
        let out = consolidate_overlap(&store, &rel_of(rows.clone())).unwrap();
        let mut got: Vec<(usize, usize)> = out
            .rows()
            .iter()
            .map(|t| (t.cells()[0].span.begin, t.cells()[0].span.end))
            .collect();
        got.sort();
        proptest::prop_assert_eq!(got, brute_overlap_components(&rows));

        // Idempotence and pairwise non-overlap of the result.
        let again = consolidate_overlap(&store, &out).unwrap();
        proptest::prop_assert!(again.multiset_eq(&out));
        let out_rows = rows_of(&out);
        for (i, a) in out_rows.iter().enumerate() {
            for b in out_rows.iter().skip(i + 1) {
                proptest::prop_assert!(!a.span.overlaps(&b.span));
            }
        }
    }

    #[test]
    fn prop_containment_consolidation_idempotent_and_minimal(
        items in proptest::collection::vec((0i32..20, 0i32..20, 0i32..20, 0i32..20, 0usize..8, 0usize..8), 1..10)
    ) {
        let rows: Vec<VisualSpan> = items
            .iter()
            .map(|&(x, y, w, h, b, len)| {
                vs("p", rect(x as f64, y as f64, (x + w) as f64, (y + h) as f64), b, b + len)
            })
            .collect();
        let out = consolidate_containment(&rel_of(rows)).unwrap();
        let again = consolidate_containment(&out).unwrap();
        proptest::prop_assert!(again.multiset_eq(&out));
        let out_rows = rows_of(&out);
        for (i, u) in out_rows.iter().enumerate() {
            for (j, w) in out_rows.iter().enumerate() {
                if i != j {
                    proptest::prop_assert!(
                        !(u.region.contained_in(&w.region) && u.span.contained_in(&w.span))
                            || (w.region.contained_in(&u.region) && w.span.contained_in(&u.span))
                    );
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Block aggregation.

#[test]
fn block_text_merges_runs_within_gap() {
    let store = overlap_store();
    let mk = |b, e| vs("p", rect(0.0, 0.0, 10.0, 10.0), b, e);
    let rel = rel_of(vec![mk(0, 5), mk(7, 10), mk(30, 35)]);
    // Page text covers [0, 10); use covering spans inside it.
    let rel_far = rel_of(vec![mk(0, 5), mk(7, 9), mk(9, 10)]);
    let _ = rel;

    let out = block_text(&store, &rel_far, 5, 2).unwrap();
    assert_eq!(out.len(), 1);
    let block = &out.rows()[0].cells()[0];
    assert_eq!((block.span.begin, block.span.end), (0, 10));
    assert_eq!(block.source_region_id, Some(id("1.1")));

    // max_gap 1 splits after the first span; only the tail run qualifies.
    let out = block_text(&store, &rel_far, 1, 2).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out.rows()[0].cells()[0].span, TextSpan { begin: 7, end: 10 });

    // min_count 1 emits every run.
    let out = block_text(&store, &rel_far, 1, 1).unwrap();
    assert_eq!(out.len(), 2);
}

#[test]
fn block_text_spec_example_runs() {
    // Spans (0,5), (7,12), (30,35) with max_gap 5: one qualifying block
    // (0,12); with max_gap 1: none of min_count 2; with min_count 1 the
    // blocks are (0,12) and (30,35). Store text must cover offset 35.
    let store = RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 100.0, 100.0), (0, 40), "", "body"),
        input(
            "p",
            "1.1",
            (0.0, 0.0, 100.0, 50.0),
            (0, 40),
            "0123456789012345678901234567890123456789",
            "div",
        ),
    ])
    .unwrap();
    let mk = |b, e| vs("p", rect(0.0, 0.0, 10.0, 10.0), b, e);
    let rel = rel_of(vec![mk(0, 5), mk(7, 12), mk(30, 35)]);

    let out = block_text(&store, &rel, 5, 2).unwrap();
    let spans: Vec<(usize, usize)> = out
        .rows()
        .iter()
        .map(|t| (t.cells()[0].span.begin, t.cells()[0].span.end))
        .collect();
    assert_eq!(spans, vec![(0, 12)]);

    assert!(block_text(&store, &rel, 1, 2).unwrap().is_empty());

    let out = block_text(&store, &rel, 5, 1).unwrap();
    let mut spans: Vec<(usize, usize)> = out
        .rows()
        .iter()
        .map(|t| (t.cells()[0].span.begin, t.cells()[0].span.end))
        .collect();
    spans.sort();
    assert_eq!(spans, vec![(0, 12), (30, 35)]);

    // Oracle: a direct sweep over sorted begins.
    let gaps = [(7i64 - 5), (30i64 - 12)];
    assert!(gaps[0] <= 5 && gaps[1] > 5);
}

fn stacked_cells_store() -> RegionStore {
    RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 100.0, 100.0), (0, 9), "", "body"),
        input("p", "1.1", (5.0, 5.0, 95.0, 60.0), (0, 9), "", "table"),
        input("p", "1.1.1", (10.0, 10.0, 90.0, 18.0), (0, 3), "aaa", "td"),
        input("p", "1.1.2", (10.0, 28.0, 90.0, 36.0), (3, 6), "bbb", "td"),
        input("p", "1.1.3", (10.0, 46.0, 90.0, 54.0), (6, 9), "ccc", "td"),
    ])
    .unwrap()
}

#[test]
fn block_region_emits_innermost_qualifying_region() {
    let store = stacked_cells_store();
    let cells: Vec<VisualSpan> = ["1.1.1", "1.1.2", "1.1.3"]
        .iter()
        .enumerate()
        .map(|(i, rid)| {
            let page = store.page("p").unwrap();
            let idx = page.region_index(&id(rid)).unwrap();
            let _ = i;
            page.region(idx).visual_span()
        })
        .collect();
    // Centroid-to-centroid y distance is 18 (< 20); x distance is 0.
    let out = block_region(&store, &rel_of(cells.clone()), 100.0, 20.0, 3).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(
        out.rows()[0].cells()[0].source_region_id,
        Some(id("1.1")),
        "the table qualifies, not its ancestors"
    );

    // Oracle: exhaustive check over every store region.
    let page = store.page("p").unwrap();
    let mut qualifying = Vec::new();
    for r in page.regions() {
        let inside: Vec<&VisualSpan> = cells
            .iter()
            .filter(|c| c.region.contained_in(&r.region))
            .collect();
        if inside.len() >= 3 {
            // Cells are already stacked in (y_l, x_l) order.
            let ok = inside.windows(2).all(|w| {
                let ca = w[0].region.centroid_point().unwrap();
                let cb = w[1].region.centroid_point().unwrap();
                (ca.x_l - cb.x_l).abs() < 100.0 && (ca.y_l - cb.y_l).abs() < 20.0
            });
            if ok {
                qualifying.push(r.region_id.to_string());
            }
        }
    }
    assert_eq!(qualifying, vec!["1".to_string(), "1.1".to_string()]);

    assert!(block_region(&store, &rel_of(cells.clone()), 100.0, 20.0, 5)
        .unwrap()
        .is_empty());
    assert!(block_region(&store, &rel_of(cells), 100.0, 5.0, 3)
        .unwrap()
        .is_empty());
}

// ---------------------------------------------------------------------------
// Alignment grouping.

#[test]
fn aligned_groups_spec_example() {
    let mk = |y_l: f64, y_h: f64| vs("p", rect(100.0, y_l, 220.0, y_h), 0, 0);
    let rel = rel_of(vec![mk(100.0, 120.0), mk(130.0, 150.0), mk(160.0, 180.0)]);
    let spec = AlignmentSpec {
        axis: Axis::Vertical,
        mode: AlignMode::LeadingEdge,
        tolerance: 0.0,
        consecutive: false,
        maxdist: Some(20.0),
        min_group_size: 3,
    };
    let groups = aligned_groups(&rel, &spec).unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].members.len(), 3);
    assert_eq!(groups[0].bounding.region, rect(100.0, 100.0, 220.0, 180.0));

    let tight = AlignmentSpec {
        maxdist: Some(5.0),
        ..spec
    };
    assert!(aligned_groups(&rel, &tight).unwrap().is_empty());
}

#[test]
fn aligned_groups_tolerance_clusters_and_modes() {
    let mk = |x_l: f64, x_h: f64, y: f64| vs("p", rect(x_l, y, x_h, y + 10.0), 0, 0);
    // Leading edges 100, 102, 200: tolerance 3 clusters the first two.
    let rel = rel_of(vec![
        mk(100.0, 150.0, 0.0),
        mk(102.0, 150.0, 20.0),
        mk(200.0, 250.0, 40.0),
    ]);
    let spec = AlignmentSpec {
        tolerance: 3.0,
        min_group_size: 2,
        ..AlignmentSpec::default()
    };
    let groups = aligned_groups(&rel, &spec).unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].members.len(), 2);

    // Trailing edge: all three share x_h = 150 or 250.
    let rel = rel_of(vec![
        mk(100.0, 150.0, 0.0),
        mk(120.0, 150.0, 20.0),
        mk(90.0, 150.0, 40.0),
    ]);
    let spec = AlignmentSpec {
        mode: AlignMode::TrailingEdge,
        min_group_size: 3,
        ..AlignmentSpec::default()
    };
    assert_eq!(aligned_groups(&rel, &spec).unwrap().len(), 1);
}

#[test]
fn aligned_groups_consecutive_splits_on_interposition() {
    let a = vs("p", rect(100.0, 100.0, 200.0, 120.0), 0, 0);
    let b = vs("p", rect(100.0, 160.0, 200.0, 180.0), 0, 0);
    // An interloper overlapping the band between a and b, not aligned with
    // them (different x_l).
    let mid = vs("p", rect(120.0, 130.0, 180.0, 150.0), 0, 0);
    let rel = rel_of(vec![a.clone(), b.clone(), mid.clone()]);
    let spec = AlignmentSpec {
        consecutive: true,
        min_group_size: 2,
        ..AlignmentSpec::default()
    };
    assert!(aligned_groups(&rel, &spec).unwrap().is_empty());

    // Without the consecutive flag the pair groups.
    let spec = AlignmentSpec {
        consecutive: false,
        min_group_size: 2,
        ..AlignmentSpec::default()
    };
    assert_eq!(aligned_groups(&rel, &spec).unwrap().len(), 1);
}

#[test]
fn horizontal_axis_groups_equal_y() {
    let mk = |x: f64| vs("p", rect(x, 50.0, x + 30.0, 70.0), 0, 0);
    let rel = rel_of(vec![mk(0.0), mk(40.0), mk(80.0)]);
    let spec = AlignmentSpec {
        axis: Axis::Horizontal,
        maxdist: Some(15.0),
        min_group_size: 3,
        ..AlignmentSpec::default()
    };
    let groups = aligned_groups(&rel, &spec).unwrap();
    assert_eq!(groups.len(), 1);

    let spec = AlignmentSpec {
        maxdist: Some(5.0),
        ..spec
    };
    assert!(aligned_groups(&rel, &spec).unwrap().is_empty());
}

proptest::proptest! {
    #[test]
    fn prop_groups_share_keys_and_contain_members(
        items in proptest::collection::vec((0i32..12, 0i32..40, 1i32..6), 2..14),
        maxdist in proptest::option::of(0f64..30.0),
        min_size in 2usize..4,
    ) {
        let rows: Vec<VisualSpan> = items
            .iter()
            .map(|&(xq, y, h)| {
                let x = (xq * 10) as f64;
                vs("p", rect(x, y as f64, x + 50.0, (y + h) as f64), 0, 0)
            })
            .collect();
        let spec = AlignmentSpec {
            maxdist,
            min_group_size: min_size,
            ..AlignmentSpec::default()
        };
        let groups = aligned_groups(&rel_of(rows), &spec).unwrap();
        for g in groups {
            proptest::prop_assert!(g.members.len() >= min_size);
            // Leading-edge keys within a group agree exactly with
            // tolerance 0 (keys are multiples of 10).
            let k0 = g.members[0].region.x_l;
            for m in &g.members {
                proptest::prop_assert_eq!(m.region.x_l, k0);
                proptest::prop_assert!(m.region.contained_in(&g.bounding.region));
            }
            if let Some(d) = spec.maxdist {
                for w in g.members.windows(2) {
                    proptest::prop_assert!(w[1].region.y_l - w[0].region.y_h <= d);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Region aggregates.

fn two_tables_store() -> RegionStore {
    RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 200.0, 200.0), (0, 12), "", "body"),
        input("p", "1.1", (10.0, 10.0, 100.0, 100.0), (0, 6), "", "table"),
        input("p", "1.1.1", (20.0, 20.0, 50.0, 50.0), (0, 3), "abc", "td"),
        input("p", "1.1.2", (60.0, 60.0, 90.0, 90.0), (3, 6), "def", "td"),
        input("p", "1.2", (110.0, 110.0, 190.0, 190.0), (6, 12), "", "table"),
        input("p", "1.2.1", (120.0, 120.0, 150.0, 150.0), (6, 9), "ghi", "td"),
        input("p", "1.2.2", (160.0, 160.0, 180.0, 180.0), (9, 12), "jkl", "td"),
    ])
    .unwrap()
}

#[test]
fn minimal_super_region_picks_smallest_covering_store_region() {
    let store = two_tables_store();
    let page = store.page("p").unwrap();
    let span_of = |rid: &str| page.region(page.region_index(&id(rid)).unwrap()).visual_span();

    let cells = vec![span_of("1.1.1"), span_of("1.1.2")];
    assert_eq!(
        minimal_super_region(&store, &cells).unwrap().source_region_id,
        Some(id("1.1"))
    );

    let single = vec![span_of("1.1.1")];
    assert_eq!(
        minimal_super_region(&store, &single).unwrap().source_region_id,
        Some(id("1.1.1"))
    );

    let across = vec![span_of("1.1.1"), span_of("1.2.2")];
    assert_eq!(
        minimal_super_region(&store, &across).unwrap().source_region_id,
        Some(id("1"))
    );

    assert_eq!(
        minimal_super_region(&store, &[]).unwrap_err(),
        AlgebraError::EmptyInput
    );

    // Oracle: exhaustive scan for the smallest covering area.
    let mut best: Option<(f64, String)> = None;
    for r in page.regions() {
        if cells.iter().all(|c| c.region.contained_in(&r.region)) {
            let area = r.region.area().unwrap();
            if best.as_ref().map_or(true, |(a, _)| area < *a) {
                best = Some((area, r.region_id.to_string()));
            }
        }
    }
    assert_eq!(best.unwrap().1, "1.1");
}

#[test]
fn minimal_bounding_region_is_the_hull() {
    let a = vs("p", rect(0.0, 0.0, 10.0, 10.0), 2, 5);
    let b = vs("p", rect(20.0, 5.0, 30.0, 15.0), 7, 9);
    let mbr = minimal_bounding_region(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(mbr.region, rect(0.0, 0.0, 30.0, 15.0));
    assert_eq!((mbr.span.begin, mbr.span.end), (2, 9));
    assert!(mbr.source_region_id.is_none());

    let single = minimal_bounding_region(&[a.clone()]).unwrap();
    assert_eq!(single.region, a.region);

    let nested = minimal_bounding_region(&[
        vs("p", rect(10.0, 10.0, 20.0, 20.0), 0, 1),
        vs("p", rect(0.0, 0.0, 100.0, 100.0), 0, 1),
    ])
    .unwrap();
    assert_eq!(nested.region, rect(0.0, 0.0, 100.0, 100.0));

    assert_eq!(
        minimal_bounding_region(&[]).unwrap_err(),
        AlgebraError::EmptyInput
    );
    assert!(matches!(
        minimal_bounding_region(&[a, vs("q", rect(0.0, 0.0, 1.0, 1.0), 0, 0)]),
        Err(AlgebraError::PageMismatch(_, _))
    ));
}

proptest::proptest! {
    #[test]
    fn prop_mbr_contains_every_member(
        items in proptest::collection::vec((0i32..100, 0i32..100, 1i32..40, 1i32..40), 1..8)
    ) {
        let rows: Vec<VisualSpan> = items
            .iter()
            .map(|&(x, y, w, h)| vs("p", rect(x as f64, y as f64, (x + w) as f64, (y + h) as f64), 0, 0))
            .collect();
        let mbr = minimal_bounding_region(&rows).unwrap();
        for r in &rows {
            proptest::prop_assert!(topo(TopoKind::Contains, r, &mbr).unwrap());
        }
    }
}
