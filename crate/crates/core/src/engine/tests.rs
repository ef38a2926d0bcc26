use super::exec::{execute, ExecOptions};
use super::explain::explain;
use super::logical::{lower, LogicalPlan};
use super::naive::execute_naive;
use super::optimize::{optimize, IndexSet};
use super::result::ResultSet;
use crate::index::Indices;
use crate::query::{compile, Catalog};
use crate::region::RegionId;
use crate::store::synth::{default_vocabulary, synth_corpus};
use crate::store::{Dictionary, RegionStore};

pub(crate) fn sysreq_store() -> RegionStore {
    let mut store = RegionStore::load_path(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/sysreq.jsonl"
    ))
    .unwrap();
    let dict = Dictionary::from_reader(std::io::BufReader::new(
        std::fs::File::open(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/os.dict")).unwrap(),
    ))
    .unwrap();
    store.register_dictionary("os", dict);
    store
}

pub(crate) fn fixture_query(name: &str) -> String {
    let path = format!(
        "{}/fixtures/queries/{name}.vql",
        env!("CARGO_MANIFEST_DIR")
    );
    let text = std::fs::read_to_string(path).unwrap();
    let mut params = std::collections::BTreeMap::new();
    params.insert("n".to_string(), "3".to_string());
    crate::query::substitute_params(&text, &params)
}

/// Runs the query through the naive evaluator and through the optimizer
/// under every index configuration, asserting all agree.
pub(crate) fn assert_equiv(store: &RegionStore, query: &str) -> ResultSet {
    let catalog = Catalog::from_store(store);
    let tq = compile(query, &catalog).unwrap_or_else(|d| panic!("compile {query:?}: {d:?}"));
    let plan = lower(&tq);
    let naive = execute_naive(&plan, store).unwrap();
    let indices = Indices::build(store);
    for (use_text, use_region) in [(false, false), (true, false), (false, true), (true, true)] {
        let iset = IndexSet {
            text: use_text.then_some(&indices.text),
            region: use_region.then_some(&indices.region),
        };
        let phys = optimize(&plan, store, iset);
        let got = execute(&phys, store, iset, &ExecOptions::default()).unwrap();
        assert!(
            naive.same_rows(&got),
            "config text={use_text} region={use_region} diverged for {query:?}:\nnaive={:?}\ngot={:?}\nplan:\n{}",
            naive.rows,
            got.rows,
            explain(&phys),
        );
    }
    naive
}

fn id(s: &str) -> RegionId {
    s.parse().unwrap()
}

// ---------------------------------------------------------------------------
// Lowering shapes.

#[test]
fn q4_lowers_to_selects_over_a_three_way_product() {
    let store = sysreq_store();
    let tq = compile(&fixture_query("q4"), &Catalog::from_store(&store)).unwrap();
    let plan = lower(&tq);
    let LogicalPlan::Project { input, .. } = &plan else {
        panic!("expected a projection root");
    };
    let LogicalPlan::Select { input, .. } = input.as_ref() else {
        panic!("expected a select chain");
    };
    let LogicalPlan::Select { input, .. } = input.as_ref() else {
        panic!("expected two selects");
    };
    let LogicalPlan::Product { inputs } = input.as_ref() else {
        panic!("expected a product");
    };
    assert_eq!(inputs.len(), 3);
}

#[test]
fn single_source_query_lowers_without_product() {
    let store = sysreq_store();
    let tq = compile(
        "select R1.VisualSpan from R(D) as R1",
        &Catalog::from_store(&store),
    )
    .unwrap();
    let plan = lower(&tq);
    let LogicalPlan::Project { input, .. } = &plan else {
        panic!("expected projection");
    };
    assert!(matches!(input.as_ref(), LogicalPlan::Scan { .. }));
}

#[test]
fn q1_lowers_to_group_aggregate_select() {
    let store = sysreq_store();
    let tq = compile(&fixture_query("q1"), &Catalog::from_store(&store)).unwrap();
    let plan = lower(&tq);
    // Expected tree: Project(Select(Aggregate(Group(Scan)))); the virtual
    // region folds into the select as a constant.
    let LogicalPlan::Project { input, .. } = &plan else {
        panic!("expected projection");
    };
    let LogicalPlan::Select { input, .. } = input.as_ref() else {
        panic!("expected the having residual select");
    };
    let LogicalPlan::Aggregate { input, .. } = input.as_ref() else {
        panic!("expected aggregate");
    };
    let LogicalPlan::Group { input, spec, .. } = input.as_ref() else {
        panic!("expected group");
    };
    assert_eq!(spec.min_group_size, 4, "Count(G) > 3 folds to min size 4");
    assert!(matches!(input.as_ref(), LogicalPlan::Scan { .. }));
}

// ---------------------------------------------------------------------------
// Fixture reproduction.

#[test]
fn q2_identifies_the_requirements_page() {
    let store = sysreq_store();
    let rs = assert_equiv(&store, &fixture_query("q2"));
    assert_eq!(rs.len(), 1);
    assert_eq!(rs.rows[0].page_id, "sysreq-001");
    assert_eq!(rs.rows[0].cells[0].source_region_id, Some(id("1.2")));
}

#[test]
fn q3_returns_exactly_the_operating_systems_south_of_the_header() {
    let store = sysreq_store();
    let rs = assert_equiv(&store, &fixture_query("q3"));
    let got: Vec<(String, usize, usize)> = rs
        .rows
        .iter()
        .map(|r| {
            (
                r.cells[0].source_region_id.as_ref().unwrap().to_string(),
                r.cells[0].span.begin,
                r.cells[0].span.end,
            )
        })
        .collect();
    assert_eq!(
        got,
        vec![
            ("1.4.2.1".to_string(), 127, 136), // "Windows 7"
            ("1.4.3.1".to_string(), 170, 175), // "Linux"
            ("1.4.4.1".to_string(), 191, 194), // "AIX"
        ]
    );
}

#[test]
fn q4_returns_exactly_the_requirements_cell_east_of_windows() {
    let store = sysreq_store();
    let rs = assert_equiv(&store, &fixture_query("q4"));
    assert_eq!(rs.len(), 1);
    let cell = &rs.rows[0].cells[0];
    assert_eq!(cell.source_region_id, Some(id("1.4.2.2")));
    assert_eq!(
        store
            .page("sysreq-001")
            .unwrap()
            .slice_text(cell.span.begin, cell.span.end),
        "2 GB RAM, 1 GHz processor"
    );
}

#[test]
fn q1_returns_the_navigation_group() {
    let store = sysreq_store();
    let rs = assert_equiv(&store, &fixture_query("q1"));
    assert_eq!(rs.len(), 1);
    let cell = &rs.rows[0].cells[0];
    assert!(cell.source_region_id.is_none(), "the group row is a bounding box");
    assert_eq!(
        (cell.region.x_l, cell.region.y_l, cell.region.x_h, cell.region.y_h),
        (30.0, 100.0, 180.0, 240.0)
    );
    assert_eq!((cell.span.begin, cell.span.end), (51, 90));
}

#[test]
fn q1_prefilter_form_finds_nav_and_table_columns() {
    // The filter-first variant applies the virtual region before grouping;
    // on this fixture the nav links and both fully-inside table columns
    // survive differently than in the group-first form.
    let store = sysreq_store();
    let rs = assert_equiv(
        &store,
        "select G.VisualSpan from R(D) as R1, A(0, 90, 500, inf) as V \
         where Contains(R1, V) \
         group vertically aligned(R1, consecutive=false, maxdist=20) as G \
         having Count(G) > 3",
    );
    let rects: Vec<(f64, f64, f64, f64)> = rs
        .rows
        .iter()
        .map(|r| {
            let c = &r.cells[0].region;
            (c.x_l, c.y_l, c.x_h, c.y_h)
        })
        .collect();
    assert_eq!(
        rects,
        vec![
            (30.0, 100.0, 180.0, 240.0),  // nav links
            (100.0, 200.0, 300.0, 340.0), // OS column incl. header
        ]
    );
}

#[test]
fn empty_store_yields_empty_results() {
    let store = RegionStore::from_inputs(vec![]).unwrap();
    let rs = assert_equiv(&store, "select R1.VisualSpan from R(D) as R1");
    assert!(rs.is_empty());
}

// ---------------------------------------------------------------------------
// Optimizer correctness across operators on synthetic stores.

#[test]
fn optimized_execution_matches_naive_across_operators() {
    let mut store = synth_corpus(4, 60, &default_vocabulary(), 5);
    store.register_dictionary(
        "os",
        Dictionary::from_phrases(
            ["Windows 7", "Linux", "AIX", "Solaris"]
                .iter()
                .map(|s| s.to_string()),
        ),
    );
    let queries = [
        "select R1.VisualSpan from R(D) as R1",
        "select R1.Text from RegEx('[0-9]+ GB', D) as R1",
        "select R1.VisualSpan from Phrase('operating systems', D) as R1",
        "select R1.VisualSpan from Dict('os', D) as R1",
        "select R1.VisualSpan from Phrase('windows', D) as R1, A(0, 0, 600, inf) as V where Contains(R1, V)",
        "select R2.VisualSpan from Phrase('operating systems', D) as R1, Dict('os', D) as R2 where StrictSouthOf(R2, R1) or StrictEastOf(R2, R1)",
        "select R3.VisualSpan from Phrase('Operating Systems', D) as R1, Phrase('Windows', D) as R2, R(D) as R3 where StrictSouthOf(R2, R1) and StrictEastOf(R3, R2)",
        "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where NorthOf(R1, R2) and Intersects(R1, R2)",
        "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where Touches(R1, R2)",
        "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where WestOf(Centroid(R1), R2) and Area(R1) <= 20000",
        "select R1.MinimalRegion from Phrase('linux', D) as R1",
        "select R1.MaximalRegion from Phrase('linux', D) as R1",
        "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where AncestorOf(R1, R2)",
        "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where DescendantOf(R1, R2)",
        "select R1.Span from Consolidate(Dict('os', D), containment) as R1",
        "select R1.VisualSpan from Consolidate(RegEx('[a-z]+', D), overlap) as R1, A(0, 0, inf, 200) as V where Contains(R1, V)",
        "select B.VisualSpan from BlockText(Dict('os', D), 40, 2) as B",
        "select B.VisualSpan from BlockRegion(Phrase('windows', D), 600, 60, 2) as B",
        "select G.VisualSpan from R(D) as R1 group vertically aligned(R1, maxdist=25) as G having Count(G) > 2",
        "select G.VisualSpan from R(D) as R1, A(0, 0, 700, inf) as V where Contains(R1, V) group horizontally aligned(R1, maxdist=40, mode=center) as G having Count(G) >= 2 and Contains(G, V)",
        "select G.VisualSpan from Phrase('gb', D) as R1 group vertically aligned(R1, agg=super, consecutive=true) as G having Count(G) >= 2",
        "select S.VisualSpan from (select R1.VisualSpan from Dict('os', D) as R1 where Area(R1) > 100) as S, R(D) as R2 where Contains(S, R2)",
        "select R1.VisualSpan from Dict('os', D) as R1, Dict('os', D) as R2 where SpanOverlaps(R1, R2) and not (SpanEquals(R1, R2))",
        "select R1.VisualSpan from Dict('os', D) as R1, Dict('os', D) as R2 where Precedes(R1, R2, 30) and SpanWithin(R1, R2) or SpanEquals(R1, R2)",
    ];
    for q in queries {
        assert_equiv(&store, q);
    }
}

#[test]
fn page_parallel_execution_matches_sequential() {
    let store = synth_corpus(6, 50, &default_vocabulary(), 9);
    let catalog = Catalog::from_store(&store);
    let tq = compile(
        "select R3.VisualSpan from Phrase('Operating Systems', D) as R1, Phrase('Windows', D) as R2, R(D) as R3 where StrictSouthOf(R2, R1) and StrictEastOf(R3, R2)",
        &catalog,
    )
    .unwrap();
    let plan = lower(&tq);
    let indices = Indices::build(&store);
    let iset = IndexSet {
        text: Some(&indices.text),
        region: Some(&indices.region),
    };
    let phys = optimize(&plan, &store, iset);
    let sequential = execute(&phys, &store, iset, &ExecOptions { threads: Some(1) }).unwrap();
    let parallel = execute(&phys, &store, iset, &ExecOptions { threads: Some(4) }).unwrap();
    assert_eq!(sequential, parallel);
}

#[test]
fn multi_root_pages_evaluate_consistently() {
    // Pages may carry several root regions; extraction spans never cross
    // them and both evaluators agree.
    use crate::store::tests::input;
    let store = RegionStore::from_inputs(vec![
        input("p", "1", (0.0, 0.0, 50.0, 50.0), (0, 5), "aaaaa", "div"),
        input("p", "2", (50.0, 0.0, 100.0, 50.0), (5, 10), "bbbbb", "div"),
    ])
    .unwrap();
    let rs = assert_equiv(
        &store,
        "select R1.VisualSpan from Consolidate(RegEx('a+|b+', D), overlap) as R1",
    );
    assert_eq!(rs.len(), 2, "per-region matches never cross roots");
}

#[test]
fn explain_reports_access_paths() {
    let store = sysreq_store();
    let catalog = Catalog::from_store(&store);
    let tq = compile(&fixture_query("q2"), &catalog).unwrap();
    let plan = lower(&tq);
    let indices = Indices::build(&store);

    let with = IndexSet {
        text: Some(&indices.text),
        region: Some(&indices.region),
    };
    let rendered = explain(&optimize(&plan, &store, with));
    assert!(rendered.contains("text_index"), "got:\n{rendered}");
    assert!(rendered.contains("bounds="), "region filter folded: {rendered}");

    let without = IndexSet::default();
    let rendered = explain(&optimize(&plan, &store, without));
    assert!(rendered.contains("full_scan"), "got:\n{rendered}");

    // Deterministic rendering.
    assert_eq!(
        explain(&optimize(&plan, &store, with)),
        explain(&optimize(&plan, &store, with))
    );
}

#[test]
fn q4_plan_uses_an_index_probe_join() {
    let store = sysreq_store();
    let catalog = Catalog::from_store(&store);
    let tq = compile(&fixture_query("q4"), &catalog).unwrap();
    let plan = lower(&tq);
    let indices = Indices::build(&store);
    let iset = IndexSet {
        text: Some(&indices.text),
        region: Some(&indices.region),
    };
    let rendered = explain(&optimize(&plan, &store, iset));
    assert!(
        rendered.contains("index_nested_loop"),
        "expected a probe join for the AllSpans side:\n{rendered}"
    );
}

#[test]
fn result_serialization_is_deterministic_and_typed() {
    let store = sysreq_store();
    let rs = assert_equiv(&store, &fixture_query("q4"));
    let jsonl = rs.to_jsonl(&store);
    assert_eq!(jsonl, rs.to_jsonl(&store));
    let line: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(line["page_id"], "sysreq-001");
    assert_eq!(line["cols"][0]["region_id"], "1.4.2.2");
    assert_eq!(line["cols"][0]["text"], "2 GB RAM, 1 GHz processor");

    let csv = rs.to_csv(&store);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "page_id,R3.VisualSpan.region_id,R3.VisualSpan.xl,R3.VisualSpan.yl,R3.VisualSpan.xh,R3.VisualSpan.yh,R3.VisualSpan.begin,R3.VisualSpan.end,R3.VisualSpan.text"
    );
    assert!(lines.next().unwrap().contains("\"2 GB RAM, 1 GHz processor\""));
}

#[test]
fn unbound_extern_parameters_fail_at_runtime() {
    use super::logical::{ArgExpr, Pred, PredOp, ScanSource};
    let store = sysreq_store();
    let plan = LogicalPlan::Select {
        input: Box::new(LogicalPlan::Scan {
            source: ScanSource::AllSpans,
            alias: "R1".to_string(),
        }),
        pred: Pred::Call {
            op: PredOp::IsPrefixOf,
            args: vec![ArgExpr::Col(0), ArgExpr::Extern("v".to_string())],
        },
    };
    match execute_naive(&plan, &store) {
        Err(crate::error::EngineError::UnboundParam(name)) => assert_eq!(name, "v"),
        other => panic!("expected an unbound parameter error, got {other:?}"),
    }
}
