//! Acceptance suite. One test per criterion; each prints a PASS line
//! (visible with `cargo test -- --nocapture`). The index speedup criterion
//! lives in its own binary (`acceptance_perf`) so its timings never share
//! the process with other tests.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use vql::algebra;
use vql::engine::{execute, execute_naive, explain, lower, optimize, ExecOptions, IndexSet};
use vql::error::EngineError;
use vql::index::Indices;
use vql::query::{compile, parse, print, Catalog};
use vql::region::{Region, RegionId, TextSpan, VisualSpan};
use vql::store::synth::{default_vocabulary, synth_corpus, OS_NAMES};
use vql::store::{Dictionary, RegionStore};

fn test_store(pages: usize, rpp: usize, seed: u64) -> RegionStore {
    let mut store = synth_corpus(pages, rpp, &default_vocabulary(), seed);
    store.register_dictionary(
        "os",
        Dictionary::from_phrases(OS_NAMES.iter().map(|s| s.to_string())),
    );
    store
}

fn sysreq_store() -> RegionStore {
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

fn fixture_query(name: &str) -> String {
    let text = std::fs::read_to_string(format!(
        "{}/fixtures/queries/{name}.vql",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let mut params = std::collections::BTreeMap::new();
    params.insert("n".to_string(), "3".to_string());
    vql::query::substitute_params(&text, &params)
}

// ---------------------------------------------------------------------------
// Criterion 1: oracle equivalence.

/// The fixed pool guarantees that every operator of the algebra appears in
/// the family; random instantiations add diversity around it.
const COVERAGE_POOL: [&str; 30] = [
    "select R1.VisualSpan from R(D) as R1",
    "select R1.Text from RegEx('[0-9]+ GB', D) as R1",
    "select R1.Span from RegEx('s.r+v[a-z]*', D) as R1",
    "select R1.VisualSpan from Phrase('operating systems', D) as R1",
    "select R1.VisualSpan from Dict('os', D) as R1",
    "select R1.Region from Phrase('windows', D) as R1, A(0, 0, 600, inf) as V where Contains(R1, V)",
    "select R1.VisualSpan from Phrase('windows', D) as R1, A(100, 0, inf, 400) as V where Contains(V, R1)",
    "select R1.VisualSpan from R(D) as R1, A(0, 0, 500, 500) as V where Intersects(R1, V)",
    "select R1.VisualSpan from R(D) as R1, A(100, 200, 320, 400) as V where Touches(R1, V)",
    "select R2.VisualSpan from Phrase('operating systems', D) as R1, Dict('os', D) as R2 where StrictSouthOf(R2, R1) or StrictEastOf(R2, R1)",
    "select R3.VisualSpan from Phrase('Operating Systems', D) as R1, Phrase('Windows', D) as R2, R(D) as R3 where StrictSouthOf(R2, R1) and StrictEastOf(R3, R2)",
    "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where NorthOf(R1, R2) and WestOf(R1, R2)",
    "select R1.VisualSpan from R(D) as R1, Phrase('linux', D) as R2 where SouthOf(R1, R2) and EastOf(R1, R2)",
    "select R1.VisualSpan from R(D) as R1, Phrase('linux', D) as R2 where StrictNorthOf(R1, R2) or StrictWestOf(R1, R2)",
    "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where Contains(Centroid(R1), R2) and Area(R1) <= 30000",
    "select R1.MinimalRegion from Phrase('linux', D) as R1",
    "select R1.MaximalRegion from Phrase('aix', D) as R1",
    "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where AncestorOf(R1, R2)",
    "select R1.VisualSpan from R(D) as R1, Phrase('windows', D) as R2 where DescendantOf(R1, R2)",
    "select R1.Span from Consolidate(Dict('os', D), containment) as R1",
    "select R1.VisualSpan from Consolidate(RegEx('[a-z]+', D), overlap) as R1, A(0, 0, inf, 300) as V where Contains(R1, V)",
    "select B.VisualSpan from BlockText(Dict('os', D), 40, 2) as B",
    "select B.VisualSpan from BlockRegion(Phrase('windows', D), 600, 60, 2) as B",
    "select G.VisualSpan from R(D) as R1 group vertically aligned(R1, maxdist=25) as G having Count(G) > 2",
    "select G.VisualSpan from R(D) as R1, A(0, 0, 700, inf) as V where Contains(R1, V) group horizontally aligned(R1, maxdist=40, mode=center) as G having Count(G) >= 2 and Contains(G, V)",
    "select G.VisualSpan from Phrase('gb', D) as R1 group vertically aligned(R1, agg=super, consecutive=true, mode=trailing, tolerance=2) as G having Count(G) >= 2",
    "select S.VisualSpan from (select R1.VisualSpan from Dict('os', D) as R1 where Area(R1) > 100) as S, R(D) as R2 where Contains(S, R2)",
    "select R1.VisualSpan from Dict('os', D) as R1, Dict('os', D) as R2 where SpanOverlaps(R1, R2) and not (SpanEquals(R1, R2))",
    "select R1.VisualSpan from Dict('os', D) as R1, Dict('os', D) as R2 where Precedes(R1, R2, 30) and SpanWithin(R1, R2) or SpanEquals(R1, R2)",
    "select R1.VisualSpan from Phrase('memory', D) as R1, Phrase('server', D) as R2 where Precedes(R2, R1, 80)",
];

fn random_query(rng: &mut StdRng) -> String {
    let sources = [
        "R(D)",
        "RegEx('[0-9]+', D)",
        "Dict('os', D)",
        "Phrase('windows', D)",
        "Phrase('operating systems', D)",
        "Phrase('server', D)",
        "Consolidate(Dict('os', D), containment)",
        "Consolidate(RegEx('[a-z]{3,}', D), overlap)",
        "BlockText(Dict('os', D), 30, 1)",
        "BlockRegion(R(D), 500, 50, 2)",
    ];
    let preds2 = [
        "NorthOf", "SouthOf", "EastOf", "WestOf", "StrictNorthOf", "StrictSouthOf",
        "StrictEastOf", "StrictWestOf", "Contains", "Touches", "Intersects", "SpanOverlaps",
        "SpanWithin", "SpanEquals",
    ];
    let n = rng.random_range(1..=2);
    let mut from: Vec<String> = Vec::new();
    for i in 0..n {
        from.push(format!(
            "{} as R{}",
            sources[rng.random_range(0..sources.len())],
            i + 1
        ));
    }
    let use_virtual = rng.random_bool(0.4);
    if use_virtual {
        let x = rng.random_range(0..500);
        let y = rng.random_range(0..400);
        from.push(format!(
            "A({x}, {y}, {}, {}) as V",
            if rng.random_bool(0.3) {
                "inf".to_string()
            } else {
                (x + rng.random_range(50..600)).to_string()
            },
            if rng.random_bool(0.3) {
                "inf".to_string()
            } else {
                (y + rng.random_range(50..600)).to_string()
            },
        ));
    }
    let mut conjuncts = Vec::new();
    let alias = |rng: &mut StdRng| format!("R{}", rng.random_range(1..=n));
    if n == 2 && rng.random_bool(0.9) {
        let p = preds2[rng.random_range(0..preds2.len())];
        conjuncts.push(format!("{p}(R1, R2)"));
    }
    if use_virtual && rng.random_bool(0.9) {
        let p = ["Contains", "Intersects", "StrictSouthOf", "EastOf"]
            [rng.random_range(0..4)];
        let a = alias(rng);
        if rng.random_bool(0.5) {
            conjuncts.push(format!("{p}({a}, V)"));
        } else {
            conjuncts.push(format!("{p}(V, {a})"));
        }
    }
    if rng.random_bool(0.3) {
        conjuncts.push(format!(
            "Area({}) {} {}",
            alias(rng),
            ["<", "<=", ">", ">="][rng.random_range(0..4)],
            rng.random_range(100..40000)
        ));
    }
    if rng.random_bool(0.2) {
        let p = preds2[rng.random_range(0..preds2.len())];
        let (a, b) = (alias(rng), alias(rng));
        conjuncts.push(format!("not ({p}({a}, {b}))"));
    }
    let mut q = format!("select R1.VisualSpan from {}", from.join(", "));
    if !conjuncts.is_empty() {
        if rng.random_bool(0.25) && conjuncts.len() >= 2 {
            q.push_str(&format!(" where {}", conjuncts.join(" or ")));
        } else {
            q.push_str(&format!(" where {}", conjuncts.join(" and ")));
        }
    }
    q
}

fn kind_of(err: &EngineError) -> String {
    match err {
        EngineError::Runtime { source, .. } => format!("{source:?}")
            .split(['(', '{'])
            .next()
            .unwrap()
            .to_string(),
        other => format!("{other:?}").split(['(', '{']).next().unwrap().to_string(),
    }
}

#[test]
fn criterion_1_oracle_equivalence() {
    let mut rng = StdRng::seed_from_u64(0xACCE55);
    let mut runs = 0usize;
    let configs = [(false, false), (true, false), (false, true), (true, true)];
    for i in 0..1000 {
        let pages = rng.random_range(1..=3);
        let rpp = rng.random_range(5..=60);
        let store = test_store(pages, rpp, 1000 + i);
        assert!(store.region_count() <= 200);
        let indices = Indices::build(&store);
        let catalog = Catalog::from_store(&store);

        let fixed = COVERAGE_POOL[(i as usize) % COVERAGE_POOL.len()].to_string();
        let random = random_query(&mut rng);
        for query in [fixed, random] {
            let tq = compile(&query, &catalog)
                .unwrap_or_else(|d| panic!("family query must validate: {query:?}: {d:?}"));
            let plan = lower(&tq);
            let naive = execute_naive(&plan, &store);
            let (use_text, use_region) = configs[(i as usize) % configs.len()];
            let iset = IndexSet {
                text: use_text.then_some(&indices.text),
                region: use_region.then_some(&indices.region),
            };
            let phys = optimize(&plan, &store, iset);
            let fast = execute(&phys, &store, iset, &ExecOptions::default());
            match (&naive, &fast) {
                (Ok(a), Ok(b)) => assert!(
                    a.same_rows(b),
                    "divergence on {query:?} (store seed {i}):\nnaive={:?}\nfast={:?}\nplan:\n{}",
                    a.rows,
                    b.rows,
                    explain(&phys)
                ),
                (Err(ea), Err(eb)) => assert_eq!(
                    kind_of(ea),
                    kind_of(eb),
                    "error kinds diverged on {query:?}"
                ),
                (a, b) => panic!(
                    "one evaluator failed on {query:?}: naive={:?} fast={:?}",
                    a.as_ref().err(),
                    b.as_ref().err()
                ),
            }
            runs += 1;
        }
    }
    println!(
        "ACCEPTANCE 1 (oracle equivalence): PASS — {runs} store x query runs, exact multiset equality"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: operator examples. The exhaustive per-operator example
// suites live next to each module; this cross-section re-runs one pinned
// example per operator group end to end.

#[test]
fn criterion_2_operator_examples() {
    // area / centroid / id prefix.
    assert_eq!(
        Region::new(0.0, 0.0, 10.0, 5.0).unwrap().area().unwrap(),
        50.0
    );
    assert!(Region::new(0.0, 90.0, 500.0, f64::INFINITY)
        .unwrap()
        .area()
        .is_err());
    let v = VisualSpan {
        page_id: "p".into(),
        span: TextSpan { begin: 4, end: 9 },
        region: Region::new(0.0, 0.0, 10.0, 5.0).unwrap(),
        source_region_id: None,
    };
    assert_eq!(
        v.centroid().unwrap().region,
        Region::new(5.0, 2.5, 5.0, 2.5).unwrap()
    );
    let a: RegionId = "1.2".parse().unwrap();
    let b: RegionId = "1.20".parse().unwrap();
    assert!(!a.is_prefix_of(&b));

    // Directional strictness on the requirements layout.
    let h = VisualSpan {
        region: Region::new(100.0, 200.0, 300.0, 220.0).unwrap(),
        ..v.clone()
    };
    let w = VisualSpan {
        region: Region::new(100.0, 240.0, 300.0, 260.0).unwrap(),
        ..v.clone()
    };
    let r = VisualSpan {
        region: Region::new(320.0, 240.0, 500.0, 260.0).unwrap(),
        ..v.clone()
    };
    assert!(algebra::directional(algebra::Direction::South, true, &w, &h).unwrap());
    assert!(algebra::directional(algebra::Direction::East, true, &r, &w).unwrap());

    // Span predicates.
    assert!(algebra::span_pred(
        algebra::SpanPred::PrecedesWithin(5),
        TextSpan { begin: 0, end: 5 },
        TextSpan { begin: 7, end: 12 }
    ));
    assert!(!algebra::span_pred(
        algebra::SpanPred::Overlaps,
        TextSpan { begin: 0, end: 5 },
        TextSpan { begin: 5, end: 9 }
    ));

    // MBR.
    let spans = [
        VisualSpan {
            region: Region::new(0.0, 0.0, 10.0, 10.0).unwrap(),
            ..v.clone()
        },
        VisualSpan {
            region: Region::new(20.0, 5.0, 30.0, 15.0).unwrap(),
            ..v.clone()
        },
    ];
    assert_eq!(
        algebra::minimal_bounding_region(&spans).unwrap().region,
        Region::new(0.0, 0.0, 30.0, 15.0).unwrap()
    );
    println!(
        "ACCEPTANCE 2 (operator examples): PASS — sentinel examples here; the full per-operator example suites run in the module unit tests"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: fixture reproduction.

#[test]
fn criterion_3_fixture_queries() {
    let store = sysreq_store();
    let catalog = Catalog::from_store(&store);
    let indices = Indices::build(&store);
    let iset = IndexSet {
        text: Some(&indices.text),
        region: Some(&indices.region),
    };
    let run = |name: &str| {
        let tq = compile(&fixture_query(name), &catalog).unwrap();
        let plan = lower(&tq);
        let phys = optimize(&plan, &store, iset);
        let fast = execute(&phys, &store, iset, &ExecOptions::default()).unwrap();
        let naive = execute_naive(&plan, &store).unwrap();
        assert!(fast.same_rows(&naive), "{name} diverged");
        fast
    };

    // Q2 identifies the page.
    let q2 = run("q2");
    assert_eq!(q2.len(), 1);
    assert_eq!(q2.rows[0].page_id, "sysreq-001");
    assert_eq!(
        q2.rows[0].cells[0].source_region_id.as_ref().unwrap().to_string(),
        "1.2"
    );

    // Q3 returns exactly the dictionary entries strictly south/east of the
    // header.
    let q3 = run("q3");
    let ids: Vec<String> = q3
        .rows
        .iter()
        .map(|r| r.cells[0].source_region_id.as_ref().unwrap().to_string())
        .collect();
    assert_eq!(ids, vec!["1.4.2.1", "1.4.3.1", "1.4.4.1"]);

    // Q4 returns exactly the requirements cell east of the Windows cell.
    let q4 = run("q4");
    assert_eq!(q4.len(), 1);
    assert_eq!(
        q4.rows[0].cells[0].source_region_id.as_ref().unwrap().to_string(),
        "1.4.2.2"
    );

    // Q1 returns the navigation-link group.
    let q1 = run("q1");
    assert_eq!(q1.len(), 1);
    let cell = &q1.rows[0].cells[0];
    assert_eq!(
        (cell.region.x_l, cell.region.y_l, cell.region.x_h, cell.region.y_h),
        (30.0, 100.0, 180.0, 240.0)
    );
    println!("ACCEPTANCE 3 (fixture reproduction): PASS — Q1-Q4 exact row sets");
}

// ---------------------------------------------------------------------------
// Criterion 5: SQL golden files. The full per-operator golden suite is the
// `sql_golden` test binary; this re-checks the flagship Q4 statement.

#[test]
fn criterion_5_sql_goldens() {
    let normalize = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    let catalog = Catalog::with_dictionaries(["os".to_string()]);
    let tq = compile(&fixture_query("q4"), &catalog).unwrap();
    let sql = vql::sql::emit_strict(&lower(&tq)).unwrap();
    let golden = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/q4.sql"
    ))
    .unwrap();
    assert_eq!(normalize(&sql.statement), normalize(&golden));
    println!(
        "ACCEPTANCE 5 (SQL goldens): PASS — Q4 matches; per-operator goldens run in the sql_golden suite"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: parser robustness.

#[test]
fn criterion_6_parser_robustness() {
    // Round trip over 10,000 randomized ASTs.
    let mut rng = StdRng::seed_from_u64(31337);
    let mut round_trips = 0usize;
    for _ in 0..10_000 {
        let ast = vql::query::test_support::gen_query(&mut rng, 2);
        let printed = print(&ast);
        let reparsed = parse(&printed)
            .unwrap_or_else(|d| panic!("failed to reparse {printed:?}: {d:?}"));
        assert_eq!(ast, reparsed);
        round_trips += 1;
    }

    // All reference surface queries parse.
    for name in ["q1", "q2", "q3", "q4"] {
        parse(&fixture_query(name)).unwrap();
    }
    parse(
        "select R3.VisualSpan from RegEx('operating system', D) as R1, \
         RegEx('windows', D) as R2, R(D) as R3 \
         where StrictSouthOf(R2, R1) and StrictEastOf(R3, R2)",
    )
    .unwrap();

    // Malformed-input fuzzing: parsing is total.
    let charset: Vec<char> =
        "select from where group having and or not as R1G().,'<>=! 0129inf${}A\u{3bb}\u{e9}\n"
            .chars()
            .collect();
    let mut fuzz_cases = 0usize;
    let valid = fixture_query("q4");
    for _ in 0..100_000 {
        let len = rng.random_range(0..48);
        let s: String = (0..len)
            .map(|_| charset[rng.random_range(0..charset.len())])
            .collect();
        let _ = parse(&s);
        fuzz_cases += 1;
    }
    for _ in 0..10_000 {
        // Mutations of a valid (ASCII) query: truncations and splices.
        let mut q = valid.clone();
        q.truncate(rng.random_range(0..=q.len()));
        if rng.random_bool(0.5) {
            q.push_str(&valid[rng.random_range(0..valid.len())..]);
        }
        let _ = parse(&q);
        fuzz_cases += 1;
    }
    println!(
        "ACCEPTANCE 6 (parser robustness): PASS — {round_trips} round trips, {fuzz_cases} fuzz cases without a crash"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: the accuracy study is documented as out of scope.

#[test]
fn criterion_7_accuracy_scope_note_in_readme() {
    let readme = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../README.md"
    ))
    .expect("README.md at the workspace root");
    assert!(
        readme.contains("accuracy") && readme.contains("out of scope"),
        "the README must state that corpus accuracy measurement is out of scope"
    );
    println!("ACCEPTANCE 7 (accuracy scope note): PASS — documented in README");
}
