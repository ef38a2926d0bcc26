//! Benchmark harness: runs each query under the index configurations
//! {none, text, region, all}, asserts result equality across
//! configurations, then reports the median wall time of repeated runs and
//! the speedup against the no-index baseline.

use std::path::PathBuf;
use std::time::Instant;

use vql::engine::{self, ExecOptions, IndexSet};
use vql::index::Indices;
use vql::query::Catalog;
use vql::store::synth::{default_vocabulary, synth_corpus, OS_NAMES};
use vql::store::{Dictionary, RegionStore};

use crate::CliError;

#[derive(clap::Args)]
pub struct BenchArgs {
    /// An existing store to benchmark.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Directory of .vql query files.
    #[arg(long)]
    queries: PathBuf,
    /// Synthetic store sizes (total regions), comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long = "regions-per-page", default_value_t = 200)]
    regions_per_page: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timed runs per configuration (median reported).
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Write the machine-readable report here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long = "dict")]
    dicts: Vec<String>,
    /// Substitute ${name} placeholders in every query: name=value.
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(serde::Serialize)]
struct Record {
    store: String,
    regions: usize,
    query: String,
    config: &'static str,
    rows: usize,
    median_ms: f64,
    runs_ms: Vec<f64>,
    speedup_vs_none: f64,
}

const CONFIGS: [&str; 4] = ["none", "text", "region", "all"];

fn config_set<'a>(indices: &'a Indices, config: &str) -> IndexSet<'a> {
    match config {
        "none" => IndexSet::default(),
        "text" => IndexSet {
            text: Some(&indices.text),
            region: None,
        },
        "region" => IndexSet {
            text: None,
            region: Some(&indices.region),
        },
        _ => IndexSet {
            text: Some(&indices.text),
            region: Some(&indices.region),
        },
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    if args.store.is_none() && args.sizes.is_empty() {
        return Err(CliError::diagnostics(
            "pass --store PATH and/or --sizes N,N to choose benchmark stores",
        ));
    }
    let mut query_files: Vec<PathBuf> = std::fs::read_dir(&args.queries)
        .map_err(|e| CliError::ingest(format!("{}: {e}", args.queries.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "vql"))
        .collect();
    query_files.sort();
    if query_files.is_empty() {
        return Err(CliError::ingest(format!(
            "no .vql files in {}",
            args.queries.display()
        )));
    }

    let mut params = std::collections::BTreeMap::new();
    for p in &args.params {
        match p.split_once('=') {
            Some((k, v)) => {
                params.insert(k.to_string(), v.to_string());
            }
            None => {
                return Err(CliError::diagnostics(format!(
                    "--param {p} is not of the form name=value"
                )))
            }
        }
    }

    let mut stores: Vec<(String, RegionStore)> = Vec::new();
    if let Some(path) = &args.store {
        let store = crate::load_store(path, &args.dicts)?;
        stores.push((path.display().to_string(), store));
    }
    for &size in &args.sizes {
        let rpp = args.regions_per_page.max(1);
        let pages = size.div_ceil(rpp).max(1);
        let mut store = synth_corpus(pages, rpp, &default_vocabulary(), args.seed);
        store.register_dictionary(
            "os",
            Dictionary::from_phrases(OS_NAMES.iter().map(|s| s.to_string())),
        );
        stores.push((format!("synth-{size}"), store));
    }

    let mut records: Vec<Record> = Vec::new();
    for (store_name, store) in &stores {
        eprintln!(
            "bench: building indices for {store_name} ({} regions)",
            store.region_count()
        );
        let indices = Indices::build(store);
        let catalog = Catalog::from_store(store);
        for file in &query_files {
            let raw = std::fs::read_to_string(file)
                .map_err(|e| CliError::ingest(format!("{}: {e}", file.display())))?;
            let text = vql::query::substitute_params(&raw, &params);
            let tq = crate::compile_query(&text, &catalog)?;
            let plan = engine::lower(&tq);
            let qname = file
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default();

            // Correctness precedes timing: every configuration must agree.
            let mut baseline = None;
            for config in CONFIGS {
                let iset = config_set(&indices, config);
                let phys = engine::optimize(&plan, store, iset);
                let result = engine::execute(
                    &phys,
                    store,
                    iset,
                    &ExecOptions {
                        threads: args.threads,
                    },
                )
                .map_err(|e| CliError::runtime(format!("{qname} [{config}]: {e}")))?;
                match &baseline {
                    None => baseline = Some(result),
                    Some(b) => {
                        if !b.same_rows(&result) {
                            return Err(CliError::runtime(format!(
                                "{qname}: configuration {config} returned {} rows but the baseline returned {}; refusing to time diverging configurations",
                                result.len(),
                                b.len()
                            )));
                        }
                    }
                }
            }
            let rows = baseline.map(|b| b.len()).unwrap_or(0);

            let mut medians = [0.0f64; 4];
            for (ci, config) in CONFIGS.iter().enumerate() {
                let iset = config_set(&indices, config);
                let mut runs_ms = Vec::with_capacity(args.runs);
                for _ in 0..args.runs.max(1) {
                    let start = Instant::now();
                    let phys = engine::optimize(&plan, store, iset);
                    let result = engine::execute(
                        &phys,
                        store,
                        iset,
                        &ExecOptions {
                            threads: args.threads,
                        },
                    )
                    .map_err(|e| CliError::runtime(format!("{qname} [{config}]: {e}")))?;
                    let elapsed = start.elapsed().as_secs_f64() * 1e3;
                    std::hint::black_box(result.len());
                    runs_ms.push(elapsed);
                }
                let med = median(runs_ms.clone());
                medians[ci] = med;
                records.push(Record {
                    store: store_name.clone(),
                    regions: store.region_count(),
                    query: qname.clone(),
                    config,
                    rows,
                    median_ms: med,
                    runs_ms,
                    speedup_vs_none: 0.0,
                });
            }
            let base = medians[0];
            for (ci, _) in CONFIGS.iter().enumerate() {
                let idx = records.len() - 4 + ci;
                records[idx].speedup_vs_none = if medians[ci] > 0.0 {
                    base / medians[ci]
                } else {
                    f64::INFINITY
                };
            }
        }
    }

    println!(
        "{:<16} {:>9} {:<10} {:<7} {:>8} {:>12} {:>9}",
        "store", "regions", "query", "config", "rows", "median_ms", "speedup"
    );
    for r in &records {
        println!(
            "{:<16} {:>9} {:<10} {:<7} {:>8} {:>12.3} {:>8.2}x",
            r.store, r.regions, r.query, r.config, r.rows, r.median_ms, r.speedup_vs_none
        );
    }
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&records).unwrap())
            .map_err(|e| CliError::ingest(format!("{}: {e}", path.display())))?;
        eprintln!("bench: wrote {}", path.display());
    }
    Ok(())
}
