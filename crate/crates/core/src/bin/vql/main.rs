//! Command-line entry point: ingest, index, query, explain, emit-sql,
//! synthetic corpus generation, and the index benchmark harness.
//!
//! Exit codes are stable: 0 success, 1 store/ingest errors, 2 query
//! diagnostics, 3 runtime errors.

mod bench;

use std::collections::BTreeMap;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vql::engine::{self, ExecOptions, IndexSet};
use vql::index::{io as index_io, Indices};
use vql::query::{self, Catalog, Diagnostic};
use vql::store::synth::{default_vocabulary, synth_corpus};
use vql::store::{Dictionary, RegionStore};

#[derive(Parser)]
#[command(
    name = "vql",
    version,
    about = "Layout-aware information extraction over stores of page regions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IndexChoice {
    None,
    Text,
    Region,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a JSONL region store and write its canonical form.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Register a dictionary: NAME=PATH (one phrase per line).
        #[arg(long = "dict")]
        dicts: Vec<String>,
    },
    /// Build the text and region indices and write the sidecar file.
    Index {
        #[arg(long)]
        store: PathBuf,
        /// Defaults to `<store>.idx`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a query against a store.
    Query {
        #[arg(long)]
        store: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value = "all")]
        indices: IndexChoice,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: Format,
        /// Use the naive reference evaluator instead of the optimizer.
        #[arg(long)]
        naive: bool,
        /// Worker threads for page-parallel execution (default: machine
        /// parallelism).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long = "dict")]
        dicts: Vec<String>,
    },
    /// Show the optimized plan for a query.
    Explain {
        #[arg(long)]
        store: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value = "all")]
        indices: IndexChoice,
        #[arg(long = "dict")]
        dicts: Vec<String>,
    },
    /// Translate a query into a single SQL statement over the Regions
    /// schema.
    EmitSql {
        #[command(flatten)]
        query: QueryArgs,
        /// Fail instead of emitting a hybrid statement when an operator has
        /// no SQL form.
        #[arg(long)]
        strict: bool,
        /// Dictionary names assumed to exist: NAME or NAME=PATH.
        #[arg(long = "dict")]
        dicts: Vec<String>,
    },
    /// Generate a deterministic synthetic corpus.
    Gen {
        #[arg(long)]
        pages: usize,
        #[arg(long = "regions-per-page", default_value_t = 200)]
        regions_per_page: usize,
        /// Vocabulary file, one word per line (default: built-in).
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time queries under every index configuration; results must agree
    /// before anything is timed.
    Bench(bench::BenchArgs),
}

#[derive(clap::Args)]
struct QueryArgs {
    /// Query file (UTF-8, one query).
    #[arg(long)]
    query: Option<PathBuf>,
    /// Inline query text.
    #[arg(long = "q")]
    q: Option<String>,
    /// Substitute ${name} placeholders: name=value.
    #[arg(long = "param")]
    params: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn ingest(message: impl Into<String>) -> CliError {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
    fn diagnostics(message: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
    fn runtime(message: impl Into<String>) -> CliError {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Ingest { input, out, dicts } => cmd_ingest(&input, &out, &dicts),
        Cmd::Index { store, out } => cmd_index(&store, out.as_deref()),
        Cmd::Query {
            store,
            query,
            indices,
            format,
            naive,
            threads,
            dicts,
        } => cmd_query(&store, &query, indices, format, naive, threads, &dicts),
        Cmd::Explain {
            store,
            query,
            indices,
            dicts,
        } => cmd_explain(&store, &query, indices, &dicts),
        Cmd::EmitSql {
            query,
            strict,
            dicts,
        } => cmd_emit_sql(&query, strict, &dicts),
        Cmd::Gen {
            pages,
            regions_per_page,
            vocab,
            seed,
            out,
        } => cmd_gen(pages, regions_per_page, vocab.as_deref(), seed, &out),
        Cmd::Bench(args) => bench::run(args),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers.

fn parse_dict_flags(flags: &[String]) -> Result<Vec<(String, Option<PathBuf>)>, CliError> {
    flags
        .iter()
        .map(|flag| match flag.split_once('=') {
            Some((name, path)) => Ok((name.to_string(), Some(PathBuf::from(path)))),
            None => Ok((flag.clone(), None)),
        })
        .collect()
}

fn load_dictionary(path: &Path) -> Result<Dictionary, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::ingest(format!("cannot open dictionary {}: {e}", path.display())))?;
    Dictionary::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::ingest(format!("cannot read dictionary {}: {e}", path.display())))
}

fn dicts_sidecar(store_path: &Path) -> PathBuf {
    let mut os = store_path.as_os_str().to_owned();
    os.push(".dicts");
    PathBuf::from(os)
}

/// Loads a store plus its dictionary sidecar, then applies --dict
/// overrides.
fn load_store(store_path: &Path, dicts: &[String]) -> Result<RegionStore, CliError> {
    let mut store = RegionStore::load_path(store_path)
        .map_err(|e| CliError::ingest(format!("{}: {e}", store_path.display())))?;
    let sidecar = dicts_sidecar(store_path);
    if sidecar.exists() {
        let data = std::fs::read_to_string(&sidecar)
            .map_err(|e| CliError::ingest(format!("{}: {e}", sidecar.display())))?;
        let parsed: BTreeMap<String, Vec<String>> = serde_json::from_str(&data)
            .map_err(|e| CliError::ingest(format!("{}: {e}", sidecar.display())))?;
        for (name, phrases) in parsed {
            store.register_dictionary(name, Dictionary::from_phrases(phrases));
        }
    }
    for (name, path) in parse_dict_flags(dicts)? {
        let path = path.ok_or_else(|| {
            CliError::ingest(format!("--dict {name} needs NAME=PATH when loading a store"))
        })?;
        store.register_dictionary(name, load_dictionary(&path)?);
    }
    Ok(store)
}

fn read_query_text(args: &QueryArgs) -> Result<String, CliError> {
    let raw = match (&args.query, &args.q) {
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| CliError::ingest(format!("{}: {e}", path.display())))?,
        (None, Some(text)) => text.clone(),
        _ => {
            return Err(CliError::diagnostics(
                "pass exactly one of --query FILE or --q TEXT",
            ))
        }
    };
    let mut params = BTreeMap::new();
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
    Ok(query::substitute_params(&raw, &params))
}

fn color_enabled() -> bool {
    match std::env::var("VQL_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

fn render_diagnostics(text: &str, diags: &[Diagnostic]) -> String {
    let color = color_enabled();
    diags
        .iter()
        .map(|d| {
            let line = d.render(text);
            if color {
                format!("\x1b[31m{line}\x1b[0m")
            } else {
                line
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn compile_query(text: &str, catalog: &Catalog) -> Result<vql::engine::TypedQuery, CliError> {
    query::compile(text, catalog)
        .map_err(|diags| CliError::diagnostics(render_diagnostics(text, &diags)))
}

/// Loads the index sidecar when present (failing loudly on mismatch),
/// otherwise builds indices in memory.
fn obtain_indices(
    store_path: &Path,
    store: &RegionStore,
    choice: IndexChoice,
) -> Result<Option<Indices>, CliError> {
    if choice == IndexChoice::None {
        return Ok(None);
    }
    let sidecar = index_io::sidecar_path(store_path);
    if sidecar.exists() {
        let indices = index_io::load_indices(&sidecar, store).map_err(|e| {
            CliError::ingest(format!(
                "{}: {e}; rebuild it with `vql index --store {}`",
                sidecar.display(),
                store_path.display()
            ))
        })?;
        Ok(Some(indices))
    } else {
        Ok(Some(Indices::build(store)))
    }
}

fn index_set<'a>(indices: Option<&'a Indices>, choice: IndexChoice) -> IndexSet<'a> {
    match (indices, choice) {
        (None, _) | (_, IndexChoice::None) => IndexSet::default(),
        (Some(i), IndexChoice::Text) => IndexSet {
            text: Some(&i.text),
            region: None,
        },
        (Some(i), IndexChoice::Region) => IndexSet {
            text: None,
            region: Some(&i.region),
        },
        (Some(i), IndexChoice::All) => IndexSet {
            text: Some(&i.text),
            region: Some(&i.region),
        },
    }
}

// ---------------------------------------------------------------------------
// Subcommands.

fn cmd_ingest(input: &Path, out: &Path, dicts: &[String]) -> Result<(), CliError> {
    let store = RegionStore::load_path(input)
        .map_err(|e| CliError::ingest(format!("{}: {e}", input.display())))?;
    let mut sidecar: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (name, path) in parse_dict_flags(dicts)? {
        let path =
            path.ok_or_else(|| CliError::ingest(format!("--dict {name} needs NAME=PATH")))?;
        let dict = load_dictionary(&path)?;
        sidecar.insert(name, dict.phrases.iter().map(|p| p.raw.clone()).collect());
    }
    store
        .save_path(out)
        .map_err(|e| CliError::ingest(format!("{}: {e}", out.display())))?;
    if !sidecar.is_empty() {
        let path = dicts_sidecar(out);
        std::fs::write(&path, serde_json::to_string_pretty(&sidecar).unwrap())
            .map_err(|e| CliError::ingest(format!("{}: {e}", path.display())))?;
    }
    eprintln!(
        "ingested {} pages, {} regions -> {}",
        store.page_count(),
        store.region_count(),
        out.display()
    );
    Ok(())
}

fn cmd_index(store_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let store = load_store(store_path, &[])?;
    let indices = Indices::build(&store);
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| index_io::sidecar_path(store_path));
    index_io::save_indices(&out, &store, &indices)
        .map_err(|e| CliError::ingest(format!("{}: {e}", out.display())))?;
    eprintln!(
        "indexed {} regions, {} tokens -> {}",
        store.region_count(),
        indices.text.token_count(),
        out.display()
    );
    Ok(())
}

fn cmd_query(
    store_path: &Path,
    query_args: &QueryArgs,
    choice: IndexChoice,
    format: Format,
    naive: bool,
    threads: Option<usize>,
    dicts: &[String],
) -> Result<(), CliError> {
    let store = load_store(store_path, dicts)?;
    let text = read_query_text(query_args)?;
    let tq = compile_query(&text, &Catalog::from_store(&store))?;
    let plan = engine::lower(&tq);
    let result = if naive {
        engine::execute_naive(&plan, &store).map_err(|e| CliError::runtime(e.to_string()))?
    } else {
        let indices = obtain_indices(store_path, &store, choice)?;
        let iset = index_set(indices.as_ref(), choice);
        let phys = engine::optimize(&plan, &store, iset);
        engine::execute(&phys, &store, iset, &ExecOptions { threads })
            .map_err(|e| CliError::runtime(e.to_string()))?
    };
    match format {
        Format::Jsonl => print!("{}", result.to_jsonl(&store)),
        Format::Csv => print!("{}", result.to_csv(&store)),
    }
    Ok(())
}

fn cmd_explain(
    store_path: &Path,
    query_args: &QueryArgs,
    choice: IndexChoice,
    dicts: &[String],
) -> Result<(), CliError> {
    let store = load_store(store_path, dicts)?;
    let text = read_query_text(query_args)?;
    let tq = compile_query(&text, &Catalog::from_store(&store))?;
    let plan = engine::lower(&tq);
    let indices = obtain_indices(store_path, &store, choice)?;
    let iset = index_set(indices.as_ref(), choice);
    let phys = engine::optimize(&plan, &store, iset);
    print!("{}", engine::explain(&phys));
    Ok(())
}

fn cmd_emit_sql(query_args: &QueryArgs, strict: bool, dicts: &[String]) -> Result<(), CliError> {
    let text = read_query_text(query_args)?;
    let names: Vec<String> = parse_dict_flags(dicts)?
        .into_iter()
        .map(|(name, _)| name)
        .collect();
    let tq = compile_query(&text, &Catalog::with_dictionaries(names))?;
    let plan = engine::lower(&tq);
    let sql = if strict {
        vql::sql::emit_strict(&plan)
    } else {
        vql::sql::emit(&plan)
    }
    .map_err(|e| CliError::diagnostics(e.to_string()))?;
    for w in &sql.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", sql.statement);
    Ok(())
}

fn cmd_gen(
    pages: usize,
    regions_per_page: usize,
    vocab: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    if pages == 0 || regions_per_page == 0 {
        return Err(CliError::ingest(
            "--pages and --regions-per-page must be at least 1",
        ));
    }
    let vocabulary = match vocab {
        Some(path) => {
            let data = std::fs::read_to_string(path)
                .map_err(|e| CliError::ingest(format!("{}: {e}", path.display())))?;
            let words: Vec<String> = data
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect();
            if words.is_empty() {
                return Err(CliError::ingest("vocabulary file is empty"));
            }
            words
        }
        None => default_vocabulary(),
    };
    let store = synth_corpus(pages, regions_per_page, &vocabulary, seed);
    store
        .save_path(out)
        .map_err(|e| CliError::ingest(format!("{}: {e}", out.display())))?;
    eprintln!(
        "generated {} pages, {} regions -> {}",
        store.page_count(),
        store.region_count(),
        out.display()
    );
    Ok(())
}
