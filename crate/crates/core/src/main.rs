use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use synlex::coverage::{coverage_report, load_corpus, TagMap};
use synlex::flatfile::{parse_lexicon, serialize_lexicon, serialize_lexicon_as, Severity};
use synlex::lexstore::StoreError;
use synlex::morph::{load_morph, MorphTable};
use synlex::query::{bulk_delete, eval_query, export_results, render_entry, Query};
use synlex::service::{http, Service, DEFAULT_TAGMAP};
use synlex::{Error, OpenMode, Registry, RenderMode, Store};

#[derive(Parser)]
#[command(name = "synlex", version, about = "Build, search and measure a syntactic lexicon")]
struct Cli {
    /// Registry file to use instead of the built-in one.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Verbose,
    Xtag,
}

impl From<Mode> for RenderMode {
    fn from(m: Mode) -> RenderMode {
        match m {
            Mode::Verbose => RenderMode::Verbose,
            Mode::Xtag => RenderMode::Xtag,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Kv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create a store from a flat file.
    Build {
        flat: PathBuf,
        store: PathBuf,
        /// Replace an existing store.
        #[arg(long)]
        force: bool,
    },
    /// Add the entries of a flat file to an existing store.
    Put { store: PathBuf, flat: PathBuf },
    /// Check every record checksum and the index.
    Verify { store: PathBuf },
    /// Rewrite the store without dead records.
    Compact { store: PathBuf },
    /// Entry counts per POS.
    Census {
        store: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Search, e.g. `synlex query lex.db 'POS=Noun FS=wh+'`.
    Query {
        store: PathBuf,
        query: String,
        #[arg(long, value_enum, default_value = "verbose")]
        mode: Mode,
        /// One flat-file line per result instead of display blocks.
        #[arg(long)]
        flat: bool,
    },
    /// Write the results of a query to a flat file.
    Export {
        store: PathBuf,
        query: String,
        dest: PathBuf,
        /// Symbol spelling in the written file; both modes read back.
        #[arg(long, value_enum, default_value = "verbose")]
        mode: Mode,
    },
    /// Write the whole store as a flat file to stdout.
    Dump { store: PathBuf },
    /// Delete every entry matching a query.
    Delete { store: PathBuf, query: String },
    /// Corpus coverage report.
    #[command(alias = "coverage")]
    Stats {
        store: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        morph: PathBuf,
        /// Tag map; defaults to the built-in Penn Treebank map.
        #[arg(long)]
        tagmap: Option<PathBuf>,
        /// Corpus name shown in the report; defaults to the file stem.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
    },
    /// Morph roots that have no entry of their category.
    MissingRoots {
        store: PathBuf,
        #[arg(long)]
        morph: PathBuf,
    },
    /// Serve the JSON API on a local address.
    Serve {
        store: PathBuf,
        #[arg(long)]
        morph: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory `/api/export` may write into.
        #[arg(long)]
        export_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("synlex: {e}");
            ExitCode::FAILURE
        }
    }
}

fn registry(cli_reg: &Option<PathBuf>) -> Result<Option<Arc<Registry>>, Error> {
    Ok(match cli_reg {
        Some(p) => Some(Arc::new(Registry::load(p)?)),
        None => None,
    })
}

fn open(path: &Path, mode: OpenMode, reg: &Option<Arc<Registry>>) -> Result<Store, Error> {
    if mode == OpenMode::ReadWrite && !path.exists() {
        return Err(StoreError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such store (use `build`)"),
        }
        .into());
    }
    Ok(Store::open(path, mode, reg.clone())?)
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

/// Load a flat file into the store; returns (added, skipped).
fn load_flat(store: &mut Store, flat: &Path) -> Result<(usize, usize), Error> {
    let bytes = read(flat)?;
    let (entries, diags) = parse_lexicon(&bytes, store.registry())?;
    let mut skipped = diags.iter().filter(|d| d.severity == Severity::Error).count();
    for d in &diags {
        eprintln!("{}: {d}", flat.display());
    }
    let mut added = 0;
    for e in &entries {
        match store.put(e) {
            Ok(_) => added += 1,
            Err(StoreError::Duplicate(index)) => {
                eprintln!("{}: duplicate entry under '{index}' skipped", flat.display());
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    store.flush()?;
    Ok((added, skipped))
}

fn run(cli: Cli) -> Result<(), Error> {
    let reg = registry(&cli.registry)?;
    match cli.cmd {
        Cmd::Build { flat, store, force } => {
            if store.exists() {
                if !force {
                    return Err(std::io::Error::new(
                        std::io::ErrorKind::AlreadyExists,
                        format!("{} exists (use --force to replace it)", store.display()),
                    )
                    .into());
                }
                std::fs::remove_file(&store)?;
            }
            let mut s = Store::create(&store, reg.unwrap_or_else(Registry::builtin))?;
            let (added, skipped) = load_flat(&mut s, &flat)?;
            s.close()?;
            println!("{added} entries written to {} ({skipped} skipped)", store.display());
        }
        Cmd::Put { store, flat } => {
            let mut s = open(&store, OpenMode::ReadWrite, &reg)?;
            let (added, skipped) = load_flat(&mut s, &flat)?;
            s.close()?;
            println!("{added} entries added ({skipped} skipped)");
        }
        Cmd::Verify { store } => {
            let s = open(&store, OpenMode::ReadOnly, &reg)?;
            let r = s.verify()?;
            println!(
                "ok: {} live entries, {} records ({} puts, {} deletes, {} checkpoints), {} log bytes",
                r.live, r.records, r.puts, r.deletes, r.checkpoints, r.log_bytes
            );
        }
        Cmd::Compact { store } => {
            let mut s = open(&store, OpenMode::ReadWrite, &reg)?;
            let c = s.compact()?;
            s.close()?;
            println!("{} live entries, {} -> {} bytes", c.live, c.bytes_before, c.bytes_after);
        }
        Cmd::Census { store, json } => {
            let census = open(&store, OpenMode::ReadOnly, &reg)?.census()?;
            if json {
                let rows: serde_json::Map<String, serde_json::Value> = census
                    .per_pos
                    .iter()
                    .map(|(p, c)| (p.to_string(), serde_json::json!(c)))
                    .collect();
                println!("{}", serde_json::json!({ "total": census.total, "per_pos": rows }));
            } else {
                println!("{census}");
            }
        }
        Cmd::Query { store, query, mode, flat } => {
            let s = open(&store, OpenMode::ReadOnly, &reg)?;
            let rs = eval_query(&s, &Query::parse(&query)?)?;
            if flat {
                print!("{}", serialize_lexicon_as(&rs.to_entries(), s.registry(), mode.into())?);
            } else {
                for e in rs.entries() {
                    println!("{}", render_entry(e, mode.into(), s.registry()));
                }
            }
            eprintln!("{} entries", rs.len());
        }
        Cmd::Export { store, query, dest, mode } => {
            let s = open(&store, OpenMode::ReadOnly, &reg)?;
            let rs = eval_query(&s, &Query::parse(&query)?)?;
            let n = export_results(&s, &rs, &dest, mode.into())?;
            println!("{n} entries written to {}", dest.display());
        }
        Cmd::Dump { store } => {
            let s = open(&store, OpenMode::ReadOnly, &reg)?;
            print!("{}", serialize_lexicon(&s.scan()?, s.registry())?);
        }
        Cmd::Delete { store, query } => {
            let mut s = open(&store, OpenMode::ReadWrite, &reg)?;
            let rs = eval_query(&s, &Query::parse(&query)?)?;
            let n = bulk_delete(&mut s, &rs)?;
            s.close()?;
            println!("{n} entries deleted");
        }
        Cmd::Stats { store, corpus, morph, tagmap, name, format } => {
            let s = open(&store, OpenMode::ReadOnly, &reg)?;
            let morph = load_morph(&morph)?;
            let tags = match tagmap {
                Some(p) => TagMap::load(p)?,
                None => TagMap::parse(DEFAULT_TAGMAP)?,
            };
            let name = name.unwrap_or_else(|| {
                corpus
                    .file_stem()
                    .map_or("corpus".into(), |s| s.to_string_lossy().into_owned())
            });
            let report = coverage_report(&name, load_corpus(&corpus)?, &s, &morph, &tags)?;
            match format {
                ReportFormat::Table => print!("{}", report.to_table()),
                ReportFormat::Kv => print!("{}", report.to_key_values()),
                ReportFormat::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                ),
            }
        }
        Cmd::MissingRoots { store, morph } => {
            let s = open(&store, OpenMode::ReadOnly, &reg)?;
            for (root, pos) in load_morph(&morph)?.missing_roots(&s)? {
                println!("{root}\t{pos}");
            }
        }
        Cmd::Serve { store, morph, addr, export_dir } => {
            let s = open(&store, OpenMode::ReadWrite, &reg)?;
            let morph = match morph {
                Some(p) => load_morph(p)?,
                None => MorphTable::default(),
            };
            let mut service = Service::new(s, morph);
            if let Some(dir) = export_dir {
                service = service.with_export_dir(dir);
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(Arc::new(service), addr))?;
        }
    }
    Ok(())
}
