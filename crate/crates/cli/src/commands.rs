use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use scimap_client::{ClientError, ScimapClient};
use scimap_core::corpus::{read_cache, write_cache, CorpusError, CorpusParser};
use scimap_core::map::{read_map_file, write_json, write_map_file, write_network_file, MapError};
use scimap_core::overlay::default_bandwidth;
use scimap_core::thesaurus::{apply_thesaurus_to, ThesaurusError};
use scimap_core::{
    count_occurrences, density_field, parse_thesaurus, run_pipeline, BibRecord, CorpusSchema, PipelineError, Thesaurus,
};
use serde_json::json;

use crate::{Cli, Command, DensityFormat, PipelineArgs, RemoteAction};

pub const CORPUS_CACHE: &str = "corpus.ndjson";
pub const CLEAN_CACHE: &str = "corpus.clean.ndjson";
pub const TERMS_FILE: &str = "terms.tsv";
pub const MAP_FILE: &str = "map.txt";
pub const NETWORK_FILE: &str = "network.txt";
pub const JSON_FILE: &str = "map.json";
pub const NODES_FILE: &str = "nodes.txt";
pub const EMERGING_FILE: &str = "emerging.tsv";

pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("io", format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::new("corpus", e.to_string())
    }
}

impl From<ThesaurusError> for CliError {
    fn from(e: ThesaurusError) -> Self {
        Self::new("thesaurus", e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        Self::new("map_file", e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        Self::new("remote", e.to_string())
    }
}

/// Prints the one-line JSON error report on stderr.
pub fn report(code: &str, message: &str) {
    eprintln!("{}", json!({ "error": code, "message": message }));
}

fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load_corpus(data_dir: &Path) -> Result<Vec<BibRecord>, CliError> {
    let path = data_dir.join(CORPUS_CACHE);
    if !path.is_file() {
        return Err(CliError::new("no_corpus", format!("{} not found; run `scimap ingest` first", path.display())));
    }
    Ok(read_cache(BufReader::new(open(&path)?))?)
}

fn load_thesaurus(path: Option<&Path>) -> Result<Thesaurus, CliError> {
    match path {
        Some(p) => Ok(parse_thesaurus(open(p)?)?),
        None => Ok(Thesaurus::new()),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Runtime::new().map_err(|e| CliError::new("runtime", e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let dir = cli.data_dir;
    match cli.command {
        Command::Ingest { csv, strict, schema } => ingest(&dir, &csv, strict, schema.as_deref()),
        Command::Clean { thesaurus, unit } => clean(&dir, &thesaurus, unit),
        Command::Map { pipeline } => map(&dir, &pipeline),
        Command::Export { cutoff, density, grid, bandwidth } => export(&dir, cutoff, density, grid as usize, bandwidth),
        Command::Serve { port, pipeline } => serve(&dir, port, &pipeline),
        Command::Synthetic { out, seed, records } => write(&out, scimap_core::synthetic::corpus_csv(seed, records)),
        Command::Remote { url, action } => remote(url, action),
    }
}

fn ingest(dir: &Path, csv: &Path, strict: bool, schema: Option<&Path>) -> Result<(), CliError> {
    let schema = match schema {
        Some(p) => serde_json::from_reader(open(p)?).map_err(|e| CliError::new("schema", format!("{}: {e}", p.display())))?,
        None => CorpusSchema::default(),
    };
    let parsed = CorpusParser::new(schema).strict(strict).parse(open(csv)?)?;
    for row in &parsed.malformed {
        tracing::warn!(line = row.line, message = %row.message, "skipped malformed row");
    }
    ensure_dir(dir)?;
    let mut buf = Vec::new();
    write_cache(&parsed.records, &mut buf)?;
    write(&dir.join(CORPUS_CACHE), buf)?;
    println!(
        "{}",
        json!({
            "records": parsed.records.len(),
            "skipped_without_keywords": parsed.skipped_without_keywords,
            "malformed_rows": parsed.malformed.len(),
            "invalid_years": parsed.invalid_years,
            "unmatched_countries": parsed.unmatched_countries,
        })
    );
    Ok(())
}

fn clean(dir: &Path, thesaurus: &Path, unit: scimap_core::UnitKind) -> Result<(), CliError> {
    let corpus = load_corpus(dir)?;
    let rules = load_thesaurus(Some(thesaurus))?;
    let (records, report) = apply_thesaurus_to(&corpus, &rules, unit);
    let mut buf = Vec::new();
    write_cache(&records, &mut buf)?;
    write(&dir.join(CLEAN_CACHE), buf)?;

    let mut terms: Vec<(String, usize)> = count_occurrences(&records, unit).into_iter().collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut table = String::from("label\toccurrences\n");
    for (label, n) in &terms {
        table.push_str(&format!("{label}\t{n}\n"));
    }
    write(&dir.join(TERMS_FILE), table)?;
    println!(
        "{}",
        json!({
            "records_in": corpus.len(),
            "records_out": records.len(),
            "distinct_terms": terms.len(),
            "merged_labels": report.merged_labels,
            "removed_terms": report.removed_terms,
            "removed_records": report.removed_records,
        })
    );
    Ok(())
}

fn map(dir: &Path, args: &PipelineArgs) -> Result<(), CliError> {
    let corpus = load_corpus(dir)?;
    let rules = load_thesaurus(args.thesaurus.as_deref())?;
    let config = args.config();
    let (records, _) = apply_thesaurus_to(&corpus, &rules, config.unit);
    let out = run_pipeline(&records, &config)?;
    write(&dir.join(MAP_FILE), write_map_file(&out.map))?;
    write(&dir.join(NETWORK_FILE), write_network_file(&out.map))?;
    write(&dir.join(JSON_FILE), write_json(&out.map))?;
    println!(
        "{}",
        json!({
            "records": records.len(),
            "nodes": out.map.nodes.len(),
            "edges": out.map.edges.len(),
            "clusters": out.clusters.cluster_count(),
            "dropped_outside_largest_component": out.dropped.len(),
            "stress": out.layout.stress,
            "layout_converged": out.layout.converged,
        })
    );
    Ok(())
}

fn export(dir: &Path, cutoff: Option<f64>, density: Option<DensityFormat>, grid: usize, bandwidth: Option<f64>) -> Result<(), CliError> {
    let path = dir.join(MAP_FILE);
    if !path.is_file() {
        return Err(CliError::new("no_map", format!("{} not found; run `scimap map` first", path.display())));
    }
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let nodes = read_map_file(&text)?;

    let mut table = String::from("id\tlabel\toccurrences\n");
    for n in &nodes {
        table.push_str(&format!("{}\t{}\t{}\n", n.id, n.label, n.occurrences));
    }
    write(&dir.join(NODES_FILE), table)?;
    let mut summary = json!({ "nodes": nodes.len() });

    if let Some(cutoff) = cutoff {
        let mut emerging: Vec<(&str, f64)> = nodes
            .iter()
            .filter_map(|n| n.avg_pub_date.filter(|&s| s > cutoff).map(|s| (n.label.as_str(), s)))
            .collect();
        emerging.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut report = String::from("label\tscore\n");
        for (label, score) in &emerging {
            report.push_str(&format!("{label}\t{score}\n"));
        }
        write(&dir.join(EMERGING_FILE), report)?;
        summary["cutoff"] = json!(cutoff);
        summary["emerging"] = json!(emerging.len());
    }

    if let Some(format) = density {
        if nodes.is_empty() {
            return Err(CliError::new("empty_map", "map has no nodes"));
        }
        let positions: Vec<_> = nodes.iter().map(|n| [n.x, n.y]).collect();
        let weights: Vec<f64> = nodes.iter().map(|n| n.occurrences as f64).collect();
        let h = bandwidth.unwrap_or_else(|| default_bandwidth(&positions));
        let field = density_field(&positions, &weights, grid, h);
        let target: PathBuf = match format {
            DensityFormat::Pgm => {
                let mut buf = Vec::new();
                field.write_pgm(&mut buf).expect("writing to memory");
                let p = dir.join("density.pgm");
                write(&p, buf)?;
                p
            }
            DensityFormat::Json => {
                let p = dir.join("density.json");
                write(&p, field.to_json().to_string())?;
                p
            }
        };
        summary["density"] = json!(target.display().to_string());
        summary["bandwidth"] = json!(h);
    }
    println!("{summary}");
    Ok(())
}

fn serve(dir: &Path, port: u16, args: &PipelineArgs) -> Result<(), CliError> {
    let corpus = load_corpus(dir)?;
    let rules = load_thesaurus(args.thesaurus.as_deref())?;
    let state = scimap_server::AppState::new(corpus, rules, args.config())?;
    runtime()?.block_on(async move {
        let listener = scimap_server::bind(port).await.map_err(|e| CliError::new("io", format!("bind port {port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::new("io", e.to_string()))?;
        println!("{}", json!({ "listening": format!("http://{addr}") }));
        std::io::stdout().flush().ok();
        scimap_server::serve(listener, Arc::new(state)).await.map_err(|e| CliError::new("io", e.to_string()))
    })
}

fn remote(url: String, action: RemoteAction) -> Result<(), CliError> {
    let client = ScimapClient::new(url);
    runtime()?.block_on(async move {
        let out = match action {
            RemoteAction::Map => client.map_json().await?,
            RemoteAction::Config => json!(client.config().await?).to_string(),
            RemoteAction::Thesaurus => client.thesaurus_tsv().await?,
            RemoteAction::AddRules { file } => {
                let tsv = fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
                json!(client.add_rules(&tsv).await?).to_string()
            }
            RemoteAction::Rebuild => client.rebuild_json().await?,
            RemoteAction::Neighbors { id } => json!(client.neighbors(id).await?).to_string(),
            RemoteAction::Overlay { cutoff } => json!(client.overlay(cutoff).await?).to_string(),
        };
        let mut stdout = std::io::stdout();
        stdout.write_all(out.as_bytes()).ok();
        if !out.ends_with('\n') {
            stdout.write_all(b"\n").ok();
        }
        Ok(())
    })
}
