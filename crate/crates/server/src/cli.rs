//! The `cgs` command line.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cgs_core::layout::svg::render_svg;
use cgs_core::layout::{layout_graph, Flow, LayoutParams};
use cgs_core::prune::DEFAULT_THRESHOLD;
use cgs_core::synth::{bert_like, generate_corpus, resnet_like, scale_graph, SyntheticSpec};
use cgs_core::visible::stats_csv;
use cgs_core::{build_hierarchy, emit_graph_file, parse_graph_file, IngestError, ProcessedGraph, RawGraph, Session, SessionOptions};

use crate::error::CliError;
use crate::store::{AppState, GraphLibrary};

pub const DEFAULT_PORT: u16 = 8321;

#[derive(Debug, Parser)]
#[command(name = "cgs", version, about = "Simplify, lay out and serve hierarchical computational graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the visible graph, its layout or an SVG for one expansion state.
    Simplify(SimplifyArgs),
    /// Print element counts per expansion depth as CSV.
    Stats(StatsArgs),
    /// Write a synthetic graph file.
    Generate(GenerateArgs),
    /// Serve the HTTP API over a directory of graph files.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ViewArgs {
    /// Split grouping-induced cycles and classify layers.
    #[arg(long)]
    pub cgm: bool,
    /// Do not stack isomorphic siblings.
    #[arg(long)]
    pub no_stacking: bool,
    /// Metanodes with more descendants than this are modules.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: usize,
    /// Smallest group of isomorphic siblings that is stacked.
    #[arg(long, default_value_t = cgs_core::iso::DEFAULT_MIN_REPEAT)]
    pub min_repeat: usize,
}

impl ViewArgs {
    fn options(&self) -> SessionOptions {
        SessionOptions {
            cgm: self.cgm,
            stacking: !self.no_stacking,
            module_threshold: self.threshold,
            min_repeat: self.min_repeat,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FlowArg {
    LeftToRight,
    TopDown,
}

#[derive(Debug, Args)]
pub struct SimplifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Expand every metanode shallower than this depth.
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    /// Additionally expand this metanode and its ancestors; repeatable.
    #[arg(long = "expand", value_name = "PATH")]
    pub expand: Vec<String>,
    #[command(flatten)]
    pub view: ViewArgs,
    /// Visible-graph JSON; printed to stdout when no other output is chosen.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Layout JSON.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Multiplies the SVG's outer size.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_enum, default_value_t = FlowArg::LeftToRight)]
    pub flow: FlowArg,
    /// Print the per-depth statistics up to --depth as CSV.
    #[arg(long)]
    pub stats: bool,
    /// Cycle report JSON.
    #[arg(long, requires = "cgm")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Deepest expansion reported; defaults to the graph's depth.
    #[arg(long)]
    pub depth: Option<usize>,
    #[command(flatten)]
    pub view: ViewArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Preset {
    ResnetLike,
    BertLike,
    Scale,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, required_unless_present = "spec", conflicts_with = "spec")]
    pub preset: Option<Preset>,
    /// JSON list of block specs chained into one corpus.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Encoder layers for bert-like.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Minimum node count for scale.
    #[arg(long, default_value_t = 10_000)]
    pub nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of graph files (`<name>.json`).
    #[arg(long, default_value = ".")]
    pub graphs: PathBuf,
    #[arg(long, env = "CGS_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(display(path), e))
}

fn emit(out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    out.write_all(bytes).map_err(|e| CliError::io("<stdout>", e))
}

/// Reads and groups a graph file. Syntax and schema problems are parse
/// errors; graphs that parse but break the model are semantic errors.
pub fn load_graph(path: &Path) -> Result<ProcessedGraph, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(display(path), e))?;
    let raw = parse_graph_file(&bytes).map_err(|e| match e {
        IngestError::Semantic(m) => CliError::Semantic(format!("{}: {m}", display(path))),
        e => CliError::Parse {
            path: display(path),
            source: e,
        },
    })?;
    Ok(build_hierarchy(&raw)?)
}

/// Expands `path` after opening any collapsed ancestor.
fn expand_with_ancestors(s: &mut Session, path: &str) -> Result<(), CliError> {
    let segments: Vec<&str> = path.split('/').collect();
    for k in 1..=segments.len() {
        let prefix = segments[..k].join("/");
        if !s.is_expanded(&prefix) {
            s.expand(&prefix)?;
        }
    }
    Ok(())
}

fn simplify(a: &SimplifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pg = Arc::new(load_graph(&a.input)?);
    let mut s = Session::new(pg, a.view.options())?;
    if a.stats {
        let rows = s.stats_by_depth(a.depth)?;
        emit(out, stats_csv(&rows).as_bytes())?;
    }
    s.expand_to_depth(a.depth);
    for p in &a.expand {
        expand_with_ancestors(&mut s, p)?;
    }
    let vis = s.derive_visible()?;
    let wants_layout = a.layout.is_some() || a.svg.is_some();
    if let Some(p) = &a.out {
        write_file(p, &vis.to_json())?;
    } else if !wants_layout && !a.stats && a.report.is_none() {
        emit(out, &vis.to_json())?;
    }
    if wants_layout {
        if !(a.scale.is_finite() && a.scale > 0.0) {
            return Err(CliError::Semantic(format!("invalid scale {}", a.scale)));
        }
        let params = LayoutParams {
            flow: match a.flow {
                FlowArg::LeftToRight => Flow::LeftToRight,
                FlowArg::TopDown => Flow::TopDown,
            },
            ..LayoutParams::default()
        };
        let l = layout_graph(&vis, &params)?;
        if let Some(p) = &a.layout {
            write_file(p, &l.to_json())?;
        }
        if let Some(p) = &a.svg {
            write_file(p, render_svg(&l, a.scale).as_bytes())?;
        }
    }
    if let Some(p) = &a.report {
        let mut bytes = serde_json::to_vec_pretty(&vis.cycle_report).expect("report serializes");
        bytes.push(b'\n');
        write_file(p, &bytes)?;
    }
    Ok(())
}

fn stats(a: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pg = Arc::new(load_graph(&a.input)?);
    let depth = a.depth.unwrap_or_else(|| pg.tree.max_depth());
    let s = Session::new(pg, a.view.options())?;
    let csv = stats_csv(&s.stats_by_depth(depth)?);
    match &a.out {
        Some(p) => write_file(p, csv.as_bytes()),
        None => emit(out, csv.as_bytes()),
    }
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let raw: RawGraph = match (a.preset, &a.spec) {
        (Some(Preset::ResnetLike), _) => resnet_like(),
        (Some(Preset::BertLike), _) => bert_like(a.layers),
        (Some(Preset::Scale), _) => scale_graph(a.nodes),
        (None, Some(path)) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(display(path), e))?;
            let specs: Vec<SyntheticSpec> = serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
                path: display(path),
                source: IngestError::Schema {
                    field: "spec".into(),
                    message: e.to_string(),
                },
            })?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("synthetic");
            generate_corpus(name, &specs).map_err(|e| CliError::Semantic(e.to_string()))?
        }
        (None, None) => return Err(CliError::Semantic("either --preset or --spec is required".into())),
    };
    raw.validate()?;
    let bytes = emit_graph_file(&raw);
    match &a.out {
        Some(p) => write_file(p, &bytes),
        None => emit(out, &bytes),
    }
}

fn serve(a: &ServeArgs) -> Result<(), CliError> {
    if !a.graphs.is_dir() {
        return Err(CliError::io(
            display(&a.graphs),
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let state = Arc::new(AppState::new(GraphLibrary::new(&a.graphs)));
    let addr = SocketAddr::new(a.host, a.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io("runtime", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::io(addr.to_string(), e))?;
        eprintln!("cgs: serving {} on http://{addr}", display(&a.graphs));
        axum::serve(listener, crate::api::router(state))
            .await
            .map_err(|e| CliError::io(addr.to_string(), e))
    })
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Simplify(a) => simplify(a, out),
        Command::Stats(a) => stats(a, out),
        Command::Generate(a) => generate(a, out),
        Command::Serve(a) => serve(a),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cgs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
