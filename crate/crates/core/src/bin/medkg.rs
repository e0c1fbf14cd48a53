use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use medkg::kgraph::NodeKind;
use medkg::pipeline::{self, Analysis, PipelineConfig, ReportFormat};
use medkg::{Error, Result};

/// Extract drugs, posology, reasons and adverse events from clinical notes
/// and organize them as a knowledge graph.
#[derive(Parser)]
#[command(name = "medkg", version)]
struct Cli {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_seq_len: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    /// Probability at which a candidate pair counts as related.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Report format for analyze (json, text) or export format (cypher, graphml, jsonl).
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic annotated corpus in standoff format.
    GenerateCorpus {
        #[arg(long)]
        n_docs: Option<usize>,
    },
    /// Train the entity tagger and report held-out scores.
    TrainNer {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train the relation classifier and report held-out scores.
    TrainRe {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Run coreference, tagging and relation classification over notes.
    Extract {
        /// A `.txt` note or a directory of them.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        ner_model: Option<PathBuf>,
        #[arg(long)]
        re_model: Option<PathBuf>,
    },
    /// Build and validate the knowledge graph from extractions.
    BuildGraph {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Lines of `doc_id patient_id`; unmapped notes are their own patient.
        #[arg(long)]
        patients: Option<PathBuf>,
    },
    /// Run a graph analysis: degree, components, communities or drug-ade.
    Analyze {
        analysis: String,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Node kind(s): the ranked kind for degree, the subgraph for components.
        #[arg(long, value_delimiter = ',')]
        kind: Vec<String>,
        /// Edge label whose subgraph communities are detected in.
        #[arg(long)]
        edge_label: Option<String>,
        /// ADE count above which a drug is flagged.
        #[arg(long)]
        watch_threshold: Option<usize>,
    },
    /// Serialize the graph as Cypher, GraphML or JSONL.
    Export {
        #[arg(long)]
        graph: Option<PathBuf>,
    },
}

fn out_path(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref().ok_or_else(|| Error::Usage("missing --out".into()))
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    let or = |flag: Option<usize>, v: usize| flag.unwrap_or(v);
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.max_seq_len = or(cli.max_seq_len, cfg.max_seq_len);
    cfg.epochs = or(cli.epochs, cfg.epochs);
    cfg.batch_size = or(cli.batch_size, cfg.batch_size);
    cfg.threshold = cli.threshold.unwrap_or(cfg.threshold);
    let set = |slot: &mut Option<PathBuf>, flag: &Option<PathBuf>| {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    };
    match &cli.command {
        Command::GenerateCorpus { n_docs } => cfg.n_docs = n_docs.unwrap_or(cfg.n_docs),
        Command::TrainNer { corpus } | Command::TrainRe { corpus } => set(&mut cfg.corpus, corpus),
        Command::Extract { input, ner_model, re_model } => {
            set(&mut cfg.notes, input);
            set(&mut cfg.ner_model, ner_model);
            set(&mut cfg.re_model, re_model);
        }
        Command::BuildGraph { input, patients } => {
            set(&mut cfg.extractions, input);
            set(&mut cfg.patients, patients);
        }
        Command::Analyze { graph, watch_threshold, .. } => {
            set(&mut cfg.graph, graph);
            cfg.watch_threshold = watch_threshold.unwrap_or(cfg.watch_threshold);
        }
        Command::Export { graph } => set(&mut cfg.graph, graph),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::GenerateCorpus { .. } => print!("{}", pipeline::cmd_generate_corpus(&cfg, out_path(&cli.out)?)?),
        Command::TrainNer { .. } => print!("{}", pipeline::cmd_train_ner(&cfg, out_path(&cli.out)?)?.to_text()),
        Command::TrainRe { .. } => print!("{}", pipeline::cmd_train_re(&cfg, out_path(&cli.out)?)?.to_text()),
        Command::Extract { .. } => {
            let xs = pipeline::cmd_extract(&cfg, out_path(&cli.out)?)?;
            let entities: usize = xs.iter().map(|x| x.entities.len()).sum();
            let relations: usize = xs.iter().map(|x| x.relations.len()).sum();
            println!("{} notes, {entities} entities, {relations} relations", xs.len());
        }
        Command::BuildGraph { .. } => {
            let (g, report) = pipeline::cmd_build_graph(&cfg, out_path(&cli.out)?)?;
            println!("{} nodes, {} edges, {} violations", g.node_count(), g.edges().len(), report.violations.len());
            for v in &report.violations {
                println!("  {}", v.message);
            }
        }
        Command::Analyze { analysis, kind, edge_label, .. } => {
            let kinds = kind.iter().map(|k| k.parse::<NodeKind>()).collect::<Result<Vec<_>>>().map_err(|e| Error::Usage(e.to_string()))?;
            let analysis = Analysis::from_name(analysis, &kinds, edge_label.as_deref())?;
            let format: ReportFormat = cli.format.as_deref().unwrap_or("text").parse()?;
            let report = pipeline::cmd_analyze(&cfg, &analysis, format, cli.out.as_deref())?;
            if cli.out.is_none() {
                print!("{report}");
            }
        }
        Command::Export { .. } => {
            let format = cli.format.as_deref().ok_or_else(|| Error::Usage("missing --format".into()))?;
            pipeline::cmd_export(&cfg, format, out_path(&cli.out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEDKG_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
