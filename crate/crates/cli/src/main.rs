//! `newsrec`: ingest click logs, encode article text, replay the stream
//! through the recommenders and print the reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use newsrec::content::{encode_corpus, EncoderConfig, SvdParams, WordEmbeddingTable, DEFAULT_DIM};
use newsrec::ingest::canonical::read_articles;
use newsrec::ingest::{self, generate_synthetic, DatasetSummary, SyntheticConfig};
use newsrec::pipeline;
use newsrec::{Catalog, Dataset, EncoderKind, Error, KeyValues, MetricsReport, RunConfig};

const CONFIG_COPY: &str = "config.txt";

#[derive(Parser, Debug)]
#[command(name = "newsrec", version, about = "Streaming session-based news recommendation experiments")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a raw click log (or generate a synthetic one) into canonical
    /// `events.tsv` / `articles.tsv` files and print dataset statistics.
    Ingest(IngestArgs),
    /// Compute article content embeddings from a canonical articles file.
    Encode(EncodeArgs),
    /// Run the streaming evaluation described by a config file.
    Run(RunArgs),
    /// Print the results table of an earlier run.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Source layout.
    #[arg(long, value_parser = ["synthetic", "g1", "adressa"])]
    adapter: String,
    /// Output directory for the canonical files.
    #[arg(long)]
    out: PathBuf,
    /// G1: directory of hourly click CSV files.
    #[arg(long, required_if_eq("adapter", "g1"))]
    clicks_dir: Option<PathBuf>,
    /// G1: article metadata CSV.
    #[arg(long, required_if_eq("adapter", "g1"))]
    metadata: Option<PathBuf>,
    /// Adressa: directory of JSON-lines event logs.
    #[arg(long, required_if_eq("adapter", "adressa"))]
    log_dir: Option<PathBuf>,
    /// G1/Adressa: `key=value` file mapping canonical fields to source
    /// columns (e.g. `user_id=user_id`, `article.title=headline`).
    #[arg(long, required_if_eq_any([("adapter", "g1"), ("adapter", "adressa")]))]
    map: Option<PathBuf>,
    /// Synthetic: generator seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Synthetic: number of latent topics.
    #[arg(long, default_value_t = 12)]
    topics: usize,
    /// Synthetic: number of articles.
    #[arg(long, default_value_t = 2000)]
    articles: usize,
    /// Synthetic: number of users.
    #[arg(long, default_value_t = 15_000)]
    users: usize,
    /// Synthetic: simulated days.
    #[arg(long, default_value_t = 16)]
    days: usize,
    /// Synthetic: number of sessions (default three per user).
    #[arg(long)]
    sessions: Option<usize>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// Canonical articles file.
    #[arg(long)]
    articles: PathBuf,
    /// Content encoder.
    #[arg(long, value_parser = PossibleValuesParser::new(EncoderKind::ALL.map(EncoderKind::name)))]
    encoder: String,
    /// Embedding dimension.
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    /// Seed for the randomized SVD or doc2vec training.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Minimum document frequency of a vocabulary term.
    #[arg(long, default_value_t = 2)]
    df_threshold: usize,
    /// Pretrained word vectors (`token v1 v2 ...` per line), required by
    /// `w2v_tfidf`.
    #[arg(long)]
    word_vectors: Option<PathBuf>,
    /// doc2vec training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Output embedding file; a `.manifest` file is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `key=value` run configuration.
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// A `report.json` written by `run`.
    report: PathBuf,
    /// Print the JSON instead of the table.
    #[arg(long)]
    json: bool,
}

/// Maps an error onto the process exit status: 2 for configuration and
/// usage problems, 3 for unreadable or unusable data, 4 for violated
/// internal contracts.
fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::MissingColumn { .. } => 2,
        Error::Contract(_) | Error::Snapshot(_) => 4,
        Error::Io { .. }
        | Error::TooManyMalformed { .. }
        | Error::Data(_)
        | Error::EmptyVocabulary(_)
        | Error::StreamTooShort { .. } => 3,
    }
}

fn require_path(p: &Path) -> newsrec::Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("path does not exist: {}", p.display())))
    }
}

fn print_summary(s: &DatasetSummary) {
    println!("users      {:>10}", s.users);
    println!("sessions   {:>10}", s.sessions);
    println!("clicks     {:>10}", s.clicks);
    println!("articles   {:>10}", s.articles);
    println!("avg length {:>10.2}", s.avg_session_length());
}

fn ingest(args: &IngestArgs) -> newsrec::Result<()> {
    let map = match &args.map {
        Some(p) => {
            require_path(p)?;
            KeyValues::load(p)?
        }
        None => KeyValues::default(),
    };
    match args.adapter.as_str() {
        "synthetic" => {
            let cfg = SyntheticConfig {
                n_sessions: args.sessions,
                ..SyntheticConfig::new(args.topics, args.articles, args.users, args.days, args.seed)
            };
            let corpus = generate_synthetic(&cfg)?;
            corpus.write(&args.out)?;
            print_summary(&Dataset::from_synthetic(&corpus).summary());
        }
        "g1" => {
            let (dir, meta) = (args.clicks_dir.as_deref().unwrap(), args.metadata.as_deref().unwrap());
            require_path(dir)?;
            require_path(meta)?;
            let r = ingest::load_g1(dir, meta, &map, &args.out)?;
            print_summary(&r.summary);
        }
        "adressa" => {
            let dir = args.log_dir.as_deref().unwrap();
            require_path(dir)?;
            let r = ingest::load_adressa(dir, &map, &args.out)?;
            print_summary(&r.summary);
        }
        other => unreachable!("clap accepted adapter {other}"),
    }
    println!(
        "wrote {} and {}",
        args.out.join(ingest::EVENTS_FILE).display(),
        args.out.join(ingest::ARTICLES_FILE).display()
    );
    Ok(())
}

fn encode(args: &EncodeArgs) -> newsrec::Result<()> {
    let kind: EncoderKind = args.encoder.parse()?;
    if kind == EncoderKind::None {
        return Err(Error::Config(
            "encoder `none` has no embeddings to write; No-ACE is a run-time flag \
             (set `nar.use_ace=false` or list `nar_no_ace` in `recommenders`)"
                .into(),
        ));
    }
    require_path(&args.articles)?;
    let word_vectors = match &args.word_vectors {
        Some(p) => {
            require_path(p)?;
            Some(WordEmbeddingTable::load_text(p)?)
        }
        None => None,
    };
    let mut config = EncoderConfig {
        dim: args.dim,
        seed: args.seed,
        df_threshold: args.df_threshold,
        svd: SvdParams::default(),
        word_vectors,
        ..EncoderConfig::new(kind)
    };
    config.doc2vec.dim = args.dim;
    config.doc2vec.seed = args.seed;
    if let Some(e) = args.epochs {
        config.doc2vec.epochs = e;
    }
    let (articles, _, _) = read_articles(&args.articles)?;
    let (catalog, dups) = Catalog::new(articles);
    if dups > 0 {
        log::warn!("{dups} duplicate article ids ignored");
    }
    let store = encode_corpus(&config, &catalog)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Data(format!("{}: {e}", parent.display())))?;
    }
    store.write(&args.out, &catalog, &config.manifest())?;
    println!(
        "{} of {} articles embedded in {} dimensions ({})",
        store.len(),
        catalog.len(),
        store.dim(),
        kind.label()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run(args: &RunArgs) -> newsrec::Result<()> {
    require_path(&args.config)?;
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    let report = pipeline::execute(&cfg)?;
    let paths = pipeline::write_reports(&report, &cfg.output_dir)?;
    let copy = cfg.output_dir.join(CONFIG_COPY);
    std::fs::write(&copy, cfg.to_text()).map_err(|e| Error::Data(format!("{}: {e}", copy.display())))?;
    print!("{}", report.render_table());
    info!("config copied to {}", copy.display());
    println!(
        "wrote {}, {} and {}",
        paths.json.display(),
        paths.hourly.display(),
        paths.plot.display()
    );
    Ok(())
}

fn report(args: &ReportArgs) -> newsrec::Result<()> {
    require_path(&args.report)?;
    let report = MetricsReport::read_json(&args.report)?;
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.render_table());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Encode(a) => encode(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
