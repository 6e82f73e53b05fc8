//! Command-line front end. Every command prints JSON on stdout; errors go
//! to stderr. Exit status: 0 success, 1 engine error, 2 usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classification::load_labels;
use crate::config::Config;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::harness::{generate_corpus, simulate, write_corpus, SyntheticSpec};
use crate::ingestion::VideoDescriptor;
use crate::personalization::{Criterion, Device};

/// Data directory used when neither flag nor config names one.
pub const DEFAULT_DATA_DIR: &str = "vidmas-data";

#[derive(Debug, Parser)]
#[command(
    name = "vidmas",
    version,
    about = "Multi-agent semantic video indexing and retrieval"
)]
struct Cli {
    /// Config file (TOML, or JSON by extension).
    #[arg(long, global = true, env = "VIDMAS_CONFIG")]
    config: Option<PathBuf>,
    /// Store directory.
    #[arg(long, global = true, env = "VIDMAS_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discover descriptor links from seed pages and ingest them.
    Crawl {
        #[arg(long = "seed", required = true)]
        seeds: Vec<String>,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Glob (or `re:` regex) matching descriptor links.
        #[arg(long, default_value = "*.json")]
        pattern: String,
    },
    /// Ingest descriptor files or directories of them.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Train the concept classifier from a labels file and reclassify.
    Train {
        #[arg(long)]
        labels: PathBuf,
    },
    /// Classify a descriptor without storing it.
    Classify { descriptor: PathBuf },
    /// Manage users.
    #[command(subcommand)]
    User(UserCommand),
    /// Ranked search within a domain.
    Query {
        #[arg(long)]
        user: String,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Rate a document 0..=5.
    Feedback {
        #[arg(long)]
        user: String,
        #[arg(long)]
        doc: String,
        #[arg(long, allow_hyphen_values = true)]
        rating: i64,
    },
    /// Query suggestions for a user and domain.
    Suggest {
        #[arg(long)]
        user: String,
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Run organizer cycles (evaporation then re-tiering).
    Reorganize {
        #[arg(long, default_value_t = 1)]
        cycles: usize,
        /// Re-tier only, without evaporating.
        #[arg(long)]
        no_evaporate: bool,
    },
    /// Tier counts and mean pheromone.
    Stats,
    /// Show a stored document with its storyboard.
    Doc { id: String },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Write a synthetic corpus.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Run the simulated-user experiment and print the metrics CSV.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        /// Also write the CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Subcommand)]
enum UserCommand {
    Create {
        #[arg(long)]
        id: String,
        #[arg(long)]
        country: String,
        #[arg(long)]
        language: String,
        #[arg(long, default_value = "desktop")]
        device: String,
    },
    Join {
        #[arg(long)]
        id: String,
        #[arg(long)]
        community: String,
        #[arg(long, default_value = "interest")]
        criterion: String,
        #[arg(long, default_value_t = 1.0)]
        degree: f64,
    },
    Show {
        #[arg(long)]
        id: String,
    },
}

#[derive(Debug, Args)]
struct SpecArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    docs_per_domain: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    domains: Option<Vec<String>>,
}

impl SpecArgs {
    fn spec(&self) -> SyntheticSpec {
        let mut spec = SyntheticSpec::default();
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.docs_per_domain {
            spec.docs_per_domain = v;
        }
        if let Some(v) = self.rounds {
            spec.rounds = v;
        }
        if let Some(v) = self.k {
            spec.k = v;
        }
        if let Some(v) = &self.domains {
            spec.domains = v.clone();
        }
        spec
    }
}

fn parse_criterion(s: &str) -> Result<Criterion> {
    match s {
        "geographic" => Ok(Criterion::Geographic),
        "linguistic" => Ok(Criterion::Linguistic),
        "interest" => Ok(Criterion::Interest),
        other => Err(Error::InvalidArgument(format!("unknown criterion `{other}`"))),
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn open(cli: &Cli) -> Result<Engine> {
    let mut config = Config::resolve(cli.config.as_deref())?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = Some(dir.clone());
    }
    if config.data_dir.is_none() {
        config.data_dir = Some(PathBuf::from(DEFAULT_DATA_DIR));
    }
    Engine::open(config)
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { out, spec } => {
            let corpus = generate_corpus(&spec.spec())?;
            write_corpus(&corpus, out)?;
            print_json(&serde_json::json!({
                "documents": corpus.descriptors.len(),
                "training_labels": corpus.training.len(),
                "out": out,
            }));
            return Ok(());
        }
        Command::Simulate { spec, csv } => {
            let config = Config::resolve(cli.config.as_deref())?;
            let report = simulate(&spec.spec(), config)?;
            let text = report.to_csv();
            if let Some(path) = csv {
                std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
            }
            print!("{text}");
            return Ok(());
        }
        Command::Config => {
            print!("{}", Config::resolve(cli.config.as_deref())?.to_toml());
            return Ok(());
        }
        _ => {}
    }

    let mut engine = open(&cli)?;
    match cli.command {
        Command::Crawl { seeds, depth, pattern } => print_json(&engine.crawl(&seeds, depth, &pattern)?),
        Command::Ingest { paths } => print_json(&engine.ingest_paths(&paths)?),
        Command::Train { labels } => print_json(&engine.train(&load_labels(&labels)?)?),
        Command::Classify { descriptor } => {
            let record = crate::ingestion::extract(
                &VideoDescriptor::from_file(&descriptor)?,
                engine.config().shot_threshold,
            )?;
            print_json(&engine.classify_record(&record)?);
        }
        Command::User(UserCommand::Create {
            id,
            country,
            language,
            device,
        }) => print_json(&engine.create_user(&id, &country, &language, device.parse::<Device>()?)?),
        Command::User(UserCommand::Join {
            id,
            community,
            criterion,
            degree,
        }) => {
            engine.join_community(&id, &community, parse_criterion(&criterion)?, degree)?;
            print_json(engine.personalization().avatar(&id)?);
        }
        Command::User(UserCommand::Show { id }) => print_json(engine.personalization().avatar(&id)?),
        Command::Query { user, domain, text, k } => print_json(&engine.query(&user, &domain, &text, k)?),
        Command::Feedback { user, doc, rating } => {
            print_json(&serde_json::json!({ "tau": engine.feedback(&user, &doc, rating)? }))
        }
        Command::Suggest { user, domain, k } => print_json(&engine.suggest(&user, &domain, k)?),
        Command::Reorganize { cycles, no_evaporate } => {
            let mut migrations = Vec::new();
            for _ in 0..cycles.max(1) {
                migrations.extend(engine.reorganize(!no_evaporate)?);
            }
            print_json(&serde_json::json!({ "migrations": migrations, "stats": engine.stats().kb }));
        }
        Command::Stats => print_json(&engine.stats()),
        Command::Doc { id } => print_json(&engine.doc(&id)?),
        Command::Serve { host, port } => {
            let mut server = engine.config().server.clone();
            if let Some(h) = host {
                server.host = h;
            }
            if let Some(p) = port {
                server.port = p;
            }
            let mut config = engine.config().clone();
            config.server = server;
            let engine = Engine::open(config)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
            return rt
                .block_on(super::http::serve(engine))
                .map_err(|e| Error::io("http server", e));
        }
        Command::Generate { .. } | Command::Simulate { .. } | Command::Config => unreachable!("handled above"),
    }
    engine.save()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            1
        }
    }
}
