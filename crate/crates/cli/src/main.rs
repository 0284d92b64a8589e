//! `livedata`: administrator command line for a LiveData node.
//!
//! Exit codes: 0 on success, 1 for rejected input or a failed check, 2 for
//! filesystem, storage or network failures. Errors are printed to stderr as
//! one line, `error[<code>]: <message>`.

mod commands;
mod error;
mod target;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use livedata::model::{ContentKind, DownloadPolicy};
use livedata::repository::SrepSection;

#[derive(Debug, Parser)]
#[command(name = "livedata", version, about = "Administer a LiveData node")]
pub struct Cli {
    /// Repository root directory.
    #[arg(long, global = true, env = "LIVEDATA_ROOT", default_value = ".")]
    pub root: PathBuf,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a repository for the node described in a descriptor file.
    Init {
        /// Node descriptor JSON (node_id, name, domain_description, base_url, publisher).
        #[arg(long = "node")]
        node: PathBuf,
    },
    /// Store a source file in SREP.
    Collect {
        file: PathBuf,
        /// Local id of the source, e.g. `professors-raw`.
        #[arg(long)]
        id: String,
        /// Defaults to the next free version.
        #[arg(long)]
        version: Option<u32>,
        #[arg(long, default_value = "low_quality")]
        section: SrepSection,
        /// Where the file came from; defaults to the file path.
        #[arg(long)]
        provenance: Option<String>,
    },
    /// Run the pipeline and store S, L, K and G in CREP.
    Transform {
        /// Transformation config JSON naming the sources.
        #[arg(long)]
        config: PathBuf,
    },
    /// Copy a CREP dataset to DREP and publish it in the catalogue.
    Distribute {
        /// `local[/version]` or `node/local/version`.
        target: String,
        #[command(flatten)]
        fields: FieldArgs,
        /// `automatic` or `request` (downloads need an approved request).
        #[arg(long, default_value = "automatic")]
        policy: DownloadPolicy,
    },
    /// Search the local catalogue or a peer's.
    Search {
        /// Free text.
        text: Option<String>,
        /// Repeatable; any of the given kinds matches.
        #[arg(long = "kind")]
        kinds: Vec<ContentKind>,
        /// Repeatable; all of the given categories must be present.
        #[arg(long = "category")]
        categories: Vec<String>,
        #[arg(long = "language")]
        language_tag: Option<String>,
        #[arg(long, default_value_t = 1)]
        page: u32,
        #[arg(long, default_value_t = livedata::catalogue::DEFAULT_PAGE_SIZE)]
        page_size: u32,
        /// Search this registered peer instead of the local node.
        #[arg(long)]
        peer: Option<String>,
    },
    /// Download a peer's dataset into SREP after checking its hash.
    Fetch {
        /// `node/local/version` on a registered peer.
        target: String,
        /// Access token for request-policy datasets.
        #[arg(long)]
        token: Option<String>,
    },
    /// Compose a local standardised dataset with a peer's knowledge and language.
    Compose {
        #[arg(long)]
        standardised: String,
        #[arg(long)]
        knowledge: String,
        #[arg(long)]
        language: String,
        /// Local id of the graph; defaults to `<base>-<peer>-graph`.
        #[arg(long)]
        output: Option<String>,
    },
    /// Manage the peer registry.
    #[command(subcommand)]
    Peer(PeerCommand),
    /// Manage access requests without going through HTTP.
    #[command(subcommand)]
    Requests(RequestsCommand),
    /// Serve the catalogue API until interrupted.
    Serve(ServeArgs),
    /// Verify stored files against the index.
    Check,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Descriptive fields JSON (title, description, categories, license).
    #[arg(long)]
    pub fields: Option<PathBuf>,
    /// `lang=text`, repeatable; overrides the fields file.
    #[arg(long = "title")]
    pub titles: Vec<String>,
    /// `lang=text`, repeatable; overrides the fields file.
    #[arg(long = "description")]
    pub descriptions: Vec<String>,
    /// Repeatable; added to the fields file's categories.
    #[arg(long = "category")]
    pub categories: Vec<String>,
    /// SPDX-style license id; overrides the fields file.
    #[arg(long)]
    pub license: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum PeerCommand {
    /// Register a peer from its descriptor file.
    Add { descriptor: PathBuf },
    Remove { node_id: String },
    List,
    /// Set how long fetched metadata is cached.
    Ttl { seconds: u64 },
}

#[derive(Debug, Subcommand)]
pub enum RequestsCommand {
    List,
    /// Approve and print the single-use download token.
    Approve { request_id: String },
    Deny { request_id: String },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "LIVEDATA_BIND", default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, env = "LIVEDATA_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Enables the admin endpoints.
    #[arg(long, env = "LIVEDATA_ADMIN_TOKEN", hide_env_values = true)]
    pub admin_token: Option<String>,
    /// Descriptor to serve under instead of the repository's; same node id.
    #[arg(long, env = "LIVEDATA_NODE_FILE")]
    pub node_file: Option<PathBuf>,
    /// Peer registry used to resolve remote links.
    #[arg(long, env = "LIVEDATA_PEERS_FILE")]
    pub peers_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error[usage]: {first} (see --help)");
            return ExitCode::from(1);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code())
        }
    }
}
