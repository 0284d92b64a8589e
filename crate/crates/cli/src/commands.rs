use std::path::Path;
use std::sync::Arc;

use livedata::catalogue::{serve, Catalogue, SearchPage, SearchQuery};
use livedata::formats::serialize_metadata;
use livedata::model::{DescriptiveFields, NodeDescriptor};
use livedata::node::{Node, NodeError};
use livedata::pipeline::TransformConfig;
use livedata::repository::RepositoryEntry;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;
use crate::target::Target;
use crate::{Cli, Command, FieldArgs, PeerCommand, RequestsCommand, ServeArgs};

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(&read(path)?).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}

fn emit<T: Serialize>(cli: &Cli, value: &T, text: impl FnOnce() -> String) {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(value).expect("serializable output"));
    } else {
        let text = text();
        if !text.is_empty() {
            println!("{text}");
        }
    }
}

fn entry_line(e: &RepositoryEntry) -> String {
    format!("{}  {}  {}", e.dataset, e.partition, e.content_hash)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Command::Init { node } = &cli.command {
        let descriptor: NodeDescriptor = read_json(node)?;
        let node = Node::init(&cli.root, descriptor)?;
        emit(cli, node.descriptor(), || {
            format!("initialised node `{}` at {}", node.descriptor().node_id, cli.root.display())
        });
        return Ok(());
    }
    let node = Node::open(&cli.root)?;
    match &cli.command {
        Command::Init { .. } => unreachable!("handled above"),
        Command::Collect {
            file,
            id,
            version,
            section,
            provenance,
        } => {
            let local = id.parse().map_err(|e| CliError::Usage(format!("--id: {e}")))?;
            let provenance = provenance.clone().unwrap_or_else(|| file.display().to_string());
            let entry = node.collect(&read(file)?, &local, *version, *section, &provenance)?;
            emit(cli, &entry, || entry_line(&entry));
        }
        Command::Transform { config } => {
            let cfg = TransformConfig::from_json(&read(config)?).map_err(NodeError::from)?;
            let t = node.transform(&cfg)?;
            emit(cli, &t.entries, || {
                t.entries.iter().map(|e| e.dataset.to_string()).collect::<Vec<_>>().join("\n")
            });
        }
        Command::Distribute { target, fields, policy } => {
            let t = Target::parse(target)?;
            let found = node.find(t.node.as_ref(), &t.local, t.version)?;
            let entry = node.distribute(&found.dataset, &descriptive_fields(fields)?, *policy)?;
            for w in &entry.warnings {
                eprintln!("warning: {w}");
            }
            let metadata = entry.metadata.as_ref().expect("DREP entries carry metadata");
            if cli.json {
                let bytes = serialize_metadata(metadata).map_err(NodeError::from)?;
                print!("{}", String::from_utf8_lossy(&bytes));
            } else {
                println!("{}", entry_line(&entry));
                println!("{}", node.descriptor().catalogue_url(&entry.dataset));
            }
        }
        Command::Search {
            text,
            kinds,
            categories,
            language_tag,
            page,
            page_size,
            peer,
        } => {
            let query = SearchQuery {
                text: text.clone(),
                kinds: kinds.iter().copied().collect(),
                categories: categories.iter().cloned().collect(),
                language_tag: language_tag.clone(),
                page: *page,
                page_size: *page_size,
            };
            let page = match peer {
                Some(p) => {
                    let id = p.parse().map_err(|e| CliError::Usage(format!("--peer: {e}")))?;
                    node.federation()
                        .remote_search(&id, &query)
                        .map_err(NodeError::from)?
                }
                None => node.catalogue().search(&query)?,
            };
            emit(cli, &page, || search_table(&page));
        }
        Command::Fetch { target, token } => {
            let t = Target::parse(target)?;
            if t.node.is_none() {
                return Err(CliError::Usage(format!("`{target}` needs the owning node: node/local/version")));
            }
            let r = t.full(&node.descriptor().node_id)?;
            let entry = node
                .federation()
                .fetch_into_srep(&r, token.as_deref())
                .map_err(NodeError::from)?;
            emit(cli, &entry, || entry_line(&entry));
        }
        Command::Compose {
            standardised,
            knowledge,
            language,
            output,
        } => {
            let resolve = |s: &str| -> Result<_, CliError> {
                let t = Target::parse(s)?;
                Ok(node.find(t.node.as_ref(), &t.local, t.version)?.dataset)
            };
            let (s, k, l) = (resolve(standardised)?, resolve(knowledge)?, resolve(language)?);
            let output = output
                .as_deref()
                .map(str::parse)
                .transpose()
                .map_err(|e| CliError::Usage(format!("--output: {e}")))?;
            let composed = node.cross_node_compose(&s, &k, &l, output.as_ref())?;
            emit(cli, &composed.entry, || entry_line(&composed.entry));
        }
        Command::Peer(cmd) => peer(cli, &node, cmd)?,
        Command::Requests(cmd) => requests(cli, &node, cmd)?,
        Command::Serve(args) => serve_catalogue(&node, args)?,
        Command::Check => {
            let report = node.repository().integrity_check().map_err(NodeError::from)?;
            emit(cli, &report, || {
                if report.is_empty() {
                    "ok".into()
                } else {
                    report.issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n")
                }
            });
            if !report.is_empty() {
                return Err(CliError::Integrity(report.issues.len()));
            }
        }
    }
    Ok(())
}

fn lang_pair(s: &str, flag: &str) -> Result<(String, String), CliError> {
    s.split_once('=')
        .map(|(l, t)| (l.trim().to_owned(), t.to_owned()))
        .ok_or_else(|| CliError::Usage(format!("{flag} takes lang=text, got `{s}`")))
}

fn descriptive_fields(args: &FieldArgs) -> Result<DescriptiveFields, CliError> {
    let mut fields = match &args.fields {
        Some(path) => read_json(path)?,
        None => DescriptiveFields {
            title: Default::default(),
            description: Default::default(),
            categories: Default::default(),
            license: String::new(),
        },
    };
    for t in &args.titles {
        let (lang, text) = lang_pair(t, "--title")?;
        fields.title.insert(lang, text);
    }
    for d in &args.descriptions {
        let (lang, text) = lang_pair(d, "--description")?;
        fields.description.insert(lang, text);
    }
    fields.categories.extend(args.categories.iter().cloned());
    if let Some(l) = &args.license {
        fields.license = l.clone();
    }
    Ok(fields)
}

fn search_table(page: &SearchPage) -> String {
    let mut rows = vec![["REF".to_string(), "KIND".into(), "TITLE".into(), "URL".into()]];
    for hit in &page.results {
        let d = &hit.dataset;
        rows.push([
            format!("{}/{}/{}", d.node_id, d.local_id, d.version),
            d.kind.to_string(),
            hit.title.values().next().cloned().unwrap_or_default(),
            hit.catalogue_url.clone(),
        ]);
    }
    let widths: Vec<usize> = (0..4).map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
    let mut out: Vec<String> = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_owned()
        })
        .collect();
    let shown = page.results.len();
    out.push(format!("{shown} of {} result(s), page {}", page.total, page.page));
    out.join("\n")
}

fn peer(cli: &Cli, node: &Node, cmd: &PeerCommand) -> Result<(), CliError> {
    let fed = node.federation();
    let wrap = NodeError::from;
    match cmd {
        PeerCommand::Add { descriptor } => {
            let peer: NodeDescriptor = read_json(descriptor)?;
            let added = fed.add_peer(peer.clone()).map_err(wrap)?;
            emit(cli, &peer, || {
                let verb = if added { "added" } else { "already registered:" };
                format!("{verb} {} {}", peer.node_id, peer.base_url)
            });
        }
        PeerCommand::Remove { node_id } => {
            let id = node_id.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
            let removed = fed.remove_peer(&id).map_err(wrap)?;
            emit(cli, &removed, || format!("removed {}", removed.node_id));
        }
        PeerCommand::List => {
            let registry = fed.registry().map_err(wrap)?;
            emit(cli, &registry, || {
                let mut lines: Vec<String> =
                    registry.peers.values().map(|p| format!("{}  {}  {}", p.node_id, p.base_url, p.name)).collect();
                lines.push(format!("{} peer(s), metadata cached for {} s", registry.peers.len(), registry.ttl_seconds));
                lines.join("\n")
            });
        }
        PeerCommand::Ttl { seconds } => {
            fed.set_ttl(*seconds).map_err(wrap)?;
            emit(cli, &serde_json::json!({ "ttl_seconds": seconds }), || format!("ttl set to {seconds} s"));
        }
    }
    Ok(())
}

fn requests(cli: &Cli, node: &Node, cmd: &RequestsCommand) -> Result<(), CliError> {
    let catalogue = node.catalogue();
    match cmd {
        RequestsCommand::List => {
            let all = catalogue
                .requests()
                .list()
                .map_err(livedata::catalogue::CatalogueError::from)?;
            emit(cli, &all, || {
                all.iter()
                    .map(|r| format!("{}  {}  {}  {}", r.request_id, r.status, r.dataset, r.contact))
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        }
        RequestsCommand::Approve { request_id } | RequestsCommand::Deny { request_id } => {
            let approve = matches!(cmd, RequestsCommand::Approve { .. });
            let decided = catalogue.decide(request_id, approve)?;
            emit(cli, &decided, || match &decided.token {
                Some(token) => format!("approved {}; token {token}", decided.request_id),
                None => format!("{} {}", decided.status, decided.request_id),
            });
        }
    }
    Ok(())
}

fn serve_catalogue(node: &Node, args: &ServeArgs) -> Result<(), CliError> {
    let mut catalogue: Catalogue = node.catalogue();
    if let Some(token) = &args.admin_token {
        catalogue = catalogue.with_admin_token(token.clone());
    }
    if let Some(path) = &args.node_file {
        catalogue = catalogue.with_descriptor(read_json(path)?)?;
    }
    if let Some(path) = &args.peers_file {
        catalogue = catalogue.with_peers_file(path.clone());
    }
    let catalogue = Arc::new(catalogue);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::Server)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.port))
            .await
            .map_err(CliError::Server)?;
        let addr = listener.local_addr().map_err(CliError::Server)?;
        println!("serving node `{}` on http://{addr}", catalogue.node().node_id);
        serve(listener, catalogue, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(CliError::Server)
    })
}
