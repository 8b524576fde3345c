use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, Subcommand};
use foundry::annotate::{Campaign, TaskStatus};
use foundry::corpus::{self, Corpus, Split};

use crate::pipeline::{create, load_corpus, open};
use crate::settings::{List, Settings};

#[derive(Subcommand)]
pub enum AnnotateCommand {
    /// Start a campaign log from the selected splits of a corpus.
    Create(CreateArgs),
    /// Serve the annotation API over a campaign log.
    Serve(ServeArgs),
    /// Write manual labels back into the corpus and drop discarded pairs.
    Apply(ApplyArgs),
}

#[derive(Args)]
pub struct CreateArgs {
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Splits to re-annotate.
    #[arg(long)]
    split: Option<List<Split>>,
    #[arg(long)]
    annotators: Option<List<String>>,
    /// Votes required per task.
    #[arg(long)]
    votes: Option<usize>,
    #[arg(long)]
    campaign: Option<PathBuf>,
}

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long)]
    campaign: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    host: Option<std::net::IpAddr>,
    /// Markdown shown to annotators.
    #[arg(long)]
    guidelines: Option<PathBuf>,
    /// Cartography CSV for per-group agreement.
    #[arg(long)]
    groups: Option<PathBuf>,
}

#[derive(Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    campaign: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(cmd: AnnotateCommand, settings: &dyn Fn(&str) -> anyhow::Result<Settings>) -> anyhow::Result<()> {
    match cmd {
        AnnotateCommand::Create(a) => create_campaign(a, settings("annotate")?),
        AnnotateCommand::Serve(a) => serve(a, settings("annotate")?),
        AnnotateCommand::Apply(a) => apply(a, settings("annotate")?),
    }
}

fn create_campaign(a: CreateArgs, mut s: Settings) -> anyhow::Result<()> {
    let input: PathBuf = s.req(a.pairs, "pairs")?;
    let out: PathBuf = s.req(a.campaign, "campaign")?;
    let splits = s.or(a.split, "split", List(vec![Split::Val, Split::Test]))?;
    let annotators: List<String> = s.req(a.annotators, "annotators")?;
    let votes = s.or(a.votes, "votes", 3)?;
    s.input(&input)?;
    s.manifest.param("splits", format!("{:?}", splits.0)).param("annotators", &annotators).param("votes", votes);

    let c = load_corpus(&input)?;
    let pairs: Vec<_> = c.pairs.iter().filter(|p| splits.0.contains(&c.split_of(&p.pair_id))).cloned().collect();
    if pairs.is_empty() {
        return Err(anyhow!("no pairs in splits {:?}", splits.0));
    }
    let campaign = Campaign::create(&pairs, &annotators.0, votes)?;
    let mut w = create(&out)?;
    campaign.write_log(&mut w)?;
    log::info!("campaign with {} tasks for {} annotators", campaign.tasks().len(), annotators.0.len());
    s.finish(&out)
}

fn serve(a: ServeArgs, mut s: Settings) -> anyhow::Result<()> {
    let path: PathBuf = s.req(a.campaign, "campaign")?;
    let port = s.or(a.port, "port", 8080)?;
    let host = s.or(a.host, "host", std::net::IpAddr::from([127, 0, 0, 1]))?;
    let guidelines = match s.opt(a.guidelines, "guidelines")? {
        Some(p) => {
            s.input(&p)?;
            Some(std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)
        }
        None => None,
    };
    let groups = match s.opt(a.groups, "groups")? {
        Some(p) => {
            s.input(&p)?;
            Some(annotate_server::load_groups(&p).map_err(|e| anyhow!("loading groups {}: {e}", p.display()))?)
        }
        None => None,
    };
    s.input(&path)?;
    s.manifest.param("port", port).param("host", host);
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".serve");
    s.finish(&path.with_file_name(name))?;

    let (campaign, log) =
        annotate_server::open_campaign(&path).map_err(|e| anyhow!("opening campaign {}: {e}", path.display()))?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let config = annotate_server::ServiceConfig { guidelines, groups };
        let state = annotate_server::AppState::start(campaign, log, config);
        annotate_server::serve(SocketAddr::new(host, port), state).await
    })?;
    Ok(())
}

fn apply(a: ApplyArgs, mut s: Settings) -> anyhow::Result<()> {
    let input: PathBuf = s.req(a.pairs, "pairs")?;
    let log_path: PathBuf = s.req(a.campaign, "campaign")?;
    let out: PathBuf = s.req(a.out, "out")?;
    s.input(&input)?;
    s.input(&log_path)?;

    let campaign = Campaign::replay(open(&log_path)?)?;
    let mut status = HashMap::new();
    for t in campaign.tasks() {
        status.insert(t.pair_id.clone(), (t.status, t.final_label));
    }
    let c = load_corpus(&input)?;
    let (mut relabeled, mut changed, mut dropped, mut open_tasks) = (0usize, 0usize, 0usize, 0usize);
    let mut kept = Vec::with_capacity(c.pairs.len());
    for mut p in c.pairs.iter().cloned() {
        match status.get(&p.pair_id) {
            Some((TaskStatus::Discarded, _)) => {
                dropped += 1;
                continue;
            }
            Some((TaskStatus::Complete, Some(label))) => {
                relabeled += 1;
                let auto = p.auto_label.unwrap_or(p.label);
                changed += usize::from(auto != *label);
                p.auto_label = Some(auto);
                p.label = *label;
            }
            Some(_) => open_tasks += 1,
            None => {}
        }
        kept.push(p);
    }
    let mut result = Corpus::new(kept);
    result.split = c
        .split
        .iter()
        .filter(|(id, _)| !matches!(status.get(*id), Some((TaskStatus::Discarded, _))))
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    corpus::write_corpus_file(&result, &out)?;
    if open_tasks > 0 {
        log::warn!("{open_tasks} tasks are still open; their pairs keep the automatic label");
    }
    log::info!("{relabeled} pairs relabeled ({changed} changed), {dropped} discarded");
    s.manifest.param("relabeled", relabeled).param("changed", changed).param("discarded", dropped);
    s.finish(&out)
}
