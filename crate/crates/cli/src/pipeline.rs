use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use foundry::corpus::{self, Corpus, Split};
use foundry::ingest::{parse_dump, split_sentences, Article, DumpFormat, FilterStats, PageFilter, Sentence, Stripper};
use foundry::labeler::{extract_pairs, load_phrase_table, ExtractConfig, NeutralMode, PhraseOverrides};
use foundry::Relation;

use crate::settings::{List, Settings};

pub fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Reads a corpus from JSONL, or from TSV/CSV by extension.
pub fn load_corpus(path: &Path) -> anyhow::Result<Corpus> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let prefix = path.file_stem().and_then(|s| s.to_str()).unwrap_or("row");
    let corpus = match ext.as_str() {
        "tsv" => Corpus::new(corpus::read_delimited(open(path)?, b'\t', prefix)?),
        "csv" => Corpus::new(corpus::read_delimited(open(path)?, b',', prefix)?),
        _ => corpus::read_corpus(open(path)?)?,
    };
    corpus.validate()?;
    Ok(corpus)
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// auto, xml or jsonl
    #[arg(long)]
    format: Option<DumpFormat>,
    /// Shortest sentence kept, in characters.
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn ingest(a: IngestArgs, mut s: Settings) -> anyhow::Result<()> {
    let input: PathBuf = s.req(a.input, "input")?;
    let out: PathBuf = s.req(a.out, "out")?;
    let format = s.or(a.format, "format", DumpFormat::Auto)?;
    let min_len = s.param("min_len", s.or(a.min_len, "min-len", 50)?);
    s.input(&input)?;

    let pages = parse_dump(open(&input)?, format)?;
    let (filter, stripper) = (PageFilter::default(), Stripper::default());
    let mut stats = FilterStats::default();
    let (mut recoveries, mut sentences) = (0usize, 0usize);
    let mut w = create(&out)?;
    for page in pages {
        let Some(page) = filter.filter(page?, &mut stats) else { continue };
        let (article, rec) = Article::from_page(&page, &stripper);
        recoveries += rec;
        for sent in split_sentences(&article, min_len) {
            serde_json::to_writer(&mut w, &sent)?;
            w.write_all(b"\n")?;
            sentences += 1;
        }
    }
    w.flush()?;
    log::info!(
        "kept {} pages, dropped {} (namespace {}, redirect {}, disambiguation {}); {} markup recoveries; {} sentences",
        stats.kept,
        stats.dropped(),
        stats.namespace,
        stats.redirect,
        stats.disambiguation,
        recoveries,
        sentences
    );
    s.manifest.param("pages_kept", stats.kept).param("sentences", sentences);
    s.finish(&out)
}

#[derive(Args)]
pub struct LabelArgs {
    #[arg(long)]
    sentences: Option<PathBuf>,
    /// Probability of keeping a neutral candidate (default: aim for a 0.49 neutral share).
    #[arg(long)]
    neutral_rate: Option<f64>,
    /// contiguous or cross-article
    #[arg(long)]
    neutral_mode: Option<NeutralMode>,
    /// Keep linking phrases in hypotheses.
    #[arg(long)]
    keep_cues: Option<bool>,
    /// Phrase overrides (`add`/`remove` lines).
    #[arg(long)]
    phrases: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_sentences(path: &Path) -> anyhow::Result<Vec<Sentence>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn label(a: LabelArgs, mut s: Settings) -> anyhow::Result<()> {
    let input: PathBuf = s.req(a.sentences, "sentences")?;
    let out: PathBuf = s.req(a.out, "out")?;
    let cfg = ExtractConfig {
        neutral_rate: s.opt(a.neutral_rate, "neutral-rate")?,
        neutral_mode: s.or(a.neutral_mode, "neutral-mode", NeutralMode::Contiguous)?,
        keep_cues: s.or(a.keep_cues, "keep-cues", false)?,
        seed: s.or(a.seed, "seed", 0)?,
    };
    s.input(&input)?;
    let overrides = match s.opt(a.phrases, "phrases")? {
        Some(p) => {
            s.input(&p)?;
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            Some(PhraseOverrides::parse(&text)?)
        }
        None => None,
    };
    let table = load_phrase_table(overrides.as_ref())?;
    s.manifest
        .seed("label", cfg.seed)
        .param("neutral_rate", cfg.neutral_rate.map_or("auto".to_string(), |r| r.to_string()))
        .param("neutral_mode", format!("{:?}", cfg.neutral_mode))
        .param("keep_cues", cfg.keep_cues)
        .param("phrases", table.len());

    let sentences = read_sentences(&input)?;
    let ex = extract_pairs(&sentences, &table, &cfg);
    corpus::write_corpus(&Corpus::new(ex.pairs), create(&out)?)?;
    log::info!("{}", serde_json::to_string(&ex.stats)?);
    s.manifest.param("stats", serde_json::to_string(&ex.stats)?);
    s.finish(&out)
}

#[derive(Args)]
pub struct SplitArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// train,val,test shares
    #[arg(long)]
    ratios: Option<List<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `<dir>/{train,val,test}.tsv`.
    #[arg(long)]
    tsv_dir: Option<PathBuf>,
}

pub fn split(a: SplitArgs, mut s: Settings) -> anyhow::Result<()> {
    let input: PathBuf = s.req(a.corpus, "corpus")?;
    let out: PathBuf = s.req(a.out, "out")?;
    let ratios = s.or(a.ratios, "ratios", List(vec![0.906, 0.047, 0.047]))?;
    let seed = s.or(a.seed, "seed", 0)?;
    let [tr, va, te] = ratios.0[..] else { bail!("--ratios needs three values, got {}", ratios.0.len()) };
    s.input(&input)?;
    s.manifest.seed("split", seed).param("ratios", &ratios);

    let mut c = load_corpus(&input)?;
    let report = corpus::stratified_split(&mut c, [tr, va, te], seed)?;
    if !report.undersized_classes.is_empty() {
        log::warn!("classes kept entirely in train: {:?}", report.undersized_classes);
    }
    corpus::write_corpus_file(&c, &out)?;
    if let Some(dir) = s.opt(a.tsv_dir, "tsv-dir")? {
        for split in Split::ASSIGNABLE {
            let pairs: Vec<_> = c.pairs_in(split).cloned().collect();
            corpus::write_tsv(&pairs, create(&dir.join(format!("{}.tsv", split.as_str())))?)?;
        }
    }
    s.finish(&out)
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Print the per-split, per-class table instead of JSON.
    #[arg(long)]
    table2: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn stats(a: StatsArgs, mut s: Settings) -> anyhow::Result<()> {
    let input: PathBuf = s.req(a.corpus, "corpus")?;
    s.input(&input)?;
    let stats = corpus::compute_stats(&load_corpus(&input)?);
    let text = if a.table2 { stats.render_table() } else { serde_json::to_string_pretty(&stats)? + "\n" };
    match s.opt(a.out, "out")? {
        Some(out) => {
            let mut w = create(&out)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
            s.finish(&out)
        }
        None => {
            print!("{text}");
            let manifest = input.with_extension("stats.manifest.json");
            s.finish(&manifest)
        }
    }
}

#[derive(Args)]
pub struct OversampleArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train pair ids, one per line, originals first.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn oversample(a: OversampleArgs, mut s: Settings) -> anyhow::Result<()> {
    let input: PathBuf = s.req(a.corpus, "corpus")?;
    let out: PathBuf = s.req(a.out, "out")?;
    let seed = s.or(a.seed, "seed", 0)?;
    s.input(&input)?;
    s.manifest.seed("oversample", seed);
    let c = load_corpus(&input)?;
    let train: Vec<_> = c.pairs_in(Split::Train).collect();
    let ids = corpus::oversample(&train, &Relation::ALL, seed)?;
    let mut w = create(&out)?;
    for id in &ids {
        writeln!(w, "{id}")?;
    }
    w.flush()?;
    log::info!("{} train pairs, {} after oversampling", train.len(), ids.len());
    s.finish(&out)
}

pub fn read_ids(path: &Path) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() {
            out.push(id.to_string());
        }
    }
    Ok(out)
}
