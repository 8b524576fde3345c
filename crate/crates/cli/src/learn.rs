use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use foundry::cartography::{self, Group};
use foundry::config::sha256_file;
use foundry::corpus::{Corpus, Split};
use foundry::curriculum::{self, GroupPools, Pacing, PacingConfig, Schedule};
use foundry::eval::{self, MwMode, TestResult, EXACT_LIMIT};
use foundry::labeler::LabeledPair;
use foundry::trainer::{self, EmbeddingTable, FeatureMode, FeatureSpec, ModelKind, OovPolicy, TrainConfig};
use foundry::Relation;
use serde::{Deserialize, Serialize};

use crate::pipeline::{create, load_corpus, open, read_ids};
use crate::settings::{List, Settings};

fn labels_of(c: &Corpus) -> HashMap<String, Relation> {
    c.pairs.iter().map(|p| (p.pair_id.clone(), p.label)).collect()
}

/// Pairs of `split`, or every pair when the corpus has no split column.
fn split_pairs(c: &Corpus, split: Split) -> Vec<LabeledPair> {
    if c.split.is_empty() {
        return c.pairs.clone();
    }
    c.pairs_in(split).cloned().collect()
}

#[derive(Args)]
pub struct CartoArgs {
    /// Training dynamics JSONL.
    #[arg(long)]
    dynamics: Option<PathBuf>,
    /// Corpus with gold labels.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Share of examples in each group.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_plot: Option<PathBuf>,
    /// Per-group class counts (printed when not given).
    #[arg(long)]
    distribution: Option<PathBuf>,
}

pub fn carto(a: CartoArgs, mut s: Settings) -> anyhow::Result<()> {
    let dynamics: PathBuf = s.req(a.dynamics, "dynamics")?;
    let gold: PathBuf = s.req(a.gold, "gold")?;
    let out_csv: PathBuf = s.req(a.out_csv, "out-csv")?;
    let fraction = s.or(a.fraction, "fraction", 0.3333)?;
    s.input(&dynamics)?;
    s.input(&gold)?;
    s.manifest.param("fraction", fraction);

    let records = cartography::read_dynamics(open(&dynamics)?)?;
    let labels = labels_of(&load_corpus(&gold)?);
    let mut points = cartography::compute_points(&records, &labels)?;
    cartography::assign_groups(&mut points, fraction)?;
    cartography::write_csv(&points, create(&out_csv)?)?;
    if let Some(plot) = s.opt(a.out_plot, "out-plot")? {
        let mut w = create(&plot)?;
        cartography::write_svg(&points, &mut w)?;
        w.flush()?;
        s.manifest.output(&plot);
    }
    let table = cartography::render_distribution(&cartography::group_distribution(&points, &labels));
    match s.opt(a.distribution, "distribution")? {
        Some(p) => {
            let mut w = create(&p)?;
            w.write_all(table.as_bytes())?;
            w.flush()?;
            s.manifest.output(&p);
        }
        None => print!("{table}"),
    }
    log::info!("{} examples mapped", points.len());
    s.finish(&out_csv)
}

fn parse_pacing(text: &str) -> anyhow::Result<Pacing> {
    match text.split_once(':') {
        None if text == "linear" => Ok(Pacing::Linear),
        Some(("step", k)) => Ok(Pacing::Step { steps: k.parse().with_context(|| format!("step count {k:?}"))? }),
        _ => bail!("unknown pacing {text:?} (expected linear or step:K)"),
    }
}

/// Embeddings from a text file, or hashed character n-grams only.
fn embedding_table(
    s: &mut Settings,
    path: Option<PathBuf>,
    hashed_dim: Option<usize>,
    oov: Option<String>,
    hash_seed: Option<u64>,
) -> anyhow::Result<(EmbeddingTable, Option<String>)> {
    let hash_seed = s.or(hash_seed, "hash-seed", 0)?;
    let oov = match s.or(oov, "oov", "hashed".to_string())?.as_str() {
        "hashed" => OovPolicy::HashedNgrams { seed: hash_seed },
        "zero" => OovPolicy::Zero,
        other => bail!("unknown oov policy {other:?} (expected hashed|zero)"),
    };
    match s.opt(path, "embeddings")? {
        Some(p) => {
            s.input(&p)?;
            let table = trainer::load_embeddings_file(&p, oov).with_context(|| format!("loading {}", p.display()))?;
            Ok((table, Some(sha256_file(&p)?)))
        }
        None => {
            let dim = s.or(hashed_dim, "hashed-dim", 300)?;
            if matches!(oov, OovPolicy::Zero) {
                bail!("--oov zero needs --embeddings");
            }
            s.manifest.param("hashed_dim", dim);
            Ok((EmbeddingTable::empty(dim, oov), None))
        }
    }
}

#[derive(Args)]
pub struct ScheduleArgs {
    /// standard, length, sts, cart, cartpp or cartstrapp
    #[arg(long)]
    strategy: Option<String>,
    /// Corpus; the pool is its train split unless --pool is given.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Pair ids to draw from, one per line (e.g. the oversample output).
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Data map CSV for the cartography strategies.
    #[arg(long)]
    dynamics: Option<PathBuf>,
    /// Total batches (default: epochs x batches per pass over the pool).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    curriculum_fraction: Option<f64>,
    /// linear or step:K
    #[arg(long)]
    pacing: Option<String>,
    /// Embeddings for the similarity strategy.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    hashed_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn schedule(a: ScheduleArgs, mut s: Settings) -> anyhow::Result<()> {
    let strategy: String = s.req(a.strategy, "strategy")?;
    let pairs: PathBuf = s.req(a.pairs, "pairs")?;
    let out: PathBuf = s.req(a.out, "out")?;
    let batch = s.or(a.batch, "batch", 256)?;
    let epochs = s.or(a.epochs, "epochs", 10)?;
    let seed = s.or(a.seed, "seed", 0)?;
    s.input(&pairs)?;
    let corpus = load_corpus(&pairs)?;
    let pool = match s.opt(a.pool, "pool")? {
        Some(p) => {
            s.input(&p)?;
            read_ids(&p)?
        }
        None => split_pairs(&corpus, Split::Train).into_iter().map(|p| p.pair_id).collect(),
    };
    if pool.is_empty() {
        bail!("empty pool");
    }
    let n = s.or(a.n, "n", epochs * pool.len().div_ceil(batch))?;
    let mut cfg = PacingConfig::new(n, batch, seed);
    cfg.curriculum_fraction = s.or(a.curriculum_fraction, "curriculum-fraction", cfg.curriculum_fraction)?;
    cfg.pacing = parse_pacing(&s.or(a.pacing, "pacing", "linear".to_string())?)?;
    s.manifest
        .seed("schedule", seed)
        .param("strategy", &strategy)
        .param("n", n)
        .param("batch", batch)
        .param("pool", pool.len())
        .param("curriculum_fraction", cfg.curriculum_fraction)
        .param("pacing", format!("{:?}", cfg.pacing));

    let map = |s: &mut Settings, path: Option<PathBuf>| -> anyhow::Result<Vec<cartography::CartographyPoint>> {
        let p: PathBuf = s.req(path, "dynamics")?;
        s.input(&p)?;
        Ok(cartography::read_csv(open(&p)?)?)
    };
    let by_id: HashMap<&str, &LabeledPair> = corpus.pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let pair = |id: &String| by_id.get(id.as_str()).copied().ok_or_else(|| anyhow!("pool id {id} not in corpus"));
    let sched: Schedule = match strategy.as_str() {
        "standard" => curriculum::schedule_standard(&pool, &cfg)?,
        "length" => {
            let scores = pool
                .iter()
                .map(|id| pair(id).map(|p| (id.clone(), curriculum::length_score(&p.premise, &p.hypothesis))))
                .collect::<anyhow::Result<HashMap<_, _>>>()?;
            curriculum::schedule_scored("length", &pool, &scores, &cfg)?
        }
        "sts" => {
            let (table, _) = embedding_table(&mut s, a.embeddings, a.hashed_dim, None, None)?;
            let scores = pool
                .iter()
                .map(|id| pair(id).map(|p| (id.clone(), curriculum::sts_score(trainer::pair_similarity(p, &table)))))
                .collect::<anyhow::Result<HashMap<_, _>>>()?;
            curriculum::schedule_scored("sts", &pool, &scores, &cfg)?
        }
        "cart" => {
            let points = map(&mut s, a.dynamics)?;
            let mut member: HashMap<&str, Vec<Group>> = HashMap::new();
            for p in &points {
                member.insert(&p.example_id, p.groups.clone());
            }
            let pick = |g: Group| -> Vec<String> {
                pool.iter().filter(|id| member.get(id.as_str()).is_some_and(|gs| gs.contains(&g))).cloned().collect()
            };
            let groups = GroupPools { easy: pick(Group::E2L), ambiguous: pick(Group::A), hard: pick(Group::H2L) };
            curriculum::schedule_cart_cl(&groups, &cfg)?
        }
        "cartpp" | "cartstrapp" => {
            let points = map(&mut s, a.dynamics)?;
            let scores: HashMap<String, f64> = points.iter().map(|p| (p.example_id.clone(), p.score)).collect();
            if strategy == "cartpp" {
                curriculum::schedule_scored("cartpp", &pool, &scores, &cfg)?
            } else {
                curriculum::schedule_cart_stra_clpp(&pool, &scores, &labels_of(&corpus), &Relation::ALL, &cfg)?
            }
        }
        other => bail!("unknown strategy {other:?} (standard|length|sts|cart|cartpp|cartstrapp)"),
    };
    let mut w = create(&out)?;
    sched.write_jsonl(&mut w)?;
    w.flush()?;
    log::info!("{} batches of {} ({} curriculum)", sched.batches.len(), batch, sched.phase_boundary);
    s.finish(&out)
}

#[derive(Args)]
pub struct TrainArgs {
    /// Corpus; training uses its train split and early stopping its val split.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// softmax or svm
    #[arg(long)]
    model: Option<ModelKind>,
    /// Word vectors (`word v1 ... vd` per line).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Dimension of hashed n-gram vectors when no embedding file is given.
    #[arg(long)]
    hashed_dim: Option<usize>,
    /// hashed or zero
    #[arg(long)]
    oov: Option<String>,
    #[arg(long)]
    hash_seed: Option<u64>,
    /// both or hypothesis-only
    #[arg(long)]
    mode: Option<FeatureMode>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dynamics_out: Option<PathBuf>,
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    model_json: Option<PathBuf>,
}

struct Features {
    ids: Vec<String>,
    x: Vec<Vec<f64>>,
    y: Vec<Relation>,
}

fn features(pairs: &[LabeledPair], table: &EmbeddingTable, mode: FeatureMode) -> Features {
    let f = trainer::featurize_all(pairs, table, mode);
    Features {
        ids: f.iter().map(|p| p.pair_id.clone()).collect(),
        x: f.into_iter().map(|p| p.vector).collect(),
        y: pairs.iter().map(|p| p.label).collect(),
    }
}

impl Features {
    fn dataset(&self) -> trainer::Dataset<'_> {
        trainer::Dataset { ids: &self.ids, x: &self.x, y: &self.y }
    }
}

pub fn train(a: TrainArgs, mut s: Settings) -> anyhow::Result<()> {
    let pairs: PathBuf = s.req(a.pairs, "pairs")?;
    let schedule_path: PathBuf = s.req(a.schedule, "schedule")?;
    let model_out: PathBuf = s.req(a.model_out, "model-out")?;
    let kind = s.or(a.model, "model", ModelKind::Softmax)?;
    let mode = s.or(a.mode, "mode", FeatureMode::Both)?;
    let base = TrainConfig::for_kind(kind);
    let cfg = TrainConfig {
        kind,
        lr: s.or(a.lr, "lr", base.lr)?,
        c: s.or(a.c, "c", base.c)?,
        tol: s.or(a.tol, "tol", base.tol)?,
        epochs: s.or(a.epochs, "epochs", base.epochs)?,
        max_epochs: s.or(a.max_epochs, "max-epochs", base.max_epochs)?,
        patience: s.or(a.patience, "patience", base.patience)?,
        seed: s.or(a.seed, "seed", base.seed)?,
    };
    s.input(&pairs)?;
    s.input(&schedule_path)?;
    s.manifest.seed("train", cfg.seed).param("config", serde_json::to_string(&cfg)?).param("mode", format!("{mode:?}"));
    let (table, digest) = embedding_table(&mut s, a.embeddings, a.hashed_dim, a.oov, a.hash_seed)?;

    let corpus = load_corpus(&pairs)?;
    let schedule = Schedule::read_jsonl(open(&schedule_path)?)?;
    let train_set = features(&split_pairs(&corpus, Split::Train), &table, mode);
    let val_pairs: Vec<LabeledPair> = corpus.pairs_in(Split::Val).cloned().collect();
    let val_set = (!val_pairs.is_empty()).then(|| features(&val_pairs, &table, mode));
    let out = trainer::train(
        train_set.dataset(),
        &schedule,
        &cfg,
        &Relation::ALL,
        val_set.as_ref().map(Features::dataset),
        None,
    )?;
    let mut model = out.model;
    model.features = Some(FeatureSpec { mode, dim: table.dim, oov: table.oov, embeddings_sha256: digest });

    let mut w = create(&model_out)?;
    trainer::write_model(&model, &mut w)?;
    w.flush()?;
    if let Some(p) = s.opt(a.model_json, "model-json")? {
        let mut w = create(&p)?;
        serde_json::to_writer_pretty(&mut w, &trainer::model_json(&model))?;
        w.flush()?;
        s.manifest.output(&p);
    }
    if let Some(p) = s.opt(a.dynamics_out, "dynamics-out")? {
        let mut w = create(&p)?;
        cartography::write_dynamics(&out.dynamics, &mut w)?;
        w.flush()?;
        s.manifest.output(&p);
    }
    for h in &out.history {
        log::info!(
            "epoch {} loss {:.5} train acc {:.4}{}",
            h.epoch,
            h.loss,
            h.train_accuracy,
            h.val_macro_f1.map_or(String::new(), |f| format!(" val macro-F1 {f:.4}"))
        );
    }
    log::info!("stopped: {:?}", out.stop);
    s.manifest.param("model_sha256", trainer::model_digest(&model)).param("stop", format!("{:?}", out.stop));
    s.finish(&model_out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub pair_id: String,
    pub label: Relation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probabilities: Vec<f64>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// train, val, test or all
    #[arg(long)]
    split: Option<String>,
    /// Must be the file the model was trained with.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn predict(a: PredictArgs, mut s: Settings) -> anyhow::Result<()> {
    let model_path: PathBuf = s.req(a.model, "model")?;
    let pairs: PathBuf = s.req(a.pairs, "pairs")?;
    let out: PathBuf = s.req(a.out, "out")?;
    let split = s.or(a.split, "split", "test".to_string())?;
    s.input(&model_path)?;
    s.input(&pairs)?;
    s.manifest.param("split", &split);

    let model = trainer::read_model(open(&model_path)?)?;
    let spec = model.features.clone().ok_or_else(|| anyhow!("model file carries no feature description"))?;
    let table = match (&spec.embeddings_sha256, s.opt(a.embeddings, "embeddings")?) {
        (None, _) => EmbeddingTable::empty(spec.dim, spec.oov),
        (Some(_), None) => bail!("this model was trained with an embedding file; pass --embeddings"),
        (Some(want), Some(p)) => {
            s.input(&p)?;
            let got = sha256_file(&p)?;
            if &got != want {
                bail!("{} does not match the embeddings the model was trained with", p.display());
            }
            trainer::load_embeddings_file(&p, spec.oov)?
        }
    };
    let corpus = load_corpus(&pairs)?;
    let selected: Vec<LabeledPair> = match split.as_str() {
        "all" => corpus.pairs.clone(),
        name => corpus.pairs_in(name.parse().map_err(|e: String| anyhow!(e))?).cloned().collect(),
    };
    let mut w = create(&out)?;
    for f in trainer::featurize_all(&selected, &table, spec.mode) {
        let (label, probabilities) = model.predict(&f.vector);
        serde_json::to_writer(&mut w, &Prediction { pair_id: f.pair_id, label, probabilities })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    log::info!("{} predictions", selected.len());
    s.finish(&out)
}

fn read_predictions(path: &Path) -> anyhow::Result<HashMap<String, Relation>> {
    let mut out = HashMap::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if out.insert(p.pair_id.clone(), p.label).is_some() {
            bail!("{}: duplicate prediction for {}", path.display(), p.pair_id);
        }
    }
    Ok(out)
}

/// Gold labels in corpus order, restricted to `split` unless it is `all`.
fn gold_labels(path: &Path, split: &str) -> anyhow::Result<Vec<(String, Relation)>> {
    let corpus = load_corpus(path)?;
    let keep: Box<dyn Fn(&LabeledPair) -> bool> = match split {
        "all" => Box::new(|_| true),
        name => {
            let sp: Split = name.parse().map_err(|e: String| anyhow!(e))?;
            let c = &corpus;
            Box::new(move |p| c.split_of(&p.pair_id) == sp)
        }
    };
    Ok(corpus.pairs.iter().filter(|p| keep(p)).map(|p| (p.pair_id.clone(), p.label)).collect())
}

fn aligned(
    gold: &[(String, Relation)],
    pred: &HashMap<String, Relation>,
    path: &Path,
) -> anyhow::Result<Vec<Relation>> {
    gold.iter()
        .map(|(id, _)| pred.get(id).copied().ok_or_else(|| anyhow!("{} has no prediction for {id}", path.display())))
        .collect()
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Gold split to score (default: all pairs in the gold file).
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn eval(a: EvalArgs, mut s: Settings) -> anyhow::Result<()> {
    let gold_path: PathBuf = s.req(a.gold, "gold")?;
    let pred_path: PathBuf = s.req(a.pred, "pred")?;
    let report_path: PathBuf = s.req(a.report, "report")?;
    let split = s.or(a.split, "split", "all".to_string())?;
    s.input(&gold_path)?;
    s.input(&pred_path)?;
    s.manifest.param("split", &split);

    let gold = gold_labels(&gold_path, &split)?;
    let pred = aligned(&gold, &read_predictions(&pred_path)?, &pred_path)?;
    let g: Vec<Relation> = gold.iter().map(|(_, r)| *r).collect();
    let report = eval::classification_report(&g, &pred, &Relation::ALL)?;
    let mut w = create(&report_path)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    println!("n={} micro-F1={:.4} macro-F1={:.4}", report.n, report.micro_f1, report.macro_f1);
    for m in &report.per_class {
        println!(
            "{:<12} P={:.4} R={:.4} F1={:.4} support={}",
            m.class.as_str(),
            m.precision,
            m.recall,
            m.f1,
            m.support
        );
    }
    s.finish(&report_path)
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pred_a: Option<PathBuf>,
    #[arg(long)]
    pred_b: Option<PathBuf>,
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
    /// cochran, mannwhitney, mcnemar
    #[arg(long)]
    tests: Option<List<String>>,
    /// Per-run scores for system A, one number per line; Mann-Whitney uses
    /// these instead of per-example correctness when both are given.
    #[arg(long)]
    sample_a: Option<PathBuf>,
    #[arg(long)]
    sample_b: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn read_sample(path: &Path) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(line.trim().parse().with_context(|| format!("{}:{}", path.display(), i + 1))?);
        }
    }
    Ok(out)
}

pub fn compare(a: CompareArgs, mut s: Settings) -> anyhow::Result<()> {
    let pa: PathBuf = s.req(a.pred_a, "pred-a")?;
    let pb: PathBuf = s.req(a.pred_b, "pred-b")?;
    let gold_path: PathBuf = s.req(a.gold, "gold")?;
    let report_path: PathBuf = s.req(a.report, "report")?;
    let split = s.or(a.split, "split", "all".to_string())?;
    let tests = s.or(a.tests, "tests", List(vec!["cochran".to_string(), "mannwhitney".to_string()]))?;
    for p in [&pa, &pb, &gold_path] {
        s.input(p)?;
    }
    s.manifest.param("tests", &tests).param("split", &split);

    let gold = gold_labels(&gold_path, &split)?;
    let ra = aligned(&gold, &read_predictions(&pa)?, &pa)?;
    let rb = aligned(&gold, &read_predictions(&pb)?, &pb)?;
    let ca: Vec<u8> = gold.iter().zip(&ra).map(|((_, g), p)| u8::from(g == p)).collect();
    let cb: Vec<u8> = gold.iter().zip(&rb).map(|((_, g), p)| u8::from(g == p)).collect();

    let mut results: BTreeMap<String, TestResult> = BTreeMap::new();
    for t in &tests.0 {
        let r = match t.as_str() {
            "cochran" => {
                let rows: Vec<Vec<u8>> = ca.iter().zip(&cb).map(|(x, y)| vec![*x, *y]).collect();
                eval::cochran_q(&rows)?
            }
            "mcnemar" => eval::mcnemar(&ca, &cb)?,
            "mannwhitney" => {
                let (xa, xb) = match (s.opt(a.sample_a.clone(), "sample-a")?, s.opt(a.sample_b.clone(), "sample-b")?) {
                    (Some(x), Some(y)) => {
                        s.input(&x)?;
                        s.input(&y)?;
                        (read_sample(&x)?, read_sample(&y)?)
                    }
                    (None, None) => {
                        (ca.iter().map(|v| f64::from(*v)).collect(), cb.iter().map(|v| f64::from(*v)).collect())
                    }
                    _ => bail!("--sample-a and --sample-b go together"),
                };
                let mode = if xa.len() * xb.len() <= EXACT_LIMIT { MwMode::Exact } else { MwMode::Normal };
                eval::mann_whitney_u(&xa, &xb, mode)?
            }
            other => bail!("unknown test {other:?} (cochran|mannwhitney|mcnemar)"),
        };
        println!("{:<12} statistic={:.6} p={:.6}", t, r.statistic, r.p_value);
        results.insert(t.clone(), r);
    }
    let acc = |c: &[u8]| c.iter().map(|v| f64::from(*v)).sum::<f64>() / c.len().max(1) as f64;
    let doc = serde_json::json!({
        "n": gold.len(),
        "accuracy_a": acc(&ca),
        "accuracy_b": acc(&cb),
        "tests": results,
    });
    let mut w = create(&report_path)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    let distinct: HashSet<&str> = tests.0.iter().map(String::as_str).collect();
    if distinct.len() != tests.0.len() {
        log::warn!("repeated test names in --tests");
    }
    s.finish(&report_path)
}
