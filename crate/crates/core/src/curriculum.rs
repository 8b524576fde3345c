//! Difficulty scoring and batch schedules.
//!
//! A [`Schedule`] is a fixed list of batches of example ids. Curriculum
//! strategies put easier examples first; the batches from `phase_boundary`
//! on form the standard (uniform) phase.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::relation::Relation;

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("difficulty inputs must lie in [0, 1], got c={c}, v={v}")]
    Domain { c: f64, v: f64 },
    #[error("invalid pacing config: {0}")]
    Config(String),
    #[error("group {0} is empty")]
    EmptyGroup(&'static str),
    #[error("class {0} has no examples in the pool")]
    EmptyClass(Relation),
    #[error("no score for pool example {0}")]
    MissingScore(String),
    #[error("no label for pool example {0}")]
    MissingLabel(String),
    #[error("batch size {batch_size} is not divisible by {classes} classes; use a multiple of {classes}")]
    Indivisible { batch_size: usize, classes: usize },
    #[error("empty pool")]
    EmptyPool,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schedule line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Combined difficulty of an example from its confidence `c` and
/// variability `v`: `1 - c + v` when `c > 0.5`, otherwise `3 - c - v`.
/// The result lies in `[0, 3]`; lower is easier.
pub fn difficulty_score(c: f64, v: f64) -> Result<f64, ScheduleError> {
    if !(0.0..=1.0).contains(&c) || !(0.0..=1.0).contains(&v) {
        return Err(ScheduleError::Domain { c, v });
    }
    Ok(if c > 0.5 { 1.0 - c + v } else { 3.0 - c - v })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Pacing {
    /// Availability grows by `n / T_cur` examples per batch.
    Linear,
    /// Availability grows in `steps` equal jumps.
    Step { steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacingConfig {
    /// Total number of batches `N`.
    pub total_batches: usize,
    pub batch_size: usize,
    pub curriculum_fraction: f64,
    pub pacing: Pacing,
    pub seed: u64,
}

impl PacingConfig {
    pub fn new(total_batches: usize, batch_size: usize, seed: u64) -> Self {
        PacingConfig { total_batches, batch_size, curriculum_fraction: 0.5, pacing: Pacing::Linear, seed }
    }

    fn validate(&self) -> Result<(), ScheduleError> {
        if self.total_batches == 0 || self.batch_size == 0 {
            return Err(ScheduleError::Config("total batches and batch size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.curriculum_fraction) {
            return Err(ScheduleError::Config(format!(
                "curriculum fraction {} outside [0, 1]",
                self.curriculum_fraction
            )));
        }
        if let Pacing::Step { steps: 0 } = self.pacing {
            return Err(ScheduleError::Config("step pacing needs at least one step".into()));
        }
        Ok(())
    }

    /// Number of curriculum batches, `ceil(fraction * N)`.
    pub fn curriculum_batches(&self) -> usize {
        ((self.curriculum_fraction * self.total_batches as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

/// Size of the easiest-first prefix open to batch `t` (1-based) of `t_cur`.
pub fn availability(pacing: Pacing, t: usize, t_cur: usize, n: usize) -> usize {
    let frac = match pacing {
        Pacing::Linear => t as f64 / t_cur as f64,
        Pacing::Step { steps } => {
            let step = ((t * steps) as f64 / t_cur as f64 - 1e-9).ceil();
            step / steps as f64
        }
    };
    ((frac * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMeta {
    pub strategy: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub batches: Vec<Vec<String>>,
    /// Index of the first standard-phase batch.
    pub phase_boundary: usize,
    pub meta: ScheduleMeta,
}

#[derive(Serialize, Deserialize)]
struct BatchLine {
    batch: usize,
    phase: Phase,
    ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Curriculum,
    Standard,
}

impl Schedule {
    pub fn phase_of(&self, batch: usize) -> Phase {
        if batch < self.phase_boundary {
            Phase::Curriculum
        } else {
            Phase::Standard
        }
    }

    /// One JSON object per batch.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, ids) in self.batches.iter().enumerate() {
            let line = BatchLine { batch: i, phase: self.phase_of(i), ids: ids.clone() };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    /// Reads a schedule file. Metadata is not stored in the file; the
    /// returned strategy is `"file"`.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, ScheduleError> {
        let mut batches = Vec::new();
        let mut boundary = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = |message: String| ScheduleError::Parse { line: i + 1, message };
            let b: BatchLine = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
            if b.batch != batches.len() {
                return Err(parse(format!("expected batch {}, found {}", batches.len(), b.batch)));
            }
            match (b.phase, boundary) {
                (Phase::Standard, None) => boundary = Some(batches.len()),
                (Phase::Curriculum, Some(_)) => return Err(parse("curriculum batch after standard phase".into())),
                _ => {}
            }
            batches.push(b.ids);
        }
        let phase_boundary = boundary.unwrap_or(batches.len());
        Ok(Schedule {
            batches,
            phase_boundary,
            meta: ScheduleMeta { strategy: "file".into(), seed: 0, params: BTreeMap::new() },
        })
    }
}

/// Shuffled pass over a list; reshuffles when exhausted.
#[derive(Debug, Clone)]
pub struct CyclingSampler {
    items: Vec<String>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl CyclingSampler {
    pub fn new(items: Vec<String>, seed: u64) -> Self {
        let mut s = CyclingSampler { items, pos: 0, rng: ChaCha8Rng::seed_from_u64(seed) };
        s.items.shuffle(&mut s.rng);
        s
    }

    /// Consumes `items` in the given order first, then cycles through
    /// reshuffled passes.
    pub fn ordered(items: Vec<String>, seed: u64) -> Self {
        CyclingSampler { items, pos: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn take(&mut self, k: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            if self.pos == self.items.len() {
                self.items.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.items[self.pos].clone());
            self.pos += 1;
        }
        out
    }
}

fn meta(strategy: &str, cfg: &PacingConfig) -> ScheduleMeta {
    let mut params = BTreeMap::new();
    params.insert("total_batches".into(), cfg.total_batches.to_string());
    params.insert("batch_size".into(), cfg.batch_size.to_string());
    params.insert("curriculum_fraction".into(), cfg.curriculum_fraction.to_string());
    params.insert("pacing".into(), format!("{:?}", cfg.pacing).to_lowercase());
    ScheduleMeta { strategy: strategy.into(), seed: cfg.seed, params }
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9)) ^ stream
}

/// `N` uniform batches over `pool` (shuffled passes, reshuffled when
/// exhausted). No curriculum phase.
pub fn schedule_standard(pool: &[String], cfg: &PacingConfig) -> Result<Schedule, ScheduleError> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(ScheduleError::EmptyPool);
    }
    let mut sampler = CyclingSampler::new(pool.to_vec(), sub_seed(cfg.seed, 0));
    let batches = (0..cfg.total_batches).map(|_| sampler.take(cfg.batch_size)).collect();
    Ok(Schedule { batches, phase_boundary: 0, meta: meta("standard", cfg) })
}

/// Example ids per cartography group, usually oversampled.
#[derive(Debug, Clone, Default)]
pub struct GroupPools {
    pub easy: Vec<String>,
    pub ambiguous: Vec<String>,
    pub hard: Vec<String>,
}

/// `floor(N/4)` batches from the easy group, `floor(N/4)` from the
/// ambiguous group and the rest from the hard group. The whole schedule is
/// curriculum; `phase_boundary == N`.
pub fn schedule_cart_cl(groups: &GroupPools, cfg: &PacingConfig) -> Result<Schedule, ScheduleError> {
    cfg.validate()?;
    for (name, pool) in [("E2L", &groups.easy), ("A", &groups.ambiguous), ("H2L", &groups.hard)] {
        if pool.is_empty() {
            return Err(ScheduleError::EmptyGroup(name));
        }
    }
    let n = cfg.total_batches;
    let quarter = n / 4;
    let mut batches = Vec::with_capacity(n);
    for (stream, (pool, count)) in
        [(&groups.easy, quarter), (&groups.ambiguous, quarter), (&groups.hard, n - 2 * quarter)].into_iter().enumerate()
    {
        let mut sampler = CyclingSampler::new(pool.clone(), sub_seed(cfg.seed, stream as u64 + 1));
        batches.extend((0..count).map(|_| sampler.take(cfg.batch_size)));
    }
    Ok(Schedule { batches, phase_boundary: n, meta: meta("cart", cfg) })
}

/// Pool sorted by ascending score, ties by id. Duplicates in the pool stay.
pub fn sort_by_score(pool: &[String], scores: &HashMap<String, f64>) -> Result<Vec<String>, ScheduleError> {
    let mut keyed = Vec::with_capacity(pool.len());
    for id in pool {
        let s = *scores.get(id).ok_or_else(|| ScheduleError::MissingScore(id.clone()))?;
        keyed.push((s, id));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(keyed.into_iter().map(|(_, id)| id.clone()).collect())
}

/// Easy-to-hard schedule over a scalar score (lower = easier).
///
/// Curriculum batch `t` (1-based) draws uniformly from the easiest
/// [`availability`] examples; the remaining batches draw uniformly from
/// the whole pool.
pub fn schedule_scored(
    strategy: &str,
    pool: &[String],
    scores: &HashMap<String, f64>,
    cfg: &PacingConfig,
) -> Result<Schedule, ScheduleError> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(ScheduleError::EmptyPool);
    }
    let ordered = sort_by_score(pool, scores)?;
    let n = ordered.len();
    let t_cur = cfg.curriculum_batches().min(cfg.total_batches);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 10));
    let mut batches = Vec::with_capacity(cfg.total_batches);
    for t in 1..=t_cur {
        let avail = availability(cfg.pacing, t, t_cur, n);
        batches.push(draw_uniform(&ordered[..avail], cfg.batch_size, &mut rng));
    }
    let mut standard = CyclingSampler::new(pool.to_vec(), sub_seed(cfg.seed, 11));
    batches.extend((t_cur..cfg.total_batches).map(|_| standard.take(cfg.batch_size)));
    let mut m = meta(strategy, cfg);
    m.params.insert("curriculum_batches".into(), t_cur.to_string());
    Ok(Schedule { batches, phase_boundary: t_cur, meta: m })
}

/// `k` draws from `items`: without replacement when possible, otherwise
/// whole shuffled passes followed by a partial one.
fn draw_uniform(items: &[String], k: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let need = k - out.len();
        if need >= items.len() {
            let mut all = items.to_vec();
            all.shuffle(rng);
            out.extend(all);
        } else {
            out.extend(items.choose_multiple(rng, need).cloned());
        }
    }
    out
}

/// Class-balanced easy-to-hard schedule.
///
/// Every batch holds `batch_size / K` examples of each class. In the
/// curriculum phase each class is consumed in ascending score order, then
/// reshuffled whenever exhausted; the standard phase draws each class's
/// share from shuffled passes.
pub fn schedule_cart_stra_clpp(
    pool: &[String],
    scores: &HashMap<String, f64>,
    labels: &HashMap<String, Relation>,
    classes: &[Relation],
    cfg: &PacingConfig,
) -> Result<Schedule, ScheduleError> {
    cfg.validate()?;
    let k = classes.len();
    if k == 0 || !cfg.batch_size.is_multiple_of(k) {
        return Err(ScheduleError::Indivisible { batch_size: cfg.batch_size, classes: k });
    }
    let per = cfg.batch_size / k;
    let mut by_class: Vec<Vec<String>> = vec![Vec::new(); k];
    for id in pool {
        let label = labels.get(id).ok_or_else(|| ScheduleError::MissingLabel(id.clone()))?;
        if let Some(ci) = classes.iter().position(|c| c == label) {
            by_class[ci].push(id.clone());
        }
    }
    if let Some(ci) = by_class.iter().position(Vec::is_empty) {
        return Err(ScheduleError::EmptyClass(classes[ci]));
    }
    let t_cur = cfg.curriculum_batches().min(cfg.total_batches);
    let mut curriculum = Vec::with_capacity(k);
    let mut standard = Vec::with_capacity(k);
    for (ci, ids) in by_class.iter().enumerate() {
        curriculum.push(CyclingSampler::ordered(sort_by_score(ids, scores)?, sub_seed(cfg.seed, 20 + ci as u64)));
        standard.push(CyclingSampler::new(ids.clone(), sub_seed(cfg.seed, 40 + ci as u64)));
    }
    let mut batches = Vec::with_capacity(cfg.total_batches);
    for t in 0..cfg.total_batches {
        let samplers = if t < t_cur { &mut curriculum } else { &mut standard };
        batches.push(samplers.iter_mut().flat_map(|s| s.take(per)).collect());
    }
    let mut m = meta("cartstrapp", cfg);
    m.params.insert("classes".into(), classes.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(","));
    Ok(Schedule { batches, phase_boundary: t_cur, meta: m })
}

/// Length-curriculum score: premise plus hypothesis word count.
pub fn length_score(premise: &str, hypothesis: &str) -> f64 {
    (crate::text::words(premise).count() + crate::text::words(hypothesis).count()) as f64
}

/// Similarity-curriculum score: negated similarity, so the most similar
/// pairs come first.
pub fn sts_score(similarity: f64) -> f64 {
    -similarity
}
