//! Corpus persistence, stratified splitting, per-split statistics and
//! class-balancing oversampling.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::labeler::LabeledPair;
use crate::relation::Relation;
use crate::text::words;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    Ratios([f64; 3]),
    #[error("cannot balance: class {0} has no training pairs")]
    EmptyClass(Relation),
    #[error("split assignment references unknown pair {0}")]
    UnknownPair(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[serde(alias = "validation", alias = "dev")]
    Val,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub const ASSIGNABLE: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "validation" | "dev" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub pairs: Vec<LabeledPair>,
    pub split: HashMap<String, Split>,
}

impl Corpus {
    pub fn new(pairs: Vec<LabeledPair>) -> Self {
        Corpus { pairs, split: HashMap::new() }
    }

    pub fn split_of(&self, pair_id: &str) -> Split {
        self.split.get(pair_id).copied().unwrap_or_default()
    }

    pub fn pairs_in(&self, split: Split) -> impl Iterator<Item = &LabeledPair> {
        self.pairs.iter().filter(move |p| self.split_of(&p.pair_id) == split)
    }

    /// Every assigned id must name a pair in the corpus.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let ids: HashSet<&str> = self.pairs.iter().map(|p| p.pair_id.as_str()).collect();
        match self.split.keys().find(|k| !ids.contains(k.as_str())) {
            Some(k) => Err(CorpusError::UnknownPair(k.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitReport {
    /// Classes too small to spread over every split with a positive ratio;
    /// all of their pairs went to train.
    pub undersized_classes: Vec<Relation>,
}

/// Per-class seeded shuffle followed by largest-remainder allocation.
///
/// Quotas are `n_c · ratio_s`; floors are assigned first and the leftover
/// pairs go to the splits with the largest fractional parts (ties in
/// train, val, test order).
pub fn stratified_split(corpus: &mut Corpus, ratios: [f64; 3], seed: u64) -> Result<SplitReport, CorpusError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(CorpusError::Ratios(ratios));
    }
    let active = ratios.iter().filter(|r| **r > 0.0).count();
    let mut report = SplitReport::default();
    let mut assignment = HashMap::with_capacity(corpus.pairs.len());
    for class in Relation::ALL {
        let mut ids: Vec<&str> = corpus.pairs.iter().filter(|p| p.label == class).map(|p| p.pair_id.as_str()).collect();
        if ids.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((class.index() as u64 + 1) << 56));
        ids.shuffle(&mut rng);
        let counts = if ids.len() < active {
            log::warn!("class {class} has {} pairs, fewer than {active} splits; all go to train", ids.len());
            report.undersized_classes.push(class);
            [ids.len(), 0, 0]
        } else {
            largest_remainder(ids.len(), ratios)
        };
        let mut it = ids.into_iter();
        for (split, n) in Split::ASSIGNABLE.into_iter().zip(counts) {
            for id in it.by_ref().take(n) {
                assignment.insert(id.to_string(), split);
            }
        }
    }
    corpus.split = assignment;
    Ok(report)
}

/// Integer allocation of `n` items over `ratios` by largest remainder.
pub fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| n as f64 * r);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellStats {
    pub count: usize,
    /// `None` when the cell is empty.
    pub avg_premise_words: Option<f64>,
    pub avg_hypothesis_words: Option<f64>,
    pub avg_overlap_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    /// Keyed by split, then by class; `None` class is the overall row.
    pub cells: BTreeMap<Split, BTreeMap<Option<Relation>, CellStats>>,
    pub total: usize,
}

fn word_set(text: &str) -> HashSet<String> {
    words(text).collect()
}

/// Jaccard overlap of lowercased, punctuation-stripped word sets.
/// Two empty sets count as identical.
pub fn overlap_ratio(premise: &str, hypothesis: &str) -> f64 {
    let (a, b) = (word_set(premise), word_set(hypothesis));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[derive(Default, Clone, Copy)]
struct Acc {
    n: usize,
    premise: f64,
    hypothesis: f64,
    overlap: f64,
}

impl Acc {
    fn add(&mut self, p: &LabeledPair) {
        self.n += 1;
        self.premise += words(&p.premise).count() as f64;
        self.hypothesis += words(&p.hypothesis).count() as f64;
        self.overlap += overlap_ratio(&p.premise, &p.hypothesis);
    }

    fn merge(&mut self, o: &Acc) {
        self.n += o.n;
        self.premise += o.premise;
        self.hypothesis += o.hypothesis;
        self.overlap += o.overlap;
    }

    fn finish(&self) -> CellStats {
        let avg = |s: f64| (self.n > 0).then(|| s / self.n as f64);
        CellStats {
            count: self.n,
            avg_premise_words: avg(self.premise),
            avg_hypothesis_words: avg(self.hypothesis),
            avg_overlap_ratio: avg(self.overlap),
        }
    }
}

pub fn compute_stats(corpus: &Corpus) -> CorpusStats {
    let mut acc: BTreeMap<(Split, Relation), Acc> = BTreeMap::new();
    for p in &corpus.pairs {
        acc.entry((corpus.split_of(&p.pair_id), p.label)).or_default().add(p);
    }
    let mut splits: Vec<Split> = Split::ASSIGNABLE.to_vec();
    if acc.keys().any(|(s, _)| *s == Split::Unassigned) {
        splits.push(Split::Unassigned);
    }
    let mut cells = BTreeMap::new();
    for split in splits {
        let mut row = BTreeMap::new();
        let mut overall = Acc::default();
        for class in Relation::ALL {
            let a = acc.get(&(split, class)).copied().unwrap_or_default();
            overall.merge(&a);
            row.insert(Some(class), a.finish());
        }
        row.insert(None, overall.finish());
        cells.insert(split, row);
    }
    CorpusStats { cells, total: corpus.pairs.len() }
}

impl CorpusStats {
    /// Plain-text report per split: one row per class plus an overall
    /// row; columns grouped as counts, premise words, hypothesis words and
    /// overlap, each per split.
    pub fn render_table(&self) -> String {
        let splits: Vec<Split> = self.cells.keys().copied().collect();
        let mut out = String::new();
        let header: Vec<String> = ["#Samples", "Premise", "Hypothesis", "Overlap"]
            .iter()
            .flat_map(|g| splits.iter().map(move |s| format!("{g}:{}", s.as_str())))
            .collect();
        let _ = writeln!(out, "{:<12} {}", "Relation", header.join("\t"));
        let rows: Vec<Option<Relation>> = Relation::ALL.iter().copied().map(Some).chain([None]).collect();
        for class in rows {
            let name = class.map_or("overall".to_string(), |c| c.to_string());
            let cell = |s: &Split| self.cells[s][&class];
            let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
            let mut cols: Vec<String> = splits.iter().map(|s| cell(s).count.to_string()).collect();
            cols.extend(splits.iter().map(|s| fmt(cell(s).avg_premise_words, 1)));
            cols.extend(splits.iter().map(|s| fmt(cell(s).avg_hypothesis_words, 1)));
            cols.extend(splits.iter().map(|s| fmt(cell(s).avg_overlap_ratio, 2)));
            let _ = writeln!(out, "{:<12} {}", name, cols.join("\t"));
        }
        out
    }
}

/// Balances classes by drawing extra copies with replacement.
///
/// Returns every original id in input order followed by the added copies,
/// class by class. Each class in `classes` ends up with the majority count.
pub fn oversample(train: &[&LabeledPair], classes: &[Relation], seed: u64) -> Result<Vec<String>, CorpusError> {
    let mut by_class: BTreeMap<Relation, Vec<&str>> = classes.iter().map(|c| (*c, Vec::new())).collect();
    for p in train {
        if let Some(v) = by_class.get_mut(&p.label) {
            v.push(&p.pair_id);
        }
    }
    if let Some((c, _)) = by_class.iter().find(|(_, v)| v.is_empty()) {
        return Err(CorpusError::EmptyClass(*c));
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    let mut out: Vec<String> = train.iter().map(|p| p.pair_id.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ids in by_class.values() {
        for _ in ids.len()..target {
            out.push(ids[rng.random_range(0..ids.len())].to_string());
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct RecordOut<'a> {
    #[serde(flatten)]
    pair: &'a LabeledPair,
    split: Split,
}

#[derive(Deserialize)]
struct RecordIn {
    #[serde(flatten)]
    pair: LabeledPair,
    #[serde(default)]
    split: Split,
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<(), CorpusError> {
    for pair in &corpus.pairs {
        let rec = RecordOut { pair, split: corpus.split_of(&pair.pair_id) };
        serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordIn =
            serde_json::from_str(&line).map_err(|e| CorpusError::Row { line: i + 1, message: e.to_string() })?;
        if rec.split != Split::Unassigned {
            corpus.split.insert(rec.pair.pair_id.clone(), rec.split);
        }
        corpus.pairs.push(rec.pair);
    }
    Ok(corpus)
}

pub fn read_corpus_file(path: &Path) -> Result<Corpus, CorpusError> {
    let f = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(f))
}

pub fn write_corpus_file(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let f = std::fs::File::create(path)?;
    write_corpus(corpus, std::io::BufWriter::new(f))
}

/// Writes `premise\thypothesis\tlabel` rows with a header.
pub fn write_tsv<W: Write>(pairs: &[LabeledPair], out: W) -> Result<(), CorpusError> {
    // Unquoted TSV: tabs and newlines inside fields become spaces.
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').quote_style(csv::QuoteStyle::Never).from_writer(out);
    let io = |e: csv::Error| CorpusError::Io(std::io::Error::other(e));
    let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
    w.write_record(["pair_id", "premise", "hypothesis", "label"]).map_err(io)?;
    for p in pairs {
        w.write_record([clean(&p.pair_id), clean(&p.premise), clean(&p.hypothesis), p.label.as_str().to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

const PREMISE_COLS: &[&str] = &["premise", "sentence1"];
const HYPOTHESIS_COLS: &[&str] = &["hypothesis", "sentence2"];
const LABEL_COLS: &[&str] = &["label", "gold_label", "manual_label"];
const AUTO_COLS: &[&str] = &["auto_label", "automatic_label"];
const ID_COLS: &[&str] = &["pair_id", "id", "guid"];

/// Reads delimited interchange files: the TSV export, released corpus files
/// and SciNLI-style files.
///
/// With a header row, columns are located by name (`premise`/`sentence1`,
/// `hypothesis`/`sentence2`, `label`/`gold_label`, optional `auto_label` and
/// `pair_id`/`id`). Without one, the first three columns are premise,
/// hypothesis and label. Pair ids default to `<prefix>-<row>`.
pub fn read_delimited<R: std::io::Read>(
    input: R,
    delimiter: u8,
    id_prefix: &str,
) -> Result<Vec<LabeledPair>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .quoting(delimiter != b'\t')
        .from_reader(input);
    let mut records = rdr.records();
    let mut out = Vec::new();
    let row_err = |line: usize, message: String| CorpusError::Row { line, message };

    let Some(first) = records.next() else { return Ok(out) };
    let first = first.map_err(|e| row_err(1, e.to_string()))?;
    let lower: Vec<String> = first.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let find = |names: &[&str]| lower.iter().position(|h| names.contains(&h.as_str()));
    let (cols, data_start) = match (find(PREMISE_COLS), find(HYPOTHESIS_COLS), find(LABEL_COLS)) {
        (Some(p), Some(h), Some(l)) => ((p, h, l, find(AUTO_COLS), find(ID_COLS)), None),
        _ => ((0, 1, 2, None, None), Some(first)),
    };
    let (pc, hc, lc, ac, ic) = cols;
    let mut line = if data_start.is_some() { 0 } else { 1 };
    for rec in data_start.into_iter().map(Ok).chain(records) {
        line += 1;
        let rec = rec.map_err(|e| row_err(line, e.to_string()))?;
        let field =
            |i: usize| rec.get(i).map(str::trim).ok_or_else(|| row_err(line, format!("missing column {}", i + 1)));
        let label_str = field(lc)?;
        let label = label_str.parse::<Relation>().map_err(|e| row_err(line, e.to_string()))?;
        let auto_label = match ac.map(field).transpose()? {
            Some(s) if !s.is_empty() => Some(s.parse::<Relation>().map_err(|e| row_err(line, e.to_string()))?),
            _ => None,
        };
        let pair_id = match ic.map(field).transpose()? {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => format!("{id_prefix}-{line}"),
        };
        out.push(LabeledPair {
            pair_id,
            premise: field(pc)?.to_string(),
            hypothesis: field(hc)?.to_string(),
            label,
            cue: None,
            source: None,
            auto_label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn pair(id: &str, label: Relation, premise: &str, hypothesis: &str) -> LabeledPair {
        LabeledPair {
            pair_id: id.into(),
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            label,
            cue: None,
            source: None,
            auto_label: None,
        }
    }

    fn corpus_with(counts: &[(Relation, usize)]) -> Corpus {
        let mut pairs = Vec::new();
        for (c, n) in counts {
            for i in 0..*n {
                pairs.push(pair(&format!("{c}-{i}"), *c, "a b", "c d"));
            }
        }
        Corpus::new(pairs)
    }

    fn split_counts(c: &Corpus, split: Split) -> HashMap<Relation, usize> {
        let mut m = HashMap::new();
        for p in c.pairs_in(split) {
            *m.entry(p.label).or_default() += 1;
        }
        m
    }

    #[test]
    fn largest_remainder_by_hand() {
        // 6 * (0.8, 0, 0.2) = (4.8, 0, 1.2) -> floors (4, 0, 1), +1 to train
        assert_eq!(largest_remainder(6, [0.8, 0.0, 0.2]), [5, 0, 1]);
        // 4 * (0.8, 0, 0.2) = (3.2, 0, 0.8) -> floors (3, 0, 0), +1 to test
        assert_eq!(largest_remainder(4, [0.8, 0.0, 0.2]), [3, 0, 1]);
        // 4 * (0.7, 0.1, 0.2) = (2.8, 0.4, 0.8): tie between train and test resolved in split order
        assert_eq!(largest_remainder(4, [0.7, 0.1, 0.2]), [3, 0, 1]);
        assert_eq!(largest_remainder(0, [0.8, 0.1, 0.1]), [0, 0, 0]);
    }

    #[test]
    fn ten_pair_split() {
        let mut c = corpus_with(&[(Relation::Neutral, 6), (Relation::Reasoning, 4)]);
        stratified_split(&mut c, [0.8, 0.0, 0.2], 7).unwrap();
        let test = split_counts(&c, Split::Test);
        assert_eq!(test.get(&Relation::Neutral), Some(&1));
        assert_eq!(test.get(&Relation::Reasoning), Some(&1));
        assert_eq!(c.pairs_in(Split::Train).count(), 8);
    }

    #[test]
    fn all_train() {
        let mut c = corpus_with(&[(Relation::Neutral, 6), (Relation::Reasoning, 4)]);
        stratified_split(&mut c, [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(c.pairs_in(Split::Train).count(), 10);
    }

    #[test]
    fn split_is_seed_deterministic() {
        let mut a = corpus_with(&[(Relation::Neutral, 30), (Relation::Contrastive, 7)]);
        let mut b = a.clone();
        stratified_split(&mut a, [0.8, 0.1, 0.1], 42).unwrap();
        stratified_split(&mut b, [0.8, 0.1, 0.1], 42).unwrap();
        assert_eq!(a.split, b.split);
        let mut c = a.clone();
        stratified_split(&mut c, [0.8, 0.1, 0.1], 43).unwrap();
        assert_ne!(a.split, c.split);
    }

    #[test]
    fn undersized_class_goes_to_train() {
        let mut c = corpus_with(&[(Relation::Neutral, 30), (Relation::Entailment, 2)]);
        let report = stratified_split(&mut c, [0.8, 0.1, 0.1], 0).unwrap();
        assert_eq!(report.undersized_classes, [Relation::Entailment]);
        assert_eq!(split_counts(&c, Split::Train)[&Relation::Entailment], 2);
    }

    #[test]
    fn bad_ratios_rejected() {
        let mut c = corpus_with(&[(Relation::Neutral, 3)]);
        assert!(stratified_split(&mut c, [0.5, 0.2, 0.2], 0).is_err());
        assert!(stratified_split(&mut c, [1.2, -0.2, 0.0], 0).is_err());
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap_ratio("a b c", "b c d"), 0.5);
        assert_eq!(overlap_ratio("Roma e mare.", "Roma e mare."), 1.0);
        assert_eq!(overlap_ratio("A, b!", "a B"), 1.0);
    }

    #[test]
    fn stats_per_cell_and_empty_cells() {
        let mut c = Corpus::new(vec![
            pair("1", Relation::Neutral, "a b c", "b c d"),
            pair("2", Relation::Neutral, "a b", "a b"),
            pair("3", Relation::Reasoning, "x y z w", "q"),
        ]);
        c.split.insert("1".into(), Split::Train);
        c.split.insert("2".into(), Split::Train);
        c.split.insert("3".into(), Split::Test);
        let s = compute_stats(&c);
        let n = s.cells[&Split::Train][&Some(Relation::Neutral)];
        assert_eq!(n.count, 2);
        assert_eq!(n.avg_premise_words, Some(2.5));
        assert_eq!(n.avg_hypothesis_words, Some(2.5));
        assert_eq!(n.avg_overlap_ratio, Some(0.75));
        let empty = s.cells[&Split::Val][&None];
        assert_eq!(empty.count, 0);
        assert_eq!(empty.avg_premise_words, None);
        let total: usize = s.cells.values().map(|row| row[&None].count).sum();
        assert_eq!(total, 3);
        assert!(s.render_table().contains("overall"));
    }

    #[test]
    fn oversample_balances() {
        let c = corpus_with(&[
            (Relation::Contrastive, 4),
            (Relation::Entailment, 2),
            (Relation::Reasoning, 1),
            (Relation::Neutral, 1),
        ]);
        let refs: Vec<&LabeledPair> = c.pairs.iter().collect();
        let ids = oversample(&refs, &Relation::ALL, 3).unwrap();
        assert_eq!(ids.len(), 16);
        let label: HashMap<&str, Relation> = c.pairs.iter().map(|p| (p.pair_id.as_str(), p.label)).collect();
        let mut counts = HashMap::new();
        for id in &ids {
            *counts.entry(label[id.as_str()]).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&n| n == 4));
        assert_eq!(&ids[..8], &refs.iter().map(|p| p.pair_id.clone()).collect::<Vec<_>>()[..]);
        let mut again = oversample(&refs, &Relation::ALL, 3).unwrap();
        let mut first = ids.clone();
        first.sort();
        again.sort();
        assert_eq!(first, again);
    }

    #[test]
    fn oversample_identity_when_balanced() {
        let c = corpus_with(&[(Relation::Contrastive, 2), (Relation::Neutral, 2)]);
        let refs: Vec<&LabeledPair> = c.pairs.iter().collect();
        let ids = oversample(&refs, &[Relation::Contrastive, Relation::Neutral], 0).unwrap();
        assert_eq!(ids, c.pairs.iter().map(|p| p.pair_id.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn oversample_empty_class_errors() {
        let c = corpus_with(&[(Relation::Contrastive, 2)]);
        let refs: Vec<&LabeledPair> = c.pairs.iter().collect();
        assert!(matches!(oversample(&refs, &Relation::ALL, 0), Err(CorpusError::EmptyClass(Relation::Entailment))));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut c = corpus_with(&[(Relation::Neutral, 3), (Relation::Reasoning, 2)]);
        c.pairs[0].auto_label = Some(Relation::Contrastive);
        stratified_split(&mut c, [0.6, 0.2, 0.2], 5).unwrap();
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        let back = read_corpus(&buf[..]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn tsv_reader_handles_headers_aliases_and_errors() {
        let tsv = "premise\thypothesis\tlabel\nA.\tB.\tcausal\nC.\tD.\tneutral\n";
        let pairs = read_delimited(tsv.as_bytes(), b'\t', "x").unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].label, Relation::Reasoning);
        assert_eq!(pairs[1].pair_id, "x-3");

        let bad = "premise\thypothesis\tlabel\nA.\tB.\tneutral\nC.\tD.\tcontradiction\n";
        match read_delimited(bad.as_bytes(), b'\t', "x") {
            Err(CorpusError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }

        let headerless = "A.\tB.\tentailment\n";
        assert_eq!(read_delimited(headerless.as_bytes(), b'\t', "x").unwrap()[0].label, Relation::Entailment);

        let scinli = "id,sentence1,sentence2,label\n7,\"A, b.\",C.,contrasting\n";
        let p = &read_delimited(scinli.as_bytes(), b',', "s").unwrap()[0];
        assert_eq!((p.pair_id.as_str(), p.premise.as_str(), p.label), ("7", "A, b.", Relation::Contrastive));
    }

    #[test]
    fn tsv_export_reads_back() {
        let pairs = vec![pair("1", Relation::Entailment, "Un \"citat\".", "Altă propoziție.")];
        let mut buf = Vec::new();
        write_tsv(&pairs, &mut buf).unwrap();
        let back = read_delimited(&buf[..], b'\t', "r").unwrap();
        assert_eq!(back[0].premise, pairs[0].premise);
        assert_eq!(back[0].label, Relation::Entailment);
    }
}
