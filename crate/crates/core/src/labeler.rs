//! Distant supervision over contiguous sentences.
//!
//! A hypothesis sentence that opens with a linking phrase from the
//! [`PhraseTable`] is paired with the sentence before it and labeled with the
//! phrase's category; the phrase is then cut from the hypothesis. Contiguous
//! pairs without any opening phrase are neutral candidates.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::Sentence;
use crate::relation::Relation;
use crate::text::{capitalize_first, normalize_text};

/// `(surface, category, occurrences reported for the original extraction)`.
const BUILTIN_PHRASES: &[(&str, Relation, u32)] = &[
    ("Pe de altă parte", Relation::Contrastive, 1981),
    ("În contrast", Relation::Contrastive, 616),
    ("În ciuda acestui fapt", Relation::Contrastive, 267),
    ("În opoziție", Relation::Contrastive, 49),
    ("În contradicție", Relation::Contrastive, 40),
    ("În ciuda acestui lucru", Relation::Contrastive, 33),
    ("În ciuda acestor fapte", Relation::Contrastive, 23),
    ("În ciuda acestor lucruri", Relation::Contrastive, 11),
    ("În mod contrar", Relation::Contrastive, 11),
    ("Pe de cealaltă parte", Relation::Contrastive, 11),
    ("Cu toate acestea însă", Relation::Contrastive, 9),
    ("Contrastând", Relation::Contrastive, 5),
    ("În dezacord", Relation::Contrastive, 4),
    ("În sens opus", Relation::Contrastive, 3),
    ("În antiteza", Relation::Contrastive, 3),
    ("În contradictoriu", Relation::Contrastive, 2),
    ("Într-un contrast", Relation::Contrastive, 2),
    ("Contrar convingerilor", Relation::Contrastive, 1),
    ("În pofida acestor lucruri", Relation::Contrastive, 1),
    ("Cu alte cuvinte", Relation::Entailment, 553),
    ("Adică", Relation::Entailment, 296),
    ("În esență", Relation::Entailment, 155),
    ("Altfel spus", Relation::Entailment, 149),
    ("Asta înseamnă că", Relation::Entailment, 92),
    ("În fond", Relation::Entailment, 53),
    ("Sintetizând", Relation::Entailment, 13),
    ("Rezumând", Relation::Entailment, 12),
    ("În rezumat", Relation::Entailment, 10),
    ("În termeni simpli", Relation::Entailment, 7),
    ("În traducere liberă", Relation::Entailment, 6),
    ("Mai pe scurt", Relation::Entailment, 6),
    ("În alți termeni", Relation::Entailment, 5),
    ("Simplificând", Relation::Entailment, 5),
    ("Simplu spus", Relation::Entailment, 3),
    ("Mai concis", Relation::Entailment, 2),
    ("Pe larg", Relation::Entailment, 5),
    ("În termeni populari", Relation::Entailment, 1),
    ("Într-o altă formulare", Relation::Entailment, 1),
    ("Astfel", Relation::Reasoning, 16245),
    ("Prin urmare", Relation::Reasoning, 5202),
    ("Ca urmare", Relation::Reasoning, 4433),
    ("În consecință", Relation::Reasoning, 1010),
    ("Așadar", Relation::Reasoning, 948),
    ("Drept urmare", Relation::Reasoning, 601),
    ("În acest fel", Relation::Reasoning, 574),
    ("Ca rezultat", Relation::Reasoning, 528),
    ("Din această cauză", Relation::Reasoning, 520),
    ("Astfel că", Relation::Reasoning, 230),
    ("În concluzie", Relation::Reasoning, 197),
    ("Rezultatul este", Relation::Reasoning, 105),
    ("În rezultat", Relation::Reasoning, 36),
    ("Din această cauza", Relation::Reasoning, 17),
    ("Concluzionând", Relation::Reasoning, 14),
    ("Pentru a finaliza", Relation::Reasoning, 7),
    ("Ca o consecință a acestui fapt", Relation::Reasoning, 4),
    ("Într-o concluzie", Relation::Reasoning, 3),
    ("Ceea ce a dus la", Relation::Reasoning, 2),
    ("Ducând la", Relation::Reasoning, 2),
    ("Conducând la", Relation::Reasoning, 1),
    ("Provocând astfel", Relation::Reasoning, 1),
    ("Se poate concluziona că", Relation::Reasoning, 1),
    ("Ținând cont de acestea", Relation::Reasoning, 1),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkingPhrase {
    pub surface: String,
    pub category: Relation,
    /// Matching key: normalized and lowercased surface.
    pub normalized: String,
}

impl LinkingPhrase {
    pub fn new(surface: &str, category: Relation) -> Self {
        LinkingPhrase { surface: surface.to_string(), category, normalized: matching_key(surface) }
    }
}

fn matching_key(s: &str) -> String {
    normalize_text(s).to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PhraseConfigError {
    #[error("linking phrase {0:?} cannot have category neutral")]
    NeutralPhrase(String),
    #[error("duplicate linking phrase {phrase:?} in category {category}")]
    Duplicate { phrase: String, category: Relation },
    #[error("cannot remove unknown linking phrase {0:?}")]
    UnknownRemoval(String),
    #[error("empty linking phrase")]
    Empty,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// User edits applied on top of the built-in inventory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseOverrides {
    pub add: Vec<(String, Relation)>,
    pub remove: Vec<String>,
}

impl PhraseOverrides {
    /// Parses an override file. Each non-blank, non-`#` line is either
    /// `add <category> <phrase...>` or `remove <phrase...>`.
    pub fn parse(text: &str) -> Result<Self, PhraseConfigError> {
        let mut out = PhraseOverrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| PhraseConfigError::Syntax { line: i + 1, message: message.to_string() };
            let (verb, rest) = line.split_once(char::is_whitespace).ok_or_else(|| syntax("missing phrase"))?;
            match verb {
                "add" => {
                    let (cat, phrase) = rest
                        .trim()
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| syntax("expected: add <category> <phrase>"))?;
                    let category = cat.parse::<Relation>().map_err(|e| syntax(&e.to_string()))?;
                    out.add.push((phrase.trim().to_string(), category));
                }
                "remove" => out.remove.push(rest.trim().to_string()),
                _ => return Err(syntax("expected `add` or `remove`")),
            }
        }
        Ok(out)
    }
}

/// The category → linking-phrase inventory with a prefix index.
#[derive(Debug, Clone)]
pub struct PhraseTable {
    phrases: Vec<LinkingPhrase>,
    /// Phrase indices keyed by first character of the matching key, longest first.
    by_first: HashMap<char, Vec<usize>>,
}

impl PhraseTable {
    pub fn builtin() -> Self {
        Self::from_phrases(BUILTIN_PHRASES.iter().map(|(s, c, _)| LinkingPhrase::new(s, *c)).collect())
            .expect("built-in phrase table is valid")
    }

    /// Occurrence count reported for a built-in phrase in the original extraction.
    pub fn reported_occurrences(surface: &str) -> Option<u32> {
        BUILTIN_PHRASES.iter().find(|(s, _, _)| *s == surface).map(|(_, _, n)| *n)
    }

    pub fn from_phrases(phrases: Vec<LinkingPhrase>) -> Result<Self, PhraseConfigError> {
        let mut seen = HashSet::new();
        for p in &phrases {
            if p.normalized.is_empty() {
                return Err(PhraseConfigError::Empty);
            }
            if p.category == Relation::Neutral {
                return Err(PhraseConfigError::NeutralPhrase(p.surface.clone()));
            }
            if !seen.insert((p.normalized.clone(), p.category)) {
                return Err(PhraseConfigError::Duplicate { phrase: p.surface.clone(), category: p.category });
            }
        }
        let mut by_first: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, p) in phrases.iter().enumerate() {
            let first = p.normalized.chars().next().expect("non-empty");
            by_first.entry(first).or_default().push(i);
        }
        for ids in by_first.values_mut() {
            ids.sort_by(|&a, &b| {
                let (pa, pb) = (&phrases[a].normalized, &phrases[b].normalized);
                pb.chars().count().cmp(&pa.chars().count()).then(a.cmp(&b))
            });
        }
        Ok(PhraseTable { phrases, by_first })
    }

    pub fn phrases(&self) -> &[LinkingPhrase] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn count(&self, category: Relation) -> usize {
        self.phrases.iter().filter(|p| p.category == category).count()
    }

    pub fn contains(&self, surface: &str, category: Relation) -> bool {
        let key = matching_key(surface);
        self.phrases.iter().any(|p| p.normalized == key && p.category == category)
    }
}

/// Built-in inventory with optional user edits.
pub fn load_phrase_table(overrides: Option<&PhraseOverrides>) -> Result<PhraseTable, PhraseConfigError> {
    let mut phrases: Vec<LinkingPhrase> = PhraseTable::builtin().phrases;
    if let Some(o) = overrides {
        for r in &o.remove {
            let key = matching_key(r);
            let before = phrases.len();
            phrases.retain(|p| p.normalized != key);
            if phrases.len() == before {
                return Err(PhraseConfigError::UnknownRemoval(r.clone()));
            }
        }
        for (surface, category) in &o.add {
            phrases.push(LinkingPhrase::new(surface, *category));
        }
    }
    PhraseTable::from_phrases(phrases)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueMatch<'t> {
    pub phrase: &'t LinkingPhrase,
    /// Character (Unicode scalar) range in the original sentence.
    pub span: Range<usize>,
}

/// Char count of the case-insensitive match of `key` at the start of
/// `sentence`, if any.
fn prefix_match_len(sentence: &str, key: &str) -> Option<usize> {
    let mut want = key.chars().peekable();
    for (n, c) in sentence.chars().enumerate() {
        for lc in c.to_lowercase() {
            if want.next() != Some(lc) {
                return None;
            }
        }
        if want.peek().is_none() {
            return Some(n + 1);
        }
    }
    None
}

fn is_boundary(c: Option<char>) -> bool {
    match c {
        None => true,
        Some(c) => c == ',' || c.is_whitespace(),
    }
}

/// Finds the longest linking phrase opening `sentence`.
///
/// The match is case-insensitive and must be followed by whitespace, a comma
/// or the end of the sentence.
pub fn match_cue<'t>(sentence: &str, table: &'t PhraseTable) -> Option<CueMatch<'t>> {
    let first = sentence.chars().next()?;
    let mut candidates: Vec<usize> = Vec::new();
    for lc in first.to_lowercase() {
        if let Some(ids) = table.by_first.get(&lc) {
            candidates.extend(ids);
        }
    }
    let mut best: Option<CueMatch<'t>> = None;
    for id in candidates {
        let phrase = &table.phrases[id];
        let Some(len) = prefix_match_len(sentence, &phrase.normalized) else { continue };
        if !is_boundary(sentence.chars().nth(len)) {
            continue;
        }
        if best.as_ref().is_none_or(|b| len > b.span.end) {
            best = Some(CueMatch { phrase, span: 0..len });
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("removing the cue leaves an empty sentence")]
pub struct EmptyAfterCue;

/// Cuts `span` (character range) out of `sentence`, drops a following
/// comma/colon and whitespace, and capitalizes what remains.
pub fn remove_cue(sentence: &str, span: Range<usize>) -> Result<String, EmptyAfterCue> {
    let before: String = sentence.chars().take(span.start).collect();
    let after: String =
        sentence.chars().skip(span.end).skip_while(|c| *c == ',' || *c == ':' || c.is_whitespace()).collect();
    if !after.chars().any(char::is_alphanumeric) {
        return Err(EmptyAfterCue);
    }
    let rest = if before.trim().is_empty() { capitalize_first(&after) } else { format!("{}{}", before, after) };
    Ok(rest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeutralMode {
    /// Contiguous cue-free sentence pairs.
    #[default]
    Contiguous,
    /// Premise kept, hypothesis drawn from a different article.
    CrossArticle,
}

impl std::str::FromStr for NeutralMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contiguous" => Ok(NeutralMode::Contiguous),
            "cross-article" => Ok(NeutralMode::CrossArticle),
            other => Err(format!("unknown neutral mode {other:?} (expected contiguous|cross-article)")),
        }
    }
}

/// Neutral share targeted when no explicit rate is configured.
pub const DEFAULT_NEUTRAL_SHARE: f64 = 0.49;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    /// Probability of keeping a neutral candidate. `None` picks the rate that
    /// makes neutral pairs roughly [`DEFAULT_NEUTRAL_SHARE`] of the output.
    pub neutral_rate: Option<f64>,
    pub neutral_mode: NeutralMode,
    /// Leave cues in hypotheses (cue-inclusion ablation).
    pub keep_cues: bool,
    pub seed: u64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig { neutral_rate: None, neutral_mode: NeutralMode::Contiguous, keep_cues: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub article_id: u64,
    pub section_path: String,
    pub premise_index: usize,
    /// Differs from `article_id` only for cross-article neutral pairs.
    pub hypothesis_article_id: u64,
    pub hypothesis_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue_span: Option<(usize, usize)>,
    /// Linking phrase opening the premise, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_cue: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub pair_id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue: Option<LinkingPhrase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Provenance>,
    /// Distant-supervision label kept when `label` was replaced by a manual one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_label: Option<Relation>,
}

/// Stable identifier of the pair whose premise is sentence `premise_index`
/// of the given section.
pub fn pair_id(article_id: u64, section_path: &str, premise_index: usize) -> String {
    let mut h = Sha256::new();
    h.update(format!("{article_id}\u{1f}{section_path}\u{1f}{premise_index}").as_bytes());
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn unit_hash(seed: u64, key: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    let x = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
    (x >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractStats {
    pub cue_pairs: [usize; 4],
    pub neutral_candidates: usize,
    pub neutral_pairs: usize,
    pub discarded_empty: usize,
    pub discarded_stacked_cue: usize,
    pub discarded_no_cross_article: usize,
    pub premise_cues: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub pairs: Vec<LabeledPair>,
    pub stats: ExtractStats,
}

enum Candidate {
    Cue(LabeledPair),
    Neutral { premise: usize, hypothesis: usize, id: String },
}

/// Pairs adjacent sentences of each section and labels them.
///
/// `sentences` must be grouped by `(article_id, section_path)` in document
/// order; two sentences are adjacent when their `index_in_section` values
/// are consecutive.
pub fn extract_pairs(sentences: &[Sentence], table: &PhraseTable, cfg: &ExtractConfig) -> Extraction {
    let mut stats = ExtractStats::default();
    let mut candidates = Vec::new();
    let cue_free: Vec<bool> = sentences.iter().map(|s| match_cue(&s.text, table).is_none()).collect();

    for (i, w) in sentences.windows(2).enumerate() {
        let (p, h) = (&w[0], &w[1]);
        if p.article_id != h.article_id
            || p.section_path != h.section_path
            || h.index_in_section != p.index_in_section + 1
        {
            continue;
        }
        let id = pair_id(p.article_id, &p.section_path, p.index_in_section);
        let premise_cue = match_cue(&p.text, table).map(|m| m.phrase.surface.clone());
        let Some(m) = match_cue(&h.text, table) else {
            if premise_cue.is_none() {
                stats.neutral_candidates += 1;
                candidates.push(Candidate::Neutral { premise: i, hypothesis: i + 1, id });
            }
            continue;
        };
        if premise_cue.is_some() {
            stats.premise_cues += 1;
        }
        let hypothesis = if cfg.keep_cues {
            h.text.clone()
        } else {
            match remove_cue(&h.text, m.span.clone()) {
                Ok(rest) if match_cue(&rest, table).is_some() => {
                    stats.discarded_stacked_cue += 1;
                    continue;
                }
                Ok(rest) => rest,
                Err(EmptyAfterCue) => {
                    stats.discarded_empty += 1;
                    continue;
                }
            }
        };
        stats.cue_pairs[m.phrase.category.index()] += 1;
        candidates.push(Candidate::Cue(LabeledPair {
            pair_id: id,
            premise: p.text.clone(),
            hypothesis,
            label: m.phrase.category,
            cue: Some(m.phrase.clone()),
            source: Some(Provenance {
                article_id: p.article_id,
                section_path: p.section_path.clone(),
                premise_index: p.index_in_section,
                hypothesis_article_id: h.article_id,
                hypothesis_index: h.index_in_section,
                cue_span: Some((m.span.start, m.span.end)),
                premise_cue,
            }),
            auto_label: None,
        }));
    }

    let rate = cfg.neutral_rate.unwrap_or_else(|| {
        let cue_total: usize = stats.cue_pairs.iter().sum();
        if stats.neutral_candidates == 0 {
            0.0
        } else {
            let target = DEFAULT_NEUTRAL_SHARE / (1.0 - DEFAULT_NEUTRAL_SHARE) * cue_total as f64;
            (target / stats.neutral_candidates as f64).min(1.0)
        }
    });

    // Cue-free sentences available as cross-article hypotheses.
    let pool: Vec<usize> = (0..sentences.len()).filter(|&i| cue_free[i]).collect();

    let mut pairs = Vec::with_capacity(candidates.len());
    for c in candidates {
        match c {
            Candidate::Cue(pair) => pairs.push(pair),
            Candidate::Neutral { premise, hypothesis, id } => {
                if unit_hash(cfg.seed, &id) >= rate {
                    continue;
                }
                let hyp = match cfg.neutral_mode {
                    NeutralMode::Contiguous => hypothesis,
                    NeutralMode::CrossArticle => match draw_other_article(sentences, &pool, premise, cfg.seed, &id) {
                        Some(h) => h,
                        None => {
                            stats.discarded_no_cross_article += 1;
                            continue;
                        }
                    },
                };
                let (p, h) = (&sentences[premise], &sentences[hyp]);
                stats.neutral_pairs += 1;
                pairs.push(LabeledPair {
                    pair_id: id,
                    premise: p.text.clone(),
                    hypothesis: h.text.clone(),
                    label: Relation::Neutral,
                    cue: None,
                    source: Some(Provenance {
                        article_id: p.article_id,
                        section_path: p.section_path.clone(),
                        premise_index: p.index_in_section,
                        hypothesis_article_id: h.article_id,
                        hypothesis_index: h.index_in_section,
                        cue_span: None,
                        premise_cue: None,
                    }),
                    auto_label: None,
                });
            }
        }
    }
    Extraction { pairs, stats }
}

fn draw_other_article(sentences: &[Sentence], pool: &[usize], premise: usize, seed: u64, id: &str) -> Option<usize> {
    if pool.is_empty() {
        return None;
    }
    let key = unit_hash(seed, id).to_bits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key);
    let article = sentences[premise].article_id;
    for _ in 0..64 {
        let cand = pool[rng.random_range(0..pool.len())];
        if sentences[cand].article_id != article {
            return Some(cand);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PhraseTable {
        load_phrase_table(None).unwrap()
    }

    #[test]
    fn builtin_inventory_sizes() {
        let t = table();
        assert_eq!(t.len(), 62);
        assert_eq!(t.count(Relation::Contrastive), 19);
        assert_eq!(t.count(Relation::Entailment), 19);
        assert_eq!(t.count(Relation::Reasoning), 24);
        assert_eq!(t.count(Relation::Neutral), 0);
        assert!(t.contains("Pe de altă parte", Relation::Contrastive));
        assert!(t.contains("Astfel", Relation::Reasoning));
        assert!(t.contains("Astfel că", Relation::Reasoning));
        assert_eq!(PhraseTable::reported_occurrences("Astfel"), Some(16245));
    }

    #[test]
    fn neutral_override_rejected() {
        let o = PhraseOverrides { add: vec![("Oricum".into(), Relation::Neutral)], remove: vec![] };
        assert_eq!(load_phrase_table(Some(&o)).unwrap_err(), PhraseConfigError::NeutralPhrase("Oricum".into()));
    }

    #[test]
    fn duplicate_override_rejected() {
        let o = PhraseOverrides { add: vec![("în CONTRAST".into(), Relation::Contrastive)], remove: vec![] };
        assert!(matches!(load_phrase_table(Some(&o)), Err(PhraseConfigError::Duplicate { .. })));
    }

    #[test]
    fn overrides_parse_and_apply() {
        let o = PhraseOverrides::parse("# edits\nadd contrastive Totuși\nremove Pe larg\n").unwrap();
        let t = load_phrase_table(Some(&o)).unwrap();
        assert!(t.contains("Totuși", Relation::Contrastive));
        assert!(!t.contains("Pe larg", Relation::Entailment));
        assert_eq!(t.len(), 62);
        assert!(PhraseOverrides::parse("add bogus X").is_err());
        assert!(load_phrase_table(Some(&PhraseOverrides { add: vec![], remove: vec!["Nu există".into()] })).is_err());
    }

    #[test]
    fn longest_match_wins() {
        let t = table();
        let m = match_cue("Astfel că planul a eșuat complet în prima zi.", &t).unwrap();
        assert_eq!(m.phrase.surface, "Astfel că");
        assert_eq!(m.span, 0..9);
        let m = match_cue("Astfel planul a eșuat.", &t).unwrap();
        assert_eq!(m.phrase.surface, "Astfel");
    }

    #[test]
    fn sentence_initial_only() {
        let t = table();
        let m = match_cue("În concluzie, economia a crescut.", &t).unwrap();
        assert_eq!((m.phrase.surface.as_str(), m.phrase.category), ("În concluzie", Relation::Reasoning));
        assert!(match_cue("Economia, în contrast, a scăzut.", &t).is_none());
    }

    #[test]
    fn word_boundary_required() {
        let t = table();
        assert!(match_cue("Astfeliu e un nume inventat.", &t).is_none());
        assert!(match_cue("Adică", &t).is_some());
        assert!(match_cue("ASTFEL, totul s-a schimbat.", &t).is_some());
    }

    #[test]
    fn removal_rules() {
        assert_eq!(remove_cue("În contrast, prețurile au scăzut.", 0..11).unwrap(), "Prețurile au scăzut.");
        assert_eq!(remove_cue("Astfel planul a eșuat.", 0..6).unwrap(), "Planul a eșuat.");
        assert_eq!(remove_cue("Prin urmare,", 0..11), Err(EmptyAfterCue));
        assert_eq!(remove_cue("Prin urmare: .", 0..11), Err(EmptyAfterCue));
    }

    fn sent(article: u64, section: &str, idx: usize, text: &str) -> Sentence {
        Sentence {
            text: text.into(),
            article_id: article,
            section_path: section.into(),
            index_in_section: idx,
            char_len: text.chars().count(),
        }
    }

    fn cfg(rate: f64) -> ExtractConfig {
        ExtractConfig { neutral_rate: Some(rate), ..Default::default() }
    }

    #[test]
    fn reasoning_pair_extracted() {
        let s = [
            sent(1, "S", 0, "A fost secetă lungă în acea vară peste tot."),
            sent(1, "S", 1, "Prin urmare recolta a fost compromisă aproape integral."),
        ];
        let out = extract_pairs(&s, &table(), &cfg(0.0));
        assert_eq!(out.pairs.len(), 1);
        let p = &out.pairs[0];
        assert_eq!(p.label, Relation::Reasoning);
        assert_eq!(p.hypothesis, "Recolta a fost compromisă aproape integral.");
        assert_eq!(p.cue.as_ref().unwrap().surface, "Prin urmare");
        assert_eq!(p.source.as_ref().unwrap().cue_span, Some((0, 11)));
    }

    #[test]
    fn neutral_pair_at_full_rate() {
        let s =
            [sent(1, "S", 0, "Prima propoziție fără legătură."), sent(1, "S", 1, "A doua propoziție despre altceva.")];
        let out = extract_pairs(&s, &table(), &cfg(1.0));
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].label, Relation::Neutral);
        assert!(out.pairs[0].cue.is_none());
        assert!(extract_pairs(&s, &table(), &cfg(0.0)).pairs.is_empty());
    }

    #[test]
    fn single_sentence_section() {
        assert!(extract_pairs(&[sent(1, "S", 0, "Singură.")], &table(), &cfg(1.0)).pairs.is_empty());
    }

    #[test]
    fn non_adjacent_or_cross_section_not_paired() {
        let s = [
            sent(1, "A", 0, "Prima propoziție."),
            sent(1, "B", 1, "Astfel s-a terminat."),
            sent(1, "B", 3, "Astfel s-a terminat din nou."),
        ];
        assert!(extract_pairs(&s, &table(), &cfg(1.0)).pairs.is_empty());
    }

    #[test]
    fn premise_cue_alone_creates_nothing_and_is_recorded() {
        let s = [
            sent(1, "S", 0, "Astfel a început totul."),
            sent(1, "S", 1, "Orașul a crescut repede."),
            sent(1, "S", 2, "În contrast, satul a rămas mic."),
        ];
        let out = extract_pairs(&s, &table(), &cfg(1.0));
        // First window has only a premise cue: neither a cue pair nor a neutral candidate.
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].label, Relation::Contrastive);
        assert_eq!(out.pairs[0].premise, "Orașul a crescut repede.");
        assert_eq!(out.stats.neutral_candidates, 0);
    }

    #[test]
    fn both_cues_labeled_by_hypothesis() {
        let s = [sent(1, "S", 0, "Astfel a început totul."), sent(1, "S", 1, "În contrast, satul a rămas mic.")];
        let out = extract_pairs(&s, &table(), &cfg(0.0));
        assert_eq!(out.pairs[0].label, Relation::Contrastive);
        assert_eq!(out.pairs[0].source.as_ref().unwrap().premise_cue.as_deref(), Some("Astfel"));
    }

    #[test]
    fn stacked_cue_discarded() {
        let s = [sent(1, "S", 0, "Premisa."), sent(1, "S", 1, "Astfel, prin urmare totul a eșuat.")];
        let out = extract_pairs(&s, &table(), &cfg(0.0));
        assert!(out.pairs.is_empty());
        assert_eq!(out.stats.discarded_stacked_cue, 1);
    }

    #[test]
    fn keep_cues_leaves_hypothesis_intact() {
        let s = [sent(1, "S", 0, "Premisa."), sent(1, "S", 1, "Prin urmare recolta a fost slabă.")];
        let out = extract_pairs(&s, &table(), &ExtractConfig { keep_cues: true, ..cfg(0.0) });
        assert_eq!(out.pairs[0].hypothesis, "Prin urmare recolta a fost slabă.");
    }

    #[test]
    fn cross_article_neutrals_use_other_articles() {
        let mut s = Vec::new();
        for a in 0..5u64 {
            for i in 0..4 {
                s.push(sent(a, "S", i, &format!("Articolul {a} propoziția {i} fără indicii.")));
            }
        }
        let c = ExtractConfig { neutral_mode: NeutralMode::CrossArticle, ..cfg(1.0) };
        let out = extract_pairs(&s, &table(), &c);
        assert_eq!(out.pairs.len(), 15);
        for p in &out.pairs {
            let src = p.source.as_ref().unwrap();
            assert_ne!(src.article_id, src.hypothesis_article_id);
        }
        let again = extract_pairs(&s, &table(), &c);
        assert_eq!(out.pairs, again.pairs);
    }

    #[test]
    fn auto_rate_targets_neutral_share() {
        let mut s = Vec::new();
        for a in 0..200u64 {
            s.push(sent(a, "S", 0, "O propoziție obișnuită despre un subiect."));
            s.push(sent(a, "S", 1, "Astfel s-a întâmplat ceva important."));
            for i in 2..12 {
                s.push(sent(a, "S", i, "O altă propoziție obișnuită fără indicii."));
            }
        }
        let out = extract_pairs(&s, &table(), &ExtractConfig::default());
        let neutral = out.stats.neutral_pairs as f64;
        let share = neutral / out.pairs.len() as f64;
        assert!((share - DEFAULT_NEUTRAL_SHARE).abs() < 0.06, "share {share}");
    }

    #[test]
    fn pair_id_is_stable() {
        assert_eq!(pair_id(1, "S", 0), pair_id(1, "S", 0));
        assert_ne!(pair_id(1, "S", 0), pair_id(1, "S", 1));
        assert_eq!(pair_id(1, "S", 0).len(), 16);
    }
}
