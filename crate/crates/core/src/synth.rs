//! Seeded synthetic data: articles with planted linking phrases and
//! labeled pair corpora with a controllable class skew.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{Article, Section};
use crate::labeler::{match_cue, pair_id, LabeledPair, PhraseTable};
use crate::relation::Relation;

const SUBJECTS: &[&str] = &[
    "Orașul",
    "Regiunea",
    "Muzeul",
    "Râul",
    "Castelul",
    "Biserica",
    "Populația",
    "Clima",
    "Economia",
    "Podul",
    "Universitatea",
    "Teatrul",
    "Gara",
    "Parcul",
    "Biblioteca",
    "Școala",
    "Armata",
    "Flota",
    "Comuna",
    "Dealul",
];
const VERBS: &[&str] = &[
    "a crescut",
    "a fost reconstruit",
    "este cunoscut",
    "a atras vizitatori",
    "a pierdut teren",
    "a câștigat premii",
    "a fost descris",
    "se întinde",
    "a găzduit expoziții",
    "a rămas închis",
];
const COMPLEMENTS: &[&str] = &[
    "în secolul al nouăsprezecelea",
    "după războiul de independență",
    "pe malul drept al apei",
    "în ciuda vremii neprielnice din acea perioadă",
    "sub conducerea primarului de atunci",
    "cu sprijinul comunității locale",
    "într-un ritm greu de anticipat",
    "pentru o lungă perioadă de timp",
    "în apropierea graniței de nord",
    "alături de vechile fortificații",
];

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

/// A cue-free sentence of at least 50 characters.
fn filler_sentence(rng: &mut ChaCha8Rng) -> String {
    let mut s = format!("{} {}", SUBJECTS.choose(rng).unwrap(), VERBS.choose(rng).unwrap());
    while s.chars().count() < 50 {
        s.push(' ');
        s.push_str(COMPLEMENTS.choose(rng).unwrap());
    }
    s.push('.');
    s
}

/// Label expected for a planted pair, keyed by its pair id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Planted {
    pub pair_id: String,
    pub label: Relation,
    pub phrase: String,
    /// Hypothesis text expected once the cue is removed.
    pub hypothesis: String,
}

/// Articles whose sections mix plain sentences with sentences opening with
/// a phrase from `table`. Phrases are planted in table order, cycling, so
/// every phrase appears once `n_articles` is large enough. Two cue
/// sentences are never adjacent and a section never starts with one.
pub fn articles_with_cues(n_articles: usize, table: &PhraseTable, seed: u64) -> (Vec<Article>, Vec<Planted>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phrases = table.phrases();
    let mut next_phrase = 0usize;
    let mut articles = Vec::with_capacity(n_articles);
    let mut planted = Vec::new();
    for a in 0..n_articles {
        let article_id = 1000 + a as u64;
        let mut sections = Vec::new();
        for s in 0..rng.random_range(1..=3) {
            let path = if s == 0 { String::new() } else { format!("Secțiunea {s}") };
            let n_sent = rng.random_range(2..=6);
            let mut sentences = Vec::with_capacity(n_sent);
            let mut prev_cue = true;
            for i in 0..n_sent {
                let base = filler_sentence(&mut rng);
                if !prev_cue && rng.random_bool(0.5) {
                    let phrase = &phrases[next_phrase % phrases.len()];
                    next_phrase += 1;
                    let sep = if rng.random_bool(0.5) { ", " } else { " " };
                    sentences.push(format!("{}{sep}{}", phrase.surface, lower_first(&base)));
                    planted.push(Planted {
                        pair_id: pair_id(article_id, &path, i - 1),
                        label: phrase.category,
                        phrase: phrase.surface.clone(),
                        hypothesis: base,
                    });
                    prev_cue = true;
                } else {
                    debug_assert!(match_cue(&base, table).is_none());
                    sentences.push(base);
                    prev_cue = false;
                }
            }
            sections.push(Section { path, text: sentences.join(" ") });
        }
        articles.push(Article { article_id, title: format!("Articol {a}"), sections });
    }
    (articles, planted)
}

/// Integer counts proportional to `weights` summing to `n` (largest remainder).
pub fn apportion(n: usize, weights: &[u32]) -> Vec<usize> {
    let total: u32 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * *w as f64 / total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order
        .sort_by(|a, b| (quotas[*b] - quotas[*b].floor()).total_cmp(&(quotas[*a] - quotas[*a].floor())).then(a.cmp(b)));
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    const C: &[&str] = &["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ș", "ț"];
    const V: &[&str] = &["a", "e", "i", "o", "u", "ă", "â"];
    let syl = rng.random_range(2..=4);
    (0..syl).map(|_| format!("{}{}", C.choose(rng).unwrap(), V.choose(rng).unwrap())).collect()
}

#[derive(Debug, Clone)]
pub struct SynthCorpusConfig {
    pub n: usize,
    /// Relative class sizes.
    pub skew: Vec<(Relation, u32)>,
    pub class_vocab: usize,
    pub shared_vocab: usize,
    /// Probability that a hypothesis token comes from the class vocabulary.
    pub signal: f64,
    pub seed: u64,
}

impl Default for SynthCorpusConfig {
    fn default() -> Self {
        SynthCorpusConfig {
            n: 2000,
            skew: vec![
                (Relation::Neutral, 8),
                (Relation::Reasoning, 4),
                (Relation::Contrastive, 2),
                (Relation::Entailment, 1),
            ],
            class_vocab: 20,
            shared_vocab: 300,
            signal: 0.4,
            seed: 0,
        }
    }
}

/// Pairs whose hypotheses mix class-specific and shared pseudo-words.
/// Classes are interleaved deterministically; ids are `syn-<index>`.
pub fn labeled_corpus(cfg: &SynthCorpusConfig) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut used = HashSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng| loop {
        let w = pseudo_word(rng);
        if used.insert(w.clone()) {
            return w;
        }
    };
    let shared: Vec<String> = (0..cfg.shared_vocab).map(|_| fresh(&mut rng)).collect();
    let class_words: Vec<Vec<String>> =
        cfg.skew.iter().map(|_| (0..cfg.class_vocab).map(|_| fresh(&mut rng)).collect()).collect();
    let counts = apportion(cfg.n, &cfg.skew.iter().map(|(_, w)| *w).collect::<Vec<_>>());
    let mut labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, n)| std::iter::repeat_n(c, *n)).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);

    let sentence = |words: Vec<String>| -> String {
        let mut s = crate::text::capitalize_first(&words.join(" "));
        s.push('.');
        s
    };
    labels
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let premise: Vec<String> =
                (0..rng.random_range(8..=14)).map(|_| shared.choose(&mut rng).unwrap().clone()).collect();
            let len = rng.random_range(6..=12);
            let mut hyp: Vec<String> = (0..len)
                .map(|_| {
                    if rng.random_bool(cfg.signal) {
                        class_words[c].choose(&mut rng).unwrap().clone()
                    } else {
                        shared.choose(&mut rng).unwrap().clone()
                    }
                })
                .collect();
            hyp[0] = class_words[c].choose(&mut rng).unwrap().clone();
            LabeledPair {
                pair_id: format!("syn-{i:05}"),
                premise: sentence(premise),
                hypothesis: sentence(hyp),
                label: cfg.skew[c].0,
                cue: None,
                source: None,
                auto_label: None,
            }
        })
        .collect()
}
