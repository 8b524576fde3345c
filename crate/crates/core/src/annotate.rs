//! Manual re-annotation campaigns: task dealing, vote collection, majority
//! aggregation and agreement statistics.
//!
//! Campaign state is an append-only JSONL event log. The first line is the
//! campaign header (annotators, tasks, vote quota); the second holds the
//! automatic labels, which are kept apart from every task record; each
//! further line is one vote.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::labeler::LabeledPair;
use crate::relation::Relation;

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("required votes {votes} exceeds the {annotators} annotators")]
    TooFewAnnotators { votes: usize, annotators: usize },
    #[error("invalid campaign: {0}")]
    Config(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("unknown annotator {0}")]
    UnknownAnnotator(String),
    #[error("annotator {annotator} is not assigned to task {task_id}")]
    NotAssigned { task_id: String, annotator: String },
    #[error("annotator {annotator} already voted on task {task_id}")]
    DoubleVote { task_id: String, annotator: String },
    #[error("task {0} is already finalized")]
    Closed(String),
    #[error("ragged vote matrix: item {item} has {found} votes, expected {expected}")]
    Ragged { item: usize, found: usize, expected: usize },
    #[error("{0}")]
    Shape(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log line {line}: {message}")]
    Log { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Open,
    Complete,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub pair_id: String,
    pub premise: String,
    pub hypothesis: String,
    pub labels: BTreeMap<String, Relation>,
    pub status: TaskStatus,
    pub final_label: Option<Relation>,
}

/// What an annotator is shown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub task_id: String,
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregate {
    Final(Relation),
    Discarded,
}

/// Strict majority (more than half of the votes), otherwise discarded.
pub fn aggregate(votes: &[Relation]) -> Aggregate {
    let mut counts = [0usize; 4];
    for v in votes {
        counts[v.index()] += 1;
    }
    match counts.iter().enumerate().max_by_key(|(_, c)| **c) {
        Some((i, &c)) if 2 * c > votes.len() => Aggregate::Final(Relation::ALL[i]),
        _ => Aggregate::Discarded,
    }
}

/// Fleiss' kappa over an items x categories count matrix where every row
/// sums to the same number of raters `n >= 2`.
///
/// When expected agreement is 1 the ratio is undefined; the result is then
/// 1 if observed agreement is also 1, else 0.
pub fn fleiss_kappa(counts: &[Vec<usize>]) -> Result<f64, AnnotateError> {
    let Some(first) = counts.first() else {
        return Err(AnnotateError::Shape("no items".into()));
    };
    let n: usize = first.iter().sum();
    if n < 2 {
        return Err(AnnotateError::Shape("need at least 2 votes per item".into()));
    }
    let k = first.len();
    let mut col = vec![0f64; k];
    let mut p_bar = 0f64;
    for (i, row) in counts.iter().enumerate() {
        let found: usize = row.iter().sum();
        if row.len() != k || found != n {
            return Err(AnnotateError::Ragged { item: i, found, expected: n });
        }
        let agree: usize = row.iter().map(|c| c * c.saturating_sub(1)).sum();
        p_bar += agree as f64 / (n * (n - 1)) as f64;
        for (c, v) in col.iter_mut().zip(row) {
            *c += *v as f64;
        }
    }
    let items = counts.len() as f64;
    p_bar /= items;
    let total = items * n as f64;
    let p_e: f64 = col.iter().map(|c| (c / total).powi(2)).sum();
    Ok(kappa(p_bar, p_e))
}

fn kappa(observed: f64, expected: f64) -> f64 {
    if (1.0 - expected).abs() < 1e-15 {
        if (1.0 - observed).abs() < 1e-15 {
            1.0
        } else {
            0.0
        }
    } else {
        (observed - expected) / (1.0 - expected)
    }
}

/// Cohen's kappa between two equal-length labelings.
pub fn cohen_kappa(a: &[Relation], b: &[Relation]) -> Result<f64, AnnotateError> {
    if a.len() != b.len() {
        return Err(AnnotateError::Shape(format!("label sequences differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(AnnotateError::Shape("no items".into()));
    }
    let n = a.len() as f64;
    let mut ma = [0f64; 4];
    let mut mb = [0f64; 4];
    let mut agree = 0f64;
    for (x, y) in a.iter().zip(b) {
        ma[x.index()] += 1.0;
        mb[y.index()] += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let p_e: f64 = ma.iter().zip(&mb).map(|(x, y)| (x / n) * (y / n)).sum();
    Ok(kappa(agree / n, p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Over complete items; `None` when there are none.
    pub fleiss_kappa: Option<f64>,
    pub cohen_kappa_auto_vs_manual: Option<f64>,
    /// `auto_vs_final[auto][final]`, classes in canonical order.
    pub auto_vs_final: Vec<Vec<usize>>,
    pub classes: Vec<Relation>,
    pub complete_count: usize,
    pub discarded_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Progress {
    pub open: usize,
    pub complete: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub pair_id: String,
    pub final_label: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TaskSeed {
    task_id: String,
    pair_id: String,
    premise: String,
    hypothesis: String,
    assigned: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Campaign { annotators: Vec<String>, required_votes: usize, tasks: Vec<TaskSeed> },
    AutoLabels { labels: BTreeMap<String, Relation> },
    Vote { task_id: String, annotator: String, label: Relation },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    annotators: Vec<String>,
    required_votes: usize,
    tasks: Vec<AnnotationTask>,
    assigned: Vec<Vec<String>>,
    index: HashMap<String, usize>,
    auto_labels: BTreeMap<String, Relation>,
}

/// A vote that changed the campaign, ready to be appended to the log.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord {
    pub task_id: String,
    pub annotator: String,
    pub label: Relation,
}

impl VoteRecord {
    pub fn to_json_line(&self) -> String {
        let ev = Event::Vote { task_id: self.task_id.clone(), annotator: self.annotator.clone(), label: self.label };
        serde_json::to_string(&ev).expect("event serializes")
    }
}

impl Campaign {
    /// One task per pair; task `i` goes to annotators `i, i+1, ...,
    /// i+votes-1` (mod the annotator count). The automatic label is the
    /// pair's `auto_label`, falling back to `label`.
    pub fn create(pairs: &[LabeledPair], annotators: &[String], required_votes: usize) -> Result<Self, AnnotateError> {
        if required_votes == 0 {
            return Err(AnnotateError::Config("required votes must be at least 1".into()));
        }
        if required_votes > annotators.len() {
            return Err(AnnotateError::TooFewAnnotators { votes: required_votes, annotators: annotators.len() });
        }
        let unique: HashSet<&String> = annotators.iter().collect();
        if unique.len() != annotators.len() {
            return Err(AnnotateError::Config("duplicate annotator id".into()));
        }
        let a = annotators.len();
        let seeds = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| TaskSeed {
                task_id: format!("t{i:06}"),
                pair_id: p.pair_id.clone(),
                premise: p.premise.clone(),
                hypothesis: p.hypothesis.clone(),
                assigned: (0..required_votes).map(|j| annotators[(i + j) % a].clone()).collect(),
            })
            .collect();
        let auto = pairs.iter().map(|p| (p.pair_id.clone(), p.auto_label.unwrap_or(p.label))).collect();
        Self::from_parts(annotators.to_vec(), required_votes, seeds, auto)
    }

    fn from_parts(
        annotators: Vec<String>,
        required_votes: usize,
        seeds: Vec<TaskSeed>,
        auto_labels: BTreeMap<String, Relation>,
    ) -> Result<Self, AnnotateError> {
        let mut index = HashMap::with_capacity(seeds.len());
        let mut tasks = Vec::with_capacity(seeds.len());
        let mut assigned = Vec::with_capacity(seeds.len());
        for (i, s) in seeds.into_iter().enumerate() {
            if index.insert(s.task_id.clone(), i).is_some() {
                return Err(AnnotateError::Config(format!("duplicate task id {}", s.task_id)));
            }
            tasks.push(AnnotationTask {
                task_id: s.task_id,
                pair_id: s.pair_id,
                premise: s.premise,
                hypothesis: s.hypothesis,
                labels: BTreeMap::new(),
                status: TaskStatus::Open,
                final_label: None,
            });
            assigned.push(s.assigned);
        }
        Ok(Campaign { annotators, required_votes, tasks, assigned, index, auto_labels })
    }

    pub fn tasks(&self) -> &[AnnotationTask] {
        &self.tasks
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn required_votes(&self) -> usize {
        self.required_votes
    }

    pub fn assignments(&self, task_id: &str) -> Option<&[String]> {
        self.index.get(task_id).map(|i| self.assigned[*i].as_slice())
    }

    pub fn task(&self, task_id: &str) -> Option<&AnnotationTask> {
        self.index.get(task_id).map(|i| &self.tasks[*i])
    }

    /// First open task assigned to `annotator` that they have not voted on.
    pub fn next_task(&self, annotator: &str) -> Result<Option<TaskView>, AnnotateError> {
        if !self.annotators.iter().any(|a| a == annotator) {
            return Err(AnnotateError::UnknownAnnotator(annotator.to_string()));
        }
        Ok(self
            .tasks
            .iter()
            .zip(&self.assigned)
            .find(|(t, who)| {
                t.status == TaskStatus::Open && who.iter().any(|a| a == annotator) && !t.labels.contains_key(annotator)
            })
            .map(|(t, _)| TaskView {
                task_id: t.task_id.clone(),
                premise: t.premise.clone(),
                hypothesis: t.hypothesis.clone(),
            }))
    }

    /// Checks a vote without applying it.
    pub fn check_vote(&self, task_id: &str, annotator: &str) -> Result<(), AnnotateError> {
        let i = *self.index.get(task_id).ok_or_else(|| AnnotateError::UnknownTask(task_id.to_string()))?;
        if !self.annotators.iter().any(|a| a == annotator) {
            return Err(AnnotateError::UnknownAnnotator(annotator.to_string()));
        }
        if !self.assigned[i].iter().any(|a| a == annotator) {
            return Err(AnnotateError::NotAssigned { task_id: task_id.to_string(), annotator: annotator.to_string() });
        }
        let task = &self.tasks[i];
        if task.labels.contains_key(annotator) {
            return Err(AnnotateError::DoubleVote { task_id: task_id.to_string(), annotator: annotator.to_string() });
        }
        if task.status != TaskStatus::Open {
            return Err(AnnotateError::Closed(task_id.to_string()));
        }
        Ok(())
    }

    /// Records a vote; the task is finalized once it has the required
    /// number of votes.
    pub fn submit(
        &mut self,
        task_id: &str,
        annotator: &str,
        label: Relation,
    ) -> Result<&AnnotationTask, AnnotateError> {
        self.check_vote(task_id, annotator)?;
        let i = self.index[task_id];
        let task = &mut self.tasks[i];
        task.labels.insert(annotator.to_string(), label);
        if task.labels.len() == self.required_votes {
            let votes: Vec<Relation> = task.labels.values().copied().collect();
            match aggregate(&votes) {
                Aggregate::Final(r) => {
                    task.status = TaskStatus::Complete;
                    task.final_label = Some(r);
                }
                Aggregate::Discarded => task.status = TaskStatus::Discarded,
            }
        }
        Ok(task)
    }

    pub fn progress(&self) -> Progress {
        let mut p = Progress::default();
        for t in &self.tasks {
            match t.status {
                TaskStatus::Open => p.open += 1,
                TaskStatus::Complete => p.complete += 1,
                TaskStatus::Discarded => p.discarded += 1,
            }
        }
        p
    }

    /// Agreement over complete tasks, optionally restricted to a set of pair ids.
    pub fn agreement(&self, only_pairs: Option<&HashSet<String>>) -> AgreementReport {
        let selected = |t: &&AnnotationTask| only_pairs.is_none_or(|s| s.contains(&t.pair_id));
        let complete: Vec<&AnnotationTask> =
            self.tasks.iter().filter(selected).filter(|t| t.status == TaskStatus::Complete).collect();
        let discarded_count = self.tasks.iter().filter(selected).filter(|t| t.status == TaskStatus::Discarded).count();
        let matrix: Vec<Vec<usize>> = complete
            .iter()
            .map(|t| {
                let mut row = vec![0usize; 4];
                for l in t.labels.values() {
                    row[l.index()] += 1;
                }
                row
            })
            .collect();
        let fleiss = if self.required_votes >= 2 { fleiss_kappa(&matrix).ok() } else { None };
        let mut auto = Vec::new();
        let mut fin = Vec::new();
        let mut confusion = vec![vec![0usize; 4]; 4];
        for t in &complete {
            if let (Some(a), Some(f)) = (self.auto_labels.get(&t.pair_id), t.final_label) {
                auto.push(*a);
                fin.push(f);
                confusion[a.index()][f.index()] += 1;
            }
        }
        AgreementReport {
            fleiss_kappa: fleiss,
            cohen_kappa_auto_vs_manual: cohen_kappa(&auto, &fin).ok(),
            auto_vs_final: confusion,
            classes: Relation::ALL.to_vec(),
            complete_count: complete.len(),
            discarded_count,
        }
    }

    /// `{pair_id, final_label}` for every complete task, in task order.
    pub fn export(&self) -> Vec<ExportRow> {
        self.tasks
            .iter()
            .filter_map(|t| t.final_label.map(|l| ExportRow { pair_id: t.pair_id.clone(), final_label: l }))
            .collect()
    }

    /// Writes the header events followed by every recorded vote.
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let seeds = self
            .tasks
            .iter()
            .zip(&self.assigned)
            .map(|(t, a)| TaskSeed {
                task_id: t.task_id.clone(),
                pair_id: t.pair_id.clone(),
                premise: t.premise.clone(),
                hypothesis: t.hypothesis.clone(),
                assigned: a.clone(),
            })
            .collect();
        let header =
            Event::Campaign { annotators: self.annotators.clone(), required_votes: self.required_votes, tasks: seeds };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        serde_json::to_writer(&mut out, &Event::AutoLabels { labels: self.auto_labels.clone() })?;
        out.write_all(b"\n")?;
        for t in &self.tasks {
            for (annotator, label) in &t.labels {
                let v = VoteRecord { task_id: t.task_id.clone(), annotator: annotator.clone(), label: *label };
                out.write_all(v.to_json_line().as_bytes())?;
                out.write_all(b"\n")?;
            }
        }
        out.flush()
    }

    /// Rebuilds a campaign from its event log. A torn final line (crash
    /// mid-append) is ignored with a warning.
    pub fn replay<R: BufRead>(input: R) -> Result<Self, AnnotateError> {
        let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
        let last = lines.iter().rposition(|l| !l.trim().is_empty());
        let mut campaign: Option<Campaign> = None;
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| AnnotateError::Log { line: i + 1, message };
            let ev: Event = match serde_json::from_str(line) {
                Ok(ev) => ev,
                Err(e) if Some(i) == last && campaign.is_some() => {
                    log::warn!("ignoring torn last line {} of event log: {e}", i + 1);
                    break;
                }
                Err(e) => return Err(err(e.to_string())),
            };
            match (ev, campaign.as_mut()) {
                (Event::Campaign { annotators, required_votes, tasks }, None) => {
                    campaign = Some(Self::from_parts(annotators, required_votes, tasks, BTreeMap::new())?);
                }
                (Event::Campaign { .. }, Some(_)) => return Err(err("second campaign header".into())),
                (_, None) => return Err(err("event before campaign header".into())),
                (Event::AutoLabels { labels }, Some(c)) => c.auto_labels.extend(labels),
                (Event::Vote { task_id, annotator, label }, Some(c)) => {
                    c.submit(&task_id, &annotator, label).map_err(|e| err(e.to_string()))?;
                }
            }
        }
        campaign.ok_or_else(|| AnnotateError::Log { line: 0, message: "empty event log".into() })
    }
}

/// Default annotator instructions served with a campaign.
pub const DEFAULT_GUIDELINES: &str = "\
# Annotation guidelines

You will see two sentences taken one after the other from the same
encyclopedia article. Read the first sentence (premise), then the second
(hypothesis), and pick the label that best describes how the second relates
to the first. Linking words at the start of the second sentence have been
removed, so judge the content only.

1. **Contrastive**: the second sentence opposes, limits or contradicts what
   the first one says.
2. **Reasoning**: the second sentence is a consequence, result or conclusion
   that follows from the first one.
3. **Entailment**: the second sentence restates, summarizes or explains the
   first one in other words; if the first is true, the second is too.
4. **Neutral**: neither sentence says anything about the other; the two are
   about unrelated matters.

Choose exactly one label per pair. If several labels seem possible, pick the
one you find most plausible.
";
