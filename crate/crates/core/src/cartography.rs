//! Training-dynamics statistics per example and the easy / ambiguous / hard
//! grouping derived from them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::curriculum::difficulty_score;
use crate::relation::Relation;

#[derive(Debug, thiserror::Error)]
pub enum CartographyError {
    #[error("example {example_id} is missing epoch {epoch}")]
    MissingEpoch { example_id: String, epoch: u32 },
    #[error("example {example_id} has two records for epoch {epoch}")]
    DuplicateEpoch { example_id: String, epoch: u32 },
    #[error("need at least 2 epochs, found {0}")]
    TooFewEpochs(usize),
    #[error("no gold label for example {0}")]
    MissingGold(String),
    #[error("gold_prob {value} for example {example_id} is outside [0, 1]")]
    BadProbability { example_id: String, value: f64 },
    #[error("group fraction must be in (0, 1], got {0}")]
    Fraction(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRecord {
    pub example_id: String,
    pub epoch: u32,
    pub gold_prob: f64,
    pub predicted_label: Relation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    E2L,
    A,
    H2L,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::E2L, Group::A, Group::H2L];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::E2L => "E2L",
            Group::A => "A",
            Group::H2L => "H2L",
        }
    }

    pub fn parse(s: &str) -> Option<Group> {
        Group::ALL.into_iter().find(|g| g.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartographyPoint {
    pub example_id: String,
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
    /// Sorted, possibly empty; groups may overlap.
    pub groups: Vec<Group>,
    pub score: f64,
}

pub fn read_dynamics<R: BufRead>(input: R) -> Result<Vec<DynamicsRecord>, CartographyError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| CartographyError::Parse { line: i + 1, message: e.to_string() })?,
        );
    }
    Ok(out)
}

pub fn write_dynamics<W: Write>(records: &[DynamicsRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Mean, population standard deviation and correct fraction per example.
///
/// Output follows the order in which example ids first appear. Every
/// example must have exactly one record for each epoch seen in the log.
pub fn compute_points(
    records: &[DynamicsRecord],
    gold: &HashMap<String, Relation>,
) -> Result<Vec<CartographyPoint>, CartographyError> {
    let epochs: Vec<u32> = {
        let set: HashSet<u32> = records.iter().map(|r| r.epoch).collect();
        let mut v: Vec<u32> = set.into_iter().collect();
        v.sort_unstable();
        v
    };
    if epochs.len() < 2 {
        return Err(CartographyError::TooFewEpochs(epochs.len()));
    }
    let epoch_pos: HashMap<u32, usize> = epochs.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let mut order: Vec<&str> = Vec::new();
    let mut slots: HashMap<&str, Vec<Option<&DynamicsRecord>>> = HashMap::new();
    for r in records {
        if !(0.0..=1.0).contains(&r.gold_prob) {
            return Err(CartographyError::BadProbability { example_id: r.example_id.clone(), value: r.gold_prob });
        }
        let row = slots.entry(&r.example_id).or_insert_with(|| {
            order.push(&r.example_id);
            vec![None; epochs.len()]
        });
        let slot = &mut row[epoch_pos[&r.epoch]];
        if slot.is_some() {
            return Err(CartographyError::DuplicateEpoch { example_id: r.example_id.clone(), epoch: r.epoch });
        }
        *slot = Some(r);
    }
    let e = epochs.len() as f64;
    let mut points = Vec::with_capacity(order.len());
    for id in order {
        let label = *gold.get(id).ok_or_else(|| CartographyError::MissingGold(id.to_string()))?;
        let row = &slots[id];
        let mut probs = Vec::with_capacity(row.len());
        let mut correct = 0usize;
        for (slot, epoch) in row.iter().zip(&epochs) {
            let r = slot.ok_or_else(|| CartographyError::MissingEpoch { example_id: id.to_string(), epoch: *epoch })?;
            probs.push(r.gold_prob);
            correct += usize::from(r.predicted_label == label);
        }
        let mean = probs.iter().sum::<f64>() / e;
        let var = probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / e;
        let (confidence, variability) = (mean.clamp(0.0, 1.0), var.sqrt());
        points.push(CartographyPoint {
            example_id: id.to_string(),
            confidence,
            variability,
            correctness: correct as f64 / e,
            groups: Vec::new(),
            score: difficulty_score(confidence, variability).expect("mean and std of unit values stay in [0, 1]"),
        });
    }
    Ok(points)
}

/// Size of each group: `ceil(fraction * n)`, tolerant to rounding noise in
/// `fraction`.
pub fn group_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// E2L: highest confidence; H2L: lowest confidence; A: highest variability.
/// Each group has [`group_size`] members, ties broken by example id.
pub fn assign_groups(points: &mut [CartographyPoint], fraction: f64) -> Result<(), CartographyError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CartographyError::Fraction(fraction));
    }
    let k = group_size(fraction, points.len());
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let by_id = |a: &usize, b: &usize| points[*a].example_id.cmp(&points[*b].example_id);

    idx.sort_by(|a, b| points[*b].confidence.total_cmp(&points[*a].confidence).then_with(|| by_id(a, b)));
    let easy: Vec<usize> = idx[..k].to_vec();
    idx.sort_by(|a, b| points[*a].confidence.total_cmp(&points[*b].confidence).then_with(|| by_id(a, b)));
    let hard: Vec<usize> = idx[..k].to_vec();
    idx.sort_by(|a, b| points[*b].variability.total_cmp(&points[*a].variability).then_with(|| by_id(a, b)));
    let ambiguous: Vec<usize> = idx[..k].to_vec();

    for p in points.iter_mut() {
        p.groups.clear();
    }
    for (group, members) in [(Group::E2L, easy), (Group::A, ambiguous), (Group::H2L, hard)] {
        for i in members {
            points[i].groups.push(group);
        }
    }
    for p in points.iter_mut() {
        p.groups.sort();
    }
    Ok(())
}

/// Ids per group, in point order.
pub fn group_members(points: &[CartographyPoint], group: Group) -> Vec<String> {
    points.iter().filter(|p| p.groups.contains(&group)).map(|p| p.example_id.clone()).collect()
}

const CSV_HEADER: [&str; 6] = ["example_id", "confidence", "variability", "correctness", "groups", "score"];

pub fn write_csv<W: Write>(points: &[CartographyPoint], out: W) -> Result<(), CartographyError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CartographyError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for p in points {
        let groups: Vec<&str> = p.groups.iter().map(|g| g.as_str()).collect();
        w.write_record([
            p.example_id.clone(),
            format!("{}", p.confidence),
            format!("{}", p.variability),
            format!("{}", p.correctness),
            groups.join(";"),
            format!("{}", p.score),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CartographyPoint>, CartographyError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let parse = |message: String| CartographyError::Parse { line, message };
        let rec = rec.map_err(|e| parse(e.to_string()))?;
        let field = |j: usize| rec.get(j).ok_or_else(|| parse(format!("missing column {}", CSV_HEADER[j])));
        let num = |j: usize| -> Result<f64, CartographyError> {
            field(j)?.parse::<f64>().map_err(|e| parse(format!("{}: {e}", CSV_HEADER[j])))
        };
        let groups = field(4)?
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| Group::parse(s).ok_or_else(|| parse(format!("unknown group {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(CartographyPoint {
            example_id: field(0)?.to_string(),
            confidence: num(1)?,
            variability: num(2)?,
            correctness: num(3)?,
            groups,
            score: num(5)?,
        });
    }
    Ok(out)
}

/// Counts of examples per group and class.
pub fn group_distribution(
    points: &[CartographyPoint],
    labels: &HashMap<String, Relation>,
) -> BTreeMap<Group, BTreeMap<Relation, usize>> {
    let mut table: BTreeMap<Group, BTreeMap<Relation, usize>> =
        Group::ALL.iter().map(|g| (*g, Relation::ALL.iter().map(|r| (*r, 0)).collect())).collect();
    for p in points {
        if let Some(label) = labels.get(&p.example_id) {
            for g in &p.groups {
                *table.get_mut(g).unwrap().get_mut(label).unwrap() += 1;
            }
        }
    }
    table
}

pub fn render_distribution(table: &BTreeMap<Group, BTreeMap<Relation, usize>>) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<6}", "group");
    for r in Relation::ALL {
        let _ = write!(out, "\t{r}");
    }
    out.push('\n');
    for (g, row) in table {
        let _ = write!(out, "{:<6}", g.as_str());
        for r in Relation::ALL {
            let _ = write!(out, "\t{}", row[&r]);
        }
        out.push('\n');
    }
    out
}

const BIN_COLORS: [&str; 5] = ["#d7191c", "#fdae61", "#ffffbf", "#abd9e9", "#2c7bb6"];

fn correctness_bin(c: f64) -> usize {
    ((c * BIN_COLORS.len() as f64) as usize).min(BIN_COLORS.len() - 1)
}

/// Data map as SVG: variability (x) against confidence (y), colored by
/// correctness, with histograms of all three statistics.
pub fn write_svg<W: Write>(points: &[CartographyPoint], mut out: W) -> std::io::Result<()> {
    let (w, h) = (900.0, 520.0);
    let (px, py, pw, ph) = (60.0, 30.0, 420.0, 420.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r##"<rect x="{px}" y="{py}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
    let xmax = points.iter().map(|p| p.variability).fold(0.5f64, f64::max);
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (gx, gy) = (px + f * pw, py + ph - f * ph);
        let _ =
            writeln!(s, r#"<text x="{gx:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#, py + ph + 14.0, f * xmax);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{f:.1}</text>"#, px - 4.0, gy + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">variability</text>"#,
        px + pw / 2.0,
        py + ph + 32.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">confidence</text>"#,
        py + ph / 2.0,
        py + ph / 2.0
    );
    for p in points {
        let cx = px + p.variability / xmax * pw;
        let cy = py + ph - p.confidence * ph;
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{}" stroke="#333" stroke-width="0.3"/>"##,
            BIN_COLORS[correctness_bin(p.correctness)]
        );
    }
    for (i, color) in BIN_COLORS.iter().enumerate() {
        let ly = py + 12.0 + i as f64 * 14.0;
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#,
            px + pw - 80.0,
            ly - 9.0
        );
        let lo = i as f64 / BIN_COLORS.len() as f64;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">correct ≥ {lo:.1}</text>"#, px + pw - 66.0);
    }
    let hists: [(&str, Box<dyn Fn(&CartographyPoint) -> f64>, f64); 3] = [
        ("confidence", Box::new(|p| p.confidence), 1.0),
        ("variability", Box::new(|p| p.variability), xmax),
        ("correctness", Box::new(|p| p.correctness), 1.0),
    ];
    let (hx, hw, hh) = (540.0, 320.0, 110.0);
    for (j, (name, get, max)) in hists.iter().enumerate() {
        let hy = py + j as f64 * (hh + 40.0);
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for p in points {
            let b = ((get(p) / max * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let _ = writeln!(s, r##"<rect x="{hx}" y="{hy}" width="{hw}" height="{hh}" fill="none" stroke="#444"/>"##);
        let bw = hw / bins as f64;
        for (b, c) in counts.iter().enumerate() {
            let bh = *c as f64 / top * hh;
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="#6a8fbf"/>"##,
                hx + b as f64 * bw,
                hy + hh - bh,
                bw - 1.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{name}</text>"#,
            hx + hw / 2.0,
            hy + hh + 14.0
        );
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())?;
    out.flush()
}
