//! Classification metrics and paired/unpaired significance tests.

use serde::{Deserialize, Serialize};

use crate::relation::Relation;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("gold has {gold} labels but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("label {0} is not in the configured class set")]
    UnknownClass(Relation),
    #[error("entry ({row}, {col}) is not 0 or 1")]
    NonBinary { row: usize, col: usize },
    #[error("{0}")]
    Shape(String),
    #[error("exact mode needs n*m <= {limit}, got {n}*{m}")]
    TooLargeForExact { n: usize, m: usize, limit: usize },
    #[error("samples must be non-empty and finite")]
    BadSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: Relation,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub classes: Vec<Relation>,
    pub per_class: Vec<ClassMetrics>,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// `confusion[g][p]`: gold class `g` predicted as `p`, indexed like `classes`.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn classification_report(
    gold: &[Relation],
    pred: &[Relation],
    classes: &[Relation],
) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    let k = classes.len();
    let pos = |r: Relation| classes.iter().position(|c| *c == r).ok_or(EvalError::UnknownClass(r));
    let mut confusion = vec![vec![0usize; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        confusion[pos(*g)?][pos(*p)?] += 1;
    }
    let mut per_class = Vec::with_capacity(k);
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for (i, class) in classes.iter().enumerate() {
        let tp = confusion[i][i];
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[i]).sum();
        tp_all += tp;
        fp_all += predicted - tp;
        fn_all += support - tp;
        let (precision, recall) = (ratio(tp, predicted), ratio(tp, support));
        per_class.push(ClassMetrics { class: *class, precision, recall, f1: f1(precision, recall), support });
    }
    let micro_f1 = f1(ratio(tp_all, tp_all + fp_all), ratio(tp_all, tp_all + fn_all));
    let macro_f1 = if k == 0 { 0.0 } else { per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64 };
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        classes: classes.to_vec(),
        per_class,
        micro_f1,
        macro_f1,
        accuracy: ratio(tp_all, gold.len()),
        confusion,
        n: gold.len(),
    })
}

/// Macro-F1 without building a full report.
pub fn macro_f1(gold: &[Relation], pred: &[Relation], classes: &[Relation]) -> Result<f64, EvalError> {
    classification_report(gold, pred, classes).map(|r| r.macro_f1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_sizes: Option<(usize, usize)>,
}

/// Cochran's Q over an items × classifiers 0/1 matrix.
pub fn cochran_q(correct: &[Vec<u8>]) -> Result<TestResult, EvalError> {
    let l = correct.first().map_or(0, Vec::len);
    if correct.is_empty() || l < 2 {
        return Err(EvalError::Shape("need at least one item and two classifiers".into()));
    }
    let mut g = vec![0f64; l];
    let (mut t, mut sum_r2) = (0f64, 0f64);
    for (i, row) in correct.iter().enumerate() {
        if row.len() != l {
            return Err(EvalError::Shape(format!("row {i} has {} columns, expected {l}", row.len())));
        }
        let mut r = 0f64;
        for (j, &x) in row.iter().enumerate() {
            if x > 1 {
                return Err(EvalError::NonBinary { row: i, col: j });
            }
            g[j] += x as f64;
            r += x as f64;
        }
        t += r;
        sum_r2 += r * r;
    }
    let lf = l as f64;
    let den = lf * t - sum_r2;
    let (q, p) = if den == 0.0 {
        (0.0, 1.0)
    } else {
        let q = (lf - 1.0) * (lf * g.iter().map(|x| x * x).sum::<f64>() - t * t) / den;
        (q, chi2_sf(q, (l - 1) as f64))
    };
    Ok(TestResult { method: "cochran_q".into(), statistic: q, p_value: p, df: Some(l - 1), sample_sizes: None })
}

/// McNemar's chi-square without continuity correction on two 0/1 vectors.
pub fn mcnemar(a: &[u8], b: &[u8]) -> Result<TestResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch { gold: a.len(), pred: b.len() });
    }
    let b10 = a.iter().zip(b).filter(|(x, y)| **x == 1 && **y == 0).count() as f64;
    let b01 = a.iter().zip(b).filter(|(x, y)| **x == 0 && **y == 1).count() as f64;
    let (stat, p) = if b10 + b01 == 0.0 {
        (0.0, 1.0)
    } else {
        let s = (b10 - b01).powi(2) / (b10 + b01);
        (s, chi2_sf(s, 1.0))
    };
    Ok(TestResult { method: "mcnemar".into(), statistic: stat, p_value: p, df: Some(1), sample_sizes: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MwMode {
    Exact,
    Normal,
}

pub const EXACT_LIMIT: usize = 10_000;

/// Two-sided Mann-Whitney U. The reported statistic is `min(U_a, U_b)`.
///
/// Ties get midranks. The exact mode enumerates every assignment of the
/// pooled (mid)ranks to sample A by dynamic programming over rank sums; the
/// normal mode uses tie and continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64], mode: MwMode) -> Result<TestResult, EvalError> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 || a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(EvalError::BadSample);
    }
    if mode == MwMode::Exact && n * m > EXACT_LIMIT {
        return Err(EvalError::TooLargeForExact { n, m, limit: EXACT_LIMIT });
    }
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|x| (*x, true)).chain(b.iter().map(|x| (*x, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Doubled midranks are integers.
    let total = n + m;
    let mut rank2 = vec![0u64; total];
    let mut tie_term = 0f64;
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let r2 = (i + 1 + j + 1) as u64;
        rank2[i..=j].fill(r2);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let ra2: u64 = pooled.iter().zip(&rank2).filter(|(p, _)| p.1).map(|(_, r)| *r).sum();
    let offset2 = (n * (n + 1)) as u64;
    let ua2 = ra2 - offset2;
    let nm2 = (2 * n * m) as u64;
    let u2 = ua2.min(nm2 - ua2);
    let u = u2 as f64 / 2.0;

    let p = match mode {
        MwMode::Exact => {
            let dist = rank_sum_distribution(&rank2, n);
            let total_ways: f64 = dist.iter().sum();
            let limit = u2 + offset2;
            let below: f64 = dist.iter().take(limit as usize + 1).sum();
            (2.0 * below / total_ways).min(1.0)
        }
        MwMode::Normal => {
            let (nf, mf, tf) = (n as f64, m as f64, total as f64);
            let var = nf * mf / 12.0 * ((tf + 1.0) - tie_term / (tf * (tf - 1.0)));
            if var <= 0.0 {
                1.0
            } else {
                let z = ((nf * mf / 2.0 - u).abs() - 0.5).max(0.0) / var.sqrt();
                (2.0 * normal_sf(z)).min(1.0)
            }
        }
    };
    Ok(TestResult {
        method: match mode {
            MwMode::Exact => "mann_whitney_exact".into(),
            MwMode::Normal => "mann_whitney_normal".into(),
        },
        statistic: u,
        p_value: p,
        df: None,
        sample_sizes: Some((n, m)),
    })
}

/// `dist[s]` = number of size-`k` subsets of `ranks` whose sum is `s`.
fn rank_sum_distribution(ranks: &[u64], k: usize) -> Vec<f64> {
    let max_sum: u64 = {
        let mut sorted = ranks.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        sorted.iter().take(k).sum()
    };
    let width = max_sum as usize + 1;
    // dp[j * width + s]
    let mut dp = vec![0f64; (k + 1) * width];
    dp[0] = 1.0;
    for (seen, &r) in ranks.iter().enumerate() {
        let r = r as usize;
        for j in (1..=k.min(seen + 1)).rev() {
            let (lo, hi) = dp.split_at_mut(j * width);
            let prev = &lo[(j - 1) * width..];
            let cur = &mut hi[..width];
            for s in (r..width).rev() {
                let v = prev[s - r];
                if v != 0.0 {
                    cur[s] += v;
                }
            }
        }
    }
    dp[k * width..].to_vec()
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Survival function of the chi-square distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0)
    }
}

/// Complementary error function for any real `x`.
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        2.0 - gamma_q(0.5, x * x)
    }
}

/// Upper tail of the standard normal.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}
