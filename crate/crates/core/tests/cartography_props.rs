use std::collections::HashMap;

use foundry::cartography::{
    assign_groups, compute_points, read_csv, write_csv, CartographyPoint, DynamicsRecord, Group,
};
use foundry::curriculum::difficulty_score;
use foundry::Relation;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `probs[i][e]` and `correct[i][e]` for example i at epoch e.
fn log_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    (1usize..40, 2usize..8).prop_flat_map(|(n, e)| {
        (
            proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, e), n),
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), e), n),
        )
    })
}

fn records(probs: &[Vec<f64>], correct: &[Vec<bool>]) -> (Vec<DynamicsRecord>, HashMap<String, Relation>) {
    let gold: HashMap<String, Relation> = (0..probs.len()).map(|i| (format!("x{i:03}"), Relation::Reasoning)).collect();
    let mut out = Vec::new();
    for e in 0..probs[0].len() {
        for (i, p) in probs.iter().enumerate() {
            out.push(DynamicsRecord {
                example_id: format!("x{i:03}"),
                epoch: e as u32,
                gold_prob: p[e],
                predicted_label: if correct[i][e] { Relation::Reasoning } else { Relation::Neutral },
            });
        }
    }
    (out, gold)
}

fn by_id(points: &[CartographyPoint]) -> HashMap<String, (f64, f64, f64)> {
    points.iter().map(|p| (p.example_id.clone(), (p.confidence, p.variability, p.correctness))).collect()
}

proptest! {
    #[test]
    fn bounds_and_score(log in log_strategy()) {
        let (recs, gold) = records(&log.0, &log.1);
        let epochs = log.0[0].len() as f64;
        for p in compute_points(&recs, &gold).unwrap() {
            prop_assert!((0.0..=1.0).contains(&p.confidence));
            prop_assert!((0.0..=0.5 + 1e-12).contains(&p.variability));
            let k = p.correctness * epochs;
            prop_assert!((k - k.round()).abs() < 1e-9);
            prop_assert!((p.score - difficulty_score(p.confidence, p.variability).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn record_order_does_not_matter(log in log_strategy(), seed in any::<u64>()) {
        let (mut recs, gold) = records(&log.0, &log.1);
        let a = by_id(&compute_points(&recs, &gold).unwrap());
        recs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = by_id(&compute_points(&recs, &gold).unwrap());
        prop_assert_eq!(a.len(), b.len());
        for (id, (c, v, k)) in a {
            let (c2, v2, k2) = b[&id];
            prop_assert!((c - c2).abs() < 1e-12 && (v - v2).abs() < 1e-12 && (k - k2).abs() < 1e-12);
        }
    }

    /// Repeating every epoch leaves all three statistics unchanged.
    #[test]
    fn repeating_epochs_is_neutral(log in log_strategy()) {
        let (recs, gold) = records(&log.0, &log.1);
        let twice: (Vec<Vec<f64>>, Vec<Vec<bool>>) = (
            log.0.iter().map(|r| r.iter().flat_map(|x| [*x, *x]).collect()).collect(),
            log.1.iter().map(|r| r.iter().flat_map(|x| [*x, *x]).collect()).collect(),
        );
        let (recs2, _) = records(&twice.0, &twice.1);
        let a = by_id(&compute_points(&recs, &gold).unwrap());
        let b = by_id(&compute_points(&recs2, &gold).unwrap());
        for (id, (c, v, k)) in a {
            let (c2, v2, k2) = b[&id];
            prop_assert!((c - c2).abs() < 1e-12 && (v - v2).abs() < 1e-12 && (k - k2).abs() < 1e-12);
        }
    }

    #[test]
    fn groups_are_rank_prefixes(log in log_strategy(), frac in 0.05f64..=1.0) {
        let (recs, gold) = records(&log.0, &log.1);
        let mut points = compute_points(&recs, &gold).unwrap();
        assign_groups(&mut points, frac).unwrap();
        let members = |g: Group| points.iter().filter(|p| p.groups.contains(&g)).collect::<Vec<_>>();
        let outside = |g: Group| points.iter().filter(|p| !p.groups.contains(&g)).collect::<Vec<_>>();
        for e in members(Group::E2L) {
            prop_assert!(outside(Group::E2L).iter().all(|o| o.confidence <= e.confidence));
        }
        for h in members(Group::H2L) {
            prop_assert!(outside(Group::H2L).iter().all(|o| o.confidence >= h.confidence));
        }
        for a in members(Group::A) {
            prop_assert!(outside(Group::A).iter().all(|o| o.variability <= a.variability));
        }
    }

    #[test]
    fn variability_within_range(log in log_strategy()) {
        let (recs, gold) = records(&log.0, &log.1);
        for (p, row) in compute_points(&recs, &gold).unwrap().iter().zip(&log.0) {
            let max = row.iter().cloned().fold(f64::MIN, f64::max);
            let min = row.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(p.variability >= 0.0 && p.variability <= max - min + 1e-12);
        }
    }

    #[test]
    fn shifting_confidence_keeps_groups(log in log_strategy(), shift in -0.5f64..0.5, frac in 0.05f64..=1.0) {
        let (recs, gold) = records(&log.0, &log.1);
        let mut a = compute_points(&recs, &gold).unwrap();
        let mut b = a.clone();
        b.iter_mut().for_each(|p| p.confidence += shift);
        assign_groups(&mut a, frac).unwrap();
        assign_groups(&mut b, frac).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.groups, &y.groups);
        }
    }

    #[test]
    fn csv_round_trip(log in log_strategy()) {
        let (recs, gold) = records(&log.0, &log.1);
        let mut points = compute_points(&recs, &gold).unwrap();
        assign_groups(&mut points, 1.0 / 3.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&points, &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), points);
    }
}

#[test]
fn missing_epoch_is_rejected() {
    let (mut recs, gold) = records(&[vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6]], &[vec![true; 3], vec![false; 3]]);
    recs.retain(|r| !(r.example_id == "x001" && r.epoch == 1));
    assert!(compute_points(&recs, &gold).is_err());
}
