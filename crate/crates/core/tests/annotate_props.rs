use foundry::annotate::{aggregate, cohen_kappa, fleiss_kappa, Aggregate, AnnotateError, Campaign, TaskStatus};
use foundry::labeler::LabeledPair;
use foundry::Relation;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pairs(n: usize) -> Vec<LabeledPair> {
    (0..n)
        .map(|i| LabeledPair {
            pair_id: format!("p{i}"),
            premise: format!("Premisa {i}."),
            hypothesis: format!("Ipoteza {i}."),
            label: Relation::ALL[i % 4],
            cue: None,
            source: None,
            auto_label: None,
        })
        .collect()
}

fn annotators() -> Vec<String> {
    ["ana", "dan", "ion"].iter().map(|s| s.to_string()).collect()
}

fn rel() -> impl Strategy<Value = Relation> {
    (0usize..4).prop_map(|i| Relation::ALL[i])
}

/// Votes for `n` tasks, three each.
fn votes(n: usize) -> impl Strategy<Value = Vec<[Relation; 3]>> {
    proptest::collection::vec([rel(), rel(), rel()], n)
}

fn run(n: usize, votes: &[[Relation; 3]], order_seed: u64) -> Campaign {
    let mut c = Campaign::create(&pairs(n), &annotators(), 3).unwrap();
    let mut events: Vec<(usize, usize)> = (0..n).flat_map(|t| (0..3).map(move |a| (t, a))).collect();
    events.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed));
    let names = annotators();
    for (t, a) in events {
        c.submit(&format!("t{t:06}"), &names[a], votes[t][a]).unwrap();
    }
    c
}

proptest! {
    #[test]
    fn vote_order_does_not_matter(v in votes(25), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = run(25, &v, s1);
        let b = run(25, &v, s2);
        prop_assert_eq!(a.export(), b.export());
        prop_assert_eq!(a.progress(), b.progress());
        prop_assert_eq!(a.agreement(None), b.agreement(None));
    }

    #[test]
    fn discard_rule(v in votes(40)) {
        let c = run(40, &v, 0);
        for (t, task) in c.tasks().iter().enumerate() {
            match aggregate(&v[t]) {
                Aggregate::Final(r) => {
                    prop_assert_eq!(task.status, TaskStatus::Complete);
                    prop_assert_eq!(task.final_label, Some(r));
                    prop_assert!(v[t].iter().filter(|x| **x == r).count() >= 2);
                }
                Aggregate::Discarded => {
                    prop_assert_eq!(task.status, TaskStatus::Discarded);
                    let mut d = v[t].to_vec();
                    d.sort();
                    d.dedup();
                    prop_assert_eq!(d.len(), 3);
                }
            }
        }
        let p = c.progress();
        prop_assert_eq!(p.open, 0);
        prop_assert_eq!(p.complete + p.discarded, 40);
    }

    #[test]
    fn kappas_ignore_category_names(v in votes(30), shift in 1usize..4) {
        let rows = |vs: &[[Relation; 3]], k: usize| -> Vec<Vec<usize>> {
            vs.iter().map(|r| {
                let mut row = vec![0; 4];
                r.iter().for_each(|x| row[(x.index() + k) % 4] += 1);
                row
            }).collect()
        };
        let a = fleiss_kappa(&rows(&v, 0)).unwrap();
        let b = fleiss_kappa(&rows(&v, shift)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let first: Vec<Relation> = v.iter().map(|r| r[0]).collect();
        let second: Vec<Relation> = v.iter().map(|r| r[1]).collect();
        let rename = |xs: &[Relation]| xs.iter().map(|x| Relation::ALL[(x.index() + shift) % 4]).collect::<Vec<_>>();
        let k1 = cohen_kappa(&first, &second).unwrap();
        let k2 = cohen_kappa(&rename(&first), &rename(&second)).unwrap();
        prop_assert!((k1 - k2).abs() < 1e-12);
        prop_assert!((cohen_kappa(&second, &first).unwrap() - k1).abs() < 1e-12);
    }

    #[test]
    fn log_replay_restores_state(v in votes(12), stop in 0usize..36) {
        let mut c = Campaign::create(&pairs(12), &annotators(), 3).unwrap();
        let names = annotators();
        for k in 0..stop {
            let (t, a) = (k / 3, k % 3);
            c.submit(&format!("t{t:06}"), &names[a], v[t][a]).unwrap();
        }
        let mut log = Vec::new();
        c.write_log(&mut log).unwrap();
        let back = Campaign::replay(log.as_slice()).unwrap();
        prop_assert_eq!(&back, &c);
        log.extend_from_slice(br#"{"event":"vote","task_"#);
        prop_assert_eq!(Campaign::replay(log.as_slice()).unwrap(), c);
    }
}

#[test]
fn vote_errors() {
    let mut c = Campaign::create(&pairs(4), &annotators(), 2).unwrap();
    // Task 0 goes to ana and dan.
    assert!(matches!(c.submit("t000000", "ion", Relation::Neutral), Err(AnnotateError::NotAssigned { .. })));
    assert!(matches!(c.submit("t000009", "ana", Relation::Neutral), Err(AnnotateError::UnknownTask(_))));
    assert!(matches!(c.submit("t000000", "eve", Relation::Neutral), Err(AnnotateError::UnknownAnnotator(_))));
    c.submit("t000000", "ana", Relation::Neutral).unwrap();
    assert!(matches!(c.submit("t000000", "ana", Relation::Neutral), Err(AnnotateError::DoubleVote { .. })));
    c.submit("t000000", "dan", Relation::Reasoning).unwrap();
    assert_eq!(c.tasks()[0].status, TaskStatus::Discarded);
    assert_eq!(c.next_task("ana").unwrap().unwrap().task_id, "t000002");
}

#[test]
fn next_task_view_hides_labels() {
    let c = Campaign::create(&pairs(2), &annotators(), 3).unwrap();
    let view = c.next_task("dan").unwrap().unwrap();
    let json = serde_json::to_value(&view).unwrap();
    assert_eq!(json.as_object().unwrap().len(), 3);
    assert!(json.get("label").is_none() && json.get("auto_label").is_none());
}
