use foundry::labeler::{match_cue, remove_cue, PhraseTable};
use proptest::prelude::*;

/// Brute-force reference: longest key that prefixes the lowercased sentence
/// and is followed by whitespace, a comma or the end.
fn longest_by_scan(sentence: &str, table: &PhraseTable) -> Option<String> {
    let lower = sentence.to_lowercase();
    table
        .phrases()
        .iter()
        .filter(|p| {
            lower.starts_with(p.normalized.as_str())
                && lower[p.normalized.len()..].chars().next().is_none_or(|c| c == ',' || c.is_whitespace())
        })
        .max_by_key(|p| p.normalized.chars().count())
        .map(|p| p.normalized.clone())
}

fn sentence_strategy() -> impl Strategy<Value = String> {
    let table = PhraseTable::builtin();
    let surfaces: Vec<String> = table.phrases().iter().map(|p| p.surface.clone()).collect();
    (
        proptest::sample::select(surfaces),
        prop_oneof![Just(""), Just(" "), Just(", "), Just("ul "), Just("a, ")],
        "[a-zăâîșț ]{0,30}",
        any::<bool>(),
    )
        .prop_map(|(cue, sep, tail, upper)| {
            let s = format!("{cue}{sep}{tail}");
            if upper {
                s.to_uppercase()
            } else {
                s
            }
        })
}

proptest! {
    #[test]
    fn match_is_longest_boundary_prefix(s in sentence_strategy()) {
        let table = PhraseTable::builtin();
        let got = match_cue(&s, &table).map(|m| m.phrase.normalized.clone());
        prop_assert_eq!(got, longest_by_scan(&s, &table));
    }

    #[test]
    fn plain_words_never_match(s in "[b-df-hj-np-tv-z]{3,12}( [a-z]{2,8}){0,6}") {
        let table = PhraseTable::builtin();
        prop_assert_eq!(match_cue(&s, &table).is_some(), longest_by_scan(&s, &table).is_some());
    }

    #[test]
    fn removed_cue_leaves_capitalized_rest(s in sentence_strategy()) {
        let table = PhraseTable::builtin();
        if let Some(m) = match_cue(&s, &table) {
            if let Ok(rest) = remove_cue(&s, m.span.clone()) {
                let first = rest.chars().next().unwrap();
                prop_assert!(!first.is_lowercase());
                prop_assert!(!rest.starts_with(','));
                prop_assert!(rest.chars().count() < s.chars().count());
            }
        }
    }
}

#[test]
fn every_builtin_phrase_matches_itself() {
    let table = PhraseTable::builtin();
    for p in table.phrases() {
        let s = format!("{}, restul propoziției rămâne.", p.surface);
        let m = match_cue(&s, &table).expect(&p.surface);
        assert_eq!(Some(m.phrase.normalized.clone()), longest_by_scan(&s, &table));
        assert!(m.phrase.normalized.chars().count() >= p.normalized.chars().count());
    }
}
