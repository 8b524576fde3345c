//! Text canonicalization shared by every stage that matches or counts words.
//!
//! All downstream matching (cue lookup, word statistics, featurization) runs
//! on the output of [`normalize_text`], so the same sentence always produces
//! the same keys regardless of how it was encoded in the source dump.

use unicode_normalization::UnicodeNormalization;

/// Canonical form: NFC, cedilla `ş`/`ţ` mapped to comma-below `ș`/`ț`,
/// whitespace runs collapsed to one space, ends trimmed.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.nfc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(comma_below(c));
    }
    out
}

fn comma_below(c: char) -> char {
    match c {
        '\u{015E}' => '\u{0218}', // Ş -> Ș
        '\u{015F}' => '\u{0219}', // ş -> ș
        '\u{0162}' => '\u{021A}', // Ţ -> Ț
        '\u{0163}' => '\u{021B}', // ţ -> ț
        other => other,
    }
}

/// Lowercased word tokens with punctuation removed.
///
/// Punctuation characters are deleted rather than replaced by spaces, so
/// hyphenated forms such as `într-un` stay a single token (`întrun`).
/// Tokens that become empty are skipped.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|raw| {
        let w: String = raw.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
        (!w.is_empty()).then_some(w)
    })
}

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Uppercases the first character of `text`, leaving the rest untouched.
pub fn capitalize_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cedilla_maps_to_comma_below() {
        assert_eq!(normalize_text("ţară"), "țară");
        assert_eq!(normalize_text("Şi ŢARĂ"), "Și ȚARĂ");
    }

    #[test]
    fn decomposed_cedilla_is_composed_then_mapped() {
        // s + COMBINING CEDILLA
        assert_eq!(normalize_text("s\u{0327}i"), "și");
    }

    #[test]
    fn whitespace_collapses() {
        assert_eq!(normalize_text("a  b\tc"), "a b c");
        assert_eq!(normalize_text("  x \n\n y  "), "x y");
        assert_eq!(normalize_text(""), "");
    }

    #[test]
    fn canonical_text_unchanged() {
        let s = "Prețurile au scăzut în această țară.";
        assert_eq!(normalize_text(s), s);
    }

    #[test]
    fn words_strip_punctuation_and_lowercase() {
        let w: Vec<_> = words("Într-un an, Roma (cetatea) a crescut!").collect();
        assert_eq!(w, ["întrun", "an", "roma", "cetatea", "a", "crescut"]);
        assert_eq!(words(" -- , ").count(), 0);
    }

    #[test]
    fn capitalize() {
        assert_eq!(capitalize_first("prețurile"), "Prețurile");
        assert_eq!(capitalize_first("înainte"), "Înainte");
        assert_eq!(capitalize_first(""), "");
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,60}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
        }

        #[test]
        fn normalize_is_idempotent_on_romanian(s in "[aăâîșşțţ \t\nSŞTŢ.,]{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }
    }
}
