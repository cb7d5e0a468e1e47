//! Text normalization and edit-distance utilities shared by the similarity
//! measures and the backcalculation matcher.

use unicode_normalization::UnicodeNormalization;

/// Canonicalizes a string for comparison: Unicode compatibility
/// normalization (NFKC), lowercasing, trimming, and collapsing internal
/// whitespace runs to a single space.
///
/// The function is idempotent: `normalize_text(normalize_text(s)) ==
/// normalize_text(s)`.
pub fn normalize_text(s: &str) -> String {
    let folded: String = s.nfkc().collect::<String>().to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Levenshtein distance over Unicode scalar values with unit costs for
/// insertion, deletion, and substitution. ASCII inputs run directly on
/// bytes.
pub fn edit_distance(a: &str, b: &str) -> usize {
    if a.is_ascii() && b.is_ascii() {
        edit_distance_units(a.as_bytes(), b.as_bytes())
    } else {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        edit_distance_units(&a, &b)
    }
}

fn edit_distance_units<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn char_count(s: &str) -> usize {
    if s.is_ascii() {
        s.len()
    } else {
        s.chars().count()
    }
}

/// Edit-distance similarity in `[0, 1]`:
/// `1 - edit_distance(a, b) / max(|a|, |b|)`, and `1.0` when both strings
/// are empty. Evaluated as `(max - d) / max` so the result is the correctly
/// rounded value of the rational similarity.
pub fn normalized_edit_similarity(a: &str, b: &str) -> f64 {
    let max_len = char_count(a).max(char_count(b));
    if max_len == 0 {
        return 1.0;
    }
    (max_len - edit_distance(a, b)) as f64 / max_len as f64
}
