//! Rule-plus-exception lemmatizer for lowercase English tokens.
//!
//! Handles regular plural nouns and `-ing`/`-ed` verb forms. It never strips
//! derivational suffixes, so it is a lemmatizer rather than a stemmer.

use std::collections::BTreeMap;

const MIN_STEM: usize = 3;

// Stem endings that lost a silent `e` when the suffix was attached
// (creat-ed, optimiz-ing, packag-ing, configur-ed, ...).
const SILENT_E_ENDINGS: &[&str] = &[
    "at", "bl", "iz", "yz", "ag", "ut", "ur", "v", "uc", "rc", "nc", "dl", "gl", "pl", "tl", "kl", "cl", "fl", "rg",
    "ok", "il",
];

fn is_vowel(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel(bytes, i - 1),
        _ => false,
    }
}

fn has_vowel(word: &str) -> bool {
    let b = word.as_bytes();
    (0..b.len()).any(|i| is_vowel(b, i))
}

/// Number of vowel-consonant sequences in `word`.
fn measure(word: &str) -> usize {
    let b = word.as_bytes();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..b.len() {
        let v = is_vowel(b, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

/// consonant-vowel-consonant ending where the last consonant is not w, x or y.
fn ends_cvc(word: &str) -> bool {
    let b = word.as_bytes();
    let n = b.len();
    n >= 3
        && !is_vowel(b, n - 3)
        && is_vowel(b, n - 2)
        && !is_vowel(b, n - 1)
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
}

fn strip_plural(word: &str) -> Option<String> {
    let n = word.len();
    if n <= MIN_STEM || !word.ends_with('s') {
        return None;
    }
    if ["ss", "us", "is", "ous"].iter().any(|s| word.ends_with(s)) {
        return None;
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() >= 2 {
            return Some(format!("{stem}y"));
        }
        return None;
    }
    if let Some(stem) = word.strip_suffix("es") {
        if stem.ends_with("ss")
            || stem.ends_with('x')
            || stem.ends_with("ch")
            || stem.ends_with("sh")
            || stem.ends_with("zz")
        {
            return (stem.len() >= MIN_STEM || stem.ends_with("ss")).then(|| stem.to_string());
        }
    }
    let stem = &word[..n - 1];
    (stem.len() >= MIN_STEM).then(|| stem.to_string())
}

fn strip_verbal(word: &str) -> Option<String> {
    if word.ends_with("eed") {
        return None;
    }
    let stem = if let Some(s) = word.strip_suffix("ing") {
        s
    } else if let Some(s) = word.strip_suffix("ied") {
        if s.len() >= 2 {
            return Some(format!("{s}y"));
        }
        return None;
    } else {
        word.strip_suffix("ed")?
    };
    if stem.len() < MIN_STEM || !has_vowel(stem) {
        return None;
    }
    let b = stem.as_bytes();
    let n = b.len();
    let last = b[n - 1];
    if n >= 2 && last == b[n - 2] && !is_vowel(b, n - 1) && !matches!(last, b'l' | b's' | b'z') {
        if n > MIN_STEM {
            return Some(stem[..n - 1].to_string());
        }
        return Some(stem.to_string());
    }
    if SILENT_E_ENDINGS.iter().any(|e| stem.ends_with(e))
        && !stem.ends_with("out")
        && !stem.ends_with("put")
        && !stem.ends_with("ea")
        && !stem.ends_with("oat")
        && !stem.ends_with("our")
        && !stem.ends_with("ail")
        && !stem.ends_with("oil")
        && !stem.ends_with("eil")
        && !stem.ends_with("ook")
    {
        return Some(format!("{stem}e"));
    }
    if measure(stem) == 1 && ends_cvc(stem) {
        return Some(format!("{stem}e"));
    }
    Some(stem.to_string())
}

fn rewrite_once(word: &str) -> Option<String> {
    strip_plural(word).or_else(|| strip_verbal(word))
}

/// Lemma of `token`: an exception-table hit is returned as is; otherwise the
/// suffix rules are applied until the token stops changing.
pub fn lemmatize_with(token: &str, exceptions: &BTreeMap<String, String>) -> String {
    let mut current = token.to_string();
    // Every rewrite shortens the token, so this terminates.
    loop {
        if let Some(lemma) = exceptions.get(&current) {
            return lemma.clone();
        }
        match rewrite_once(&current) {
            Some(next) if next != current => current = next,
            _ => break,
        }
    }
    current
}

/// Plural-to-singular only, consulting the exception table first.
pub fn singularize_with(token: &str, exceptions: &BTreeMap<String, String>) -> String {
    if let Some(lemma) = exceptions.get(token) {
        return lemma.clone();
    }
    strip_plural(token).unwrap_or_else(|| token.to_string())
}

/// True when the rule set leaves `word` untouched.
pub(crate) fn is_rule_fixed_point(word: &str) -> bool {
    rewrite_once(word).is_none_or(|w| w == word)
}
