//! Tokenization shared by features, ONLY_DOC scoring and ROUGE, plus the
//! answer normalizer used by EM/F1 and the correctness judge.

/// Lowercase and split on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn is_article(token: &str) -> bool {
    matches!(token, "a" | "an" | "the")
}

/// Lowercase, remove punctuation, drop the articles a/an/the and collapse
/// whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lowered = s.to_lowercase();
    let stripped: String = lowered
        .chars()
        .filter(|c| !(c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace())))
        .collect();
    stripped
        .split_whitespace()
        .filter(|t| !is_article(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Tokens of the normalized answer.
pub fn normalized_tokens(s: &str) -> Vec<String> {
    normalize_answer(s)
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

/// True when `needle` occurs in `haystack` after normalization, aligned on
/// token boundaries. An empty normalized needle never matches.
pub fn contains_normalized(haystack: &str, needle: &str) -> bool {
    let needle = normalize_answer(needle);
    if needle.is_empty() {
        return false;
    }
    let haystack = normalize_answer(haystack);
    format!(" {haystack} ").contains(&format!(" {needle} "))
}
