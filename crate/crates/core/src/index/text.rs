use std::collections::HashSet;
use std::sync::OnceLock;

/// Built-in English stopword list, applied identically at index and query time.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

pub fn is_stopword(term: &str) -> bool {
    stopwords().contains(term)
}

/// Lowercases, splits on every non-alphanumeric codepoint and drops stopwords.
/// No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut flush = |current: &mut String| {
        if !current.is_empty() {
            if !is_stopword(current) {
                out.push(std::mem::take(current));
            } else {
                current.clear();
            }
        }
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else {
            flush(&mut current);
        }
    }
    flush(&mut current);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn punctuation_and_stopwords() {
        assert_eq!(
            tokenize("The RBO-score, p=0.99"),
            vec!["rbo", "score", "p", "0", "99"]
        );
    }

    #[test]
    fn case_folding() {
        assert_eq!(tokenize("Hello hello HELLO"), vec!["hello"; 3]);
    }

    #[test]
    fn unicode_letters_are_kept() {
        assert_eq!(tokenize("Café—Über"), vec!["café", "über"]);
    }
}
