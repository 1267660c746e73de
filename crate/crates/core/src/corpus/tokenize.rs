const CLITICS: &[&str] = &["s", "re", "ve", "ll", "d", "m"];

fn is_joiner(c: char) -> bool {
    c == '-' || c == '\''
}

/// Lowercase word tokenizer. Punctuation becomes separate tokens, clitics
/// (`'s`, `n't`, `'re`, ...) are split from their stem, and internal hyphens
/// and apostrophes stay inside words.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let normalized: Vec<char> = sentence
        .to_lowercase()
        .chars()
        .map(|c| if c == '\u{2019}' || c == '\u{2018}' { '\'' } else { c })
        .collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < normalized.len() {
        let c = normalized[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            i += 1;
            while i < normalized.len() {
                let ch = normalized[i];
                let joins = is_joiner(ch)
                    && i + 1 < normalized.len()
                    && normalized[i + 1].is_alphanumeric();
                if ch.is_alphanumeric() || joins {
                    i += 1;
                } else {
                    break;
                }
            }
            let word: String = normalized[start..i].iter().collect();
            split_clitic(word, &mut tokens);
        } else {
            tokens.push(c.to_string());
            i += 1;
        }
    }
    tokens
}

fn split_clitic(word: String, out: &mut Vec<String>) {
    if word.len() > 3 && word.ends_with("n't") {
        let stem = &word[..word.len() - 3];
        out.push(stem.to_string());
        out.push("n't".to_string());
        return;
    }
    if let Some(pos) = word.rfind('\'') {
        let suffix = &word[pos + 1..];
        if pos > 0 && CLITICS.contains(&suffix) {
            out.push(word[..pos].to_string());
            out.push(word[pos..].to_string());
            return;
        }
    }
    out.push(word);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn lowercases_and_splits_on_whitespace() {
        assert_eq!(toks("Father spends joyful afternoon"), ["father", "spends", "joyful", "afternoon"]);
    }

    #[test]
    fn splits_clitics_and_punctuation() {
        assert_eq!(toks("it's done."), ["it", "'s", "done", "."]);
        assert_eq!(toks("Don't go!"), ["do", "n't", "go", "!"]);
        assert_eq!(toks("They\u{2019}re here"), ["they", "'re", "here"]);
    }

    #[test]
    fn keeps_internal_joiners() {
        assert_eq!(toks("a well-known o'brien"), ["a", "well-known", "o'brien"]);
        assert_eq!(toks("'quoted' -dash"), ["'", "quoted", "'", "-", "dash"]);
    }

    #[test]
    fn empty_sentence() {
        assert!(toks("").is_empty());
        assert!(toks("   ").is_empty());
    }

    #[test]
    fn no_empty_tokens() {
        for s in ["...", "a , b", "x--y", "''", "n't"] {
            assert!(toks(s).iter().all(|t| !t.is_empty()), "{s}");
        }
    }
}
