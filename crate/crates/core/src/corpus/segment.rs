use super::CorpusError;

/// Tokens ending in a period that never terminate a sentence. Compared
/// lowercased, including the trailing period.
const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "mt.", "ft.", "gen.", "gov.",
    "sen.", "rep.", "lt.", "col.", "capt.", "sgt.", "rev.", "hon.", "pres.", "u.s.", "u.k.",
    "u.n.", "e.g.", "i.e.", "etc.", "vs.", "inc.", "ltd.", "co.", "corp.", "no.", "jan.", "feb.",
    "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.", "a.m.",
    "p.m.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// Split raw article text into sentences.
///
/// A boundary is a run of `.`, `!` or `?` (plus closing quotes/brackets)
/// followed by whitespace and an uppercase letter, optionally behind an
/// opening quote. Periods that end a known abbreviation never split.
pub fn segment_sentences(raw_text: &str) -> Result<Vec<String>, CorpusError> {
    let text = raw_text.trim();
    if text.is_empty() {
        return Err(CorpusError::EmptyDocument);
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        // Extend over the whole terminator run, e.g. `?!` or `."`.
        let mut end = i + 1;
        while end < chars.len() && (is_terminal(chars[end].1) || is_closer(chars[end].1)) {
            end += 1;
        }
        let mut next = end;
        while next < chars.len() && chars[next].1.is_whitespace() {
            next += 1;
        }
        let has_space = next > end;
        let starts_upper = next < chars.len() && {
            let mut k = next;
            if is_opener(chars[k].1) && k + 1 < chars.len() {
                k += 1;
            }
            chars[k].1.is_uppercase()
        };
        let only_period = chars[i..end].iter().all(|&(_, ch)| ch == '.' || is_closer(ch));
        if has_space && starts_upper && !(only_period && ends_with_abbreviation(text, &chars, start, i)) {
            let byte_end = if end < chars.len() { chars[end].0 } else { text.len() };
            push_trimmed(&mut sentences, &text[start..byte_end]);
            start = chars[next].0;
            i = next;
        } else {
            i = end;
        }
    }
    push_trimmed(&mut sentences, &text[start..]);
    Ok(sentences)
}

/// Whether the whitespace-delimited word ending at char index `period`
/// (inclusive) is a known abbreviation.
fn ends_with_abbreviation(text: &str, chars: &[(usize, char)], start: usize, period: usize) -> bool {
    let word_end = chars[period].0 + 1;
    let mut k = period;
    while k > 0 && chars[k - 1].0 >= start && !chars[k - 1].1.is_whitespace() {
        k -= 1;
    }
    let word = text[chars[k].0.max(start)..word_end].trim_start_matches(is_opener);
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

/// Split raw text on blank lines.
pub fn segment_paragraphs(raw_text: &str) -> Result<Vec<String>, CorpusError> {
    if raw_text.trim().is_empty() {
        return Err(CorpusError::EmptyDocument);
    }
    let mut paragraphs = Vec::new();
    let mut current = String::new();
    for line in raw_text.lines() {
        if line.trim().is_empty() {
            push_trimmed(&mut paragraphs, &current);
            current.clear();
        } else {
            if !current.is_empty() {
                current.push('\n');
            }
            current.push_str(line);
        }
    }
    push_trimmed(&mut paragraphs, &current);
    Ok(paragraphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(segment_sentences("A. B? C!").unwrap(), vec!["A.", "B?", "C!"]);
    }

    #[test]
    fn whole_text_without_terminator() {
        assert_eq!(
            segment_sentences("no terminal punctuation").unwrap(),
            vec!["no terminal punctuation"]
        );
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            segment_sentences("Mr. Smith left. He ran.").unwrap(),
            vec!["Mr. Smith left.", "He ran."]
        );
        assert_eq!(
            segment_sentences("The U.S. Senate voted. It passed.").unwrap(),
            vec!["The U.S. Senate voted.", "It passed."]
        );
    }

    #[test]
    fn lowercase_continuation_does_not_split() {
        assert_eq!(
            segment_sentences("It cost 3.5 million. then what").unwrap(),
            vec!["It cost 3.5 million. then what"]
        );
    }

    #[test]
    fn quotes_and_runs() {
        assert_eq!(
            segment_sentences("He said \"No!\" Then left?! \"Why\" she asked.").unwrap(),
            vec!["He said \"No!\"", "Then left?!", "\"Why\" she asked."]
        );
    }

    #[test]
    fn empty_input_is_error() {
        assert!(matches!(segment_sentences("   \n "), Err(CorpusError::EmptyDocument)));
        assert!(matches!(segment_paragraphs(""), Err(CorpusError::EmptyDocument)));
    }

    #[test]
    fn paragraphs_split_on_blank_lines() {
        let text = "First line.\nStill first.\n\n  \nSecond para.\n";
        assert_eq!(
            segment_paragraphs(text).unwrap(),
            vec!["First line.\nStill first.", "Second para."]
        );
    }
}
