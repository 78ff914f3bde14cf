//! Rule-based sentence segmentation and word tokenization.
//!
//! Both operate on whitespace-delimited tokens so that pre-tokenized corpus
//! text (`"exists , but"`) and ordinary prose (`"exists, but"`) produce the
//! same word sequence.

/// Tokens that end in a period but never close a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "vs.", "e.g.", "i.e.", "etc.", "prof.", "jr.", "sr.", "st.",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{00bb}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201c}', '\u{2018}', '\u{00ab}'];

/// Strips leading and trailing non-alphanumeric characters from a token.
///
/// Returns `None` when nothing is left, which is how bare punctuation
/// tokens such as `","` drop out of the word count.
pub fn normalize_word(token: &str) -> Option<&str> {
    let trimmed = token.trim_matches(|c: char| !c.is_alphanumeric());
    (!trimmed.is_empty()).then_some(trimmed)
}

/// Words of `text`, in order, with surrounding punctuation removed.
pub fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().filter_map(normalize_word).collect()
}

fn ends_sentence(token: &str) -> bool {
    let core = token.trim_end_matches(CLOSERS);
    if !core.ends_with(['.', '!', '?']) {
        return false;
    }
    let bare = core.trim_start_matches(OPENERS).to_lowercase();
    !ABBREVIATIONS.contains(&bare.as_str())
}

fn starts_sentence(token: &str) -> bool {
    token
        .trim_start_matches(OPENERS)
        .chars()
        .next()
        .is_some_and(char::is_uppercase)
}

/// Splits `text` into sentences.
///
/// A token ending in `.`, `!` or `?` (optionally followed by closing quotes
/// or brackets) closes a sentence when the next token starts with an
/// uppercase letter or when it is the last token. Known abbreviations never
/// close a sentence. Segments without any word are dropped.
pub fn sentences(text: &str) -> Vec<String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, token) in tokens.iter().enumerate() {
        let boundary = ends_sentence(token)
            && tokens.get(i + 1).is_none_or(|next| starts_sentence(next));
        if boundary {
            push_segment(&mut out, &tokens[start..=i]);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        push_segment(&mut out, &tokens[start..]);
    }
    out
}

fn push_segment(out: &mut Vec<String>, tokens: &[&str]) {
    if tokens.iter().any(|t| normalize_word(t).is_some()) {
        out.push(tokens.join(" "));
    }
}
