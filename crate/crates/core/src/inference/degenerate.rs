use serde::{Deserialize, Serialize};

use super::{DegenerateReason, RunStatus};
use crate::promptgen::{parse_token, PromptRecord};

/// Longest periods examined by the repetition check.
const MAX_PERIOD: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegenerateThresholds {
    /// Share of the user message that must reappear verbatim in the output.
    pub echo_fraction: f64,
    /// Minimum length of a repeated unit, in characters.
    pub repeat_unit: usize,
    /// Back-to-back copies of the unit needed to call a loop.
    pub repeat_count: usize,
}

impl Default for DegenerateThresholds {
    fn default() -> Self {
        Self {
            echo_fraction: 0.5,
            repeat_unit: 20,
            repeat_count: 5,
        }
    }
}

/// Labels a model output as ok or as one of the degenerate failure kinds.
///
/// Checked in order: blank output, a bare control token with no text,
/// a verbatim copy of at least `echo_fraction` of the user message, and a
/// unit of `repeat_unit` or more characters repeated `repeat_count` times
/// in a row.
pub fn classify_degenerate(
    raw_text: &str,
    prompt: &PromptRecord,
    thresholds: &DegenerateThresholds,
) -> (RunStatus, Option<DegenerateReason>) {
    let bad = |r| (RunStatus::Degenerate, Some(r));
    if raw_text.trim().is_empty() {
        return bad(DegenerateReason::Empty);
    }
    if let (Some(_), rest) = parse_token(raw_text) {
        if rest.trim().is_empty() {
            return bad(DegenerateReason::Malformed);
        }
    }
    let out: Vec<char> = raw_text.chars().collect();
    let user: Vec<char> = prompt.user_content().chars().collect();
    if !user.is_empty() {
        let need = (thresholds.echo_fraction * user.len() as f64).ceil() as usize;
        if need > 0 && out.len() >= need && longest_common_substring(&out, &user) >= need {
            return bad(DegenerateReason::PromptEcho);
        }
    }
    if has_repetition_loop(&out, thresholds.repeat_unit.max(1), thresholds.repeat_count.max(2)) {
        return bad(DegenerateReason::RepetitionLoop);
    }
    (RunStatus::Ok, None)
}

pub(crate) fn longest_common_substring(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// True when some stretch of `s` consists of `count` back-to-back copies of
/// a unit at least `min_unit` characters long. A unit shorter than
/// `min_unit` with period `p` counts when enough copies of it line up to
/// cover `count` units of the smallest multiple of `p` reaching `min_unit`.
pub(crate) fn has_repetition_loop(s: &[char], min_unit: usize, count: usize) -> bool {
    let n = s.len();
    let max_p = (n / count).min(MAX_PERIOD);
    for p in 1..=max_p {
        let unit = p * min_unit.div_ceil(p);
        let need = unit * count;
        if need > n {
            continue;
        }
        let mut run = 0usize;
        for j in 0..n - p {
            if s[j] == s[j + p] {
                run += 1;
                if run + p >= need {
                    return true;
                }
            } else {
                run = 0;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AlignmentLevel, AttributeVector, FlatPair};
    use crate::promptgen::build_prompt;
    use crate::textmetrics::AttributeKind;

    fn prompt() -> PromptRecord {
        let a = AttributeVector {
            fkgl: 8.0,
            ari: 8.0,
            dale_chall: 8.0,
            char_count: 40,
            word_count: 8,
        };
        let pair = FlatPair {
            pair_id: "x".into(),
            source_text: "The committee postponed the decision until further notice.".into(),
            reference_text: "The group delayed the choice.".into(),
            dataset_name: "t".into(),
            alignment_level: AlignmentLevel::Sentence,
            source_attrs: a,
            target_attrs: a,
            split: None,
        };
        build_prompt(&pair, AttributeKind::Fkgl, 1).unwrap()
    }

    fn classify(s: &str) -> Option<DegenerateReason> {
        classify_degenerate(s, &prompt(), &DegenerateThresholds::default()).1
    }

    #[test]
    fn rules() {
        assert_eq!(classify(""), Some(DegenerateReason::Empty));
        assert_eq!(classify(" \n "), Some(DegenerateReason::Empty));
        assert_eq!(classify("<FKGL=4.0>"), Some(DegenerateReason::Malformed));
        assert_eq!(classify(prompt().user_content()), Some(DegenerateReason::PromptEcho));
        let unit = "abcdefghijklmnopqrst";
        assert_eq!(unit.len(), 20);
        assert_eq!(classify(&unit.repeat(5)), Some(DegenerateReason::RepetitionLoop));
        assert_eq!(classify(&unit.repeat(4)), None);
        assert_eq!(classify("<FKGL=4.0> The group delayed the choice."), None);
        assert_eq!(classify("The committee postponed the decision until further notice."), None);
    }

    #[test]
    fn half_echo_threshold() {
        let user: String = prompt().user_content().to_string();
        let n = user.chars().count();
        let half: String = user.chars().take(n.div_ceil(2)).collect();
        assert_eq!(classify(&half), Some(DegenerateReason::PromptEcho));
        let less: String = user.chars().take(n.div_ceil(2) - 1).collect();
        assert_ne!(classify(&less), Some(DegenerateReason::PromptEcho));
    }

    #[test]
    fn short_period_loops() {
        let s: Vec<char> = "ab".repeat(50).chars().collect();
        assert!(has_repetition_loop(&s, 20, 5));
        let s: Vec<char> = "ab".repeat(49).chars().collect();
        assert!(!has_repetition_loop(&s, 20, 5));
        let s: Vec<char> = format!("intro {} outro", "the same words again ".repeat(5)).chars().collect();
        assert!(has_repetition_loop(&s, 20, 5));
    }

    #[test]
    fn lcs() {
        let a: Vec<char> = "xxabcdyy".chars().collect();
        let b: Vec<char> = "zabcdz".chars().collect();
        assert_eq!(longest_common_substring(&a, &b), 4);
        assert_eq!(longest_common_substring(&a, &[]), 0);
    }
}
