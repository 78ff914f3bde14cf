use std::collections::{BTreeSet, HashMap};

use super::EvalError;

/// Lowercased tokens with punctuation split off, so `cat.` and `cat .`
/// tokenize the same.
pub fn overlap_tokens(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 16);
    for c in text.chars() {
        if c.is_ascii_punctuation() && c != '\'' {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.extend(c.to_lowercase());
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

type Counts<'a> = HashMap<&'a [String], usize>;

fn ngram_counts(tokens: &[String], n: usize) -> Counts<'_> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn scale<'a>(c: &Counts<'a>, k: usize) -> Counts<'a> {
    c.iter().map(|(g, v)| (*g, v * k)).collect()
}

fn intersect<'a>(a: &Counts<'a>, b: &Counts<'a>) -> Counts<'a> {
    a.iter()
        .filter_map(|(g, &v)| b.get(g).map(|&w| (*g, v.min(w))))
        .collect()
}

fn subtract<'a>(a: &Counts<'a>, b: &Counts<'a>) -> Counts<'a> {
    a.iter()
        .filter_map(|(g, &v)| {
            let rest = v.saturating_sub(b.get(g).copied().unwrap_or(0));
            (rest > 0).then_some((*g, rest))
        })
        .collect()
}

/// `num / den`, or the empty-set convention: 1 when both the denominator
/// set and its paired set are empty, otherwise 0.
fn ratio(num: f64, den: f64, den_empty: bool, paired_empty: bool) -> f64 {
    if den_empty {
        if paired_empty {
            1.0
        } else {
            0.0
        }
    } else {
        num / den
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Mean over `k in of` of `good[k] / of[k]`.
fn mean_share(good: &Counts<'_>, of: &Counts<'_>) -> f64 {
    of.iter()
        .map(|(g, &v)| good.get(g).copied().unwrap_or(0) as f64 / v as f64)
        .sum::<f64>()
        / of.len() as f64
}

fn sari_n(source: &[String], output: &[String], refs: &[Vec<String>], n: usize) -> f64 {
    let k = refs.len();
    let s = ngram_counts(source, n);
    let o = ngram_counts(output, n);
    let mut r: Counts<'_> = HashMap::new();
    for reference in refs {
        for (g, v) in ngram_counts(reference, n) {
            *r.entry(g).or_insert(0) += v;
        }
    }
    let s_rep = scale(&s, k);
    let o_rep = scale(&o, k);

    let keep_sys = intersect(&s_rep, &o_rep);
    let keep_ref = intersect(&s_rep, &r);
    let keep_good = intersect(&keep_sys, &r);
    let keep_p = if keep_sys.is_empty() {
        ratio(0.0, 0.0, true, keep_ref.is_empty())
    } else {
        mean_share(&keep_good, &keep_sys)
    };
    let keep_r = if keep_ref.is_empty() {
        ratio(0.0, 0.0, true, keep_sys.is_empty())
    } else {
        mean_share(&keep_good, &keep_ref)
    };

    let del_sys = subtract(&s_rep, &o_rep);
    let del_ref = subtract(&s_rep, &r);
    let del_good = intersect(&del_sys, &del_ref);
    let del_p = if del_sys.is_empty() {
        ratio(0.0, 0.0, true, del_ref.is_empty())
    } else {
        mean_share(&del_good, &del_sys)
    };

    let s_set: BTreeSet<&[String]> = s.keys().copied().collect();
    let o_set: BTreeSet<&[String]> = o.keys().copied().collect();
    let r_set: BTreeSet<&[String]> = r.keys().copied().collect();
    let add_sys: BTreeSet<_> = o_set.difference(&s_set).copied().collect();
    let add_ref: BTreeSet<_> = r_set.difference(&s_set).copied().collect();
    let add_good = add_sys.intersection(&r_set).count() as f64;
    let add_p = ratio(add_good, add_sys.len() as f64, add_sys.is_empty(), add_ref.is_empty());
    let add_r = ratio(add_good, add_ref.len() as f64, add_ref.is_empty(), add_sys.is_empty());

    (f1(add_p, add_r) + f1(keep_p, keep_r) + del_p) / 3.0
}

/// SARI on a 0-100 scale, averaged over 1- to 4-grams.
pub fn sari(source: &str, output: &str, references: &[&str]) -> Result<f64, EvalError> {
    if references.is_empty() {
        return Err(EvalError::NoReference);
    }
    let s = overlap_tokens(source);
    let o = overlap_tokens(output);
    let refs: Vec<Vec<String>> = references.iter().map(|r| overlap_tokens(r)).collect();
    if s.is_empty() || o.is_empty() || refs.iter().any(Vec::is_empty) {
        return Err(EvalError::EmptyText);
    }
    let total: f64 = (1..=4).map(|n| sari_n(&s, &o, &refs, n)).sum();
    Ok((100.0 * total / 4.0).clamp(0.0, 100.0))
}

/// Sentence BLEU on a 0-100 scale: clipped n-gram precisions up to
/// `max_n`, add-one smoothing from bigrams on, and a brevity penalty
/// against the reference closest in length.
pub fn bleu(candidate: &str, references: &[&str], max_n: usize) -> Result<f64, EvalError> {
    if references.is_empty() {
        return Err(EvalError::NoReference);
    }
    let c = overlap_tokens(candidate);
    if c.is_empty() {
        return Err(EvalError::EmptyText);
    }
    let refs: Vec<Vec<String>> = references.iter().map(|r| overlap_tokens(r)).collect();
    let mut log_sum = 0.0;
    for n in 1..=max_n.max(1) {
        let cand = ngram_counts(&c, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &v)| {
                let best = refs
                    .iter()
                    .map(|r| ngram_counts(r, n).get(g).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                v.min(best)
            })
            .sum();
        let p = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        if p == 0.0 {
            return Ok(0.0);
        }
        log_sum += p.ln();
    }
    let len = c.len() as f64;
    let closest = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&l| ((l as i64 - c.len() as i64).abs(), l))
        .unwrap() as f64;
    let bp = if len > closest { 1.0 } else { (1.0 - closest / len).exp() };
    Ok((100.0 * bp * (log_sum / max_n.max(1) as f64).exp()).clamp(0.0, 100.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        assert_eq!(overlap_tokens("The cat."), vec!["the", "cat", "."]);
        assert_eq!(overlap_tokens("The cat ."), overlap_tokens("the  cat."));
        assert_eq!(overlap_tokens("don't"), vec!["don't"]);
    }

    #[test]
    fn sari_identity_and_rewrite() {
        assert!((sari("a b c", "a b c", &["a b c"]).unwrap() - 100.0).abs() < 1e-12);
        assert!((sari("a b c", "x y z", &["x y z"]).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn sari_deleted_word() {
        // n=1: (1 + 0.8 + 0)/3, n=2: (1 + 2/3 + 0)/3, n=3: 1/3, n=4: 1
        let want = 100.0 * (0.6 + 5.0 / 9.0 + 1.0 / 3.0 + 1.0) / 4.0;
        assert!((sari("a b c", "a b c", &["a b"]).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn sari_repeated_source_gram() {
        // dropping one of two "a"s is exactly what the reference did
        assert!((sari("a a b", "a b", &["a b"]).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn sari_rejects_empty() {
        assert!(sari("", "a", &["a"]).is_err());
        assert!(sari("a", "a", &[]).is_err());
    }

    #[test]
    fn bleu_cases() {
        assert!((bleu("the cat sat", &["the cat sat"], 4).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(bleu("dog", &["the cat sat"], 4).unwrap(), 0.0);
        let want = 100.0 * (1.0f64 - 4.0 / 3.0).exp();
        assert!((bleu("the cat sat", &["the cat sat down"], 4).unwrap() - want).abs() < 1e-12);
        assert!(bleu("", &["x"], 4).is_err());
    }

    #[test]
    fn bleu_picks_closest_reference() {
        let b = bleu("a b c", &["a b c d", "x y z w v u"], 4).unwrap();
        assert!((b - 100.0 * (-1.0f64 / 3.0).exp()).abs() < 1e-9);
        // equal distance: the shorter reference sets the penalty
        assert!((bleu("a b c", &["a b", "a b c d"], 4).unwrap() - 100.0).abs() < 1e-9);
    }
}
