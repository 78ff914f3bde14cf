use ctrlsimp::evaluation::{bleu, overlap_tokens, sari};
use proptest::prelude::*;

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.to_vec()).collect()
}

fn count(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

fn distinct(lists: &[&[Vec<String>]]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for list in lists {
        for g in list.iter() {
            if !out.contains(g) {
                out.push(g.clone());
            }
        }
    }
    out
}

/// `share` over the grams with a positive denominator, or the empty-set
/// convention when there are none.
fn mean_or(values: Vec<(usize, usize)>, other_empty: bool) -> f64 {
    let terms: Vec<f64> = values.iter().filter(|(_, d)| *d > 0).map(|(g, d)| *g as f64 / *d as f64).collect();
    if terms.is_empty() {
        if other_empty { 1.0 } else { 0.0 }
    } else {
        terms.iter().sum::<f64>() / terms.len() as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
}

/// Straight-line SARI: every count recomputed by scanning n-gram lists.
fn sari_brute(source: &str, output: &str, refs: &[&str]) -> f64 {
    let s = overlap_tokens(source);
    let o = overlap_tokens(output);
    let rs: Vec<Vec<String>> = refs.iter().map(|r| overlap_tokens(r)).collect();
    let k = refs.len();
    let mut total = 0.0;
    for n in 1..=4 {
        let sg = grams(&s, n);
        let og = grams(&o, n);
        let rg: Vec<Vec<String>> = rs.iter().flat_map(|r| grams(r, n)).collect();
        let all = distinct(&[&sg, &og, &rg]);
        let (mut keep_p, mut keep_r, mut del_p) = (Vec::new(), Vec::new(), Vec::new());
        for g in &all {
            let (cs, co, cr) = (count(&sg, g) * k, count(&og, g) * k, count(&rg, g));
            let sys = cs.min(co);
            let good = sys.min(cr);
            keep_p.push((good, sys));
            keep_r.push((good, cs.min(cr)));
            let dsys = cs.saturating_sub(co);
            let dref = cs.saturating_sub(cr);
            del_p.push((dsys.min(dref), dsys));
        }
        let none = |v: &[(usize, usize)]| v.iter().all(|(_, d)| *d == 0);
        let kp = mean_or(keep_p.clone(), none(&keep_r));
        let kr = mean_or(keep_r.clone(), none(&keep_p));
        let dp = mean_or(del_p.clone(), all.iter().all(|g| count(&sg, g) * k <= count(&rg, g)));
        let add_sys: Vec<&Vec<String>> = all.iter().filter(|g| count(&og, g) > 0 && count(&sg, g) == 0).collect();
        let add_ref: Vec<&Vec<String>> = all.iter().filter(|g| count(&rg, g) > 0 && count(&sg, g) == 0).collect();
        let good = add_sys.iter().filter(|g| count(&rg, g) > 0).count();
        let ratio = |num: usize, den: usize, other: bool| {
            if den == 0 { if other { 1.0 } else { 0.0 } } else { num as f64 / den as f64 }
        };
        let ap = ratio(good, add_sys.len(), add_ref.is_empty());
        let ar = ratio(good, add_ref.len(), add_sys.is_empty());
        total += (f1(ap, ar) + f1(kp, kr) + dp) / 3.0;
    }
    100.0 * total / 4.0
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop_oneof!["a", "b", "c", "d", "e", Just(".".to_string()), Just(",".to_string())], 1..12)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sari_matches_brute_force(s in sentence(), o in sentence(), r in prop::collection::vec(sentence(), 1..4)) {
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        let got = sari(&s, &o, &refs).unwrap();
        prop_assert!((got - sari_brute(&s, &o, &refs)).abs() < 1e-9, "{} vs {}", got, sari_brute(&s, &o, &refs));
        prop_assert!((0.0..=100.0).contains(&got));
    }

    #[test]
    fn sari_of_reference_is_perfect(s in sentence(), r in sentence()) {
        prop_assert!((sari(&s, &r, &[&r]).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn sari_ignores_spacing_and_case(s in sentence(), o in sentence(), r in sentence()) {
        let squash = |t: &str| t.replace(" .", ".").replace(" ,", ",").to_uppercase();
        let a = sari(&s, &o, &[&r]).unwrap();
        let b = sari(&squash(&s), &squash(&o), &[&squash(&r)]).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn bleu_of_itself_is_perfect(c in sentence()) {
        prop_assert!((bleu(&c, &[&c], 4).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn bleu_bounded(c in sentence(), r in prop::collection::vec(sentence(), 1..3)) {
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        let b = bleu(&c, &refs, 4).unwrap();
        prop_assert!((0.0..=100.0).contains(&b));
    }
}

#[test]
fn bleu_hand_computed() {
    // p1 = 5/6, p2 = (3+1)/(5+1), p3 = (1+1)/(4+1), p4 = (0+1)/(3+1), no brevity penalty
    let want = 100.0 * (5.0f64 / 6.0 * 4.0 / 6.0 * 2.0 / 5.0 * 1.0 / 4.0).powf(0.25);
    let got = bleu("the cat sat on the mat", &["the cat is on the mat"], 4).unwrap();
    assert!((got - want).abs() < 1e-9);
}
