//! Slow reference implementations used to cross-check the fast paths.
//!
//! Everything here recomputes from raw inputs (token sequences, keyword
//! lists, labeled documents) by direct enumeration and shares no code with
//! the modules it checks, apart from the PMI formula itself.

use std::collections::BTreeMap;

use crate::corpus::AnnotatedSong;
use crate::decode::{ConstraintViolation, ControlSpec};
use crate::lyrics::LyricsText;
use crate::pmi::pmi_value;
use crate::rhyme::RhymeTable;
use crate::tokens::{graphemes, TokenId};

/// Interpolated Witten-Bell probabilities computed by rescanning the
/// training sequences for every query.
pub struct BruteForceNgram<'a> {
    pub sequences: &'a [Vec<TokenId>],
    pub order: usize,
    pub vocab_size: usize,
}

impl BruteForceNgram<'_> {
    /// Follower counts of `h` for every token, by scanning all sequences.
    fn follower_counts(&self, h: &[TokenId]) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocab_size];
        for seq in self.sequences {
            for i in h.len()..seq.len() {
                if &seq[i - h.len()..i] == h {
                    counts[seq[i] as usize] += 1;
                }
            }
        }
        counts
    }

    fn distribution_with(&self, h: &[TokenId]) -> Vec<f64> {
        let counts = self.follower_counts(h);
        let total: u64 = counts.iter().sum();
        let types = counts.iter().filter(|&&c| c > 0).count() as f64;
        if h.is_empty() {
            let v = self.vocab_size as f64;
            return counts.iter().map(|&c| (c as f64 + types / v) / (total as f64 + types)).collect();
        }
        let lower = self.distribution_with(&h[1..]);
        if total == 0 {
            return lower;
        }
        counts
            .iter()
            .zip(lower)
            .map(|(&c, l)| (c as f64 + types * l) / (total as f64 + types))
            .collect()
    }

    pub fn distribution(&self, context: &[TokenId]) -> Vec<f64> {
        let keep = context.len().min(self.order.saturating_sub(1));
        self.distribution_with(&context[context.len() - keep..])
    }

    pub fn prob(&self, context: &[TokenId], w: TokenId) -> f64 {
        self.distribution(context)[w as usize]
    }
}

/// Every pair over the keyword vocabulary, counted by scanning all songs.
/// Keys are `(a, b)` with `a < b`.
pub fn brute_force_pmi(songs: &[AnnotatedSong], min_count: usize, tau: f64) -> BTreeMap<(String, String), f64> {
    let mut words: Vec<&str> = songs.iter().flat_map(|s| s.keywords.iter().map(String::as_str)).collect();
    words.sort_unstable();
    words.dedup();
    let has = |s: &AnnotatedSong, w: &str| s.keywords.iter().any(|k| k == w);
    let df = |w: &str| songs.iter().filter(|s| has(s, w)).count();
    let kept: Vec<&str> = words.into_iter().filter(|w| df(w) >= min_count).collect();
    let mut out = BTreeMap::new();
    for a in &kept {
        for b in &kept {
            if a >= b {
                continue;
            }
            let joint = songs.iter().filter(|s| has(s, a) && has(s, b)).count();
            if joint == 0 {
                continue;
            }
            let v = pmi_value(joint, df(a), df(b), songs.len());
            if v >= tau {
                out.insert((a.to_string(), b.to_string()), v);
            }
        }
    }
    out
}

/// Theme list from a brute-force PMI table: every non-seed word paired with
/// some seed, ordered by its best PMI (descending) then alphabetically.
pub fn brute_force_theme_keywords(pairs: &BTreeMap<(String, String), f64>, seeds: &[String]) -> Vec<String> {
    let mut scored: Vec<(String, f64)> = Vec::new();
    for ((a, b), v) in pairs {
        for (s, w) in [(a, b), (b, a)] {
            if seeds.contains(s) && !seeds.contains(w) {
                match scored.iter_mut().find(|(x, _)| x == w) {
                    Some(e) if e.1 < *v => e.1 = *v,
                    Some(_) => {}
                    None => scored.push((w.clone(), *v)),
                }
            }
        }
    }
    scored.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    scored.into_iter().map(|(w, _)| w).collect()
}

/// Multinomial naive-Bayes posterior of `class` with add-one smoothing,
/// recounted from labeled documents. Tokens never seen in training are
/// skipped.
pub fn naive_bayes_posterior(docs: &[(Vec<String>, String)], tokens: &[String], class: &str) -> f64 {
    let mut classes: Vec<&str> = docs.iter().map(|(_, c)| c.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut vocab: Vec<&str> = docs.iter().flat_map(|(d, _)| d.iter().map(String::as_str)).collect();
    vocab.sort_unstable();
    vocab.dedup();
    let log_joint: Vec<f64> = classes
        .iter()
        .map(|c| {
            let in_class: Vec<&Vec<String>> = docs.iter().filter(|(_, k)| k == c).map(|(d, _)| d).collect();
            let total_tokens: usize = in_class.iter().map(|d| d.len()).sum();
            let mut lp = (in_class.len() as f64 / docs.len() as f64).ln();
            for t in tokens.iter().filter(|t| vocab.contains(&t.as_str())) {
                let count = in_class.iter().map(|d| d.iter().filter(|x| *x == t).count()).sum::<usize>();
                lp += ((count + 1) as f64 / (total_tokens + vocab.len()) as f64).ln();
            }
            lp
        })
        .collect();
    let Some(idx) = classes.iter().position(|c| *c == class) else {
        return 0.0;
    };
    let denom: f64 = log_joint.iter().map(|l| (l - log_joint[idx]).exp()).sum();
    1.0 / denom
}

/// Lines equal (after normalization) to some earlier line.
pub fn repeated_lines(lines: &[String]) -> usize {
    let norm = |s: &str| {
        s.to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric() || c.is_whitespace())
            .collect::<String>()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    };
    (0..lines.len())
        .filter(|&i| (0..i).any(|j| norm(&lines[j]) == norm(&lines[i])))
        .count()
}

/// Independent recomputation of the three re-rank scores and their
/// weighted sum for a set of surviving candidates.
pub fn rank_scores(
    candidates: &[LyricsText],
    keywords: &[String],
    style_docs: &[(Vec<String>, String)],
    candidate_words: impl Fn(&LyricsText) -> Vec<String>,
    style: &str,
    weights: (f64, f64, f64),
) -> Vec<[f64; 4]> {
    let mut kws: Vec<String> = keywords.iter().map(|k| k.trim().to_lowercase()).filter(|k| !k.is_empty()).collect();
    kws.sort();
    kws.dedup();
    let hits: Vec<usize> = candidates
        .iter()
        .map(|c| {
            kws.iter()
                .filter(|k| c.lines.iter().any(|l| l.to_lowercase().contains(k.as_str())))
                .count()
        })
        .collect();
    let n_max = hits.iter().copied().max().unwrap_or(0);
    candidates
        .iter()
        .zip(&hits)
        .map(|(c, &n)| {
            let s_kh = if n_max == 0 { 0.0 } else { n as f64 / n_max as f64 };
            let s_sr = naive_bayes_posterior(style_docs, &candidate_words(c), style);
            let s_div = 1.0 - repeated_lines(&c.lines) as f64 / c.lines.len() as f64;
            [s_kh, s_sr, s_div, weights.0 * s_kh + weights.1 * s_sr + weights.2 * s_div]
        })
        .collect()
}

/// Checks lines `start..start + lyrics.len()` of `spec` against a
/// candidate. Rhyme or acrostic misses are accepted only on lines with a
/// matching violation record. Returns a description of every problem.
pub fn format_problems(
    lyrics: &LyricsText,
    spec: &ControlSpec,
    start: usize,
    rhyme: &RhymeTable,
    violations: &[ConstraintViolation],
) -> Vec<String> {
    let mut problems = Vec::new();
    let lengths = spec.line_lengths();
    if start + lyrics.len() > lengths.len() {
        problems.push(format!("{} lines starting at {start} exceed num_lines {}", lyrics.len(), spec.num_lines));
        return problems;
    }
    let excused = |line: usize, what: &str| violations.iter().any(|v| v.line == line && v.constraint == what);
    for (offset, line) in lyrics.lines.iter().enumerate() {
        let i = start + offset;
        let g = graphemes(line);
        if g.len() != lengths[i] {
            problems.push(format!("line {i}: {} characters, expected {}", g.len(), lengths[i]));
            continue;
        }
        if let Some(group) = &spec.rhyme_group {
            let ok = rhyme.members(group).is_some_and(|m| m.contains(g.last().unwrap().as_str()));
            if !ok && !excused(i, "rhyme_group") {
                problems.push(format!("line {i}: `{}` is not in rhyme group `{group}`", g.last().unwrap()));
            }
        }
        if let Some(acrostic) = &spec.acrostic {
            if g[0] != acrostic[i] && !excused(i, "acrostic") {
                problems.push(format!("line {i}: starts with `{}`, expected `{}`", g[0], acrostic[i]));
            }
        }
    }
    problems
}
