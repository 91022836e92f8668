//! Candidate re-ranking: corpus-overlap rejection, then the weighted sum of
//! keyword hit, style relevance and diversity scores.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::classify::TextClassifier;
use crate::corpus::{normalize_line, song_words, LineIndex};
use crate::decode::ConstraintViolation;
use crate::error::{Error, Result};
use crate::lyrics::LyricsText;
use crate::segment::Segmenter;

/// Candidates with this many lines found in the training corpus are dropped.
pub const DUPLICATE_LINE_THRESHOLD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankWeights {
    pub keyword_hit: f64,
    pub style: f64,
    pub diversity: f64,
}

impl Default for RankWeights {
    fn default() -> Self {
        RankWeights { keyword_hit: 1.0, style: 1.0, diversity: 1.0 }
    }
}

impl RankWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("keyword_hit", self.keyword_hit), ("style", self.style), ("diversity", self.diversity)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::validation(format!("weights.{name}"), "must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RankWeights {
            keyword_hit: self.keyword_hit * factor,
            style: self.style * factor,
            diversity: self.diversity * factor,
        }
    }

    pub fn combine(&self, s_kh: f64, s_sr: f64, s_div: f64) -> f64 {
        self.keyword_hit * s_kh + self.style * s_sr + self.diversity * s_div
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub s_kh: f64,
    pub s_sr: f64,
    pub s_div: f64,
    pub s_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: String,
    pub overlapping_lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub lyrics: LyricsText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Rejection>,
    #[serde(default)]
    pub violations: Vec<ConstraintViolation>,
    /// Position in decode order, the tie-breaker for equal scores.
    pub decode_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DuplicateCheck {
    Pass,
    Reject(Rejection),
}

pub fn duplicate_check(candidate: &LyricsText, index: &LineIndex) -> DuplicateCheck {
    let overlapping: Vec<String> = candidate.lines.iter().filter(|l| index.contains(l)).cloned().collect();
    if overlapping.len() >= DUPLICATE_LINE_THRESHOLD {
        DuplicateCheck::Reject(Rejection {
            reason: format!("{} lines overlap the training corpus", overlapping.len()),
            overlapping_lines: overlapping,
        })
    } else {
        DuplicateCheck::Pass
    }
}

/// Distinct request keywords found in the natural-order text.
pub fn keyword_count(candidate: &LyricsText, keywords: &[String]) -> usize {
    let text = candidate.joined().to_lowercase();
    keywords
        .iter()
        .map(|k| k.trim().to_lowercase())
        .filter(|k| !k.is_empty())
        .collect::<HashSet<_>>()
        .into_iter()
        .filter(|k| text.contains(k.as_str()))
        .count()
}

/// `n / n_max` per candidate; all zeros when nothing hits.
pub fn keyword_hit(candidates: &[LyricsText], keywords: &[String]) -> Vec<f64> {
    let counts: Vec<usize> = candidates.iter().map(|c| keyword_count(c, keywords)).collect();
    let n_max = counts.iter().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .map(|n| if n_max == 0 { 0.0 } else { n as f64 / n_max as f64 })
        .collect()
}

pub fn style_relevance(
    candidate: &LyricsText,
    clf: &TextClassifier,
    target_style: &str,
    segmenter: &dyn Segmenter,
) -> Result<f64> {
    clf.probability(&song_words(&candidate.lines, segmenter), target_style)
}

/// `1 - n_rep / n_tot`, counting every line whose normalized text already
/// appeared earlier in the candidate.
pub fn diversity(candidate: &LyricsText) -> f64 {
    let n_tot = candidate.lines.len();
    if n_tot == 0 {
        return 0.0;
    }
    let mut seen = HashSet::new();
    let n_rep = candidate.lines.iter().filter(|l| !seen.insert(normalize_line(l))).count();
    1.0 - n_rep as f64 / n_tot as f64
}

/// Trained artifacts the scorer needs.
#[derive(Clone, Copy)]
pub struct RankResources<'a> {
    pub style_classifier: &'a TextClassifier,
    pub line_index: &'a LineIndex,
    pub segmenter: &'a dyn Segmenter,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankOutcome {
    /// Survivors ordered by `s_rank`, best first.
    pub ranked: Vec<Candidate>,
    pub rejected: Vec<Candidate>,
}

pub fn rerank(
    candidates: Vec<(LyricsText, Vec<ConstraintViolation>)>,
    style: &str,
    keywords: &[String],
    res: RankResources<'_>,
    weights: &RankWeights,
) -> Result<RankOutcome> {
    if candidates.is_empty() {
        return Err(Error::input("nothing to rank"));
    }
    weights.validate()?;
    if !res.style_classifier.classes().iter().any(|c| c == style) {
        return Err(Error::validation("style", format!("style `{style}` unknown to the style classifier")));
    }
    let mut survivors = Vec::new();
    let mut rejected = Vec::new();
    for (i, (lyrics, violations)) in candidates.into_iter().enumerate() {
        match duplicate_check(&lyrics, res.line_index) {
            DuplicateCheck::Pass => survivors.push(Candidate {
                lyrics,
                scores: None,
                rejected: None,
                violations,
                decode_index: i,
            }),
            DuplicateCheck::Reject(r) => rejected.push(Candidate {
                lyrics,
                scores: None,
                rejected: Some(r),
                violations,
                decode_index: i,
            }),
        }
    }
    let texts: Vec<LyricsText> = survivors.iter().map(|c| c.lyrics.clone()).collect();
    let kh = keyword_hit(&texts, keywords);
    for (c, s_kh) in survivors.iter_mut().zip(kh) {
        let s_sr = style_relevance(&c.lyrics, res.style_classifier, style, res.segmenter)?;
        let s_div = diversity(&c.lyrics);
        c.scores = Some(Scores { s_kh, s_sr, s_div, s_rank: weights.combine(s_kh, s_sr, s_div) });
    }
    let key = |c: &Candidate| c.scores.map_or(f64::NEG_INFINITY, |s| s.s_rank);
    survivors.sort_by(|a, b| key(b).total_cmp(&key(a)));
    Ok(RankOutcome { ranked: survivors, rejected })
}
