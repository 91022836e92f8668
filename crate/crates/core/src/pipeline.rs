//! Generation modes: full text, interactive continuation and span revision.

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::TrainedBundle;
use crate::corpus::{source_tokens, target_tokens, transform_line, AnnotatedSong, TrainingExample};
use crate::decode::{sample_constrained, Constraints, ControlSpec, SamplingParams};
use crate::error::{Error, Result};
use crate::lm::{score_sequence, LmBackend};
use crate::lyrics::{untransform, LyricsText};
use crate::pmi::sample_theme_keywords;
use crate::rank::{rerank, Candidate, RankWeights};
use crate::tokens::{graphemes, render, text_tokens, Token, TokenId};

pub const DEFAULT_OVERSAMPLE: usize = 3;
pub const DEFAULT_MAX_RETRIES: usize = 2;
pub const DEFAULT_THEME_KEYWORDS: usize = 3;

/// Knobs shared by every generation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationOptions {
    pub sampling: SamplingParams,
    pub n_candidates: usize,
    pub oversample: usize,
    pub max_retries: usize,
    pub theme_keywords: usize,
    pub weights: RankWeights,
    /// Allowed change in grapheme count for sentence-level revision fills.
    pub revision_length_delta: usize,
    pub seed: u64,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        GenerationOptions {
            sampling: SamplingParams::default(),
            n_candidates: crate::decode::DEFAULT_CANDIDATES,
            oversample: DEFAULT_OVERSAMPLE,
            max_retries: DEFAULT_MAX_RETRIES,
            theme_keywords: DEFAULT_THEME_KEYWORDS,
            weights: RankWeights::default(),
            revision_length_delta: 0,
            seed: 0,
        }
    }
}

impl GenerationOptions {
    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        self.weights.validate()?;
        if self.n_candidates == 0 {
            return Err(Error::validation("n_candidates", "must be at least 1"));
        }
        if self.oversample == 0 {
            return Err(Error::validation("oversample", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub spec: ControlSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preceding: Option<LyricsText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_lines: Option<usize>,
}

/// A sentence (`start`/`end` absent) or a grapheme range `[start, end)`
/// inside line `line`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

impl Span {
    pub fn sentence(line: usize) -> Self {
        Span { line, start: None, end: None }
    }

    pub fn word(line: usize, start: usize, end: usize) -> Self {
        Span { line, start: Some(start), end: Some(end) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionRequest {
    pub lyrics: LyricsText,
    pub span: Span,
    pub style: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ResolvedSpan {
    Sentence { line: usize },
    Word { line: usize, start: usize, end: usize },
}

impl ResolvedSpan {
    fn resolve(span: &Span, lyrics: &LyricsText) -> Result<Self> {
        if span.line >= lyrics.len() {
            return Err(Error::validation(
                "span.line",
                format!("line {} out of bounds for {} lines", span.line, lyrics.len()),
            ));
        }
        match (span.start, span.end) {
            (None, None) => Ok(ResolvedSpan::Sentence { line: span.line }),
            (Some(start), Some(end)) => {
                let len = lyrics.line_graphemes(span.line).len();
                if start >= end || end > len {
                    return Err(Error::validation(
                        "span",
                        format!("range {start}..{end} invalid for a line of {len} characters"),
                    ));
                }
                Ok(ResolvedSpan::Word { line: span.line, start, end })
            }
            _ => Err(Error::validation("span", "start and end must be given together")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub source: String,
    pub keywords: Vec<String>,
    pub candidates: Vec<Candidate>,
    pub rejected: Vec<Candidate>,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    /// Replacement text for the span.
    pub text: String,
    pub lyrics: LyricsText,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionOutcome {
    pub masked_source: String,
    pub original: String,
    pub suggestions: Vec<Suggestion>,
}

/// Source sequence plus the keyword list it spells out.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSource {
    pub tokens: Vec<Token>,
    pub keywords: Vec<String>,
}

/// A trained bundle paired with the backend that serves next-token
/// distributions for it.
#[derive(Clone)]
pub struct Engine {
    bundle: Arc<TrainedBundle>,
    backend: Arc<dyn LmBackend>,
}

impl Engine {
    pub fn new(bundle: Arc<TrainedBundle>, backend: Arc<dyn LmBackend>) -> Result<Self> {
        if backend.vocab_size() != bundle.vocab().len() {
            return Err(Error::Config(format!(
                "backend `{}` serves {} tokens but the bundle vocabulary has {}",
                backend.name(),
                backend.vocab_size(),
                bundle.vocab().len()
            )));
        }
        Ok(Engine { bundle, backend })
    }

    /// Engine over the bundle's own n-gram model.
    pub fn with_ngram(bundle: Arc<TrainedBundle>) -> Self {
        let backend = bundle.ngram.clone() as Arc<dyn LmBackend>;
        Engine { bundle, backend }
    }

    pub fn bundle(&self) -> &TrainedBundle {
        &self.bundle
    }

    pub fn backend(&self) -> &dyn LmBackend {
        self.backend.as_ref()
    }

    fn check_style(&self, style: &str) -> Result<()> {
        if !self.bundle.styles.contains(style) {
            return Err(Error::validation("style", format!("unknown style `{style}`")));
        }
        Ok(())
    }

    /// `style [SEP] emotion [SEP] kw...` with user keywords first, then a
    /// sample of the theme's mined keywords, deduplicated.
    pub fn assemble_source(&self, spec: &ControlSpec, theme_count: usize, rng_seed: u64) -> Result<AssembledSource> {
        self.check_style(&spec.style)?;
        let mut keywords: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        let mut push = |k: &str, keywords: &mut Vec<String>| {
            let k = k.trim();
            if !k.is_empty() && seen.insert(k.to_lowercase()) {
                keywords.push(k.to_string());
            }
        };
        for k in &spec.keywords {
            push(k, &mut keywords);
        }
        if let Some(theme) = &spec.theme {
            let mined = crate::pmi::theme_keywords(&self.bundle.pmi, &self.bundle.themes, theme)?;
            for k in sample_theme_keywords(&mined, theme_count, rng_seed) {
                push(&k, &mut keywords);
            }
        }
        Ok(AssembledSource { tokens: source_tokens(&spec.style, spec.emotion, &keywords), keywords })
    }

    fn encode_prefix(&self, source: &[Token]) -> Vec<TokenId> {
        let vocab = self.bundle.vocab();
        let mut prefix = vocab.encode(source);
        prefix.push(vocab.bos());
        prefix
    }

    /// Conditioning prefix for interactive generation: source, `[BOS]`, then
    /// each preceding line in transformed order followed by `[SEP]`.
    pub fn continuation_context(&self, source: &[Token], preceding: &LyricsText) -> Result<Vec<TokenId>> {
        let vocab = self.bundle.vocab();
        let mut ctx = self.encode_prefix(source);
        for line in &preceding.lines {
            ctx.extend(vocab.encode(&transform_line(&text_tokens(line))?));
            ctx.push(vocab.sep());
        }
        Ok(ctx)
    }

    /// Decodes, un-transforms and re-ranks, regenerating while fewer than
    /// `n_candidates` candidates survive duplicate rejection.
    fn decode_and_rank(
        &self,
        prefix: &[TokenId],
        constraints: &Constraints,
        spec: &ControlSpec,
        keywords: &[String],
        opts: &GenerationOptions,
    ) -> Result<(Vec<Candidate>, Vec<Candidate>, usize)> {
        let per_round = opts.n_candidates * opts.oversample;
        let mut pool = Vec::new();
        let mut rounds = 0;
        loop {
            let seed = opts.seed.wrapping_add((rounds * per_round) as u64);
            let decoded = sample_constrained(self.backend(), prefix, constraints, &opts.sampling, per_round, seed)?;
            for d in decoded {
                pool.push((untransform(&d.tokens, self.bundle.vocab())?, d.violations));
            }
            rounds += 1;
            let outcome = rerank(pool.clone(), &spec.style, keywords, self.bundle.rank_resources(), &opts.weights)?;
            if outcome.ranked.len() >= opts.n_candidates || rounds > opts.max_retries {
                if outcome.ranked.is_empty() {
                    return Err(Error::GenerationExhausted {
                        rounds,
                        diagnostics: outcome
                            .rejected
                            .iter()
                            .filter_map(|c| c.rejected.as_ref().map(|r| r.reason.clone()))
                            .collect(),
                    });
                }
                let mut ranked = outcome.ranked;
                ranked.truncate(opts.n_candidates);
                return Ok((ranked, outcome.rejected, rounds));
            }
        }
    }

    /// One-pass generation of a complete lyric.
    pub fn generate_full(&self, spec: &ControlSpec, opts: &GenerationOptions) -> Result<GenerationOutcome> {
        opts.validate()?;
        spec.validate()?;
        let source = self.assemble_source(spec, opts.theme_keywords, opts.seed)?;
        let constraints = Constraints::from_spec(spec, &self.bundle.rhyme, self.bundle.vocab())?;
        let prefix = self.encode_prefix(&source.tokens);
        let (candidates, rejected, rounds) = self.decode_and_rank(&prefix, &constraints, spec, &source.keywords, opts)?;
        Ok(GenerationOutcome {
            source: render(&source.tokens),
            keywords: source.keywords,
            candidates,
            rejected,
            rounds,
        })
    }

    /// Generates the next `k_lines` lines after `preceding`. Candidates hold
    /// only the new lines.
    pub fn generate_continuation(
        &self,
        spec: &ControlSpec,
        preceding: &LyricsText,
        k_lines: usize,
        opts: &GenerationOptions,
    ) -> Result<GenerationOutcome> {
        opts.validate()?;
        spec.validate()?;
        preceding.validate("preceding")?;
        if k_lines == 0 {
            return Err(Error::validation("k_lines", "must be at least 1"));
        }
        let start = preceding.len();
        if start + k_lines > spec.num_lines {
            return Err(Error::validation(
                "k_lines",
                format!("{start} preceding + {k_lines} new lines exceed num_lines = {}", spec.num_lines),
            ));
        }
        let source = self.assemble_source(spec, opts.theme_keywords, opts.seed)?;
        let constraints = Constraints::from_spec(spec, &self.bundle.rhyme, self.bundle.vocab())?
            .with_line_range(start, start + k_lines)?;
        let prefix = self.continuation_context(&source.tokens, preceding)?;
        let (candidates, rejected, rounds) = self.decode_and_rank(&prefix, &constraints, spec, &source.keywords, opts)?;
        Ok(GenerationOutcome {
            source: render(&source.tokens),
            keywords: source.keywords,
            candidates,
            rejected,
            rounds,
        })
    }

    /// Full-lyric sequence in the model's training encoding, used to score
    /// revision candidates.
    pub fn revision_sequence(&self, style: &str, lyrics: &LyricsText) -> Result<Vec<TokenId>> {
        let vocab = self.bundle.vocab();
        let mut seq = vec![vocab.id_or_unk(&Token::Tag(style.to_string())), vocab.bos()];
        seq.extend(vocab.encode(&target_tokens(&lyrics.lines)?));
        Ok(seq)
    }

    pub fn score_lyrics(&self, style: &str, lyrics: &LyricsText) -> Result<f64> {
        score_sequence(self.backend(), &self.revision_sequence(style, lyrics)?)
    }

    /// Suggests replacements for a sentence or a grapheme range. Everything
    /// outside the span is left untouched; fills are ranked by the
    /// log-probability of the whole revised lyric.
    pub fn revise(&self, req: &RevisionRequest, opts: &GenerationOptions) -> Result<RevisionOutcome> {
        opts.validate()?;
        self.check_style(&req.style)?;
        req.lyrics.validate("lyrics")?;
        let span = ResolvedSpan::resolve(&req.span, &req.lyrics)?;
        let masked = masked_lyrics_source(&req.style, &req.lyrics, &req.span)?;
        let (original, fills) = match span {
            ResolvedSpan::Sentence { line } => (req.lyrics.lines[line].clone(), self.sentence_fills(req, line, opts)?),
            ResolvedSpan::Word { line, start, end } => {
                let g = req.lyrics.line_graphemes(line);
                (g[start..end].concat(), self.word_fills(&g[start..end].concat(), end - start))
            }
        };
        let mut scored = Vec::new();
        let mut seen = HashSet::new();
        for fill in fills {
            if fill == original || !seen.insert(fill.clone()) {
                continue;
            }
            let lyrics = splice(&req.lyrics, span, &fill);
            let score = self.score_lyrics(&req.style, &lyrics)?;
            scored.push(Suggestion { text: fill, lyrics, score });
        }
        scored.sort_by(|a, b| b.score.total_cmp(&a.score));
        scored.truncate(opts.n_candidates);
        Ok(RevisionOutcome { masked_source: render(&masked), original, suggestions: scored })
    }

    fn sentence_fills(&self, req: &RevisionRequest, line: usize, opts: &GenerationOptions) -> Result<Vec<String>> {
        let vocab = self.bundle.vocab();
        let lengths: Vec<usize> = req.lyrics.lines.iter().map(|l| graphemes(l).len()).collect();
        let original_len = lengths[line];
        let mut prefix = vec![vocab.id_or_unk(&Token::Tag(req.style.clone())), vocab.bos()];
        for l in &req.lyrics.lines[..line] {
            prefix.extend(vocab.encode(&transform_line(&text_tokens(l))?));
            prefix.push(vocab.sep());
        }
        let d = opts.revision_length_delta;
        let mut fills = Vec::new();
        for (round, len) in (original_len.saturating_sub(d).max(1)..=original_len + d).enumerate() {
            let mut plan = lengths.clone();
            plan[line] = len;
            let constraints = Constraints::new(vocab, plan).with_line_range(line, line + 1)?;
            let n = opts.n_candidates * opts.oversample;
            let seed = opts.seed.wrapping_add((round * n) as u64);
            for cand in sample_constrained(self.backend(), &prefix, &constraints, &opts.sampling, n, seed)? {
                let text = untransform(&cand.tokens, vocab)?;
                fills.push(text.lines.into_iter().next().unwrap_or_default());
            }
        }
        Ok(fills)
    }

    fn word_fills(&self, original: &str, len: usize) -> Vec<String> {
        let lower = original.to_lowercase();
        self.bundle
            .lexicon
            .iter()
            .filter(|w| w.to_lowercase() != lower)
            .filter(|w| graphemes(w).len().abs_diff(len) <= 1)
            .cloned()
            .collect()
    }
}

fn splice(lyrics: &LyricsText, span: ResolvedSpan, fill: &str) -> LyricsText {
    let mut out = lyrics.clone();
    match span {
        ResolvedSpan::Sentence { line } => out.lines[line] = fill.to_string(),
        ResolvedSpan::Word { line, start, end } => {
            let g = lyrics.line_graphemes(line);
            out.lines[line] = format!("{}{}{}", g[..start].concat(), fill, g[end..].concat());
        }
    }
    out
}

/// `style [SEP] masked lyrics` in natural order: lines joined by `[SEP]`,
/// the span replaced by `[MASK]`.
pub fn masked_lyrics_source(style: &str, lyrics: &LyricsText, span: &Span) -> Result<Vec<Token>> {
    let resolved = ResolvedSpan::resolve(span, lyrics)?;
    let mut out = vec![Token::Tag(style.to_string()), Token::Sep];
    for (i, line) in lyrics.lines.iter().enumerate() {
        if i > 0 {
            out.push(Token::Sep);
        }
        match resolved {
            ResolvedSpan::Sentence { line: l } if l == i => out.push(Token::Mask),
            ResolvedSpan::Word { line: l, start, end } if l == i => {
                let g = text_tokens(line);
                out.extend_from_slice(&g[..start]);
                out.push(Token::Mask);
                out.extend_from_slice(&g[end..]);
            }
            _ => out.extend(text_tokens(line)),
        }
    }
    Ok(out)
}

/// Grapheme ranges of whitespace-delimited words in a line.
fn word_ranges(line: &str) -> Vec<(usize, usize)> {
    let g = graphemes(line);
    let mut ranges = Vec::new();
    let mut start = None;
    for (i, x) in g.iter().enumerate() {
        let ws = x.chars().all(char::is_whitespace);
        match (start, ws) {
            (None, false) => start = Some(i),
            (Some(s), true) => {
                ranges.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        ranges.push((s, g.len()));
    }
    ranges
}

/// Masked-infilling examples: per song one sentence-level and one
/// word-level mask. Targets hold the masked text only.
pub fn build_revision_examples(songs: &[AnnotatedSong], rng_seed: u64) -> Result<Vec<TrainingExample>> {
    if songs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(songs.len() * 2);
    for a in songs {
        let lyrics = LyricsText::new(a.song.lines.iter().cloned());
        let line = rng.gen_range(0..lyrics.len());
        out.push(TrainingExample {
            source: masked_lyrics_source(&a.song.style, &lyrics, &Span::sentence(line))?,
            target: text_tokens(&lyrics.lines[line]),
        });

        let line = rng.gen_range(0..lyrics.len());
        let words = word_ranges(&lyrics.lines[line]);
        let (start, end) = if words.len() > 1 {
            words[rng.gen_range(0..words.len())]
        } else {
            // Unsegmented line: mask one or two characters.
            let len = lyrics.line_graphemes(line).len();
            let width = rng.gen_range(1..=len.min(2));
            let start = rng.gen_range(0..=len - width);
            (start, start + width)
        };
        let g = lyrics.line_graphemes(line);
        out.push(TrainingExample {
            source: masked_lyrics_source(&a.song.style, &lyrics, &Span::word(line, start, end))?,
            target: text_tokens(&g[start..end].concat()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Emotion, Song};

    fn song(lines: &[&str]) -> AnnotatedSong {
        AnnotatedSong {
            song: Song {
                id: "s".into(),
                style: "Pop".into(),
                emotion: Some(Emotion::Neutral),
                lines: lines.iter().map(|s| s.to_string()).collect(),
            },
            emotion: Emotion::Neutral,
            keywords: vec![],
        }
    }

    fn concat(tokens: &[Token]) -> String {
        tokens.iter().map(|t| t.to_string()).collect()
    }

    /// Substitutes the target for `[MASK]` and splits back into lines.
    fn fill_mask(ex: &TrainingExample) -> Vec<String> {
        let mut lines = vec![String::new()];
        for t in &ex.source[2..] {
            match t {
                Token::Sep => lines.push(String::new()),
                Token::Mask => lines.last_mut().unwrap().push_str(&concat(&ex.target)),
                other => lines.last_mut().unwrap().push_str(&other.to_string()),
            }
        }
        lines
    }

    #[test]
    fn masked_source_shapes() {
        let l = LyricsText::new(["The snow glows", "Not a footprint to be seen"]);
        let s = render(&masked_lyrics_source("Pop", &l, &Span::sentence(1)).unwrap());
        assert!(s.starts_with("<Pop> [SEP] T h e"));
        assert!(s.ends_with("[SEP] [MASK]"));
        let w = masked_lyrics_source("Pop", &l, &Span::word(1, 6, 15)).unwrap();
        let rendered = render(&w);
        assert!(rendered.contains("a   [MASK]   t o"), "{rendered}");
        assert!(masked_lyrics_source("Pop", &l, &Span::sentence(2)).is_err());
        assert!(masked_lyrics_source("Pop", &l, &Span::word(0, 3, 3)).is_err());
        assert!(masked_lyrics_source("Pop", &l, &Span::word(0, 3, 99)).is_err());
        assert!(masked_lyrics_source("Pop", &l, &Span { line: 0, start: Some(1), end: None }).is_err());
    }

    #[test]
    fn revision_examples_round_trip() {
        let songs = [
            song(&["only line here"]),
            song(&["two words", "and three more", "无空格的句子"]),
            song(&["x"]),
        ];
        let ex = build_revision_examples(&songs, 5).unwrap();
        assert_eq!(ex.len(), 6);
        for (i, e) in ex.iter().enumerate() {
            assert_eq!(fill_mask(e), songs[i / 2].song.lines, "example {i}");
            assert_eq!(e.source.iter().filter(|t| **t == Token::Mask).count(), 1);
        }
        // One-line song: the sentence-level mask covers that line.
        assert_eq!(concat(&ex[0].target), "only line here");
        assert_eq!(ex, build_revision_examples(&songs, 5).unwrap());
        assert!(build_revision_examples(&[], 0).is_err());
    }

    #[test]
    fn word_ranges_split_on_whitespace() {
        assert_eq!(word_ranges("ab  cd e"), [(0, 2), (4, 6), (7, 8)]);
        assert_eq!(word_ranges("无空格"), [(0, 3)]);
    }
}
