//! Constrained top-k sampling.
//!
//! Format controls are enforced in probability space at every step:
//! line and length structure through `[SEP]`/`[EOS]` forcing, rhyme through
//! masking the first (line-final) token of each transformed line, and
//! acrostics through forcing the token that becomes a line's first grapheme
//! after un-transforming.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Emotion;
use crate::error::{Error, Result};
use crate::lm::LmBackend;
use crate::rhyme::RhymeTable;
use crate::tokens::{graphemes, Token, TokenId, Vocabulary};

pub const DEFAULT_TOP_K: usize = 16;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_CANDIDATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordsPerLine {
    Uniform(usize),
    PerLine(Vec<usize>),
}

/// Content and format attributes of one generation request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlSpec {
    pub style: String,
    pub emotion: Emotion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theme: Option<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acrostic: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhyme_group: Option<String>,
    pub num_lines: usize,
    pub words_per_line: WordsPerLine,
}

impl ControlSpec {
    /// Structural checks that need no trained artifacts.
    pub fn validate(&self) -> Result<()> {
        if self.num_lines == 0 {
            return Err(Error::validation("num_lines", "must be at least 1"));
        }
        match &self.words_per_line {
            WordsPerLine::Uniform(0) => return Err(Error::validation("words_per_line", "must be at least 1")),
            WordsPerLine::Uniform(_) => {}
            WordsPerLine::PerLine(v) => {
                if v.len() != self.num_lines {
                    return Err(Error::validation(
                        "words_per_line",
                        format!("{} per-line counts given for {} lines", v.len(), self.num_lines),
                    ));
                }
                if let Some(i) = v.iter().position(|&c| c == 0) {
                    return Err(Error::validation(format!("words_per_line[{i}]"), "must be at least 1"));
                }
            }
        }
        if let Some(a) = &self.acrostic {
            if a.len() != self.num_lines {
                return Err(Error::validation(
                    "acrostic",
                    format!("{} acrostic characters for {} lines", a.len(), self.num_lines),
                ));
            }
            if let Some(i) = a.iter().position(|g| graphemes(g).len() != 1 || g.trim().is_empty()) {
                return Err(Error::validation(format!("acrostic[{i}]"), "must be exactly one visible character"));
            }
        }
        if let Some(i) = self.keywords.iter().position(|k| k.trim().is_empty()) {
            return Err(Error::validation(format!("keywords[{i}]"), "keyword is empty"));
        }
        Ok(())
    }

    pub fn line_lengths(&self) -> Vec<usize> {
        match &self.words_per_line {
            WordsPerLine::Uniform(n) => vec![*n; self.num_lines],
            WordsPerLine::PerLine(v) => v.clone(),
        }
    }
}

/// A format constraint that could not be honoured, reported alongside the
/// candidate instead of failing the request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub line: usize,
    pub constraint: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeState {
    pub emitted: Vec<TokenId>,
    pub line_index: usize,
    pub pos_in_line: usize,
    pub done: bool,
}

impl DecodeState {
    pub fn at_line(line_index: usize) -> Self {
        DecodeState { emitted: Vec::new(), line_index, pos_in_line: 0, done: false }
    }
}

/// Per-request constraint tables resolved against a vocabulary.
#[derive(Debug, Clone)]
pub struct Constraints {
    lengths: Vec<usize>,
    acrostic: Option<Vec<TokenId>>,
    rhyme: Option<(String, HashSet<TokenId>)>,
    text_ids: Vec<TokenId>,
    whitespace: HashSet<TokenId>,
    sep: TokenId,
    eos: TokenId,
    vocab_size: usize,
    start_line: usize,
    stop_line: usize,
}

/// Index within a transformed line whose token becomes the natural first
/// grapheme.
pub fn acrostic_position(line_len: usize) -> usize {
    if line_len >= 2 {
        1
    } else {
        0
    }
}

impl Constraints {
    pub fn new(vocab: &Vocabulary, lengths: Vec<usize>) -> Self {
        let text_ids: Vec<TokenId> = (0..vocab.len() as TokenId).filter(|&i| vocab.is_emittable_text(i)).collect();
        let whitespace = text_ids
            .iter()
            .copied()
            .filter(|&i| vocab.token(i).is_some_and(Token::is_whitespace))
            .collect();
        let stop_line = lengths.len();
        Constraints {
            lengths,
            acrostic: None,
            rhyme: None,
            text_ids,
            whitespace,
            sep: vocab.sep(),
            eos: vocab.eos(),
            vocab_size: vocab.len(),
            start_line: 0,
            stop_line,
        }
    }

    /// Resolves a [`ControlSpec`]'s format attributes. Fails if the rhyme
    /// group or an acrostic character cannot be produced by the vocabulary.
    pub fn from_spec(spec: &ControlSpec, rhyme: &RhymeTable, vocab: &Vocabulary) -> Result<Self> {
        spec.validate()?;
        let mut c = Constraints::new(vocab, spec.line_lengths());
        if let Some(acro) = &spec.acrostic {
            let ids = acro
                .iter()
                .map(|g| {
                    vocab.id(&Token::text(g.as_str())).filter(|&id| vocab.is_emittable_text(id)).ok_or_else(|| {
                        Error::unsatisfiable("acrostic", format!("character `{g}` is not in the model vocabulary"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            c.acrostic = Some(ids);
        }
        if let Some(group) = &spec.rhyme_group {
            let members = rhyme
                .members(group)
                .ok_or_else(|| Error::validation("rhyme_group", format!("unknown rhyme group `{group}`")))?;
            let ids: HashSet<TokenId> = members
                .iter()
                .filter_map(|g| vocab.id(&Token::text(g.as_str())))
                .filter(|&id| vocab.is_emittable_text(id))
                .collect();
            if ids.is_empty() {
                return Err(Error::unsatisfiable(
                    "rhyme_group",
                    format!("rhyme group `{group}` shares no characters with the model vocabulary"),
                ));
            }
            c.rhyme = Some((group.clone(), ids));
        }
        Ok(c)
    }

    /// Restricts decoding to lines `start..stop`; the state machine starts
    /// at `start` and finishes after the `[SEP]`/`[EOS]` closing line
    /// `stop - 1`.
    pub fn with_line_range(mut self, start: usize, stop: usize) -> Result<Self> {
        if start >= stop || stop > self.lengths.len() {
            return Err(Error::input(format!(
                "line range {start}..{stop} invalid for {} lines",
                self.lengths.len()
            )));
        }
        self.start_line = start;
        self.stop_line = stop;
        Ok(self)
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn start_line(&self) -> usize {
        self.start_line
    }

    pub fn stop_line(&self) -> usize {
        self.stop_line
    }

    pub fn rhyme_ids(&self) -> Option<&HashSet<TokenId>> {
        self.rhyme.as_ref().map(|(_, ids)| ids)
    }

    pub fn acrostic_ids(&self) -> Option<&[TokenId]> {
        self.acrostic.as_deref()
    }

    pub fn initial_state(&self) -> DecodeState {
        DecodeState::at_line(self.start_line)
    }

    /// Upper bound on emitted tokens before a candidate is declared runaway.
    pub fn max_emitted(&self) -> usize {
        let lines = self.stop_line - self.start_line;
        let longest = self.lengths.iter().copied().max().unwrap_or(0);
        lines * (longest + 1) + 8
    }

    /// Applies every format rule to `dist`. Returns the adjusted, normalized
    /// distribution and any violation the precedence rules forced.
    pub fn apply(&self, state: &DecodeState, dist: &[f64]) -> Result<(Vec<f64>, Option<ConstraintViolation>)> {
        if state.done {
            return Err(Error::InternalInvariant("constraints applied to a finished decode".into()));
        }
        if dist.len() != self.vocab_size {
            return Err(Error::InternalInvariant(format!(
                "distribution of {} entries for vocabulary of {}",
                dist.len(),
                self.vocab_size
            )));
        }
        let line = state.line_index;
        let target = *self
            .lengths
            .get(line)
            .ok_or_else(|| Error::InternalInvariant(format!("line {line} beyond planned lines")))?;
        let pos = state.pos_in_line;
        if pos > target {
            return Err(Error::InternalInvariant(format!("line {line} overran its length {target}")));
        }
        if pos == target {
            let closer = if line + 1 < self.lengths.len() { self.sep } else { self.eos };
            return Ok((self.one_hot(closer), None));
        }

        let acro_pos = acrostic_position(target);
        if let (Some(acro), true) = (&self.acrostic, pos == acro_pos) {
            let forced = acro[line];
            let mut violation = None;
            if pos == 0 {
                if let Some((group, ids)) = &self.rhyme {
                    if !ids.contains(&forced) {
                        violation = Some(ConstraintViolation {
                            line,
                            constraint: "rhyme_group".into(),
                            detail: format!(
                                "one-character line: acrostic character takes precedence over rhyme group `{group}`"
                            ),
                        });
                    }
                }
            }
            return Ok((self.one_hot(forced), violation));
        }

        let edge = pos == 0 || pos == acro_pos;
        let rhyme = if pos == 0 { self.rhyme_ids() } else { None };
        let allowed: Vec<TokenId> = self
            .text_ids
            .iter()
            .copied()
            .filter(|id| !(edge && self.whitespace.contains(id)))
            .filter(|id| rhyme.is_none_or(|r| r.contains(id)))
            .collect();
        if allowed.is_empty() {
            return Err(Error::unsatisfiable(
                "format",
                format!("no token allowed at line {line}, position {pos}"),
            ));
        }
        let mut out = vec![0.0; self.vocab_size];
        let mut mass = 0.0;
        for &id in &allowed {
            let p = dist[id as usize];
            out[id as usize] = p;
            mass += p;
        }
        if mass > 0.0 {
            for &id in &allowed {
                out[id as usize] /= mass;
            }
        } else {
            let u = 1.0 / allowed.len() as f64;
            for &id in &allowed {
                out[id as usize] = u;
            }
        }
        Ok((out, None))
    }

    fn one_hot(&self, id: TokenId) -> Vec<f64> {
        let mut v = vec![0.0; self.vocab_size];
        v[id as usize] = 1.0;
        v
    }

    /// Advances the line/position bookkeeping after emitting `token`.
    pub fn advance(&self, state: &mut DecodeState, token: TokenId) {
        state.emitted.push(token);
        if token == self.eos {
            state.done = true;
        } else if token == self.sep {
            state.line_index += 1;
            state.pos_in_line = 0;
            if state.line_index >= self.stop_line {
                state.done = true;
            }
        } else {
            state.pos_in_line += 1;
        }
    }
}

/// Convenience wrapper resolving the constraints for a single step.
pub fn constrain_logits(
    state: &DecodeState,
    spec: &ControlSpec,
    rhyme: &RhymeTable,
    vocab: &Vocabulary,
    dist: &[f64],
) -> Result<(Vec<f64>, Option<ConstraintViolation>)> {
    Constraints::from_spec(spec, rhyme, vocab)?.apply(state, dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub top_k: usize,
    pub temperature: f64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { top_k: DEFAULT_TOP_K, temperature: DEFAULT_TEMPERATURE }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::validation("top_k", "must be at least 1"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::validation("temperature", "must be a positive number"));
        }
        Ok(())
    }
}

/// One sampled candidate in transformed order, without the conditioning
/// prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedCandidate {
    pub tokens: Vec<TokenId>,
    pub violations: Vec<ConstraintViolation>,
}

/// Draws one token: keep the `k` most probable non-zero entries (ties by
/// lower id), sharpen or flatten with the temperature, sample.
pub fn sample_top_k(dist: &[f64], params: &SamplingParams, rng: &mut ChaCha8Rng) -> Result<TokenId> {
    let mut ranked: Vec<(TokenId, f64)> = dist
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (i as TokenId, p))
        .collect();
    if ranked.is_empty() {
        return Err(Error::InternalInvariant("sampling from an all-zero distribution".into()));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(params.top_k);
    if ranked.len() == 1 {
        return Ok(ranked[0].0);
    }
    let top = ranked[0].1.ln();
    let weights: Vec<f64> = ranked
        .iter()
        .map(|(_, p)| ((p.ln() - top) / params.temperature).exp())
        .collect();
    let idx = WeightedIndex::new(&weights)
        .map_err(|e| Error::InternalInvariant(format!("sampling weights: {e}")))?
        .sample(rng);
    Ok(ranked[idx].0)
}

/// Decodes one candidate after `prefix`.
pub fn sample_one(
    model: &dyn LmBackend,
    prefix: &[TokenId],
    constraints: &Constraints,
    params: &SamplingParams,
    rng_seed: u64,
) -> Result<DecodedCandidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut state = constraints.initial_state();
    let mut context = prefix.to_vec();
    let mut violations = Vec::new();
    let limit = constraints.max_emitted();
    while !state.done {
        if state.emitted.len() >= limit {
            return Err(Error::InternalInvariant(format!("decode exceeded {limit} tokens without finishing")));
        }
        let dist = model.next_distribution(&context)?;
        let (adjusted, violation) = constraints.apply(&state, &dist)?;
        violations.extend(violation);
        let tok = sample_top_k(&adjusted, params, &mut rng)?;
        constraints.advance(&mut state, tok);
        context.push(tok);
    }
    Ok(DecodedCandidate { tokens: state.emitted, violations })
}

/// Draws `n_candidates` candidates; candidate `i` uses seed `rng_seed + i`.
pub fn sample_constrained(
    model: &dyn LmBackend,
    prefix: &[TokenId],
    constraints: &Constraints,
    params: &SamplingParams,
    n_candidates: usize,
    rng_seed: u64,
) -> Result<Vec<DecodedCandidate>> {
    params.validate()?;
    if n_candidates == 0 {
        return Err(Error::validation("n_candidates", "must be at least 1"));
    }
    if model.vocab_size() != constraints.vocab_size {
        return Err(Error::Config(format!(
            "backend vocabulary size {} does not match bundle vocabulary {}",
            model.vocab_size(),
            constraints.vocab_size
        )));
    }
    (0..n_candidates as u64)
        .map(|i| sample_one(model, prefix, constraints, params, rng_seed.wrapping_add(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::text_tokens;

    struct Uniform(usize);

    impl LmBackend for Uniform {
        fn name(&self) -> &str {
            "uniform"
        }
        fn vocab_size(&self) -> usize {
            self.0
        }
        fn next_distribution(&self, _: &[TokenId]) -> Result<Vec<f64>> {
            Ok(vec![1.0 / self.0 as f64; self.0])
        }
    }

    fn vocab() -> Vocabulary {
        Vocabulary::build(text_tokens("abcdeoutxyz ").into_iter().chain([Token::Tag("Pop".into())]))
    }

    fn spec(lines: usize, words: usize) -> ControlSpec {
        ControlSpec {
            style: "Pop".into(),
            emotion: Emotion::Neutral,
            theme: None,
            keywords: vec![],
            acrostic: None,
            rhyme_group: None,
            num_lines: lines,
            words_per_line: WordsPerLine::Uniform(words),
        }
    }

    fn uniform_dist(v: &Vocabulary) -> Vec<f64> {
        vec![1.0 / v.len() as f64; v.len()]
    }

    #[test]
    fn validate_catches_shape_errors() {
        let mut s = spec(2, 3);
        assert!(s.validate().is_ok());
        s.acrostic = Some(vec!["a".into()]);
        assert!(s.validate().is_err());
        s.acrostic = Some(vec!["a".into(), "bc".into()]);
        assert!(s.validate().is_err());
        let mut s = spec(2, 3);
        s.words_per_line = WordsPerLine::PerLine(vec![3]);
        assert!(s.validate().is_err());
        s.words_per_line = WordsPerLine::PerLine(vec![3, 0]);
        assert!(s.validate().is_err());
        assert!(spec(0, 3).validate().is_err());
        assert!(spec(1, 0).validate().is_err());
    }

    #[test]
    fn rhyme_masks_line_final_position() {
        let v = vocab();
        let mut s = spec(2, 4);
        s.rhyme_group = Some("u".into());
        let (p, viol) = constrain_logits(&DecodeState::at_line(0), &s, &RhymeTable::default(), &v, &uniform_dist(&v)).unwrap();
        assert!(viol.is_none());
        let u = v.id(&Token::text("u")).unwrap() as usize;
        for (i, &x) in p.iter().enumerate() {
            if i == u {
                assert!((x - 1.0).abs() < 1e-12);
            } else {
                assert_eq!(x, 0.0, "{:?}", v.token(i as TokenId));
            }
        }
    }

    #[test]
    fn sentinels_masked_and_closers_forced() {
        let v = vocab();
        let s = spec(2, 3);
        let rt = RhymeTable::default();
        let mid = DecodeState { emitted: vec![], line_index: 0, pos_in_line: 2, done: false };
        let (p, _) = constrain_logits(&mid, &s, &rt, &v, &uniform_dist(&v)).unwrap();
        for id in [v.sep(), v.eos(), v.mask(), v.bos(), v.unk(), v.id(&Token::Tag("Pop".into())).unwrap()] {
            assert_eq!(p[id as usize], 0.0);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Whitespace is allowed inside a line.
        assert!(p[v.id(&Token::text(" ")).unwrap() as usize] > 0.0);

        let end0 = DecodeState { emitted: vec![], line_index: 0, pos_in_line: 3, done: false };
        let (p, _) = constrain_logits(&end0, &s, &rt, &v, &uniform_dist(&v)).unwrap();
        assert_eq!(p[v.sep() as usize], 1.0);
        let end1 = DecodeState { emitted: vec![], line_index: 1, pos_in_line: 3, done: false };
        let (p, _) = constrain_logits(&end1, &s, &rt, &v, &uniform_dist(&v)).unwrap();
        assert_eq!(p[v.eos() as usize], 1.0);
    }

    #[test]
    fn acrostic_forced_at_natural_first_position() {
        let v = vocab();
        let mut s = spec(2, 4);
        s.acrostic = Some(vec!["a".into(), "e".into()]);
        let rt = RhymeTable::default();
        let st = DecodeState { emitted: vec![], line_index: 1, pos_in_line: 1, done: false };
        let (p, _) = constrain_logits(&st, &s, &rt, &v, &uniform_dist(&v)).unwrap();
        assert_eq!(p[v.id(&Token::text("e")).unwrap() as usize], 1.0);
    }

    #[test]
    fn acrostic_beats_rhyme_on_one_character_lines() {
        let v = vocab();
        let mut s = spec(1, 1);
        s.acrostic = Some(vec!["a".into()]);
        s.rhyme_group = Some("u".into());
        let (p, viol) =
            constrain_logits(&DecodeState::at_line(0), &s, &RhymeTable::default(), &v, &uniform_dist(&v)).unwrap();
        assert_eq!(p[v.id(&Token::text("a")).unwrap() as usize], 1.0);
        let viol = viol.expect("violation recorded");
        assert_eq!(viol.line, 0);
        assert_eq!(viol.constraint, "rhyme_group");
    }

    #[test]
    fn unsatisfiable_constraints() {
        let v = vocab();
        let rt = RhymeTable::default();
        let mut s = spec(1, 3);
        s.rhyme_group = Some("h".into());
        assert!(matches!(Constraints::from_spec(&s, &rt, &v), Err(Error::ConstraintUnsatisfiable { .. })));
        let mut s = spec(1, 3);
        s.acrostic = Some(vec!["q".into()]);
        assert!(matches!(Constraints::from_spec(&s, &rt, &v), Err(Error::ConstraintUnsatisfiable { .. })));
        let mut s = spec(1, 3);
        s.rhyme_group = Some("no-such-group".into());
        assert!(matches!(Constraints::from_spec(&s, &rt, &v), Err(Error::Validation { .. })));
    }

    #[test]
    fn zero_mass_falls_back_to_uniform_over_allowed() {
        let v = vocab();
        let c = Constraints::new(&v, vec![3]);
        let mut dist = vec![0.0; v.len()];
        dist[v.sep() as usize] = 1.0;
        let (p, _) = c.apply(&DecodeState::at_line(0), &dist).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[v.sep() as usize], 0.0);
    }

    #[test]
    fn samples_respect_shape() {
        let v = vocab();
        let model = Uniform(v.len());
        let c = Constraints::from_spec(&spec(4, 5), &RhymeTable::default(), &v).unwrap();
        let cands = sample_constrained(&model, &[], &c, &SamplingParams::default(), 3, 9).unwrap();
        assert_eq!(cands.len(), 3);
        for cand in cands {
            let text = crate::lyrics::untransform(&cand.tokens, &v).unwrap();
            assert_eq!(text.lines.len(), 4);
            assert!(text.lines.iter().all(|l| graphemes(l).len() == 5));
            assert_eq!(*cand.tokens.last().unwrap(), v.eos());
        }
    }

    #[test]
    fn greedy_ignores_seed() {
        let v = vocab();
        let model = Uniform(v.len());
        let c = Constraints::from_spec(&spec(2, 3), &RhymeTable::default(), &v).unwrap();
        let p = SamplingParams { top_k: 1, temperature: 1.0 };
        let a = sample_constrained(&model, &[], &c, &p, 1, 1).unwrap();
        let b = sample_constrained(&model, &[], &c, &p, 1, 999).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let v = vocab();
        let model = Uniform(v.len());
        let c = Constraints::from_spec(&spec(3, 4), &RhymeTable::default(), &v).unwrap();
        let p = SamplingParams { top_k: 8, temperature: 0.7 };
        assert_eq!(
            sample_constrained(&model, &[], &c, &p, 3, 42).unwrap(),
            sample_constrained(&model, &[], &c, &p, 3, 42).unwrap()
        );
    }

    #[test]
    fn line_range_stops_with_sep() {
        let v = vocab();
        let model = Uniform(v.len());
        let c = Constraints::from_spec(&spec(5, 2), &RhymeTable::default(), &v)
            .unwrap()
            .with_line_range(1, 3)
            .unwrap();
        let cand = sample_one(&model, &[], &c, &SamplingParams::default(), 3).unwrap();
        assert_eq!(cand.tokens.len(), 6);
        assert_eq!(*cand.tokens.last().unwrap(), v.sep());
        assert!(Constraints::new(&v, vec![1, 1]).with_line_range(2, 2).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        let v = vocab();
        let model = Uniform(v.len());
        let c = Constraints::new(&v, vec![2]);
        assert!(sample_constrained(&model, &[], &c, &SamplingParams { top_k: 0, temperature: 1.0 }, 1, 0).is_err());
        assert!(sample_constrained(&model, &[], &c, &SamplingParams { top_k: 2, temperature: 0.0 }, 1, 0).is_err());
        assert!(sample_constrained(&model, &[], &c, &SamplingParams::default(), 0, 0).is_err());
    }
}
