use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{check_ids, LmBackend};
use crate::corpus::TrainingExample;
use crate::error::{Error, Result};
use crate::tokens::{Token, TokenId, Vocabulary};

pub const DEFAULT_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
struct ContextStats {
    total: u64,
    /// `(token, count)` sorted by token id.
    followers: Vec<(TokenId, u64)>,
}

/// Interpolated Witten-Bell n-gram model over prefix-LM sequences
/// (`source [BOS] target`).
///
/// `P(w|h) = (c(h,w) + T(h)·P(w|h')) / (c(h) + T(h))` where `h'` drops the
/// oldest token of `h` and `T(h)` is the number of distinct followers of `h`.
/// The recursion bottoms out in a unigram interpolated with the uniform
/// distribution over the vocabulary. Contexts never seen contribute nothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "NgramRepr", into = "NgramRepr")]
pub struct NgramModel {
    order: usize,
    vocab: Vocabulary,
    unigram_counts: Vec<u64>,
    contexts: HashMap<Vec<TokenId>, ContextStats>,
    unigram: Vec<f64>,
}

/// Full training sequence for one example.
pub fn example_sequence(example: &TrainingExample) -> Vec<Token> {
    let mut seq = example.source.clone();
    seq.push(Token::Bos);
    seq.extend(example.target.iter().cloned());
    seq
}

/// Fits a model on `source ++ [BOS] ++ target` of each example. `extra`
/// tokens (configured style/emotion tags, for instance) join the vocabulary
/// even if absent from training data.
pub fn fit_ngram<I>(examples: &[TrainingExample], order: usize, extra: I) -> Result<NgramModel>
where
    I: IntoIterator<Item = Token>,
{
    if examples.is_empty() {
        return Err(Error::Training("no training examples".into()));
    }
    let seqs: Vec<Vec<Token>> = examples.iter().map(example_sequence).collect();
    let vocab = Vocabulary::build(seqs.iter().flatten().cloned().chain(extra));
    let ids: Vec<Vec<TokenId>> = seqs.iter().map(|s| vocab.encode(s)).collect();
    NgramModel::fit(&ids, order, vocab)
}

impl NgramModel {
    /// Counts every k-gram with `k ≤ order` inside each sequence. Sequences
    /// are not padded: the first token of a sequence is predicted from the
    /// empty context only.
    pub fn fit(sequences: &[Vec<TokenId>], order: usize, vocab: Vocabulary) -> Result<Self> {
        if order == 0 {
            return Err(Error::Training("n-gram order must be at least 1".into()));
        }
        if sequences.iter().all(Vec::is_empty) {
            return Err(Error::Training("no training tokens".into()));
        }
        let v = vocab.len();
        let mut unigram_counts = vec![0u64; v];
        let mut raw: HashMap<Vec<TokenId>, BTreeMap<TokenId, u64>> = HashMap::new();
        for seq in sequences {
            check_ids(seq, v).map_err(|e| Error::Training(e.to_string()))?;
            for (i, &tok) in seq.iter().enumerate() {
                unigram_counts[tok as usize] += 1;
                for k in 1..order.min(i + 1) {
                    *raw.entry(seq[i - k..i].to_vec()).or_default().entry(tok).or_default() += 1;
                }
            }
        }
        let contexts = raw
            .into_iter()
            .map(|(h, followers)| {
                let total = followers.values().sum();
                (h, ContextStats { total, followers: followers.into_iter().collect() })
            })
            .collect();
        Ok(Self::assemble(order, vocab, unigram_counts, contexts))
    }

    fn assemble(
        order: usize,
        vocab: Vocabulary,
        unigram_counts: Vec<u64>,
        contexts: HashMap<Vec<TokenId>, ContextStats>,
    ) -> Self {
        let v = vocab.len() as f64;
        let n: u64 = unigram_counts.iter().sum();
        let types = unigram_counts.iter().filter(|&&c| c > 0).count() as f64;
        let denom = n as f64 + types;
        let unigram = unigram_counts
            .iter()
            .map(|&c| (c as f64 + types / v) / denom)
            .collect();
        NgramModel { order, vocab, unigram_counts, contexts, unigram }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Smoothed unigram distribution, the full-backoff limit.
    pub fn unigram(&self) -> &[f64] {
        &self.unigram
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }
}

impl LmBackend for NgramModel {
    fn name(&self) -> &str {
        "ngram"
    }

    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<Vec<f64>> {
        check_ids(context, self.vocab.len())?;
        let mut p = self.unigram.clone();
        let longest = (self.order - 1).min(context.len());
        for k in 1..=longest {
            let h = &context[context.len() - k..];
            let Some(stats) = self.contexts.get(h) else {
                // A longer context containing `h` as suffix cannot have been seen either.
                break;
            };
            let types = stats.followers.len() as f64;
            let denom = stats.total as f64 + types;
            let backoff = types / denom;
            for x in p.iter_mut() {
                *x *= backoff;
            }
            for &(w, c) in &stats.followers {
                p[w as usize] += c as f64 / denom;
            }
        }
        Ok(p)
    }

    fn prob(&self, context: &[TokenId], token: TokenId) -> Result<f64> {
        let longest = (self.order - 1).min(context.len());
        let tail = &context[context.len() - longest..];
        check_ids(tail, self.vocab.len())?;
        check_ids(&[token], self.vocab.len())?;
        let mut p = self.unigram[token as usize];
        for k in 1..=longest {
            let Some(stats) = self.contexts.get(&tail[longest - k..]) else {
                break;
            };
            let types = stats.followers.len() as f64;
            let denom = stats.total as f64 + types;
            p *= types / denom;
            if let Ok(i) = stats.followers.binary_search_by_key(&token, |&(w, _)| w) {
                p += stats.followers[i].1 as f64 / denom;
            }
        }
        Ok(p)
    }
}

const NGRAM_FORMAT: &str = "lyricist-ngram";
const NGRAM_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NgramRepr {
    format: String,
    version: u32,
    order: usize,
    vocab: Vocabulary,
    unigram_counts: Vec<u64>,
    contexts: Vec<(Vec<TokenId>, u64, Vec<(TokenId, u64)>)>,
}

impl From<NgramModel> for NgramRepr {
    fn from(m: NgramModel) -> Self {
        let mut contexts: Vec<_> = m
            .contexts
            .into_iter()
            .map(|(h, s)| (h, s.total, s.followers))
            .collect();
        contexts.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        NgramRepr {
            format: NGRAM_FORMAT.into(),
            version: NGRAM_VERSION,
            order: m.order,
            vocab: m.vocab,
            unigram_counts: m.unigram_counts,
            contexts,
        }
    }
}

impl TryFrom<NgramRepr> for NgramModel {
    type Error = String;

    fn try_from(r: NgramRepr) -> std::result::Result<Self, String> {
        if r.format != NGRAM_FORMAT || r.version != NGRAM_VERSION {
            return Err(format!(
                "unsupported n-gram model `{}` v{} (expected `{NGRAM_FORMAT}` v{NGRAM_VERSION})",
                r.format, r.version
            ));
        }
        if r.order == 0 || r.unigram_counts.len() != r.vocab.len() {
            return Err("corrupt n-gram model header".into());
        }
        let mut contexts = HashMap::with_capacity(r.contexts.len());
        for (h, total, followers) in r.contexts {
            if followers.iter().map(|f| f.1).sum::<u64>() != total {
                return Err("n-gram context totals do not match follower counts".into());
            }
            contexts.insert(h, ContextStats { total, followers });
        }
        Ok(NgramModel::assemble(r.order, r.vocab, r.unigram_counts, contexts))
    }
}
