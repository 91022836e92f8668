//! Next-token distribution backends.
//!
//! Everything downstream (constrained decoding, re-ranking, continuation,
//! revision) only needs [`LmBackend::next_distribution`], so a neural model
//! served elsewhere can replace the bundled n-gram model without touching
//! the rest of the engine.

mod ngram;
mod registry;
mod remote;

pub use ngram::{example_sequence, fit_ngram, NgramModel, DEFAULT_ORDER};
pub use registry::{BackendOptions, BackendRegistry};
pub use remote::{NextRequest, NextResponse, Handshake, RemoteBackend};

use crate::error::{Error, Result};
use crate::tokens::TokenId;

pub trait LmBackend: Send + Sync {
    fn name(&self) -> &str;

    fn vocab_size(&self) -> usize;

    /// Probability of every vocabulary token following `context`. Entries are
    /// non-negative and sum to one.
    fn next_distribution(&self, context: &[TokenId]) -> Result<Vec<f64>>;

    /// Probability of one token after `context`. Must agree exactly with the
    /// matching entry of [`LmBackend::next_distribution`].
    fn prob(&self, context: &[TokenId], token: TokenId) -> Result<f64> {
        let dist = self.next_distribution(context)?;
        dist.get(token as usize)
            .copied()
            .ok_or_else(|| Error::input(format!("token id {token} outside vocabulary of {}", dist.len())))
    }
}

pub(crate) fn check_ids(context: &[TokenId], vocab_size: usize) -> Result<()> {
    match context.iter().find(|&&id| id as usize >= vocab_size) {
        Some(id) => Err(Error::input(format!("token id {id} outside vocabulary of {vocab_size}"))),
        None => Ok(()),
    }
}

/// Sum of `ln P(tokens[i] | prefix ++ tokens[..i])` over all positions.
pub fn score_continuation(model: &dyn LmBackend, prefix: &[TokenId], tokens: &[TokenId]) -> Result<f64> {
    check_ids(tokens, model.vocab_size())?;
    let mut context = prefix.to_vec();
    let mut total = 0.0;
    for &t in tokens {
        total += model.prob(&context, t)?.ln();
        context.push(t);
    }
    Ok(total)
}

/// Log-probability of a whole sequence starting from an empty context.
pub fn score_sequence(model: &dyn LmBackend, tokens: &[TokenId]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::input("cannot score an empty sequence"));
    }
    score_continuation(model, &[], tokens)
}
