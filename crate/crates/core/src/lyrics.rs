use serde::{Deserialize, Serialize};

use crate::corpus::invert_line;
use crate::error::{Error, Result};
use crate::tokens::{graphemes, Token, TokenId, Vocabulary};

/// A lyric in natural reading order, one string per line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LyricsText {
    pub lines: Vec<String>,
}

impl LyricsText {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(lines: I) -> Self {
        LyricsText { lines: lines.into_iter().map(Into::into).collect() }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn line_graphemes(&self, i: usize) -> Vec<String> {
        graphemes(&self.lines[i])
    }

    pub fn joined(&self) -> String {
        self.lines.join("\n")
    }

    /// Rejects empty lyrics and lines that are empty after trimming.
    pub fn validate(&self, field: &str) -> Result<()> {
        if self.lines.is_empty() {
            return Err(Error::validation(field, "lyrics must have at least one line"));
        }
        if let Some(i) = self.lines.iter().position(|l| l.trim().is_empty()) {
            return Err(Error::validation(format!("{field}[{i}]"), "line is empty"));
        }
        Ok(())
    }
}

/// Converts a decoded candidate (transformed order, `[SEP]`-delimited,
/// terminated by `[EOS]` or, for partial continuations, by a trailing
/// `[SEP]`) back into natural-order lines.
pub fn untransform(candidate: &[TokenId], vocab: &Vocabulary) -> Result<LyricsText> {
    let body = match candidate.split_last() {
        Some((&last, body)) if last == vocab.eos() || last == vocab.sep() => body,
        _ => return Err(Error::input("candidate is not terminated by [EOS] or [SEP]")),
    };
    if body.is_empty() {
        return Err(Error::input("candidate has no lines"));
    }
    let mut lines = Vec::new();
    for seg in body.split(|&t| t == vocab.sep()) {
        if seg.is_empty() {
            return Err(Error::input("empty line segment in candidate"));
        }
        let mut line = String::new();
        for tok in invert_line(seg)? {
            match vocab.token(tok) {
                Some(Token::Text(s)) => line.push_str(s),
                Some(other) => return Err(Error::input(format!("control token {other} inside a line"))),
                None => return Err(Error::input(format!("token id {tok} outside vocabulary"))),
            }
        }
        lines.push(line);
    }
    Ok(LyricsText { lines })
}
