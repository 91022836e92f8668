//! Grapheme tokens, control sentinels and the id vocabulary shared by every
//! language model backend.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// A single model token. Text tokens are user-perceived characters; every
/// other variant is out of alphabet and can never be produced from text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    Text(String),
    Sep,
    Eos,
    Mask,
    Bos,
    Unk,
    /// Style or emotion tag in a source sequence.
    Tag(String),
}

impl Token {
    pub fn text(s: impl Into<String>) -> Self {
        Token::Text(s.into())
    }

    pub fn is_text(&self) -> bool {
        matches!(self, Token::Text(_))
    }

    pub fn is_whitespace(&self) -> bool {
        matches!(self, Token::Text(s) if s.chars().all(char::is_whitespace))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Text(s) => f.write_str(s),
            Token::Sep => f.write_str("[SEP]"),
            Token::Eos => f.write_str("[EOS]"),
            Token::Mask => f.write_str("[MASK]"),
            Token::Bos => f.write_str("[BOS]"),
            Token::Unk => f.write_str("[UNK]"),
            Token::Tag(t) => write!(f, "<{t}>"),
        }
    }
}

/// Splits text into grapheme-cluster tokens.
pub fn graphemes(text: &str) -> Vec<String> {
    text.graphemes(true).map(str::to_owned).collect()
}

pub fn text_tokens(text: &str) -> Vec<Token> {
    text.graphemes(true).map(Token::text).collect()
}

/// Renders a token sequence with single spaces between tokens, the wire form
/// used for sources and debugging output.
pub fn render(tokens: &[Token]) -> String {
    tokens.iter().map(Token::to_string).collect::<Vec<_>>().join(" ")
}

/// Dense bijection between tokens and ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "Vec<Token>", into = "Vec<Token>")]
pub struct Vocabulary {
    tokens: Vec<Token>,
    index: HashMap<Token, TokenId>,
    sep: TokenId,
    eos: TokenId,
    mask: TokenId,
    bos: TokenId,
    unk: TokenId,
}

pub const SENTINELS: [Token; 5] = [Token::Sep, Token::Eos, Token::Mask, Token::Bos, Token::Unk];

impl Vocabulary {
    /// Builds a vocabulary from arbitrary tokens. Sentinels come first and
    /// the remaining tokens are sorted so the id assignment is independent of
    /// input order.
    pub fn build<I: IntoIterator<Item = Token>>(tokens: I) -> Self {
        let mut rest: Vec<Token> = tokens
            .into_iter()
            .filter(|t| !SENTINELS.contains(t))
            .collect();
        rest.sort();
        rest.dedup();
        let mut all = SENTINELS.to_vec();
        all.extend(rest);
        Vocabulary::from(all)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &Token) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Like [`Vocabulary::id`] but maps unknown text to `[UNK]`.
    pub fn id_or_unk(&self, token: &Token) -> TokenId {
        self.id(token).unwrap_or(self.unk)
    }

    pub fn token(&self, id: TokenId) -> Option<&Token> {
        self.tokens.get(id as usize)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn sep(&self) -> TokenId {
        self.sep
    }
    pub fn eos(&self) -> TokenId {
        self.eos
    }
    pub fn mask(&self) -> TokenId {
        self.mask
    }
    pub fn bos(&self) -> TokenId {
        self.bos
    }
    pub fn unk(&self) -> TokenId {
        self.unk
    }

    pub fn encode(&self, tokens: &[Token]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.id_or_unk(t)).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<Token>> {
        ids.iter()
            .map(|&id| {
                self.token(id)
                    .cloned()
                    .ok_or_else(|| Error::input(format!("token id {id} outside vocabulary of {}", self.len())))
            })
            .collect()
    }

    /// True for tokens a decoder may place inside a lyric line.
    pub fn is_emittable_text(&self, id: TokenId) -> bool {
        id != self.unk && self.token(id).is_some_and(Token::is_text)
    }

    /// Stable digest of the id assignment, used for the remote handshake.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for token in &self.tokens {
            let (kind, body): (u8, &str) = match token {
                Token::Text(s) => (0, s),
                Token::Sep => (1, ""),
                Token::Eos => (2, ""),
                Token::Mask => (3, ""),
                Token::Bos => (4, ""),
                Token::Unk => (5, ""),
                Token::Tag(s) => (6, s),
            };
            hasher.update([kind]);
            hasher.update((body.len() as u64).to_le_bytes());
            hasher.update(body.as_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl From<Vec<Token>> for Vocabulary {
    fn from(mut tokens: Vec<Token>) -> Self {
        // Deserialized vocabularies may be missing sentinels if hand-edited.
        for s in SENTINELS {
            if !tokens.contains(&s) {
                tokens.push(s);
            }
        }
        let index: HashMap<Token, TokenId> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Vocabulary {
            sep: index[&Token::Sep],
            eos: index[&Token::Eos],
            mask: index[&Token::Mask],
            bos: index[&Token::Bos],
            unk: index[&Token::Unk],
            tokens,
            index,
        }
    }
}

impl From<Vocabulary> for Vec<Token> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphemes_keep_combining_marks_together() {
        assert_eq!(graphemes("e\u{301}a"), vec!["e\u{301}".to_string(), "a".to_string()]);
        assert_eq!(graphemes("夜空"), vec!["夜", "空"]);
    }

    #[test]
    fn sentinels_present_once_and_ids_dense() {
        let v = Vocabulary::build(text_tokens("abca").into_iter().chain([Token::Sep]));
        assert_eq!(v.len(), 5 + 3);
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.id(t), Some(i as TokenId));
        }
        assert_eq!(v.tokens().iter().filter(|t| **t == Token::Sep).count(), 1);
    }

    #[test]
    fn sentinel_text_is_not_a_sentinel() {
        let toks = text_tokens("[SEP]");
        assert_eq!(toks.len(), 5);
        assert!(toks.iter().all(Token::is_text));
    }

    #[test]
    fn unknown_text_maps_to_unk() {
        let v = Vocabulary::build(text_tokens("ab"));
        assert_eq!(v.id_or_unk(&Token::text("z")), v.unk());
        assert!(!v.is_emittable_text(v.unk()));
    }

    #[test]
    fn hash_is_order_independent_of_build_input() {
        let a = Vocabulary::build(text_tokens("abc"));
        let b = Vocabulary::build(text_tokens("cba"));
        assert_eq!(a.hash(), b.hash());
        let c = Vocabulary::build(text_tokens("abd"));
        assert_ne!(a.hash(), c.hash());
    }
}
