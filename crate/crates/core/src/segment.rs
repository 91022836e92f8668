//! Word segmentation for keyword extraction, PMI mining and classifier
//! features. Segmenters are selected by name through [`SegmenterRegistry`].

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

pub trait Segmenter: Send + Sync {
    fn name(&self) -> &'static str;

    /// Splits `text` into normalized (lower-cased, punctuation-free) words.
    fn segment(&self, text: &str) -> Vec<String>;
}

fn strip_punct(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric() || *c == '\'' || *c == '-')
        .collect::<String>()
        .trim_matches(|c| c == '\'' || c == '-')
        .to_lowercase()
}

impl std::fmt::Debug for dyn Segmenter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Segmenter({})", self.name())
    }
}

/// Splits on Unicode whitespace.
#[derive(Debug, Default, Clone, Copy)]
pub struct WhitespaceSegmenter;

impl Segmenter for WhitespaceSegmenter {
    fn name(&self) -> &'static str {
        "whitespace"
    }

    fn segment(&self, text: &str) -> Vec<String> {
        text.split_whitespace()
            .map(strip_punct)
            .filter(|w| !w.is_empty())
            .collect()
    }
}

/// Greedy longest-match segmentation against a lexicon, for scripts written
/// without spaces. Graphemes not covered by any entry become one-grapheme
/// words.
#[derive(Debug, Clone)]
pub struct LexiconSegmenter {
    entries: HashSet<String>,
    max_len: usize,
}

impl LexiconSegmenter {
    pub fn new<I: IntoIterator<Item = String>>(entries: I) -> Self {
        let entries: HashSet<String> = entries
            .into_iter()
            .map(|e| e.trim().to_lowercase())
            .filter(|e| !e.is_empty())
            .collect();
        let max_len = entries.iter().map(|e| e.graphemes(true).count()).max().unwrap_or(1);
        LexiconSegmenter { entries, max_len }
    }
}

impl Segmenter for LexiconSegmenter {
    fn name(&self) -> &'static str {
        "lexicon"
    }

    fn segment(&self, text: &str) -> Vec<String> {
        let mut words = Vec::new();
        for chunk in text.split_whitespace() {
            let lower = chunk.to_lowercase();
            let g: Vec<&str> = lower.graphemes(true).collect();
            let mut i = 0;
            while i < g.len() {
                let longest = (1..=self.max_len.min(g.len() - i))
                    .rev()
                    .find(|&n| self.entries.contains(&g[i..i + n].concat()));
                let n = longest.unwrap_or(1);
                let word = strip_punct(&g[i..i + n].concat());
                if !word.is_empty() {
                    words.push(word);
                }
                i += n;
            }
        }
        words
    }
}

/// Serializable description of a segmenter, stored in trained bundles so
/// inference segments text exactly as training did.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmenterSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lexicon: Vec<String>,
}

impl SegmenterSpec {
    pub fn whitespace() -> Self {
        SegmenterSpec { name: "whitespace".into(), lexicon: Vec::new() }
    }
}

type SegmenterFactory = fn(&SegmenterSpec) -> Result<Arc<dyn Segmenter>>;

/// Name → constructor table for segmenters.
pub struct SegmenterRegistry {
    factories: BTreeMap<&'static str, SegmenterFactory>,
}

impl Default for SegmenterRegistry {
    fn default() -> Self {
        let mut reg = SegmenterRegistry { factories: BTreeMap::new() };
        reg.register("whitespace", |_| Ok(Arc::new(WhitespaceSegmenter)));
        reg.register("lexicon", |spec| {
            if spec.lexicon.is_empty() {
                return Err(Error::Config("lexicon segmenter needs a non-empty lexicon".into()));
            }
            Ok(Arc::new(LexiconSegmenter::new(spec.lexicon.iter().cloned())))
        });
        reg
    }
}

impl SegmenterRegistry {
    pub fn register(&mut self, name: &'static str, factory: SegmenterFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, spec: &SegmenterSpec) -> Result<Arc<dyn Segmenter>> {
        let factory = self.factories.get(spec.name.as_str()).ok_or_else(|| {
            Error::Config(format!(
                "unknown segmenter `{}` (known: {})",
                spec.name,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(spec)
    }
}
