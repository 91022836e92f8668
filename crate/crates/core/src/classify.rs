//! Multinomial naive Bayes over word tokens, used for style relevance and
//! emotion labelling.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextClassifier {
    classes: Vec<String>,
    doc_counts: Vec<u64>,
    token_counts: Vec<BTreeMap<String, u64>>,
    totals: Vec<u64>,
    vocabulary: BTreeSet<String>,
}

impl TextClassifier {
    pub fn train(docs: &[(Vec<String>, String)]) -> Result<Self> {
        Self::train_weighted(docs.iter().map(|(t, l)| (t.as_slice(), l.as_str(), 1)))
    }

    /// Trains with an integer weight per document; weight `w` is identical to
    /// repeating the document `w` times.
    pub fn train_weighted<'a, I>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [String], &'a str, u64)>,
    {
        let mut per_class: BTreeMap<&str, (u64, BTreeMap<String, u64>)> = BTreeMap::new();
        let mut vocabulary = BTreeSet::new();
        for (tokens, label, weight) in docs {
            if weight == 0 {
                continue;
            }
            let entry = per_class.entry(label).or_default();
            entry.0 += weight;
            for t in tokens {
                *entry.1.entry(t.clone()).or_default() += weight;
                vocabulary.insert(t.clone());
            }
        }
        if per_class.len() < 2 {
            return Err(Error::Training(format!(
                "classifier needs at least 2 classes, got {}",
                per_class.len()
            )));
        }
        let mut clf = TextClassifier {
            classes: Vec::new(),
            doc_counts: Vec::new(),
            token_counts: Vec::new(),
            totals: Vec::new(),
            vocabulary,
        };
        for (label, (docs, counts)) in per_class {
            clf.classes.push(label.to_string());
            clf.doc_counts.push(docs);
            clf.totals.push(counts.values().sum());
            clf.token_counts.push(counts);
        }
        Ok(clf)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn log_prior(&self, class: usize) -> f64 {
        let n: u64 = self.doc_counts.iter().sum();
        (self.doc_counts[class] as f64 / n as f64).ln()
    }

    /// Add-one smoothed `ln P(token | class)`; `None` for tokens outside the
    /// training vocabulary, which carry no evidence.
    pub fn log_likelihood(&self, class: usize, token: &str) -> Option<f64> {
        if !self.vocabulary.contains(token) {
            return None;
        }
        let c = self.token_counts[class].get(token).copied().unwrap_or(0);
        let denom = self.totals[class] + self.vocabulary.len() as u64;
        Some(((c + 1) as f64 / denom as f64).ln())
    }

    /// Posterior probability of every class, in [`TextClassifier::classes`] order.
    pub fn posterior(&self, tokens: &[String]) -> Vec<f64> {
        let scores: Vec<f64> = (0..self.classes.len())
            .map(|c| {
                self.log_prior(c)
                    + tokens
                        .iter()
                        .filter_map(|t| self.log_likelihood(c, t))
                        .sum::<f64>()
            })
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / z).collect()
    }

    pub fn probability(&self, tokens: &[String], class: &str) -> Result<f64> {
        let idx = self
            .classes
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| Error::validation("style", format!("unknown class `{class}`")))?;
        Ok(self.posterior(tokens)[idx])
    }

    /// Arg-max class; ties resolve to the lexicographically first label.
    pub fn predict(&self, tokens: &[String]) -> &str {
        let post = self.posterior(tokens);
        let mut best = 0;
        for (i, p) in post.iter().enumerate() {
            if *p > post[best] {
                best = i;
            }
        }
        &self.classes[best]
    }
}
