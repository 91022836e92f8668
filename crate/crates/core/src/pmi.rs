//! Theme keyword mining with song-level pointwise mutual information.
//!
//! `p(w)` is the fraction of songs whose keyword list contains `w` and
//! `p(a, b)` the fraction containing both; `PMI(a, b) = ln(p(a,b) / (p(a) p(b)))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedSong;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_COUNT: usize = 3;
pub const DEFAULT_TAU: f64 = 1.0;

/// Shared by the table builder and the reference enumeration so both apply
/// the same floating-point expression.
pub fn pmi_value(joint: usize, count_a: usize, count_b: usize, n: usize) -> f64 {
    let n = n as f64;
    let p_ab = joint as f64 / n;
    let p_a = count_a as f64 / n;
    let p_b = count_b as f64 / n;
    (p_ab / (p_a * p_b)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmiTable {
    min_count: usize,
    tau: f64,
    songs: usize,
    doc_freq: BTreeMap<String, usize>,
    /// Canonical `(a, b)` with `a < b`.
    #[serde(with = "pair_list")]
    pairs: BTreeMap<(String, String), f64>,
}

/// JSON objects need string keys, so pairs travel as `[a, b, pmi]` triples.
mod pair_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<(String, String), f64>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<(&str, &str, f64)> = map.iter().map(|((a, b), v)| (a.as_str(), b.as_str(), *v)).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(String, String), f64>, D::Error> {
        let list = Vec::<(String, String, f64)>::deserialize(d)?;
        Ok(list.into_iter().map(|(a, b, v)| ((a, b), v)).collect())
    }
}

fn canonical(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn build_pmi(songs: &[AnnotatedSong], min_count: usize, tau: f64) -> Result<PmiTable> {
    if songs.is_empty() {
        return Err(Error::Training("PMI needs a non-empty corpus".into()));
    }
    if min_count == 0 {
        return Err(Error::validation("min_count", "must be at least 1"));
    }
    let docs: Vec<BTreeSet<&str>> = songs
        .iter()
        .map(|s| s.keywords.iter().map(String::as_str).collect())
        .collect();
    let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
    for d in &docs {
        for w in d {
            *doc_freq.entry(w.to_string()).or_default() += 1;
        }
    }
    doc_freq.retain(|_, c| *c >= min_count);

    let mut joint: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for d in &docs {
        let kept: Vec<&str> = d.iter().copied().filter(|w| doc_freq.contains_key(*w)).collect();
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                *joint.entry((a, b)).or_default() += 1;
            }
        }
    }
    let n = songs.len();
    let pairs = joint
        .into_iter()
        .map(|((a, b), c)| ((a.to_string(), b.to_string()), pmi_value(c, doc_freq[a], doc_freq[b], n)))
        .filter(|(_, v)| *v >= tau)
        .collect();
    Ok(PmiTable { min_count, tau, songs: n, doc_freq, pairs })
}

impl PmiTable {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.pairs.get(&canonical(a, b)).copied()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.doc_freq.keys().map(String::as_str)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.pairs.iter().map(|((a, b), v)| (a.as_str(), b.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Partners of `word` at or above the threshold.
    pub fn neighbors<'a>(&'a self, word: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.pairs.iter().filter_map(move |((a, b), v)| {
            if a == word {
                Some((b.as_str(), *v))
            } else if b == word {
                Some((a.as_str(), *v))
            } else {
                None
            }
        })
    }

    /// Mined keyword list for a theme: the union of every seed's partners,
    /// seeds removed, ordered by descending best PMI then alphabetically.
    pub fn theme_keywords(&self, seeds: &[String]) -> Vec<String> {
        let seed_set: BTreeSet<&str> = seeds.iter().map(String::as_str).collect();
        let mut best: BTreeMap<&str, f64> = BTreeMap::new();
        for s in &seed_set {
            for (w, v) in self.neighbors(s) {
                if seed_set.contains(w) {
                    continue;
                }
                let e = best.entry(w).or_insert(f64::NEG_INFINITY);
                *e = e.max(v);
            }
        }
        let mut out: Vec<(&str, f64)> = best.into_iter().collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out.into_iter().map(|(w, _)| w.to_string()).collect()
    }
}

/// Theme name → seed words.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThemeConfig {
    pub themes: BTreeMap<String, Vec<String>>,
}

impl ThemeConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ThemeConfig = toml::from_str(text).map_err(|e| Error::Config(format!("theme config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, seeds) in &self.themes {
            if seeds.iter().all(|s| s.trim().is_empty()) {
                return Err(Error::Config(format!("theme `{name}` has no seed words")));
            }
        }
        Ok(())
    }

    pub fn seeds(&self, theme: &str) -> Result<Vec<String>> {
        self.themes
            .get(theme)
            .map(|s| s.iter().map(|w| w.trim().to_lowercase()).collect())
            .ok_or_else(|| Error::validation("theme", format!("unknown theme `{theme}`")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.themes.keys().map(String::as_str)
    }
}

pub fn theme_keywords(table: &PmiTable, themes: &ThemeConfig, theme: &str) -> Result<Vec<String>> {
    Ok(table.theme_keywords(&themes.seeds(theme)?))
}

/// Uniform sample of `min(m, |list|)` words without replacement.
pub fn sample_theme_keywords(list: &[String], m: usize, rng_seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pool = list.to_vec();
    let m = m.min(pool.len());
    let (head, _) = pool.partial_shuffle(&mut rng, m);
    head.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Emotion, Song};

    fn song(kws: &[&str]) -> AnnotatedSong {
        AnnotatedSong {
            song: Song { id: "x".into(), style: "Pop".into(), emotion: None, lines: vec!["x".into()] },
            emotion: Emotion::Neutral,
            keywords: kws.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn independence_gives_zero() {
        // a in 2/4, b in 2/4, both in 1/4 → p(a,b) = p(a) p(b).
        let songs = [song(&["a", "b"]), song(&["a"]), song(&["b"]), song(&["c"])];
        let t = build_pmi(&songs, 1, f64::NEG_INFINITY).unwrap();
        assert!(t.get("a", "b").unwrap().abs() < 1e-12);
    }

    #[test]
    fn always_together_in_half_is_ln2() {
        let songs = [song(&["a", "b"]), song(&["a", "b"]), song(&["c"]), song(&["d"])];
        let t = build_pmi(&songs, 1, 0.0).unwrap();
        assert!((t.get("b", "a").unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(t.get("a", "b"), t.get("b", "a"));
    }

    #[test]
    fn threshold_and_min_count() {
        let songs = [song(&["a", "b"]), song(&["a", "b"]), song(&["c"]), song(&["d"])];
        assert!(build_pmi(&songs, 1, 1.0).unwrap().is_empty());
        assert!(build_pmi(&songs, 3, 0.0).unwrap().is_empty());
        assert!(build_pmi(&[], 1, 0.0).is_err());
        assert!(build_pmi(&songs, 0, 0.0).is_err());
    }

    #[test]
    fn theme_keyword_lists() {
        let songs = [
            song(&["campus", "teacher"]),
            song(&["campus", "teacher"]),
            song(&["river"]),
            song(&["snow"]),
        ];
        let t = build_pmi(&songs, 1, 0.5).unwrap();
        assert_eq!(t.theme_keywords(&["campus".into()]), ["teacher"]);
        assert!(t.theme_keywords(&["unknown".into()]).is_empty());
        // Seeds are removed from the union.
        assert!(t.theme_keywords(&["campus".into(), "teacher".into()]).is_empty());
    }

    #[test]
    fn json_round_trip() {
        let songs = [song(&["a", "b"]), song(&["a", "b"]), song(&["c"]), song(&["d"])];
        let t = build_pmi(&songs, 1, 0.0).unwrap();
        let back: PmiTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn sampling() {
        let list: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        assert!(sample_theme_keywords(&list, 0, 1).is_empty());
        let all = sample_theme_keywords(&list, 10, 1);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, list);
        assert_eq!(sample_theme_keywords(&list, 3, 7), sample_theme_keywords(&list, 3, 7));
        assert_eq!(sample_theme_keywords(&list, 3, 7).len(), 3);
    }

    #[test]
    fn theme_config_parsing() {
        let cfg = ThemeConfig::parse("[themes]\ncampus = [\"Campus\", \"school\"]\n").unwrap();
        assert_eq!(cfg.seeds("campus").unwrap(), ["campus", "school"]);
        assert!(cfg.seeds("war").is_err());
        assert!(ThemeConfig::parse("[themes]\nempty = []\n").is_err());
    }
}
