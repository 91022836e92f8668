//! Corpus ingestion, annotation and training-example construction.
//!
//! The corpus is JSON Lines: one object per line with `id`, `style`,
//! optional `emotion` and `lines`. Lines are stored trimmed.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::TextClassifier;
use crate::error::{Error, Result};
use crate::segment::Segmenter;
use crate::tokens::{text_tokens, Token};

pub const DEFAULT_STYLES: [&str; 4] = ["Pop", "Hip-hop", "Chinese Neo-traditional", "Folk"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Positive,
    Negative,
    Neutral,
}

impl Emotion {
    pub const ALL: [Emotion; 3] = [Emotion::Positive, Emotion::Negative, Emotion::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Positive => "positive",
            Emotion::Negative => "negative",
            Emotion::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "positive" => Ok(Emotion::Positive),
            "negative" => Ok(Emotion::Negative),
            "neutral" => Ok(Emotion::Neutral),
            other => Err(Error::validation("emotion", format!("unknown emotion `{other}`"))),
        }
    }
}

/// The configured set of style tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StyleSet(Vec<String>);

impl Default for StyleSet {
    fn default() -> Self {
        StyleSet(DEFAULT_STYLES.iter().map(|s| s.to_string()).collect())
    }
}

impl StyleSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(styles: I) -> Self {
        StyleSet(styles.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, style: &str) -> bool {
        self.0.iter().any(|s| s == style)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Song {
    pub id: String,
    pub style: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<Emotion>,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSong {
    pub song: Song,
    pub emotion: Emotion,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub source: Vec<Token>,
    pub target: Vec<Token>,
}

/// Why a corpus record was skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordDiagnostic {
    pub line_no: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CorpusLoad {
    pub songs: Vec<Song>,
    pub rejected: Vec<RecordDiagnostic>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    style: String,
    #[serde(default)]
    emotion: Option<String>,
    lines: Vec<String>,
}

fn validate_record(raw: RawRecord, styles: &StyleSet) -> std::result::Result<Song, String> {
    if !styles.contains(&raw.style) {
        return Err(format!("unknown style `{}`", raw.style));
    }
    let emotion = raw
        .emotion
        .as_deref()
        .map(Emotion::from_str)
        .transpose()
        .map_err(|e| e.to_string())?;
    if raw.lines.is_empty() {
        return Err("song has no lines".into());
    }
    let mut lines = Vec::with_capacity(raw.lines.len());
    for (i, l) in raw.lines.iter().enumerate() {
        let t = l.trim();
        if t.is_empty() {
            return Err(format!("line {i} is empty"));
        }
        lines.push(t.to_string());
    }
    Ok(Song { id: raw.id, style: raw.style, emotion, lines })
}

/// Parses corpus records from JSON Lines text. Blank lines are skipped.
pub fn parse_corpus(text: &str, styles: &StyleSet) -> Result<CorpusLoad> {
    let mut songs = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let raw: RawRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                rejected.push(RecordDiagnostic { line_no, id: None, reason: format!("malformed record: {e}") });
                continue;
            }
        };
        let id = raw.id.clone();
        if !seen.insert(id.clone()) {
            rejected.push(RecordDiagnostic { line_no, id: Some(id), reason: "duplicate id".into() });
            continue;
        }
        match validate_record(raw, styles) {
            Ok(song) => songs.push(song),
            Err(reason) => rejected.push(RecordDiagnostic { line_no, id: Some(id), reason }),
        }
    }
    for d in &rejected {
        tracing::warn!("corpus record at line {} rejected: {}", d.line_no, d.reason);
    }
    if songs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(CorpusLoad { songs, rejected })
}

pub fn load_corpus(path: &Path, styles: &StyleSet) -> Result<CorpusLoad> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, styles)
}

/// Loads an emotion seed file: corpus-shaped records whose `emotion` is
/// mandatory. Records without one are rejected.
pub fn load_emotion_seed(path: &Path, styles: &StyleSet) -> Result<CorpusLoad> {
    let mut load = load_corpus(path, styles)?;
    let (labeled, unlabeled): (Vec<_>, Vec<_>) = load.songs.into_iter().partition(|s| s.emotion.is_some());
    load.rejected.extend(unlabeled.into_iter().map(|s| RecordDiagnostic {
        line_no: 0,
        id: Some(s.id),
        reason: "emotion label missing in seed file".into(),
    }));
    if labeled.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    load.songs = labeled;
    Ok(load)
}

/// Reads a one-entry-per-line word list (stoplists, lexicons). Blank lines
/// and `#` comments are ignored.
pub fn load_word_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

/// Words of a song used as classifier features.
pub fn song_words(lines: &[String], segmenter: &dyn Segmenter) -> Vec<String> {
    lines.iter().flat_map(|l| segmenter.segment(l)).collect()
}

pub fn annotate(
    songs: &[Song],
    emotion_clf: Option<&TextClassifier>,
    segmenter: &dyn Segmenter,
    stoplist: &HashSet<String>,
) -> Result<Vec<AnnotatedSong>> {
    songs
        .iter()
        .map(|song| {
            let words = song_words(&song.lines, segmenter);
            let emotion = match song.emotion {
                Some(e) => e,
                None => {
                    let clf = emotion_clf.ok_or_else(|| {
                        Error::Config(format!(
                            "song `{}` has no emotion label and no emotion classifier was provided",
                            song.id
                        ))
                    })?;
                    clf.predict(&words).parse()?
                }
            };
            let mut seen = HashSet::new();
            let keywords = words
                .into_iter()
                .filter(|w| !stoplist.contains(w))
                .filter(|w| seen.insert(w.clone()))
                .collect();
            Ok(AnnotatedSong { song: song.clone(), emotion, keywords })
        })
        .collect()
}

/// Moves the final token of a line to the front so the rhyming token is
/// generated first.
pub fn transform_line<T: Clone>(line: &[T]) -> Result<Vec<T>> {
    let (last, rest) = line.split_last().ok_or_else(|| Error::input("cannot transform an empty line"))?;
    let mut out = Vec::with_capacity(line.len());
    out.push(last.clone());
    out.extend_from_slice(rest);
    Ok(out)
}

pub fn invert_line<T: Clone>(line: &[T]) -> Result<Vec<T>> {
    let (first, rest) = line.split_first().ok_or_else(|| Error::input("cannot invert an empty line"))?;
    let mut out = Vec::with_capacity(line.len());
    out.extend_from_slice(rest);
    out.push(first.clone());
    Ok(out)
}

/// `style [SEP] emotion [SEP] kw1 [SEP] kw2 ...`
pub fn source_tokens(style: &str, emotion: Emotion, keywords: &[String]) -> Vec<Token> {
    let mut source = vec![Token::Tag(style.to_string()), Token::Sep, Token::Tag(emotion.to_string())];
    for kw in keywords {
        source.push(Token::Sep);
        source.extend(text_tokens(kw));
    }
    source
}

/// Lines in transformed order joined by `[SEP]`, terminated by `[EOS]`.
pub fn target_tokens(lines: &[String]) -> Result<Vec<Token>> {
    let mut target = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            target.push(Token::Sep);
        }
        target.extend(transform_line(&text_tokens(line))?);
    }
    target.push(Token::Eos);
    Ok(target)
}

/// Inverse of [`target_tokens`]: splits on `[SEP]`, requires a trailing
/// `[EOS]`, and un-transforms each line.
pub fn decode_target(target: &[Token]) -> Result<Vec<String>> {
    let body = match target.split_last() {
        Some((Token::Eos, body)) => body,
        _ => return Err(Error::input("target sequence must end with [EOS]")),
    };
    body.split(|t| *t == Token::Sep)
        .map(|seg| {
            if seg.iter().any(|t| !t.is_text()) {
                return Err(Error::input("control token inside a line"));
            }
            Ok(invert_line(seg)?.iter().map(Token::to_string).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordCounts {
    pub min: usize,
    pub max: usize,
}

impl Default for KeywordCounts {
    fn default() -> Self {
        KeywordCounts { min: 1, max: 8 }
    }
}

impl KeywordCounts {
    fn clamp_to(&self, available: usize) -> RangeInclusive<usize> {
        let max = self.max.min(available);
        let min = self.min.min(max);
        min..=max
    }
}

/// Augments training data by sampling `samples_per_song` keyword subsets per
/// song. Subsets keep the song's first-occurrence order.
pub fn build_examples(
    annotated: &[AnnotatedSong],
    samples_per_song: usize,
    keyword_counts: &KeywordCounts,
    rng_seed: u64,
) -> Result<Vec<TrainingExample>> {
    if samples_per_song == 0 {
        return Err(Error::validation("samples_per_song", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(annotated.len() * samples_per_song);
    for a in annotated {
        let target = target_tokens(&a.song.lines)?;
        let range = keyword_counts.clamp_to(a.keywords.len());
        for _ in 0..samples_per_song {
            let count = rng.gen_range(range.clone());
            let mut picked = index::sample(&mut rng, a.keywords.len(), count).into_vec();
            picked.sort_unstable();
            let kws: Vec<String> = picked.iter().map(|&i| a.keywords[i].clone()).collect();
            out.push(TrainingExample {
                source: source_tokens(&a.song.style, a.emotion, &kws),
                target: target.clone(),
            });
        }
    }
    Ok(out)
}

/// Canonical form used for corpus-overlap and repetition checks: punctuation
/// stripped, whitespace collapsed, lower-cased.
pub fn normalize_line(line: &str) -> String {
    line.chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Membership index over normalized corpus lines.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LineIndex {
    lines: HashSet<String>,
}

impl LineIndex {
    pub fn contains(&self, line: &str) -> bool {
        let n = normalize_line(line);
        !n.is_empty() && self.lines.contains(&n)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

pub fn build_line_index(songs: &[Song]) -> LineIndex {
    LineIndex {
        lines: songs
            .iter()
            .flat_map(|s| s.lines.iter())
            .map(|l| normalize_line(l))
            .filter(|l| !l.is_empty())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::TextClassifier;
    use crate::segment::WhitespaceSegmenter;
    use proptest::prelude::*;

    fn song(id: &str, emotion: Option<Emotion>, lines: &[&str]) -> Song {
        Song {
            id: id.into(),
            style: "Pop".into(),
            emotion,
            lines: lines.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn parse_keeps_order_and_rejects_unknown_style() {
        let text = r#"{"id":"a","style":"Pop","lines":["one"]}
{"id":"b","style":"Jazz","lines":["two"]}
{"id":"c","style":"Folk","emotion":"negative","lines":["three"," four "]}
"#;
        let load = parse_corpus(text, &StyleSet::default()).unwrap();
        assert_eq!(load.songs.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(load.songs[1].lines, ["three", "four"]);
        assert_eq!(load.rejected.len(), 1);
        assert_eq!(load.rejected[0].id.as_deref(), Some("b"));
        assert!(load.rejected[0].reason.contains("Jazz"));
    }

    #[test]
    fn parse_rejects_blank_lines_and_empty_songs() {
        let text = r#"{"id":"a","style":"Pop","lines":["  "]}
{"id":"b","style":"Pop","lines":[]}
{"id":"c","style":"Pop","lines":["ok"]}"#;
        let load = parse_corpus(text, &StyleSet::default()).unwrap();
        assert_eq!(load.songs.len(), 1);
        assert_eq!(load.rejected.len(), 2);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(matches!(parse_corpus("", &StyleSet::default()), Err(Error::EmptyCorpus)));
        assert!(matches!(
            parse_corpus(r#"{"id":"x","style":"Jazz","lines":["a"]}"#, &StyleSet::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn unreadable_file_is_io_error() {
        let err = load_corpus(Path::new("/nonexistent/corpus.jsonl"), &StyleSet::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn transform_examples() {
        assert_eq!(transform_line(&['a', 'b', 'c', 'd']).unwrap(), ['d', 'a', 'b', 'c']);
        assert_eq!(transform_line(&['x']).unwrap(), ['x']);
        assert_eq!(invert_line(&['d', 'a', 'b', 'c']).unwrap(), ['a', 'b', 'c', 'd']);
        assert!(transform_line::<char>(&[]).is_err());
        assert!(invert_line::<char>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn transform_round_trip(line in proptest::collection::vec(any::<u16>(), 1..40)) {
            let t = transform_line(&line).unwrap();
            prop_assert_eq!(t.len(), line.len());
            prop_assert_eq!(invert_line(&t).unwrap(), line);
        }
    }

    #[test]
    fn annotate_passes_through_existing_label() {
        let songs = [song("s", Some(Emotion::Positive), &["sad sad tears"])];
        let clf = TextClassifier::train(&[
            (vec!["sad".into()], "negative".into()),
            (vec!["sun".into()], "positive".into()),
        ])
        .unwrap();
        let out = annotate(&songs, Some(&clf), &WhitespaceSegmenter, &HashSet::new()).unwrap();
        assert_eq!(out[0].emotion, Emotion::Positive);
        assert_eq!(out[0].keywords, ["sad", "tears"]);
    }

    #[test]
    fn annotate_all_stopwords_gives_no_keywords() {
        let stop: HashSet<String> = ["the", "a", "of"].iter().map(|s| s.to_string()).collect();
        let out = annotate(
            &[song("s", Some(Emotion::Neutral), &["the a", "of the"])],
            None,
            &WhitespaceSegmenter,
            &stop,
        )
        .unwrap();
        assert!(out[0].keywords.is_empty());
    }

    #[test]
    fn annotate_without_classifier_fails_for_unlabeled() {
        let err = annotate(&[song("s", None, &["x"])], None, &WhitespaceSegmenter, &HashSet::new()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn annotate_uses_classifier_argmax() {
        // Disjoint per-class vocabularies; the generating class is the oracle.
        let docs: Vec<(Vec<String>, String)> = [
            ("sun joy bright", "positive"),
            ("joy smile sun", "positive"),
            ("tears rain cold", "negative"),
            ("cold grey tears", "negative"),
            ("table chair door", "neutral"),
            ("door window table", "neutral"),
        ]
        .iter()
        .map(|(t, l)| (t.split(' ').map(String::from).collect(), l.to_string()))
        .collect();
        let clf = TextClassifier::train(&docs).unwrap();
        let songs = [
            song("p", None, &["bright sun", "smile"]),
            song("n", None, &["grey rain"]),
            song("u", None, &["window chair"]),
        ];
        let out = annotate(&songs, Some(&clf), &WhitespaceSegmenter, &HashSet::new()).unwrap();
        let got: Vec<Emotion> = out.iter().map(|a| a.emotion).collect();
        assert_eq!(got, [Emotion::Positive, Emotion::Negative, Emotion::Neutral]);
    }

    fn annotated(keywords: &[&str], lines: &[&str]) -> AnnotatedSong {
        AnnotatedSong {
            song: song("s", Some(Emotion::Negative), lines),
            emotion: Emotion::Negative,
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn keyword_segments(source: &[Token]) -> Vec<String> {
        let parts: Vec<String> = source
            .split(|t| *t == Token::Sep)
            .map(|seg| seg.iter().map(Token::to_string).collect())
            .collect();
        parts[2..].to_vec()
    }

    #[test]
    fn examples_sample_keyword_subsets_in_song_order() {
        let a = annotated(&["moon", "night", "river", "snow"], &["moon over the river"]);
        let ex = build_examples(std::slice::from_ref(&a), 3, &KeywordCounts::default(), 11).unwrap();
        assert_eq!(ex.len(), 3);
        for e in &ex {
            assert_eq!(e.source[0], Token::Tag("Pop".into()));
            assert_eq!(e.source[2], Token::Tag("negative".into()));
            let kws = keyword_segments(&e.source);
            assert!(!kws.is_empty() && kws.len() <= 4);
            let positions: Vec<usize> =
                kws.iter().map(|k| a.keywords.iter().position(|w| w == k).unwrap()).collect();
            assert!(positions.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(decode_target(&e.target).unwrap(), a.song.lines);
        }
    }

    #[test]
    fn examples_are_deterministic() {
        let songs = vec![
            annotated(&["a", "b", "c", "d", "e"], &["first line", "second"]),
            annotated(&["x", "y"], &["third"]),
        ];
        let kc = KeywordCounts::default();
        assert_eq!(build_examples(&songs, 4, &kc, 3).unwrap(), build_examples(&songs, 4, &kc, 3).unwrap());
    }

    #[test]
    fn example_target_uses_last_char_first() {
        let a = annotated(&[], &["abcd"]);
        let ex = build_examples(&[a], 1, &KeywordCounts::default(), 0).unwrap();
        assert_eq!(crate::tokens::render(&ex[0].target), "d a b c [EOS]");
        // No keywords → only the two tag segments.
        assert_eq!(ex[0].source.len(), 3);
    }

    #[test]
    fn line_index_normalizes() {
        let idx = build_line_index(&[song("s", None, &["Not a footprint to be seen"])]);
        assert!(idx.contains("Not a footprint to be seen"));
        assert!(idx.contains("not a footprint to be seen."));
        assert!(idx.contains("  Not a   footprint, to be seen "));
        assert!(!idx.contains("a kingdom of isolation"));
        assert!(!idx.contains("..."));
    }
}
