//! The trained artifact a server loads: n-gram model and vocabulary,
//! classifiers, PMI table, themes, rhyme table, corpus line index and word
//! lexicon.

use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::classify::TextClassifier;
use crate::corpus::{
    annotate, build_examples, build_line_index, song_words, AnnotatedSong, Emotion, KeywordCounts, LineIndex, Song,
    StyleSet,
};
use crate::error::{Error, Result};
use crate::lm::{fit_ngram, NgramModel, DEFAULT_ORDER};
use crate::pmi::{build_pmi, PmiTable, ThemeConfig, DEFAULT_MIN_COUNT, DEFAULT_TAU};
use crate::rank::RankResources;
use crate::rhyme::RhymeTable;
use crate::segment::{Segmenter, SegmenterRegistry, SegmenterSpec};
use crate::tokens::{Token, Vocabulary};

pub const BUNDLE_FORMAT: &str = "lyricist-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub order: usize,
    pub samples_per_song: usize,
    pub keyword_min: usize,
    pub keyword_max: usize,
    pub pmi_min_count: usize,
    pub pmi_tau: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            order: DEFAULT_ORDER,
            samples_per_song: 3,
            keyword_min: 1,
            keyword_max: 8,
            pmi_min_count: DEFAULT_MIN_COUNT,
            pmi_tau: DEFAULT_TAU,
            seed: 0,
        }
    }
}

/// Non-corpus inputs to training.
#[derive(Debug, Clone, Default)]
pub struct TrainResources {
    pub styles: StyleSet,
    pub segmenter: SegmenterSpec,
    pub stoplist: Vec<String>,
    pub themes: ThemeConfig,
    pub rhyme: RhymeTable,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainedBundle {
    format: String,
    version: u32,
    pub styles: StyleSet,
    pub ngram: Arc<NgramModel>,
    pub style_classifier: TextClassifier,
    pub emotion_classifier: Option<TextClassifier>,
    pub pmi: PmiTable,
    pub themes: ThemeConfig,
    pub rhyme: RhymeTable,
    pub line_index: LineIndex,
    /// Distinct corpus words, candidate fills for word-level revision.
    pub lexicon: Vec<String>,
    pub segmenter: SegmenterSpec,
    pub stoplist: Vec<String>,
    pub train_config: TrainConfig,
    #[serde(skip)]
    segmenter_impl: OnceLock<Arc<dyn Segmenter>>,
}

/// Trains an emotion classifier from labeled songs, if at least two
/// emotions are represented.
pub fn train_emotion_classifier(labeled: &[Song], segmenter: &dyn Segmenter) -> Option<TextClassifier> {
    let docs: Vec<(Vec<String>, String)> = labeled
        .iter()
        .filter_map(|s| s.emotion.map(|e| (song_words(&s.lines, segmenter), e.to_string())))
        .collect();
    TextClassifier::train(&docs).ok()
}

/// Labels and keyword-annotates a corpus. Unlabeled songs are classified by
/// a model trained on `seed` plus the corpus' own labeled songs.
pub fn ingest(songs: &[Song], seed: &[Song], res: &TrainResources) -> Result<Vec<AnnotatedSong>> {
    let segmenter = SegmenterRegistry::default().build(&res.segmenter)?;
    let needs_clf = songs.iter().any(|s| s.emotion.is_none());
    let clf = if needs_clf {
        let labeled: Vec<Song> = seed.iter().chain(songs.iter()).filter(|s| s.emotion.is_some()).cloned().collect();
        train_emotion_classifier(&labeled, segmenter.as_ref())
    } else {
        None
    };
    let stop: HashSet<String> = res.stoplist.iter().cloned().collect();
    annotate(songs, clf.as_ref(), segmenter.as_ref(), &stop)
}

pub fn train_bundle(annotated: &[AnnotatedSong], res: &TrainResources, cfg: &TrainConfig) -> Result<TrainedBundle> {
    if annotated.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(a) = annotated.iter().find(|a| !res.styles.contains(&a.song.style)) {
        return Err(Error::Training(format!("song `{}` has unconfigured style `{}`", a.song.id, a.song.style)));
    }
    res.themes.validate()?;
    let segmenter = SegmenterRegistry::default().build(&res.segmenter)?;

    let examples = build_examples(
        annotated,
        cfg.samples_per_song,
        &KeywordCounts { min: cfg.keyword_min, max: cfg.keyword_max },
        cfg.seed,
    )?;
    let tags = res
        .styles
        .as_slice()
        .iter()
        .map(|s| Token::Tag(s.clone()))
        .chain(Emotion::ALL.iter().map(|e| Token::Tag(e.to_string())));
    let ngram = fit_ngram(&examples, cfg.order, tags)?;

    let word_docs: Vec<Vec<String>> = annotated.iter().map(|a| song_words(&a.song.lines, segmenter.as_ref())).collect();
    let style_docs: Vec<(Vec<String>, String)> = word_docs
        .iter()
        .zip(annotated)
        .map(|(w, a)| (w.clone(), a.song.style.clone()))
        .collect();
    let style_classifier = TextClassifier::train(&style_docs)
        .map_err(|e| Error::Training(format!("style classifier: {e}")))?;
    let emotion_docs: Vec<(Vec<String>, String)> = word_docs
        .iter()
        .zip(annotated)
        .map(|(w, a)| (w.clone(), a.emotion.to_string()))
        .collect();
    let emotion_classifier = TextClassifier::train(&emotion_docs).ok();

    let pmi = build_pmi(annotated, cfg.pmi_min_count, cfg.pmi_tau)?;
    let songs: Vec<Song> = annotated.iter().map(|a| a.song.clone()).collect();
    let line_index = build_line_index(&songs);
    let lexicon: BTreeSet<String> = word_docs.into_iter().flatten().collect();

    let bundle = TrainedBundle {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        styles: res.styles.clone(),
        ngram: Arc::new(ngram),
        style_classifier,
        emotion_classifier,
        pmi,
        themes: res.themes.clone(),
        rhyme: res.rhyme.clone(),
        line_index,
        lexicon: lexicon.into_iter().collect(),
        segmenter: res.segmenter.clone(),
        stoplist: res.stoplist.clone(),
        train_config: cfg.clone(),
        segmenter_impl: OnceLock::new(),
    };
    let _ = bundle.segmenter_impl.set(segmenter);
    Ok(bundle)
}

impl TrainedBundle {
    pub fn vocab(&self) -> &Vocabulary {
        self.ngram.vocab()
    }

    fn segmenter_ref(&self) -> &Arc<dyn Segmenter> {
        self.segmenter_impl.get_or_init(|| {
            SegmenterRegistry::default()
                .build(&self.segmenter)
                .expect("segmenter validated when the bundle was built or loaded")
        })
    }

    pub fn segmenter(&self) -> Arc<dyn Segmenter> {
        self.segmenter_ref().clone()
    }

    pub fn rank_resources(&self) -> RankResources<'_> {
        RankResources {
            style_classifier: &self.style_classifier,
            line_index: &self.line_index,
            segmenter: self.segmenter_ref().as_ref(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = path.with_extension("tmp");
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self).map_err(|e| Error::Format(e.to_string()))?;
        w.flush().map_err(|e| Error::io(&tmp, e))?;
        w.get_ref().sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let bundle: TrainedBundle = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if bundle.format != BUNDLE_FORMAT || bundle.version != BUNDLE_VERSION {
            return Err(Error::Format(format!(
                "{}: bundle `{}` v{} is not supported (expected `{BUNDLE_FORMAT}` v{BUNDLE_VERSION})",
                path.display(),
                bundle.format,
                bundle.version
            )));
        }
        let seg = SegmenterRegistry::default().build(&bundle.segmenter)?;
        let _ = bundle.segmenter_impl.set(seg);
        Ok(bundle)
    }

    /// Rhyme groups with at least one grapheme the model can emit.
    pub fn usable_rhyme_groups(&self) -> Vec<String> {
        let vocab = self.vocab();
        self.rhyme
            .groups()
            .filter(|g| {
                self.rhyme.members(g).is_some_and(|m| {
                    m.iter()
                        .filter_map(|x| vocab.id(&Token::text(x.as_str())))
                        .any(|id| vocab.is_emittable_text(id))
                })
            })
            .map(str::to_string)
            .collect()
    }
}
