#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use lyricist_core::bundle::{ingest, train_bundle, TrainConfig, TrainResources, TrainedBundle};
use lyricist_core::corpus::{load_corpus, load_word_list, AnnotatedSong, StyleSet, DEFAULT_STYLES};
use lyricist_core::pmi::ThemeConfig;
use lyricist_core::rhyme::RhymeTable;
use lyricist_core::segment::SegmenterSpec;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn styles() -> StyleSet {
    StyleSet::new(DEFAULT_STYLES)
}

pub fn resources() -> TrainResources {
    TrainResources {
        styles: styles(),
        segmenter: SegmenterSpec::whitespace(),
        stoplist: load_word_list(&data("stoplist.txt")).unwrap(),
        themes: ThemeConfig::load(&data("themes.toml")).unwrap(),
        rhyme: RhymeTable::load(&data("rhyme.tsv")).unwrap(),
    }
}

pub fn train_config() -> TrainConfig {
    TrainConfig { pmi_min_count: 2, ..TrainConfig::default() }
}

pub fn annotated() -> &'static [AnnotatedSong] {
    static CELL: OnceLock<Vec<AnnotatedSong>> = OnceLock::new();
    CELL.get_or_init(|| {
        let songs = load_corpus(&data("corpus.jsonl"), &styles()).unwrap().songs;
        let seed = load_corpus(&data("emotion_seed.jsonl"), &styles()).unwrap().songs;
        ingest(&songs, &seed, &resources()).unwrap()
    })
}

pub fn bundle() -> Arc<TrainedBundle> {
    static CELL: OnceLock<Arc<TrainedBundle>> = OnceLock::new();
    CELL.get_or_init(|| Arc::new(train_bundle(annotated(), &resources(), &train_config()).unwrap()))
        .clone()
}
