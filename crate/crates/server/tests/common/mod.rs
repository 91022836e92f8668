#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use lyricist::config::Config;
use lyricist_core::bundle::{ingest, train_bundle, TrainedBundle};
use lyricist_core::corpus::{load_corpus, load_emotion_seed};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn config() -> Config {
    Config::load(Some(&repo_root().join("lyricist.toml"))).unwrap().with_seed(None)
}

/// Bundle trained in-process from the repository config.
pub fn bundle() -> Arc<TrainedBundle> {
    static CELL: OnceLock<Arc<TrainedBundle>> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = config();
        let res = cfg.train_resources().unwrap();
        let songs = load_corpus(&cfg.resolve(&cfg.corpus.path), &res.styles).unwrap().songs;
        let seed = load_emotion_seed(&cfg.resolve(cfg.corpus.emotion_seed.as_ref().unwrap()), &res.styles)
            .unwrap()
            .songs;
        let annotated = ingest(&songs, &seed, &res).unwrap();
        Arc::new(train_bundle(&annotated, &res, &cfg.train).unwrap())
    })
    .clone()
}
