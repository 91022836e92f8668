//! TOML configuration shared by every subcommand. Relative paths resolve
//! against the directory holding the config file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lyricist_core::corpus::{load_word_list, StyleSet, DEFAULT_STYLES};
use lyricist_core::lm::BackendOptions;
use lyricist_core::pmi::ThemeConfig;
use lyricist_core::rhyme::RhymeTable;
use lyricist_core::segment::SegmenterSpec;
use lyricist_core::{GenerationOptions, TrainConfig, TrainResources};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub path: PathBuf,
    pub emotion_seed: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub themes: Option<PathBuf>,
    pub rhyme: Option<PathBuf>,
    pub styles: Vec<String>,
    pub segmenter: String,
    /// One word per line, for the `lexicon` segmenter.
    pub lexicon: Option<PathBuf>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            path: "data/corpus.jsonl".into(),
            emotion_seed: None,
            stoplist: None,
            themes: None,
            rhyme: None,
            styles: DEFAULT_STYLES.iter().map(|s| s.to_string()).collect(),
            segmenter: "whitespace".into(),
            lexicon: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtifactConfig {
    /// Output of `ingest`, input of `train`.
    pub annotated: PathBuf,
    pub bundle: PathBuf,
}

impl Default for ArtifactConfig {
    fn default() -> Self {
        ArtifactConfig { annotated: "build/annotated.jsonl".into(), bundle: "build/bundle.json".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    pub timeout_ms: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { listen: "127.0.0.1:8080".into(), data_dir: "build/drafts".into(), timeout_ms: 30_000 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub corpus: CorpusConfig,
    pub artifacts: ArtifactConfig,
    pub train: TrainConfig,
    pub generation: GenerationOptions,
    pub backend: BackendOptions,
    pub server: ServerConfig,
    #[serde(skip)]
    base: PathBuf,
}

impl Config {
    /// Reads `path`, or returns defaults rooted at the working directory
    /// when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let mut cfg: Config =
                    toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                cfg.base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                cfg
            }
            None => Config::default(),
        };
        if let Ok(listen) = std::env::var("LYRICIST_LISTEN") {
            cfg.server.listen = listen;
        }
        if let Ok(dir) = std::env::var("LYRICIST_DATA_DIR") {
            cfg.server.data_dir = dir.into();
        }
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Applies a command-line seed, which wins over the config file.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        if let Some(s) = self.seed {
            self.train.seed = s;
            self.generation.seed = s;
        }
        self
    }

    pub fn styles(&self) -> StyleSet {
        StyleSet::new(self.corpus.styles.iter().cloned())
    }

    pub fn listen_addr(&self) -> Result<SocketAddr> {
        self.server
            .listen
            .parse()
            .with_context(|| format!("invalid listen address `{}`", self.server.listen))
    }

    pub fn train_resources(&self) -> Result<TrainResources> {
        let c = &self.corpus;
        let stoplist = match &c.stoplist {
            Some(p) => load_word_list(&self.resolve(p))?,
            None => Vec::new(),
        };
        let themes = match &c.themes {
            Some(p) => ThemeConfig::load(&self.resolve(p))?,
            None => ThemeConfig::default(),
        };
        let rhyme = match &c.rhyme {
            Some(p) => RhymeTable::load(&self.resolve(p))?,
            None => RhymeTable::default(),
        };
        let lexicon = match &c.lexicon {
            Some(p) => load_word_list(&self.resolve(p))?,
            None => Vec::new(),
        };
        Ok(TrainResources {
            styles: self.styles(),
            segmenter: SegmenterSpec { name: c.segmenter.clone(), lexicon },
            stoplist,
            themes,
            rhyme,
        })
    }
}
