//! Command-line and HTTP front ends for the lyricist engine.

pub mod api;
pub mod config;

use std::sync::Arc;

use anyhow::{Context, Result};
use lyricist_core::lm::BackendRegistry;
use lyricist_core::{Engine, TrainedBundle};

use crate::config::Config;

/// Loads the trained bundle named in the config and attaches the
/// configured LM backend. Blocking: call outside any async runtime.
pub fn load_engine(cfg: &Config) -> Result<Engine> {
    let path = cfg.resolve(&cfg.artifacts.bundle);
    let bundle = TrainedBundle::load(&path)
        .with_context(|| format!("loading bundle {} (run `lyricist train` first)", path.display()))?;
    let bundle = Arc::new(bundle);
    let backend = BackendRegistry::default().build(&cfg.backend, &bundle)?;
    Ok(Engine::new(bundle, backend)?)
}
