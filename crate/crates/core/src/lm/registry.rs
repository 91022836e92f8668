use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LmBackend, RemoteBackend};
use crate::bundle::TrainedBundle;
use crate::error::{Error, Result};

/// Backend selection as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendOptions {
    pub name: String,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
}

impl Default for BackendOptions {
    fn default() -> Self {
        BackendOptions { name: "ngram".into(), endpoint: None, timeout_ms: 10_000 }
    }
}

type BackendFactory = fn(&BackendOptions, &TrainedBundle) -> Result<Arc<dyn LmBackend>>;

/// Name → constructor table for [`LmBackend`] implementations.
pub struct BackendRegistry {
    factories: BTreeMap<&'static str, BackendFactory>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut reg = BackendRegistry { factories: BTreeMap::new() };
        reg.register("ngram", |_, bundle| Ok(bundle.ngram.clone() as Arc<dyn LmBackend>));
        reg.register("remote", |opts, bundle| {
            let endpoint = opts
                .endpoint
                .as_deref()
                .ok_or_else(|| Error::Config("remote backend needs an endpoint".into()))?;
            let backend =
                RemoteBackend::connect(endpoint, bundle.vocab(), Duration::from_millis(opts.timeout_ms))?;
            Ok(Arc::new(backend))
        });
        reg
    }
}

impl BackendRegistry {
    pub fn register(&mut self, name: &'static str, factory: BackendFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, opts: &BackendOptions, bundle: &TrainedBundle) -> Result<Arc<dyn LmBackend>> {
        let factory = self.factories.get(opts.name.as_str()).ok_or_else(|| {
            Error::Config(format!(
                "unknown LM backend `{}` (known: {})",
                opts.name,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(opts, bundle)
    }
}
