//! Generation config files.
//!
//! A config is a TOML file naming the catalog manifest, optional template
//! library, exclusions and task selection, plus a `[mixture]` table holding
//! the [`MixtureSpec`]. Relative paths resolve against the config's
//! directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    apply_exclusions, expand_patterns, load_catalog, sample_task_subset, NamePattern, TaskCatalog,
};
use crate::error::{Error, Result};
use crate::mixer::MixtureSpec;
use crate::templates::TemplateLibrary;

/// Draw a random task subset that keeps every held-in task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSubset {
    pub size: usize,
    /// Defaults to the mixture seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub manifest: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    /// Task names to drop; a trailing `*` matches a prefix.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<String>,
    /// Explicit task list, applied after exclusions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_tasks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_subset: Option<TaskSubset>,
    pub mixture: MixtureSpec,
}

impl GenerationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        self.manifest = resolve(&self.manifest);
        if let Some(t) = &self.templates {
            self.templates = Some(resolve(t));
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn exclusion_patterns(&self) -> Vec<NamePattern> {
        self.exclusions.iter().map(NamePattern::new).collect()
    }
}

/// A config with its catalog and templates loaded and its task selection
/// applied.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: GenerationConfig,
    pub catalog: TaskCatalog,
    pub library: TemplateLibrary,
    /// Every excluded task name found in the manifest, plus unmatched
    /// patterns.
    pub excluded: BTreeSet<String>,
    pub unknown_exclusions: Vec<String>,
    /// Hex SHA-256 over the mixture, the task selection, the manifest and
    /// the template library.
    pub digest: String,
}

impl Prepared {
    pub fn spec(&self) -> &MixtureSpec {
        &self.config.mixture
    }

    pub fn is_excluded(&self, task: &str) -> bool {
        self.excluded.contains(task)
            || self
                .config
                .exclusion_patterns()
                .iter()
                .any(|p| p.matches(task))
    }
}

pub fn prepare(config: GenerationConfig) -> Result<Prepared> {
    config.mixture.validate()?;
    let full = load_catalog(&config.manifest)?;
    let excluded = expand_patterns(&full, &config.exclusion_patterns());
    let (mut catalog, unknown_exclusions) = apply_exclusions(full, &excluded);

    if let Some(names) = &config.include_tasks {
        let wanted: BTreeSet<String> = names.iter().cloned().collect();
        if let Some(missing) = wanted.iter().find(|n| !catalog.contains(n)) {
            return Err(Error::Config(format!(
                "included task `{missing}` is not in the catalog"
            )));
        }
        catalog = catalog.retain_names(&wanted);
    }
    if let Some(subset) = &config.task_subset {
        let seed = subset.seed.unwrap_or(config.mixture.seed);
        catalog = sample_task_subset(&catalog, subset.size, &catalog.held_in(), seed)?;
    }

    let (library, library_bytes) = match &config.templates {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            (TemplateLibrary::load(path)?, bytes)
        }
        None => (TemplateLibrary::builtin(), b"<builtin>".to_vec()),
    };
    let manifest_bytes = fs::read(&config.manifest).map_err(|e| Error::io(&config.manifest, e))?;

    let mut hasher = Sha256::new();
    let mut section = |label: &str, bytes: &[u8]| {
        hasher.update(label.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    };
    section("mixture", json(&config.mixture).as_bytes());
    section("exclusions", json(&config.exclusions).as_bytes());
    section("include_tasks", json(&config.include_tasks).as_bytes());
    section("task_subset", json(&config.task_subset).as_bytes());
    section("manifest", &manifest_bytes);
    section("templates", &library_bytes);
    let digest = hex::encode(hasher.finalize());

    Ok(Prepared {
        config,
        catalog,
        library,
        excluded,
        unknown_exclusions,
        digest,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("config values serialize")
}
