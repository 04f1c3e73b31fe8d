//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::floorplan::{BridgeSpec, LabelingOptions, LabelingScheme};
use crate::grammar::Profile;
use crate::sim::RenderOptions;
use crate::vlm::{BackendConfig, TemplateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultyFilter {
    /// Adjacent rooms.
    Easy,
    /// Exactly two intermediate rooms.
    Hard,
    /// Any distinct, reachable pair.
    Any,
}

impl DifficultyFilter {
    pub fn as_str(self) -> &'static str {
        match self {
            DifficultyFilter::Easy => "easy",
            DifficultyFilter::Hard => "hard",
            DifficultyFilter::Any => "any",
        }
    }
}

/// One map variant: a source map plus optional doubling and relabeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Map JSON, relative to the config file. `fixture:<name>` selects a
    /// built-in map (`original_map_1`, `original_map_2`, `two_room`).
    pub path: String,
    /// Unique name in records and reports. Defaults to the resulting map id
    /// followed by `+<labeling>`.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub double: Option<BridgeSpec>,
    #[serde(default)]
    pub labeling: Option<LabelingScheme>,
    /// Replaces the experiment-level difficulty list for this map.
    #[serde(default)]
    pub difficulties: Option<Vec<DifficultyFilter>>,
    /// Replaces the experiment-level backend for this map.
    #[serde(default)]
    pub backend: Option<BackendConfig>,
}

impl MapSpec {
    pub fn new(path: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            label: None,
            double: None,
            labeling: None,
            difficulties: None,
            backend: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub maps: Vec<MapSpec>,
    pub tasks_per_map: usize,
    pub trials_per_task: u32,
    pub difficulties: Vec<DifficultyFilter>,
    pub backend: BackendConfig,
    pub profile: Profile,
    pub template: TemplateId,
    pub ask_connections: bool,
    /// Seeds task sampling. The noisy mock keeps its own `backend.seed`.
    pub seed: u64,
    pub pedantic: bool,
    pub render: RenderOptions,
    pub labeling_options: LabelingOptions,
    /// Worker threads; defaults to the backend's in-flight limit.
    pub workers: Option<usize>,
    /// JSON-lines record file, relative to the config file.
    pub records: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Serve transcripts from the cache only.
    pub replay: bool,
    /// Stop after this many new trials (the rest resume on the next run).
    pub max_trials: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            maps: Vec::new(),
            tasks_per_map: 5,
            trials_per_task: 10,
            difficulties: vec![DifficultyFilter::Hard],
            backend: BackendConfig::mock_oracle(),
            profile: Profile::Strict,
            template: TemplateId::Instructional,
            ask_connections: true,
            seed: 0,
            pedantic: false,
            render: RenderOptions::default(),
            labeling_options: LabelingOptions::default(),
            workers: None,
            records: None,
            cache_dir: None,
            replay: false,
            max_trials: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    /// Makes relative map, record and cache paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for map in &mut self.maps {
            if !map.path.starts_with("fixture:") && Path::new(&map.path).is_relative() {
                map.path = base.join(&map.path).display().to_string();
            }
        }
        for p in [&mut self.records, &mut self.cache_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.maps.is_empty() {
            return bad("at least one map is required");
        }
        if self.tasks_per_map == 0 || self.trials_per_task == 0 {
            return bad("tasks_per_map and trials_per_task must be >= 1");
        }
        if self.difficulties.is_empty() || self.maps.iter().any(|m| m.difficulties.as_ref().is_some_and(Vec::is_empty)) {
            return bad("difficulty lists must not be empty");
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1");
        }
        if self.replay && self.cache_dir.is_none() {
            return bad("replay needs cache_dir");
        }
        self.backend.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        for m in &self.maps {
            if let Some(b) = &m.backend {
                b.validate().map_err(|e| BenchError::Config(format!("map `{}`: {e}", m.path)))?;
            }
        }
        Ok(())
    }
}
