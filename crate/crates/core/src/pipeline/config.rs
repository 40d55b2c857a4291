use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gherkin::{PromptLimits, DEFAULT_DEDUP_THRESHOLD};
use crate::ingest::FilterRules;
use crate::llm::{HttpApi, ModelMap, Role, Task, DEFAULT_TIMEOUT_SECS};
use crate::navmap::{DEFAULT_DEPTH_LIMIT, DEFAULT_PER_TARGET_CAP};
use crate::pageobject::{page_file_name, PageObjectConfig};
use crate::uitest::UiTestConfig;

/// Environment variable overriding `provider.base_url`.
pub const LLM_URL_ENV: &str = "ACCEPTGEN_LLM_URL";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Stub,
    Live,
    Record,
    Replay,
}

impl std::str::FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stub" => Ok(Mode::Stub),
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(ConfigError::Invalid(format!("unknown mode `{other}` (stub, live, record, replay)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub base_url: String,
    pub api: HttpApi,
    pub timeout_secs: u64,
    /// Completions in flight at once.
    pub concurrency: usize,
    /// Keep only hashes of prompts and responses in the audit log.
    pub redact: bool,
    /// Fixture written in record mode and read in replay mode.
    pub fixture: Option<PathBuf>,
    /// Model per role; unset roles keep their defaults.
    pub models: BTreeMap<Role, String>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:11434".into(),
            api: HttpApi::Generate,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            concurrency: 1,
            redact: false,
            fixture: None,
            models: BTreeMap::new(),
        }
    }
}

impl ProviderConfig {
    pub fn model_map(&self) -> ModelMap {
        let mut m = ModelMap::default();
        for (role, model) in &self.models {
            m.0.insert(*role, model.clone());
        }
        m
    }
}

/// Behaviour of the offline provider.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubConfig {
    /// Files whose contents answer every request of a task.
    pub canned: BTreeMap<Task, PathBuf>,
    pub drop_scenarios: BTreeSet<String>,
    pub drop_tests: BTreeSet<String>,
    pub digest_limit: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplatePaths {
    pub page_object: Option<PathBuf>,
    pub ui_test: Option<PathBuf>,
    /// Reference page object shown to the refiner.
    pub example: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub source_root: PathBuf,
    /// Root of the UI-test project; prior page objects are read from here.
    pub test_root: PathBuf,
    pub entry_page: String,
    pub depth_limit: usize,
    /// Paths kept per target; 0 keeps all.
    pub per_target_path_cap: usize,
    pub output_dir: PathBuf,
    pub dedup_threshold: f64,
    pub mode: Mode,
    /// Ask the provider to polish rendered page objects.
    pub refine: bool,
    pub packages: BTreeMap<String, String>,
    pub filter: FilterRules,
    pub page_objects: PageObjectConfig,
    pub ui_tests: UiTestConfig,
    pub templates: TemplatePaths,
    pub prompt: PromptLimits,
    pub provider: ProviderConfig,
    pub stub: StubConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            source_root: PathBuf::from("."),
            test_root: PathBuf::from("."),
            entry_page: String::new(),
            depth_limit: DEFAULT_DEPTH_LIMIT,
            per_target_path_cap: DEFAULT_PER_TARGET_CAP,
            output_dir: PathBuf::from("out"),
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
            mode: Mode::Stub,
            refine: true,
            packages: BTreeMap::new(),
            filter: FilterRules::default(),
            page_objects: PageObjectConfig::default(),
            ui_tests: UiTestConfig::default(),
            templates: TemplatePaths::default(),
            prompt: PromptLimits::default(),
            provider: ProviderConfig::default(),
            stub: StubConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub depth_limit: Option<usize>,
    pub entry_page: Option<String>,
    pub redact: bool,
    pub output_dir: Option<PathBuf>,
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), message: e.to_string() })
    }

    /// Reads `path`, resolving relative paths against its directory and
    /// applying the environment override for the provider URL.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text, path)?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        if let Ok(url) = std::env::var(LLM_URL_ENV) {
            if !url.trim().is_empty() {
                cfg.provider.base_url = url;
            }
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        rebase(base, &mut self.source_root);
        rebase(base, &mut self.test_root);
        rebase(base, &mut self.output_dir);
        for p in [&mut self.templates.page_object, &mut self.templates.ui_test, &mut self.templates.example]
            .into_iter()
            .flatten()
        {
            rebase(base, p);
        }
        if let Some(p) = &mut self.provider.fixture {
            rebase(base, p);
        }
        for p in self.stub.canned.values_mut() {
            rebase(base, p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(d) = o.depth_limit {
            self.depth_limit = d;
        }
        if let Some(e) = &o.entry_page {
            self.entry_page = e.clone();
        }
        if o.redact {
            self.provider.redact = true;
        }
        if let Some(out) = &o.output_dir {
            self.output_dir = out.clone();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !self.source_root.is_dir() {
            return bad(format!("source_root {} is not a directory", self.source_root.display()));
        }
        if !self.test_root.is_dir() {
            return bad(format!("test_root {} is not a directory", self.test_root.display()));
        }
        if self.entry_page.is_empty() {
            return bad("entry_page is required".into());
        }
        if page_file_name(&self.entry_page).is_none() {
            return bad(format!("entry_page `{}` is not a page id such as VehicleTabPage", self.entry_page));
        }
        if self.depth_limit == 0 {
            return bad("depth_limit must be at least 1".into());
        }
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return bad(format!("dedup_threshold {} must lie in (0, 1]", self.dedup_threshold));
        }
        self.filter.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.filter.page_suffix != self.page_objects.page_suffix {
            return bad(format!(
                "filter.page_suffix `{}` differs from page_objects.page_suffix `{}`",
                self.filter.page_suffix, self.page_objects.page_suffix
            ));
        }
        if matches!(self.mode, Mode::Record | Mode::Replay) && self.provider.fixture.is_none() {
            return bad("record and replay modes need provider.fixture".into());
        }
        if self.provider.concurrency == 0 {
            return bad("provider.concurrency must be at least 1".into());
        }
        Ok(())
    }

    pub fn path_query(&self) -> crate::navmap::PathQuery {
        crate::navmap::PathQuery {
            depth_limit: self.depth_limit,
            per_target_cap: (self.per_target_path_cap > 0).then_some(self.per_target_path_cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_document_parses() {
        let text = r#"
source_root = "app"
test_root = "uitests"
entry_page = "VehicleTabPage"
depth_limit = 6
mode = "replay"

[filter]
exclude_path_fragments = ["/test/"]

[page_objects]
popup_bases = ["BasePopupPage"]
base_classes = { AddAdapterPage = "BasePopupPage" }

[ui_tests]
non_reversible = ["openDriversGuide"]

[provider]
fixture = "fixture.json"
api = "chat"
models = { reasoner = "qwq" }

[stub]
canned = { generate-scenarios = "scenarios.feature" }
drop_tests = ["adaptersMainTest"]
"#;
        let mut cfg = PipelineConfig::from_toml(text, Path::new("c.toml")).unwrap();
        cfg.resolve_paths(Path::new("/base"));
        assert_eq!(cfg.source_root, PathBuf::from("/base/app"));
        assert_eq!(cfg.mode, Mode::Replay);
        assert_eq!(cfg.provider.api, HttpApi::Chat);
        assert_eq!(cfg.provider.fixture.as_deref(), Some(Path::new("/base/fixture.json")));
        assert_eq!(cfg.stub.canned[&Task::GenerateScenarios], PathBuf::from("/base/scenarios.feature"));
        assert_eq!(cfg.page_objects.base_for("AddAdapterPage"), "BasePopupPage");
        let models = cfg.provider.model_map();
        assert_eq!(models.model_for(Role::Reasoner).unwrap(), "qwq");
        assert_eq!(models.model_for(Role::Coder).unwrap(), "deepseek-coder-v2");
        assert_eq!(cfg.path_query().depth_limit, 6);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = PipelineConfig::from_toml("entry_pgae = \"X\"", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("entry_pgae"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let mut cfg = PipelineConfig { entry_page: "HomePage".into(), ..PipelineConfig::default() };
        cfg.apply(&Overrides {
            mode: Some(Mode::Live),
            depth_limit: Some(3),
            entry_page: Some("VehicleTabPage".into()),
            redact: true,
            output_dir: None,
        });
        assert_eq!(cfg.mode, Mode::Live);
        assert_eq!(cfg.depth_limit, 3);
        assert_eq!(cfg.entry_page, "VehicleTabPage");
        assert!(cfg.provider.redact);
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let ok = PipelineConfig {
            source_root: dir.path().into(),
            test_root: dir.path().into(),
            entry_page: "VehicleTabPage".into(),
            ..PipelineConfig::default()
        };
        ok.validate().unwrap();
        for broken in [
            PipelineConfig { entry_page: String::new(), ..ok.clone() },
            PipelineConfig { entry_page: "vehicleTab".into(), ..ok.clone() },
            PipelineConfig { depth_limit: 0, ..ok.clone() },
            PipelineConfig { source_root: dir.path().join("missing"), ..ok.clone() },
            PipelineConfig { mode: Mode::Replay, ..ok.clone() },
            PipelineConfig { dedup_threshold: 0.0, ..ok.clone() },
        ] {
            assert!(broken.validate().is_err(), "{broken:?}");
        }
    }
}
