use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, CompletionRequest, CompletionResponse, LlmError, Provider, Role, Task};

/// Lookup key of a request: hash over task, role and prompt.
pub fn request_key(req: &CompletionRequest) -> String {
    sha256_hex(&format!("{}\u{0}{}\u{0}{}", req.task.as_str(), req.role.as_str(), req.prompt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub key: String,
    pub task: Task,
    pub role: Role,
    pub model: String,
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_s: f64,
    pub estimated: bool,
}

impl FixtureEntry {
    fn response(&self) -> CompletionResponse {
        CompletionResponse {
            text: self.text.clone(),
            input_tokens: self.input_tokens,
            output_tokens: self.output_tokens,
            latency_s: self.latency_s,
            estimated: self.estimated,
        }
    }
}

/// Recorded responses, serialised sorted by key so the file is stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub version: u32,
    pub entries: Vec<FixtureEntry>,
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let mut text = serde_json::to_string_pretty(self).expect("fixture serialises");
        text.push('\n');
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| LlmError::Fixture(e.to_string()))?;
        }
        std::fs::write(path, text).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))
    }
}

/// Forwards to an inner provider and remembers every successful response.
pub struct RecordingProvider {
    inner: Box<dyn Provider>,
    entries: Mutex<BTreeMap<String, FixtureEntry>>,
}

impl RecordingProvider {
    pub fn new(inner: Box<dyn Provider>) -> Self {
        Self { inner, entries: Mutex::new(BTreeMap::new()) }
    }

    pub fn fixture(&self) -> Fixture {
        Fixture { version: 1, entries: self.entries.lock().expect("record lock").values().cloned().collect() }
    }
}

impl Provider for RecordingProvider {
    fn name(&self) -> &str {
        "record"
    }

    fn complete(&self, model: &str, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let resp = self.inner.complete(model, req)?;
        let key = request_key(req);
        self.entries.lock().expect("record lock").insert(
            key.clone(),
            FixtureEntry {
                key,
                task: req.task,
                role: req.role,
                model: model.to_string(),
                text: resp.text.clone(),
                input_tokens: resp.input_tokens,
                output_tokens: resp.output_tokens,
                latency_s: resp.latency_s,
                estimated: resp.estimated,
            },
        );
        Ok(resp)
    }
}

/// Serves responses from a fixture. Unknown requests are an error, never a
/// live call.
pub struct ReplayProvider {
    entries: BTreeMap<String, FixtureEntry>,
}

impl ReplayProvider {
    pub fn new(fixture: Fixture) -> Self {
        Self { entries: fixture.entries.into_iter().map(|e| (e.key.clone(), e)).collect() }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(Fixture::load(path)?))
    }
}

impl Provider for ReplayProvider {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, _model: &str, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let key = request_key(req);
        self.entries.get(&key).map(FixtureEntry::response).ok_or(LlmError::ReplayMiss { task: req.task.as_str(), key })
    }
}
