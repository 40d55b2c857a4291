use std::io::{self, Write};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, CompletionRequest, CompletionResponse, LlmError, Role, Stage, Task};

/// A filter decision on one candidate artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub stage: Stage,
    /// `scenario`, `candidate`, `test`, `page_object`, ...
    pub subject_kind: String,
    pub subject: String,
    /// `drop`, `reject` or `deprecate`.
    pub action: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AuditRecord {
    Completion {
        stage: Stage,
        task: Task,
        role: Role,
        model: String,
        prompt_sha256: String,
        response_sha256: String,
        input_tokens: u64,
        output_tokens: u64,
        estimated: bool,
        latency_s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prompt: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        response: Option<String>,
    },
    Failure {
        stage: Stage,
        task: Task,
        role: Role,
        model: String,
        prompt_sha256: String,
        error: String,
    },
    Decision(Decision),
}

impl AuditRecord {
    pub fn is_drop(&self) -> bool {
        matches!(self, AuditRecord::Decision(d) if d.action == "drop")
    }
}

/// Append-only audit log. Prompt and response texts are kept unless
/// redaction is on; hashes are always kept.
#[derive(Debug, Default)]
pub struct AuditLog {
    redact: bool,
    records: Mutex<Vec<AuditRecord>>,
}

impl AuditLog {
    pub fn new(redact: bool) -> Self {
        Self { redact, records: Mutex::new(Vec::new()) }
    }

    pub fn redacted(&self) -> bool {
        self.redact
    }

    pub fn push(&self, record: AuditRecord) {
        self.records.lock().expect("audit lock").push(record);
    }

    pub fn decision(&self, d: Decision) {
        self.push(AuditRecord::Decision(d));
    }

    pub(crate) fn completion(&self, model: &str, req: &CompletionRequest, resp: &CompletionResponse) {
        let keep = !self.redact;
        self.push(AuditRecord::Completion {
            stage: req.task.stage(),
            task: req.task,
            role: req.role,
            model: model.to_string(),
            prompt_sha256: sha256_hex(&req.prompt),
            response_sha256: sha256_hex(&resp.text),
            input_tokens: resp.input_tokens,
            output_tokens: resp.output_tokens,
            estimated: resp.estimated,
            latency_s: resp.latency_s,
            prompt: keep.then(|| req.prompt.clone()),
            response: keep.then(|| resp.text.clone()),
        });
    }

    pub(crate) fn failure(&self, model: &str, req: &CompletionRequest, err: &LlmError) {
        self.push(AuditRecord::Failure {
            stage: req.task.stage(),
            task: req.task,
            role: req.role,
            model: model.to_string(),
            prompt_sha256: sha256_hex(&req.prompt),
            error: err.to_string(),
        });
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        self.records.lock().expect("audit lock").clone()
    }

    pub fn drop_count(&self, stage: Stage) -> usize {
        self.records
            .lock()
            .expect("audit lock")
            .iter()
            .filter(|r| matches!(r, AuditRecord::Decision(d) if d.action == "drop" && d.stage == stage))
            .count()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in self.records.lock().expect("audit lock").iter() {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
