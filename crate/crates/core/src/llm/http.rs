use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{estimate_tokens, CompletionRequest, CompletionResponse, LlmError, Provider};

/// Wire shape spoken by [`HttpProvider`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HttpApi {
    /// `POST {base}/api/generate` with `{model, prompt, stream: false}`.
    #[default]
    Generate,
    /// `POST {base}/v1/chat/completions` with a single user message.
    Chat,
}

pub struct HttpProvider {
    base_url: String,
    api: HttpApi,
    timeout_secs: u64,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, api: HttpApi, timeout_secs: u64) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(timeout_secs.max(1))))
            .http_status_as_error(false)
            .build();
        Self { base_url: base_url.into().trim_end_matches('/').to_string(), api, timeout_secs, agent: config.into() }
    }

    fn endpoint(&self) -> String {
        match self.api {
            HttpApi::Generate => format!("{}/api/generate", self.base_url),
            HttpApi::Chat => format!("{}/v1/chat/completions", self.base_url),
        }
    }

    fn body(&self, model: &str, req: &CompletionRequest) -> Value {
        match self.api {
            HttpApi::Generate => json!({
                "model": model,
                "prompt": req.prompt,
                "stream": false,
                "options": {"temperature": req.temperature, "num_predict": req.max_output_tokens},
            }),
            HttpApi::Chat => json!({
                "model": model,
                "messages": [{"role": "user", "content": req.prompt}],
                "stream": false,
                "temperature": req.temperature,
                "max_tokens": req.max_output_tokens,
            }),
        }
    }
}

/// Extracts text and reported token counts from a response body.
pub(crate) fn parse_response(api: HttpApi, body: &Value) -> Result<(String, Option<u64>, Option<u64>), LlmError> {
    if let Some(err) = body.get("error") {
        return Err(LlmError::Backend { status: 200, body: err.to_string() });
    }
    let missing = || LlmError::Transport(format!("unexpected response shape: {body}"));
    match api {
        HttpApi::Generate => {
            let text = body.get("response").and_then(Value::as_str).ok_or_else(missing)?;
            Ok((
                text.to_string(),
                body.get("prompt_eval_count").and_then(Value::as_u64),
                body.get("eval_count").and_then(Value::as_u64),
            ))
        }
        HttpApi::Chat => {
            let text = body.pointer("/choices/0/message/content").and_then(Value::as_str).ok_or_else(missing)?;
            Ok((
                text.to_string(),
                body.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
                body.pointer("/usage/completion_tokens").and_then(Value::as_u64),
            ))
        }
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        match self.api {
            HttpApi::Generate => "http-generate",
            HttpApi::Chat => "http-chat",
        }
    }

    fn complete(&self, model: &str, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let started = Instant::now();
        let result = self.agent.post(&self.endpoint()).send_json(self.body(model, req));
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(LlmError::Timeout(self.timeout_secs)),
            Err(e) => return Err(LlmError::Transport(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Err(LlmError::Timeout(self.timeout_secs)),
            Err(e) => return Err(LlmError::Transport(e.to_string())),
        };
        if !(200..300).contains(&status) {
            return Err(LlmError::Backend { status, body: text });
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| LlmError::Transport(format!("invalid JSON body: {e}")))?;
        let (out, input, output) = parse_response(self.api, &value)?;
        let estimated = input.is_none() || output.is_none();
        Ok(CompletionResponse {
            input_tokens: input.unwrap_or_else(|| estimate_tokens(&req.prompt)),
            output_tokens: output.unwrap_or_else(|| estimate_tokens(&out)),
            text: out,
            latency_s: started.elapsed().as_secs_f64(),
            estimated,
        })
    }
}
