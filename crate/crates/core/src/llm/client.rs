use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use super::{AuditLog, CompletionRequest, CompletionResponse, LlmError, ModelMap, Provider, UsageRecord};

// Counting semaphore bounding in-flight provider calls.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Shared entry point for all completions in a run.
/// Model used and outcome of one call.
type Attempt = (String, Result<CompletionResponse, LlmError>);

pub struct LlmClient {
    provider: Arc<dyn Provider>,
    models: ModelMap,
    gate: Gate,
    concurrency: usize,
    audit: Arc<AuditLog>,
    usage: Mutex<Vec<UsageRecord>>,
}

impl LlmClient {
    pub fn new(provider: Arc<dyn Provider>, models: ModelMap, concurrency: usize, audit: Arc<AuditLog>) -> Self {
        Self {
            provider,
            models,
            gate: Gate::new(concurrency),
            concurrency: concurrency.max(1),
            audit,
            usage: Mutex::new(Vec::new()),
        }
    }

    /// Client over `provider` with default routing, no concurrency and a
    /// private unredacted audit log.
    pub fn simple(provider: impl Provider + 'static) -> Self {
        Self::new(Arc::new(provider), ModelMap::default(), 1, Arc::new(AuditLog::new(false)))
    }

    pub fn audit(&self) -> &Arc<AuditLog> {
        &self.audit
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn usage(&self) -> Vec<UsageRecord> {
        self.usage.lock().expect("usage lock").clone()
    }

    fn call(&self, req: &CompletionRequest) -> (String, Result<CompletionResponse, LlmError>) {
        let model = match self.models.model_for(req.role) {
            Ok(m) => m.to_string(),
            Err(e) => return (String::new(), Err(e)),
        };
        if let Err(e) = req.validate() {
            return (model, Err(e));
        }
        let _slot = self.gate.acquire();
        let result = self.provider.complete(&model, req);
        (model, result)
    }

    fn account(&self, model: &str, req: &CompletionRequest, result: &Result<CompletionResponse, LlmError>) {
        match result {
            Ok(resp) => {
                self.audit.completion(model, req, resp);
                self.usage.lock().expect("usage lock").push(UsageRecord::new(req.task.stage(), resp));
            }
            Err(e) => self.audit.failure(model, req, e),
        }
    }

    pub fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let (model, result) = self.call(req);
        self.account(&model, req, &result);
        result
    }

    /// Runs requests with at most `concurrency` in flight. Results, audit
    /// records and usage are kept in request order.
    pub fn complete_many(&self, reqs: &[CompletionRequest]) -> Vec<Result<CompletionResponse, LlmError>> {
        let slots: Vec<Mutex<Option<Attempt>>> = reqs.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.concurrency.min(reqs.len());
        if workers <= 1 {
            for (i, r) in reqs.iter().enumerate() {
                *slots[i].lock().expect("slot") = Some(self.call(r));
            }
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        if i >= reqs.len() {
                            break;
                        }
                        let out = self.call(&reqs[i]);
                        *slots[i].lock().expect("slot") = Some(out);
                    });
                }
            });
        }
        slots
            .into_iter()
            .zip(reqs)
            .map(|(slot, req)| {
                let (model, result) = slot.into_inner().expect("slot").expect("every slot filled");
                self.account(&model, req, &result);
                result
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{AuditRecord, StubProvider, Task};
    use std::sync::atomic::AtomicUsize;
    use std::time::Duration;

    struct Slow {
        inflight: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Provider for Slow {
        fn name(&self) -> &str {
            "slow"
        }
        fn complete(&self, _m: &str, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
            let now = self.inflight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(20));
            self.inflight.fetch_sub(1, Ordering::SeqCst);
            Ok(CompletionResponse::estimated(&req.prompt, req.prompt.to_uppercase(), 0.0))
        }
    }

    #[test]
    fn concurrency_cap_and_order() {
        let slow = Arc::new(Slow { inflight: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
        let client = LlmClient::new(slow.clone(), ModelMap::default(), 2, Arc::new(AuditLog::new(false)));
        let reqs: Vec<_> = (0..8).map(|i| CompletionRequest::new(Task::Summarize, format!("p{i}"))).collect();
        let out = client.complete_many(&reqs);
        let texts: Vec<_> = out.into_iter().map(|r| r.unwrap().text).collect();
        assert_eq!(texts, (0..8).map(|i| format!("P{i}")).collect::<Vec<_>>());
        assert!(slow.peak.load(Ordering::SeqCst) <= 2);
        let prompts: Vec<_> = client
            .audit()
            .records()
            .into_iter()
            .filter_map(|r| match r {
                AuditRecord::Completion { prompt, .. } => prompt,
                _ => None,
            })
            .collect();
        assert_eq!(prompts, (0..8).map(|i| format!("p{i}")).collect::<Vec<_>>());
    }

    #[test]
    fn failures_are_audited() {
        let client = LlmClient::simple(StubProvider::default());
        let err = client.complete(&CompletionRequest::new(Task::Summarize, "")).unwrap_err();
        assert!(matches!(err, LlmError::InvalidRequest(_)));
        assert!(matches!(client.audit().records()[0], AuditRecord::Failure { .. }));
        assert!(client.usage().is_empty());
    }
}
