use serde::{Deserialize, Serialize};

use super::{CompletionResponse, Stage};

/// One completion attributed to a pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub stage: Stage,
    pub latency_s: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl UsageRecord {
    pub fn new(stage: Stage, resp: &CompletionResponse) -> Self {
        Self { stage, latency_s: resp.latency_s, input_tokens: resp.input_tokens, output_tokens: resp.output_tokens }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRow {
    pub stage: String,
    pub time_s: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl UsageRow {
    fn zero(stage: &str) -> Self {
        Self { stage: stage.to_string(), time_s: 0.0, input_tokens: 0, output_tokens: 0 }
    }
}

/// Per-stage usage with a total row. Rows always cover every stage, in
/// pipeline order, even when a stage made no calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageTable {
    pub rows: Vec<UsageRow>,
    pub total: UsageRow,
}

impl UsageTable {
    pub fn row(&self, stage: Stage) -> &UsageRow {
        self.rows.iter().find(|r| r.stage == stage.as_str()).expect("every stage has a row")
    }
}

pub fn aggregate_usage(records: &[UsageRecord]) -> UsageTable {
    let mut rows: Vec<UsageRow> = Stage::ALL.iter().map(|s| UsageRow::zero(s.as_str())).collect();
    for r in records {
        let i = Stage::ALL.iter().position(|s| *s == r.stage).expect("known stage");
        rows[i].time_s += r.latency_s;
        rows[i].input_tokens += r.input_tokens;
        rows[i].output_tokens += r.output_tokens;
    }
    let mut total = UsageRow::zero("total");
    for row in &rows {
        total.time_s += row.time_s;
        total.input_tokens += row.input_tokens;
        total.output_tokens += row.output_tokens;
    }
    UsageTable { rows, total }
}
