use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{Aggregation, CorrelationRow, EvalConfig, Failure, Leaderboard, MetricCell};
use crate::types::EvaluationRecord;

/// Settings echoed into a report so results can be traced to their configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub eval: EvalConfig,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Wall-clock creation time; the only field that differs between
    /// otherwise identical runs.
    pub generated_at_unix: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<RunSettings>,
    pub records: Vec<EvaluationRecord<f64>>,
    pub failures: Vec<Failure>,
    pub leaderboard: Leaderboard,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub correlations: Vec<CorrelationRow>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn fmt_cell(v: Option<f64>, digits: usize) -> String {
    v.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

impl Report {
    pub fn new(
        settings: Option<RunSettings>,
        records: Vec<EvaluationRecord<f64>>,
        failures: Vec<Failure>,
        leaderboard: Leaderboard,
    ) -> Self {
        Self {
            generated_at_unix: now_unix(),
            settings,
            records,
            failures,
            leaderboard,
            correlations: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// JSON with the timestamp zeroed, for comparing runs.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.generated_at_unix = 0;
        copy.to_json()
    }

    /// One row per (model, scope) with value and count columns.
    pub fn leaderboard_csv(&self) -> String {
        let board = &self.leaderboard;
        let externals = board.external_columns();
        let mut header = vec!["model_id".to_string(), "scope".into(), "videos".into()];
        for name in ["chscore", "mtscore", "gpt4o_mtscore"]
            .into_iter()
            .map(str::to_string)
            .chain(externals.iter().cloned())
        {
            header.push(name.clone());
            header.push(format!("{name}_count"));
        }
        let mut out = header.join(",");
        out.push('\n');
        let cell = |c: &MetricCell, out: &mut Vec<String>| {
            out.push(c.value.map(|v| v.to_string()).unwrap_or_default());
            out.push(c.count.to_string());
        };
        for (model, row) in &board.models {
            let scopes = std::iter::once(("overall".to_string(), &row.overall))
                .chain(row.categories.iter().map(|(c, r)| (c.to_string(), r)));
            for (scope, r) in scopes {
                let mut fields = vec![model.clone(), scope.clone(), r.videos.to_string()];
                cell(&r.chscore, &mut fields);
                cell(&r.mtscore, &mut fields);
                cell(&r.gpt4o_mtscore, &mut fields);
                for name in &externals {
                    match (scope == "overall").then(|| row.model_level.get(name)).flatten() {
                        Some(v) => {
                            fields.push(v.to_string());
                            fields.push(String::new());
                        }
                        None => cell(&r.external.get(name).copied().unwrap_or_default(), &mut fields),
                    }
                }
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        out
    }

    /// Overall leaderboard as a Markdown table: method, external columns,
    /// then MTScore, CHScore and GPT4o-MTScore.
    pub fn markdown_table(&self) -> String {
        let board = &self.leaderboard;
        let externals = board.external_columns();
        let mut out = String::from("| Method |");
        for name in &externals {
            let _ = write!(out, " {name} |");
        }
        out.push_str(" MTScore↑ | CHScore↑ | GPT4o-MTScore↑ |\n|---|");
        out.push_str(&"---|".repeat(externals.len() + 3));
        out.push('\n');
        for model in board.models.keys() {
            let _ = write!(out, "| {model} |");
            for name in &externals {
                let v = board.value(model, &super::Column::External(name.clone()));
                let _ = write!(out, " {} |", fmt_cell(v, 2));
            }
            let row = &board.models[model].overall;
            let _ = writeln!(
                out,
                " {} | {} | {} |",
                fmt_cell(row.mtscore.value, 4),
                fmt_cell(row.chscore.value, 2),
                fmt_cell(row.gpt4o_mtscore.value, 2)
            );
        }
        if !self.correlations.is_empty() {
            out.push_str("\n| Column | Models | Kendall τ | Spearman ρ |\n|---|---|---|---|\n");
            for c in &self.correlations {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.4} | {:.4} |",
                    c.column, c.models, c.kendall_tau, c.spearman_rho
                );
            }
        }
        out
    }
}
