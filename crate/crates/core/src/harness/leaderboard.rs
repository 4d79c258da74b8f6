use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::stats::{kendall_tau, spearman_rho, PairedSample};
use crate::types::{BenchmarkEntry, EvaluationRecord, MajorCategory};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl FromStr for Aggregation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            other => Err(format!("unknown aggregation `{other}`")),
        }
    }
}

impl Aggregation {
    fn apply(self, values: &mut [f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        Some(match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    (values[n / 2 - 1] + values[n / 2]) / 2.0
                }
            }
        })
    }
}

/// A leaderboard column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    ChScore,
    MtScore,
    Gpt4oMtScore,
    External(String),
}

impl Column {
    pub fn name(&self) -> &str {
        match self {
            Column::ChScore => "chscore",
            Column::MtScore => "mtscore",
            Column::Gpt4oMtScore => "gpt4o_mtscore",
            Column::External(name) => name,
        }
    }
}

impl FromStr for Column {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "chscore" => Column::ChScore,
            "mtscore" => Column::MtScore,
            "gpt4o_mtscore" | "gptscore" => Column::Gpt4oMtScore,
            other => Column::External(other.to_string()),
        })
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An aggregate and the number of values behind it. `value` is `None` when
/// no record carried the metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub value: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScopeRow {
    pub videos: usize,
    pub chscore: MetricCell,
    pub mtscore: MetricCell,
    pub gpt4o_mtscore: MetricCell,
    pub external: BTreeMap<String, MetricCell>,
}

#[derive(Default)]
struct Accum {
    videos: usize,
    chscore: Vec<f64>,
    mtscore: Vec<f64>,
    gpt: Vec<f64>,
    external: BTreeMap<String, Vec<f64>>,
}

impl Accum {
    fn push(&mut self, r: &EvaluationRecord<f64>) {
        self.videos += 1;
        self.chscore.extend(r.chscore);
        self.mtscore.extend(r.mtscore);
        self.gpt.extend(r.gpt4o_mtscore);
        for (k, v) in &r.external {
            self.external.entry(k.clone()).or_default().push(*v);
        }
    }

    fn finish(mut self, agg: Aggregation) -> ScopeRow {
        let cell = |values: &mut Vec<f64>| MetricCell {
            count: values.len(),
            value: agg.apply(values),
        };
        ScopeRow {
            videos: self.videos,
            chscore: cell(&mut self.chscore),
            mtscore: cell(&mut self.mtscore),
            gpt4o_mtscore: cell(&mut self.gpt),
            external: self.external.iter_mut().map(|(k, v)| (k.clone(), cell(v))).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub overall: ScopeRow,
    pub categories: BTreeMap<MajorCategory, ScopeRow>,
    /// Per-model values supplied from outside, shown as given.
    pub model_level: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub aggregation: Aggregation,
    pub models: BTreeMap<String, ModelRow>,
}

/// Groups records per model, overall and per major category.
/// `model_level` holds per-model external values passed through verbatim;
/// a model may appear there without any records.
pub fn aggregate(
    records: &[EvaluationRecord<f64>],
    bench: &[BenchmarkEntry],
    aggregation: Aggregation,
    model_level: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<Leaderboard, HarnessError> {
    if records.is_empty() && model_level.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    let category: HashMap<&str, MajorCategory> =
        bench.iter().map(|e| (e.prompt_id.as_str(), e.major_category)).collect();
    let mut acc: BTreeMap<&str, (Accum, BTreeMap<MajorCategory, Accum>)> = BTreeMap::new();
    for r in records {
        let major = *category
            .get(r.prompt_id.as_str())
            .ok_or_else(|| HarnessError::UnknownPrompt(r.prompt_id.clone()))?;
        let (overall, cats) = acc.entry(r.model_id.as_str()).or_default();
        overall.push(r);
        cats.entry(major).or_default().push(r);
    }
    let mut models: BTreeMap<String, ModelRow> = acc
        .into_iter()
        .map(|(model, (overall, cats))| {
            let row = ModelRow {
                overall: overall.finish(aggregation),
                categories: cats.into_iter().map(|(c, a)| (c, a.finish(aggregation))).collect(),
                model_level: BTreeMap::new(),
            };
            (model.to_string(), row)
        })
        .collect();
    for (model, values) in model_level {
        models.entry(model.clone()).or_default().model_level = values.clone();
    }
    Ok(Leaderboard { aggregation, models })
}

impl Leaderboard {
    /// Overall value of `column` for `model`. Verbatim per-model values take
    /// precedence over aggregated per-video ones.
    pub fn value(&self, model: &str, column: &Column) -> Option<f64> {
        let row = self.models.get(model)?;
        match column {
            Column::ChScore => row.overall.chscore.value,
            Column::MtScore => row.overall.mtscore.value,
            Column::Gpt4oMtScore => row.overall.gpt4o_mtscore.value,
            Column::External(name) => row
                .model_level
                .get(name)
                .copied()
                .or_else(|| row.overall.external.get(name).and_then(|c| c.value)),
        }
    }

    /// Values of `column` for every model that has one.
    pub fn column(&self, column: &Column) -> BTreeMap<String, f64> {
        self.models
            .keys()
            .filter_map(|m| self.value(m, column).map(|v| (m.clone(), v)))
            .collect()
    }

    /// Every external column name present on the board, sorted.
    pub fn external_columns(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .models
            .values()
            .flat_map(|r| r.model_level.keys().chain(r.overall.external.keys()).cloned())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Model ids ordered by `column`, best first; ties and missing values
    /// fall back to model id order, missing values last.
    pub fn ranking(&self, column: &Column, higher_is_better: bool) -> Vec<String> {
        let mut ids: Vec<(&String, Option<f64>)> = self.models.keys().map(|m| (m, self.value(m, column))).collect();
        ids.sort_by(|(ma, a), (mb, b)| {
            let ord = match (a, b) {
                (Some(a), Some(b)) if higher_is_better => b.total_cmp(a),
                (Some(a), Some(b)) => a.total_cmp(b),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            };
            ord.then_with(|| ma.cmp(mb))
        });
        ids.into_iter().map(|(m, _)| m.clone()).collect()
    }
}

/// Kendall τ-b and Spearman ρ between per-model metric values and human
/// ratings, over the models present in both.
pub fn correlate(metric: &BTreeMap<String, f64>, human: &BTreeMap<String, f64>) -> Result<(f64, f64), HarnessError> {
    let (x, y): (Vec<f64>, Vec<f64>) = metric
        .iter()
        .filter_map(|(m, v)| human.get(m).map(|h| (*v, *h)))
        .unzip();
    if x.len() < 2 {
        return Err(HarnessError::TooFewModels(x.len()));
    }
    let sample = PairedSample::new(x, y)?;
    Ok((kendall_tau(&sample)?, spearman_rho(&sample)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub column: String,
    pub models: usize,
    pub kendall_tau: f64,
    pub spearman_rho: f64,
}

/// Correlates every human-rated column that the leaderboard also carries.
pub fn correlate_leaderboard(
    board: &Leaderboard,
    human: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<Vec<CorrelationRow>, HarnessError> {
    let mut rows = Vec::new();
    for (name, ratings) in human {
        let column: Column = name.parse().expect("infallible");
        let metric = board.column(&column);
        let models = metric.keys().filter(|m| ratings.contains_key(*m)).count();
        let (tau, rho) = correlate(&metric, ratings)?;
        rows.push(CorrelationRow {
            column: column.name().to_string(),
            models,
            kendall_tau: tau,
            spearman_rho: rho,
        });
    }
    Ok(rows)
}

/// Reads human ratings: a `model_id` column plus one column per rated
/// leaderboard column. Returns column -> model -> rating.
pub fn load_human_csv(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::Csv(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| HarnessError::Csv(e.to_string()))?.clone();
    let model_col = headers
        .iter()
        .position(|h| h == "model_id")
        .ok_or_else(|| HarnessError::Csv("missing `model_id` column".into()))?;
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| HarnessError::Csv(e.to_string()))?;
        let model = row.get(model_col).unwrap_or("").to_string();
        for (i, name) in headers.iter().enumerate() {
            if i == model_col {
                continue;
            }
            let cell = row.get(i).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| HarnessError::Csv(format!("`{cell}` in `{name}` is not a number")))?;
            out.entry(name.to_string()).or_default().insert(model.clone(), v);
        }
    }
    Ok(out)
}
