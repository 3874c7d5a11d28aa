//! Multilingual comparison tables: each value next to its difference from
//! the baseline language.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::aggregate::ScoreReport;
use super::format::{fixed2, short2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeltaMetric {
    PctPlayed,
    Quality,
}

impl DeltaMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            DeltaMetric::PctPlayed => "pct_played",
            DeltaMetric::Quality => "quality",
        }
    }

    fn of(self, report: &ScoreReport) -> Option<f64> {
        match self {
            DeltaMetric::PctPlayed => Some(report.macro_pct_played),
            DeltaMetric::Quality => report.macro_quality,
        }
    }
}

/// One value with its delta against the baseline; either may be undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaCell {
    pub value: Option<f64>,
    pub delta: Option<f64>,
}

impl fmt::Display for DeltaCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", short2(self.value), fixed2(self.delta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub model_id: String,
    pub metric: DeltaMetric,
    /// One cell per language of the table, in table order.
    pub cells: Vec<DeltaCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    pub baseline: String,
    pub languages: Vec<String>,
    pub rows: Vec<DeltaRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("baseline language '{0}' has no reports")]
pub struct MissingBaseline(pub String);

/// Builds the table for every model seen in any language. The baseline
/// comes first, other languages in code order.
pub fn language_delta(
    reports_by_language: &BTreeMap<String, Vec<ScoreReport>>,
    baseline: &str,
) -> Result<DeltaTable, MissingBaseline> {
    let base = reports_by_language
        .get(baseline)
        .ok_or_else(|| MissingBaseline(baseline.to_string()))?;
    let lookup = |reports: &[ScoreReport], model: &str| -> Option<ScoreReport> {
        reports.iter().find(|r| r.model_id == model).cloned()
    };
    let mut languages = vec![baseline.to_string()];
    languages.extend(reports_by_language.keys().filter(|l| *l != baseline).cloned());
    let models: BTreeSet<&str> = reports_by_language
        .values()
        .flatten()
        .map(|r| r.model_id.as_str())
        .collect();

    let mut rows = Vec::new();
    for model in models {
        let base_report = lookup(base, model);
        for metric in [DeltaMetric::PctPlayed, DeltaMetric::Quality] {
            let base_value = base_report.as_ref().and_then(|r| metric.of(r));
            let cells = languages
                .iter()
                .map(|lang| {
                    let value = lookup(&reports_by_language[lang], model)
                        .as_ref()
                        .and_then(|r| metric.of(r));
                    let delta = match (value, base_value) {
                        (Some(v), Some(b)) => Some(v - b),
                        _ => None,
                    };
                    DeltaCell { value, delta }
                })
                .collect();
            rows.push(DeltaRow {
                model_id: model.to_string(),
                metric,
                cells,
            });
        }
    }
    Ok(DeltaTable {
        baseline: baseline.to_string(),
        languages,
        rows,
    })
}

impl DeltaTable {
    pub fn cell(&self, model_id: &str, metric: DeltaMetric, language: &str) -> Option<&DeltaCell> {
        let col = self.languages.iter().position(|l| l == language)?;
        self.rows
            .iter()
            .find(|r| r.model_id == model_id && r.metric == metric)
            .map(|r| &r.cells[col])
    }

    /// CSV with a `model,metric,<languages...>` header and formatted cells.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["model".to_string(), "metric".to_string()];
        header.extend(self.languages.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.model_id.clone(), row.metric.as_str().to_string()];
            rec.extend(row.cells.iter().map(ToString::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::aggregate::{GameResult, ProductMode};

    fn report(model: &str, n_total: usize, qualities: &[f64]) -> ScoreReport {
        ScoreReport::from_results(
            model,
            vec![GameResult::from_qualities("reference", n_total, qualities)],
            ProductMode::Macro,
        )
    }

    #[test]
    fn fully_failed_language() {
        let mut by_lang = BTreeMap::new();
        by_lang.insert("en".to_string(), vec![report("m", 2, &[100.0, 0.0])]);
        by_lang.insert("tr".to_string(), vec![report("m", 2, &[])]);
        let table = language_delta(&by_lang, "en").unwrap();
        assert_eq!(
            table.cell("m", DeltaMetric::PctPlayed, "tr").unwrap().to_string(),
            "0.0 (-100.00)"
        );
        assert_eq!(
            table.cell("m", DeltaMetric::Quality, "tr").unwrap().to_string(),
            "nan (nan)"
        );
        assert_eq!(
            table.cell("m", DeltaMetric::PctPlayed, "en").unwrap().to_string(),
            "100.0 (0.00)"
        );
    }

    #[test]
    fn baseline_against_itself_is_zero() {
        let mut by_lang = BTreeMap::new();
        by_lang.insert("en".to_string(), vec![report("a", 3, &[100.0, 50.0]), report("b", 1, &[])]);
        let table = language_delta(&by_lang, "en").unwrap();
        for row in &table.rows {
            for cell in &row.cells {
                if let Some(d) = cell.delta {
                    assert_eq!(d, 0.0);
                }
            }
        }
        assert_eq!(table.languages, vec!["en"]);
    }

    #[test]
    fn missing_baseline() {
        let mut by_lang = BTreeMap::new();
        by_lang.insert("de".to_string(), vec![report("m", 1, &[1.0])]);
        assert_eq!(
            language_delta(&by_lang, "en"),
            Err(MissingBaseline("en".into()))
        );
    }

    #[test]
    fn csv_layout() {
        let mut by_lang = BTreeMap::new();
        by_lang.insert("en".to_string(), vec![report("m", 2, &[100.0, 0.0])]);
        by_lang.insert("de".to_string(), vec![report("m", 2, &[100.0])]);
        let csv = language_delta(&by_lang, "en").unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "model,metric,en,de");
        assert_eq!(lines[1], "m,pct_played,100.0 (0.00),50.0 (-50.00)");
        assert_eq!(lines[2], "m,quality,50.0 (0.00),100.0 (50.00)");
    }
}
