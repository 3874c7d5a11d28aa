//! Leaderboard and ranking exports, and ranking CSV input.

use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use super::aggregate::ScoreReport;
use super::format::fixed2;
use super::kendall::{common_models, CorrelationError, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Html,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "html" => Ok(ExportFormat::Html),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown format '{other}' (expected csv, html or json)")),
        }
    }
}

pub const LEADERBOARD_COLUMNS: [&str; 4] = ["model", "sc", "%pl", "qs"];

/// Reports ordered by exact clemscore, highest first, ties by model id.
pub fn sort_leaderboard(reports: &[ScoreReport]) -> Vec<&ScoreReport> {
    let mut sorted: Vec<&ScoreReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        b.clemscore
            .total_cmp(&a.clemscore)
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    sorted
}

/// Formatted leaderboard rows: model, sc, %pl, qs.
pub fn leaderboard_rows(reports: &[ScoreReport]) -> Vec<[String; 4]> {
    sort_leaderboard(reports)
        .into_iter()
        .map(|r| {
            [
                r.model_id.clone(),
                fixed2(Some(r.clemscore)),
                fixed2(Some(r.macro_pct_played)),
                fixed2(r.macro_quality),
            ]
        })
        .collect()
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn export_leaderboard(reports: &[ScoreReport], format: ExportFormat) -> String {
    match format {
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(LEADERBOARD_COLUMNS).expect("in-memory write");
            for row in leaderboard_rows(reports) {
                w.write_record(&row).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
        }
        ExportFormat::Html => {
            let mut out = String::from("<table>\n<thead><tr>");
            for col in LEADERBOARD_COLUMNS {
                out.push_str(&format!("<th>{}</th>", html_escape(col)));
            }
            out.push_str("</tr></thead>\n<tbody>\n");
            for row in leaderboard_rows(reports) {
                out.push_str("<tr>");
                for cell in &row {
                    out.push_str(&format!("<td>{}</td>", html_escape(cell)));
                }
                out.push_str("</tr>\n");
            }
            out.push_str("</tbody>\n</table>\n");
            out
        }
        ExportFormat::Json => {
            let sorted: Vec<&ScoreReport> = sort_leaderboard(reports);
            let mut s = serde_json::to_string_pretty(&sorted).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("ranking csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("ranking csv: score for '{0}' is not a finite number")]
    BadScore(String),
    #[error("ranking csv: model '{0}' appears twice")]
    Duplicate(String),
}

#[derive(Deserialize)]
struct RankingRow {
    model: String,
    score: f64,
}

/// Reads a `model,score` CSV. Names are mapped through `aliases`
/// (external name to internal id) when given.
pub fn read_ranking_csv(
    input: impl Read,
    aliases: Option<&BTreeMap<String, String>>,
) -> Result<Ranking, RankingError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut ranking = Ranking::new();
    for row in reader.deserialize() {
        let RankingRow { model, score } = row?;
        let model = aliases
            .and_then(|a| a.get(&model).cloned())
            .unwrap_or(model);
        if !score.is_finite() {
            return Err(RankingError::BadScore(model));
        }
        if ranking.insert(model.clone(), score).is_some() {
            return Err(RankingError::Duplicate(model));
        }
    }
    Ok(ranking)
}

/// Clemscores of `reports` as a ranking.
pub fn ranking_from_reports(reports: &[ScoreReport]) -> Ranking {
    reports
        .iter()
        .map(|r| (r.model_id.clone(), r.clemscore))
        .collect()
}

/// 1-based dense ranks, highest score first; equal scores share a rank.
pub fn dense_ranks(scores: &[(String, f64)]) -> BTreeMap<String, usize> {
    let mut distinct: Vec<f64> = scores.iter().map(|s| s.1).collect();
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    scores
        .iter()
        .map(|(m, s)| {
            let rank = distinct.iter().position(|d| d == s).expect("score is listed") + 1;
            (m.clone(), rank)
        })
        .collect()
}

/// CSV of `model,rank_a,rank_b` over the models both rankings share,
/// ranked among those models. Rows follow `rank_a`, then model id.
pub fn ranking_pairs_export(a: &Ranking, b: &Ranking) -> Result<String, CorrelationError> {
    let (common, _) = common_models(a, b);
    if common.len() < 2 {
        return Err(CorrelationError::TooFewCommonModels {
            n_common: common.len(),
        });
    }
    let ra = dense_ranks(&common.iter().map(|c| (c.0.clone(), c.1)).collect::<Vec<_>>());
    let rb = dense_ranks(&common.iter().map(|c| (c.0.clone(), c.2)).collect::<Vec<_>>());
    let mut rows: Vec<(usize, &str, usize)> = common
        .iter()
        .map(|c| (ra[&c.0], c.0.as_str(), rb[&c.0]))
        .collect();
    rows.sort();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "rank_a", "rank_b"]).expect("in-memory write");
    for (rank_a, model, rank_b) in rows {
        w.write_record([model, &rank_a.to_string(), &rank_b.to_string()])
            .expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::aggregate::{GameResult, ProductMode};

    fn report(model: &str, quality: f64) -> ScoreReport {
        ScoreReport::from_results(
            model,
            vec![GameResult::from_qualities("reference", 1, &[quality])],
            ProductMode::Macro,
        )
    }

    fn ranking(pairs: &[(&str, f64)]) -> Ranking {
        pairs.iter().map(|(m, s)| (m.to_string(), *s)).collect()
    }

    #[test]
    fn sorted_by_score_then_id() {
        let reports = vec![report("b", 40.0), report("c", 86.93), report("a", 40.0)];
        let rows = leaderboard_rows(&reports);
        let order: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(order, vec!["c", "a", "b"]);
        assert_eq!(rows[0][1], "86.93");
    }

    #[test]
    fn csv_header_and_values() {
        let csv = export_leaderboard(&[report("m", 50.0)], ExportFormat::Csv);
        assert_eq!(csv, "model,sc,%pl,qs\nm,50.00,100.00,50.00\n");
    }

    #[test]
    fn html_escapes_ids() {
        let html = export_leaderboard(&[report("<m>", 50.0)], ExportFormat::Html);
        assert!(html.contains("<td>&lt;m&gt;</td>"));
    }

    #[test]
    fn ranking_csv_with_aliases() {
        let text = "model,score\nGPT-4 (0613),1250\nclaude,1200\n";
        let aliases: BTreeMap<String, String> =
            [("GPT-4 (0613)".to_string(), "gpt-4-0613".to_string())].into();
        let r = read_ranking_csv(text.as_bytes(), Some(&aliases)).unwrap();
        assert_eq!(r["gpt-4-0613"], 1250.0);
        assert_eq!(r["claude"], 1200.0);
        let dup = "model,score\na,1\na,2\n";
        assert!(matches!(
            read_ranking_csv(dup.as_bytes(), None),
            Err(RankingError::Duplicate(_))
        ));
    }

    #[test]
    fn pairs_use_common_models_and_dense_ranks() {
        let a = ranking(&[("x", 10.0), ("y", 10.0), ("z", 5.0), ("only_a", 99.0)]);
        let b = ranking(&[("x", 1.0), ("y", 3.0), ("z", 2.0)]);
        let csv = ranking_pairs_export(&a, &b).unwrap();
        assert_eq!(csv, "model,rank_a,rank_b\nx,1,3\ny,1,1\nz,2,2\n");
    }
}
