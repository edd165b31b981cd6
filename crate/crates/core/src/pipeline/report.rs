//! Report tables built from persisted artifacts: forecast accuracy with
//! significance counts, Granger counts, DM p-values and classifier metrics.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::artifacts::OutputDir;
use super::config::PipelineConfig;
use super::stages::{load_filter_summaries, load_forecast_reports, load_granger_summary, FilterSummary, GrangerSummary};
use super::Result;
use crate::econometrics::{ForecastReport, Variant};

pub const BENCHMARKS: [Variant; 3] = [Variant::Bm1, Variant::Bm2, Variant::Bm3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Outperform,
    Underperform,
    Tie,
}

impl Mark {
    pub fn compare(model: f64, benchmark: f64) -> Mark {
        if model < benchmark {
            Mark::Outperform
        } else if model > benchmark {
            Mark::Underperform
        } else {
            Mark::Tie
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Mark::Outperform => "+",
            Mark::Underperform => "-",
            Mark::Tie => "=",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mark::Outperform => "outperform",
            Mark::Underperform => "underperform",
            Mark::Tie => "tie",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub country: String,
    pub variable: String,
    /// MODEL, BM1, BM2, BM3.
    pub rmse: [f64; 4],
    /// MODEL against BM1, BM2, BM3.
    pub marks: [Mark; 3],
    pub model_significance: String,
    pub bm2_significance: String,
    pub lag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmRow {
    pub country: String,
    pub variable: String,
    /// Against BM1, BM2, BM3.
    pub p_values: [f64; 3],
    pub statistics: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerRow {
    pub country: String,
    pub variable: String,
    pub filtered_score_to_macro: usize,
    pub filtered_macro_to_score: usize,
    pub unfiltered_score_to_macro: usize,
    pub unfiltered_macro_to_score: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub rmse: Vec<RmseRow>,
    pub dm: Vec<DmRow>,
    pub granger: Vec<GrangerRow>,
    pub classifier: Vec<FilterSummary>,
}

fn rmse_row(r: &ForecastReport) -> RmseRow {
    let get = |v: Variant| r.rmse(v).unwrap_or(f64::NAN);
    let rmse = [get(Variant::Model), get(Variant::Bm1), get(Variant::Bm2), get(Variant::Bm3)];
    let sig = |v: Variant| r.variant(v).map_or("-".to_string(), |x| x.significance.label());
    RmseRow {
        country: r.country.clone(),
        variable: r.variable.clone(),
        rmse,
        marks: [1, 2, 3].map(|i| Mark::compare(rmse[0], rmse[i])),
        model_significance: sig(Variant::Model),
        bm2_significance: sig(Variant::Bm2),
        lag: r.lag,
    }
}

fn dm_row(r: &ForecastReport) -> DmRow {
    let get = |v: Variant| r.dm_against(v);
    DmRow {
        country: r.country.clone(),
        variable: r.variable.clone(),
        p_values: BENCHMARKS.map(|b| get(b).map_or(f64::NAN, |d| d.p_value)),
        statistics: BENCHMARKS.map(|b| get(b).map_or(f64::NAN, |d| d.statistic)),
    }
}

fn granger_rows(summary: &[GrangerSummary]) -> Vec<GrangerRow> {
    let mut rows: Vec<GrangerRow> = Vec::new();
    for s in summary {
        let pos = rows.iter().position(|r| r.country == s.country && r.variable == s.variable);
        let row = match pos {
            Some(i) => &mut rows[i],
            None => {
                rows.push(GrangerRow {
                    country: s.country.clone(),
                    variable: s.variable.clone(),
                    filtered_score_to_macro: 0,
                    filtered_macro_to_score: 0,
                    unfiltered_score_to_macro: 0,
                    unfiltered_macro_to_score: 0,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        if s.panel == "filtered" {
            row.filtered_score_to_macro = s.score_to_macro;
            row.filtered_macro_to_score = s.macro_to_score;
        } else {
            row.unfiltered_score_to_macro = s.score_to_macro;
            row.unfiltered_macro_to_score = s.macro_to_score;
        }
    }
    rows
}

pub fn build_tables(reports: &[ForecastReport], granger: &[GrangerSummary], classifier: Vec<FilterSummary>) -> Tables {
    Tables {
        rmse: reports.iter().map(rmse_row).collect(),
        dm: reports.iter().map(dm_row).collect(),
        granger: granger_rows(granger),
        classifier,
    }
}

/// Collect every input from `dir` and build the tables.
pub fn generate_report(cfg: &PipelineConfig, dir: &OutputDir) -> Result<Tables> {
    let reports = load_forecast_reports(dir, cfg)?;
    let granger = load_granger_summary(dir)?;
    let classifier = load_filter_summaries(dir, cfg)?;
    Ok(build_tables(&reports, &granger, classifier))
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn write_rmse_csv(path: &Path, rows: &[RmseRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "country", "variable", "lag", "MODEL", "BM1", "BM2", "BM3", "vs_BM1", "vs_BM2", "vs_BM3", "MODEL_sign",
        "BM2_sign",
    ])?;
    for r in rows {
        let mut rec = vec![r.country.clone(), r.variable.clone(), r.lag.to_string()];
        rec.extend(r.rmse.iter().map(|v| f4(*v)));
        rec.extend(r.marks.iter().map(|m| m.name().to_string()));
        rec.push(r.model_significance.clone());
        rec.push(r.bm2_significance.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dm_csv(path: &Path, rows: &[DmRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["country", "variable", "p_BM1", "p_BM2", "p_BM3", "stat_BM1", "stat_BM2", "stat_BM3"])?;
    for r in rows {
        let mut rec = vec![r.country.clone(), r.variable.clone()];
        rec.extend(r.p_values.iter().map(|v| f4(*v)));
        rec.extend(r.statistics.iter().map(|v| f4(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_granger_csv(path: &Path, rows: &[GrangerRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "country",
        "variable",
        "filtered_score_to_macro",
        "filtered_macro_to_score",
        "unfiltered_score_to_macro",
        "unfiltered_macro_to_score",
    ])?;
    for r in rows {
        w.write_record([
            r.country.clone(),
            r.variable.clone(),
            r.filtered_score_to_macro.to_string(),
            r.filtered_macro_to_score.to_string(),
            r.unfiltered_score_to_macro.to_string(),
            r.unfiltered_macro_to_score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_classifier_csv(path: &Path, rows: &[FilterSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["variable", "labeled", "precision", "recall", "f1", "keyword_passed", "retained", "discarded"])?;
    for r in rows {
        let (p, rc, f) = r
            .metrics
            .as_ref()
            .map_or((String::new(), String::new(), String::new()), |m| (f4(m.precision), f4(m.recall), f4(m.f1)));
        w.write_record([
            r.variable.clone(),
            r.labeled.to_string(),
            p,
            rc,
            f,
            r.stats.keyword_passed.to_string(),
            r.stats.retained.to_string(),
            r.stats.discarded.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn markdown(t: &Tables) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Forecast report\n");
    let _ = writeln!(s, "## RMSE by variant\n");
    let _ = writeln!(s, "| Country | Variable | MODEL | BM1 | BM2 | BM3 | Sign |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    for r in &t.rmse {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {}{} | {}{} | {}{} | {} |",
            r.country,
            r.variable,
            f4(r.rmse[0]),
            f4(r.rmse[1]),
            r.marks[0].symbol(),
            f4(r.rmse[2]),
            r.marks[1].symbol(),
            f4(r.rmse[3]),
            r.marks[2].symbol(),
            r.model_significance
        );
    }
    let _ = writeln!(s, "\n`+` marks a benchmark that MODEL outperforms, `-` one it does not.\n");
    let _ = writeln!(s, "## Significant BH-adjusted Granger tests\n");
    let _ = writeln!(s, "| Country | Variable | Filtered s→m | Filtered m→s | Unfiltered s→m | Unfiltered m→s |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for r in &t.granger {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            r.country,
            r.variable,
            r.filtered_score_to_macro,
            r.filtered_macro_to_score,
            r.unfiltered_score_to_macro,
            r.unfiltered_macro_to_score
        );
    }
    let _ = writeln!(s, "\n## Modified Diebold-Mariano p-values (MODEL against benchmark)\n");
    let _ = writeln!(s, "| Country | Variable | BM1 | BM2 | BM3 |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for r in &t.dm {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            r.country,
            r.variable,
            f4(r.p_values[0]),
            f4(r.p_values[1]),
            f4(r.p_values[2])
        );
    }
    let _ = writeln!(s, "\n## Relevance classifier\n");
    let _ = writeln!(s, "| Variable | Labelled | Precision | Recall | F1 | Retained |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for r in &t.classifier {
        let m = r.metrics.as_ref();
        let cell = |f: fn(&crate::relevance::ClassifierMetrics) -> f64| m.map_or("-".to_string(), |m| f4(f(m)));
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} of {} |",
            r.variable,
            r.labeled,
            cell(|m| m.precision),
            cell(|m| m.recall),
            cell(|m| m.f1),
            r.stats.retained,
            r.stats.keyword_passed
        );
    }
    s
}

pub const TABLE_RMSE: &str = "report/table_rmse.csv";
pub const TABLE_DM: &str = "report/table_dm.csv";
pub const TABLE_GRANGER: &str = "report/table_granger.csv";
pub const TABLE_CLASSIFIER: &str = "report/table_classifier.csv";
pub const TABLES_JSON: &str = "report/tables.json";
pub const REPORT_MD: &str = "report/report.md";

pub fn report_stage(cfg: &PipelineConfig, dir: &mut OutputDir) -> Result<()> {
    let tables = generate_report(cfg, dir)?;
    dir.write_with(TABLE_RMSE, |p| write_rmse_csv(p, &tables.rmse))?;
    dir.write_with(TABLE_DM, |p| write_dm_csv(p, &tables.dm))?;
    dir.write_with(TABLE_GRANGER, |p| write_granger_csv(p, &tables.granger))?;
    dir.write_with(TABLE_CLASSIFIER, |p| write_classifier_csv(p, &tables.classifier))?;
    dir.write_bytes(REPORT_MD, markdown(&tables).as_bytes())?;
    dir.write_json(TABLES_JSON, &tables)?;
    Ok(())
}
