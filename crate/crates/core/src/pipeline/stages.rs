//! Stage implementations. Each stage reads the artifacts of earlier stages
//! from the output directory and writes only under its own sub-directory.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::artifacts::{read_json, sha256_bytes, sha256_file, OutputDir, RunManifest};
use super::config::{ClassifierMode, PipelineConfig, Seeds, VariableConfig};
use super::macro_data::{ingest_macro, load_frame, save_frame, AdfScreen};
use super::report;
use super::{PipelineError, Result, Stage};
use crate::aggregate::{aggregate_by_month, build_panel, location_filter, sample_unfiltered, SentimentPanel};
use crate::econometrics::forecast::ardl_design;
use crate::econometrics::granger::count_significant;
use crate::econometrics::ols::ols_lenient;
use crate::econometrics::pls::FactorCvRow;
use crate::econometrics::{factor_cv, forecast_suite, granger_tests, Direction, ForecastReport, GrangerResult, Variant};
use crate::emotions::{emit_radar, profile_components, EmotionMap, EmotionProfile, RadarChart, ScoreCodebook};
use crate::gkg::{scan_file, GkgRecord, ScanStats};
use crate::month::YearMonth;
use crate::relevance::{
    evaluate_kfold, filter_corpus, import_predictions, keyword_filter, load_labels, read_predictions, train_naive_bayes,
    write_predictions, ClassifierMetrics, Confusion, FilterStats, LabeledExample, RelevancePrediction, RelevanceScorer,
    ThemeVocabulary,
};

pub const CORPUS: &str = "ingest/corpus.gkg";
pub const SCAN_STATS: &str = "ingest/scan_stats.json";
pub const ADF_SCREENING: &str = "ingest/adf_screening.json";
pub const AGGREGATE_SUMMARY: &str = "aggregate/summary.json";
pub const GRANGER_SUMMARY: &str = "granger/summary.json";

pub fn macro_rel(country: &str, variable: &str) -> String {
    format!("ingest/macro/{country}_{variable}.csv")
}

pub fn filter_rel(variable: &str, file: &str) -> String {
    format!("filter/{variable}/{file}")
}

pub fn filtered_panel_rel(country: &str, variable: &str) -> String {
    format!("aggregate/{country}/{variable}_filtered.csv")
}

pub fn unfiltered_panel_rel(country: &str) -> String {
    format!("aggregate/{country}/unfiltered.csv")
}

pub fn granger_rel(country: &str, variable: &str, panel: &str) -> String {
    format!("granger/{country}_{variable}_{panel}.csv")
}

pub fn forecast_rel(country: &str, variable: &str, file: &str) -> String {
    format!("forecast/{country}_{variable}/{file}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub scan: ScanStats,
    pub out_of_range: u64,
    pub duplicate_ids: u64,
    pub retained: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub variable: String,
    pub mode: ClassifierMode,
    pub labeled: usize,
    /// Labels whose record did not pass the keyword filter.
    pub labels_unmatched: usize,
    pub metrics: Option<ClassifierMetrics>,
    pub stats: FilterStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub country: String,
    /// `None` for the unfiltered panel.
    pub variable: Option<String>,
    pub records: usize,
    pub columns: usize,
    pub dropped_all_zero: usize,
    pub dropped_zero_variance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerSummary {
    pub country: String,
    pub variable: String,
    pub panel: String,
    pub alpha: f64,
    pub score_to_macro: usize,
    pub macro_to_score: usize,
    pub tested: usize,
    pub untestable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionSummary {
    pub country: String,
    pub variable: String,
    pub alpha: f64,
    pub profiles: Vec<EmotionProfile>,
    /// Panel columns with no emotion.
    pub unmapped_columns: Vec<String>,
}

/// Load the config, apply a seed override and run `stage` (all when `None`).
pub fn run(config_path: &Path, out: &Path, stage: Option<Stage>, seed: Option<u64>) -> Result<RunManifest> {
    let mut cfg = PipelineConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg.seeds = Seeds::from_master(s);
    }
    let stages = match stage {
        Some(s) => vec![s],
        None => Stage::ALL.to_vec(),
    };
    run_stages(&cfg, out, &stages)
}

pub fn run_stages(cfg: &PipelineConfig, out: &Path, stages: &[Stage]) -> Result<RunManifest> {
    let mut dir = OutputDir::open(out)?;
    for &stage in stages {
        log::info!("stage {stage}");
        let result = dir.begin_stage(stage).and_then(|_| match stage {
            Stage::Ingest => ingest(cfg, &mut dir),
            Stage::Filter => filter(cfg, &mut dir),
            Stage::Aggregate => aggregate(cfg, &mut dir),
            Stage::Granger => granger(cfg, &mut dir),
            Stage::Forecast => forecast(cfg, &mut dir),
            Stage::Report => report::report_stage(cfg, &mut dir),
        });
        result.map_err(|e| e.in_stage(stage))?;
    }
    let config_sha = sha256_bytes(&serde_json::to_vec(cfg)?);
    dir.finish(config_sha, input_digests(cfg)?)
}

fn input_digests(cfg: &PipelineConfig) -> Result<BTreeMap<String, String>> {
    let mut paths: Vec<&Path> = cfg.corpus.iter().map(|p| p.as_path()).collect();
    paths.extend(cfg.controls.values().map(|p| p.as_path()));
    for v in &cfg.variables {
        paths.extend(v.labels.iter().map(|p| p.as_path()));
        paths.extend(v.predictions.iter().map(|p| p.as_path()));
        paths.extend(v.targets.values().map(|p| p.as_path()));
    }
    paths.extend(cfg.emotion_map.iter().map(|p| p.as_path()));
    paths.extend(cfg.codebook.iter().map(|p| p.as_path()));
    let mut out = BTreeMap::new();
    for p in paths {
        if p.exists() {
            out.insert(p.display().to_string(), sha256_file(p)?);
        }
    }
    Ok(out)
}

pub fn load_corpus(dir: &OutputDir, cfg: &PipelineConfig) -> Result<Vec<GkgRecord>> {
    let path = dir.require(CORPUS)?;
    let mut records = Vec::new();
    let stats = scan_file(&path, &cfg.schema, |r| records.push(r)).map_err(|e| PipelineError::io(&path, e))?;
    if stats.skipped > 0 {
        return Err(PipelineError::SelfCheck {
            path,
            reason: format!("{} canonical rows failed to parse", stats.skipped),
        });
    }
    Ok(records)
}

fn ingest(cfg: &PipelineConfig, dir: &mut OutputDir) -> Result<()> {
    let (start, end) = (cfg.start, cfg.end);
    let mut scan = ScanStats::default();
    let mut seen = HashSet::new();
    let (mut out_of_range, mut duplicates) = (0u64, 0u64);
    let corpus_path = dir.path(CORPUS);
    let file = std::fs::File::create(&corpus_path).map_err(|e| PipelineError::io(&corpus_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut write_err = None;
    let mut retained = 0u64;
    for path in &cfg.corpus {
        let stats = scan_file(path, &cfg.schema, |r| {
            let m = YearMonth::of(r.date());
            if m < start || m > end {
                out_of_range += 1;
            } else if !seen.insert(r.record_id.clone()) {
                duplicates += 1;
            } else if write_err.is_none() {
                retained += 1;
                if let Err(e) = writeln!(w, "{}", r.serialize(&cfg.schema)) {
                    write_err = Some(e);
                }
            }
        })
        .map_err(|e| PipelineError::io(path, e))?;
        scan.merge(&stats);
    }
    if let Some(e) = write_err {
        return Err(PipelineError::io(&corpus_path, e));
    }
    w.flush().map_err(|e| PipelineError::io(&corpus_path, e))?;
    drop(w);
    dir.track(CORPUS)?;
    log::info!("ingested {retained} records ({} skipped)", scan.skipped);
    dir.write_json(
        SCAN_STATS,
        &IngestStats {
            scan,
            out_of_range,
            duplicate_ids: duplicates,
            retained,
        },
    )?;

    let months = cfg.months();
    let mut screens: BTreeMap<String, AdfScreen> = BTreeMap::new();
    for v in &cfg.variables {
        let controls: Vec<(String, &Path)> = v.controls.iter().map(|c| (c.clone(), cfg.controls[c].as_path())).collect();
        for country in &cfg.countries {
            let (frame, s) = ingest_macro(&v.name, &v.targets[country], &controls, &months, cfg.adf_max_lag)
                .map_err(|e| e.context(format!("{country} {}", v.name)))?;
            for (i, mut screen) in s.into_iter().enumerate() {
                if i == 0 {
                    screen.series = format!("{country}_{}", v.name);
                }
                screens.insert(screen.series.clone(), screen);
            }
            dir.write_with(&macro_rel(country, &v.name), |p| save_frame(&frame, p))?;
        }
    }
    let screens: Vec<AdfScreen> = screens.into_values().collect();
    dir.write_json(ADF_SCREENING, &screens)?;
    Ok(())
}

/// Unpadded encoded sequence.
fn encode_unpadded(vocab: &ThemeVocabulary, themes: &[String]) -> Vec<u32> {
    let mut ids = vocab.encode(themes);
    let pad = vocab.pad_id();
    while ids.last() == Some(&pad) {
        ids.pop();
    }
    ids
}

fn filter(cfg: &PipelineConfig, dir: &mut OutputDir) -> Result<()> {
    let records = load_corpus(dir, cfg)?;
    for v in &cfg.variables {
        filter_variable(cfg, dir, &records, v).map_err(|e| e.context(format!("variable {}", v.name)))?;
    }
    Ok(())
}

fn filter_variable(cfg: &PipelineConfig, dir: &mut OutputDir, records: &[GkgRecord], v: &VariableConfig) -> Result<()> {
    let passing: Vec<&GkgRecord> = records.iter().filter(|r| keyword_filter(r, &v.keywords)).collect();
    let vocab = ThemeVocabulary::build(passing.iter().map(|r| r.themes.as_slice()), cfg.classifier.max_len);
    dir.write_json(&filter_rel(&v.name, "vocabulary.json"), &vocab)?;

    // Encoded sequences for external classifiers: ids separated by spaces, unpadded.
    dir.write_with(&filter_rel(&v.name, "encoded.csv"), |p| {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["record_id", "tokens"])?;
        for r in &passing {
            let ids = encode_unpadded(&vocab, &r.themes);
            let tokens: Vec<String> = ids.iter().map(u32::to_string).collect();
            w.write_record([r.record_id.as_str(), &tokens.join(" ")])?;
        }
        w.flush()?;
        Ok(())
    })?;

    let labels = match &v.labels {
        Some(p) => Some(load_labels(p)?),
        None => None,
    };
    let passing_ids: HashSet<&str> = passing.iter().map(|r| r.record_id.as_str()).collect();
    let labels_unmatched = labels
        .as_ref()
        .map_or(0, |l| l.keys().filter(|id| !passing_ids.contains(id.as_str())).count());
    if labels_unmatched > 0 {
        log::warn!("{}: {labels_unmatched} labelled records do not pass the keyword filter", v.name);
    }

    let (predictions, metrics, labeled) = match cfg.classifier.mode {
        ClassifierMode::Native => {
            let labels = labels.as_ref().expect("validated");
            let examples: Vec<LabeledExample> = passing
                .iter()
                .filter_map(|r| {
                    labels.get(&r.record_id).map(|&label| LabeledExample {
                        record_id: r.record_id.clone(),
                        encoded_themes: encode_unpadded(&vocab, &r.themes),
                        label,
                    })
                })
                .collect();
            let metrics = evaluate_kfold(&examples, cfg.classifier.folds, cfg.seeds.cv, |tr| {
                train_naive_bayes(tr, &vocab)
            })?;
            let model = train_naive_bayes(&examples, &vocab)?;
            dir.write_json(&filter_rel(&v.name, "model.json"), &model)?;
            let preds: Vec<RelevancePrediction> = passing
                .iter()
                .map(|r| RelevancePrediction::new(r.record_id.clone(), model.probability(&encode_unpadded(&vocab, &r.themes))))
                .collect();
            (preds, Some(metrics), examples.len())
        }
        ClassifierMode::Imported => {
            let path = v.predictions.as_ref().expect("validated");
            let preds = import_predictions(path)?;
            let (metrics, labeled) = match &labels {
                Some(l) => {
                    let mut c = Confusion::default();
                    let mut n = 0;
                    for p in &preds {
                        if let Some(&actual) = l.get(&p.record_id) {
                            c.add(p.label, actual);
                            n += 1;
                        }
                    }
                    (Some(c.metrics()), n)
                }
                None => (None, 0),
            };
            (preds, metrics, labeled)
        }
    };

    let pred_path = dir.write_with(&filter_rel(&v.name, "predictions.csv"), |p| {
        let f = std::fs::File::create(p).map_err(|e| PipelineError::io(p, e))?;
        write_predictions(f, &predictions)?;
        Ok(())
    })?;
    let back = read_predictions(std::fs::File::open(&pred_path).map_err(|e| PipelineError::io(&pred_path, e))?)?;
    if back != predictions {
        return Err(PipelineError::SelfCheck {
            path: pred_path,
            reason: "predictions do not round-trip".into(),
        });
    }

    let map: HashMap<String, RelevancePrediction> = predictions.into_iter().map(|p| (p.record_id.clone(), p)).collect();
    let (kept, stats) = filter_corpus(records, &v.keywords, Some(&map), None)?;
    let ids: String = kept.iter().map(|r| format!("{}\n", r.record_id)).collect();
    dir.write_bytes(&filter_rel(&v.name, "retained_ids.txt"), ids.as_bytes())?;
    if let Some(m) = &metrics {
        log::info!(
            "{}: precision {:.4} recall {:.4} F1 {:.4}; kept {} of {}",
            v.name,
            m.precision,
            m.recall,
            m.f1,
            stats.retained,
            stats.keyword_passed
        );
    }
    dir.write_json(
        &filter_rel(&v.name, "metrics.json"),
        &FilterSummary {
            variable: v.name.clone(),
            mode: cfg.classifier.mode,
            labeled,
            labels_unmatched,
            metrics,
            stats,
        },
    )?;
    Ok(())
}

fn read_ids(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn save_panel_checked(dir: &mut OutputDir, rel: &str, panel: &SentimentPanel) -> Result<()> {
    let p = dir.write_with(rel, |p| Ok(panel.save(p)?))?;
    let meta_rel = format!("{}.meta.json", rel.trim_end_matches(".csv"));
    dir.track(&meta_rel)?;
    let back = SentimentPanel::load(&p)?;
    if &back != panel {
        return Err(PipelineError::SelfCheck {
            path: p,
            reason: "panel does not round-trip".into(),
        });
    }
    Ok(())
}

fn aggregate(cfg: &PipelineConfig, dir: &mut OutputDir) -> Result<()> {
    let records = load_corpus(dir, cfg)?;
    let mut summary = Vec::new();
    let mut retained: BTreeMap<&str, Vec<&GkgRecord>> = BTreeMap::new();
    for v in &cfg.variables {
        let ids = read_ids(&dir.require(&filter_rel(&v.name, "retained_ids.txt"))?)?;
        retained.insert(&v.name, records.iter().filter(|r| ids.contains(&r.record_id)).collect());
    }
    for country in &cfg.countries {
        let group = cfg.group_for(country);
        for v in &cfg.variables {
            let recs = location_filter(retained[v.name.as_str()].iter().copied(), &group);
            let panel = build_panel(&aggregate_by_month(recs.iter().copied(), None)?, cfg.start, cfg.end)
                .map_err(|e| PipelineError::from(e).context(format!("{country} {} filtered panel", v.name)))?;
            summary.push(panel_summary(country, Some(&v.name), recs.len(), &panel));
            save_panel_checked(dir, &filtered_panel_rel(country, &v.name), &panel)?;
        }
        let located: Vec<&GkgRecord> = location_filter(records.iter(), &group);
        let sample = sample_unfiltered(&located, cfg.unfiltered_per_year, cfg.seeds.sample);
        let panel = build_panel(&aggregate_by_month(sample.iter().copied(), None)?, cfg.start, cfg.end)
            .map_err(|e| PipelineError::from(e).context(format!("{country} unfiltered panel")))?;
        summary.push(panel_summary(country, None, sample.len(), &panel));
        save_panel_checked(dir, &unfiltered_panel_rel(country), &panel)?;
    }
    dir.write_json(AGGREGATE_SUMMARY, &summary)?;
    Ok(())
}

fn panel_summary(country: &str, variable: Option<&str>, records: usize, panel: &SentimentPanel) -> PanelSummary {
    PanelSummary {
        country: country.to_string(),
        variable: variable.map(str::to_string),
        records,
        columns: panel.n_cols(),
        dropped_all_zero: panel.meta.dropped_all_zero.len(),
        dropped_zero_variance: panel.meta.dropped_zero_variance.len(),
    }
}

/// Macro frame restricted to the panel months (the first month is lost to differencing).
pub fn load_aligned_frame(
    dir: &OutputDir,
    cfg: &PipelineConfig,
    country: &str,
    variable: &str,
) -> Result<crate::econometrics::TimeSeriesFrame> {
    let frame = load_frame(&dir.require(&macro_rel(country, variable))?)?;
    Ok(frame.slice_months(cfg.start.succ(), cfg.end)?)
}

fn load_panel(dir: &OutputDir, rel: &str) -> Result<SentimentPanel> {
    Ok(SentimentPanel::load(&dir.require(rel)?)?)
}

fn write_granger_csv(path: &Path, results: &[GrangerResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["score", "direction", "lag", "f_stat", "p_raw", "p_adjusted", "df_num", "df_den"])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in results {
        let direction = match r.direction {
            Direction::ScoreToMacro => "score_to_macro",
            Direction::MacroToScore => "macro_to_score",
        };
        w.write_record([
            r.score.clone(),
            direction.to_string(),
            r.lag.to_string(),
            opt(r.f_stat),
            opt(r.p_raw),
            opt(r.p_adjusted),
            r.df_num.to_string(),
            r.df_den.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn granger(cfg: &PipelineConfig, dir: &mut OutputDir) -> Result<()> {
    let mut summary = Vec::new();
    for country in &cfg.countries {
        let unfiltered = load_panel(dir, &unfiltered_panel_rel(country))?;
        for v in &cfg.variables {
            let frame = load_aligned_frame(dir, cfg, country, &v.name)?;
            let target: Vec<f64> = frame.target_series().iter().copied().collect();
            let filtered = load_panel(dir, &filtered_panel_rel(country, &v.name))?;
            for (kind, panel) in [("filtered", &filtered), ("unfiltered", &unfiltered)] {
                if panel.months != frame.months {
                    return Err(PipelineError::Config(format!("{country} {kind} panel months differ from the macro frame")));
                }
                let results = granger_tests(panel, &target, cfg.granger.max_lag)
                    .map_err(|e| PipelineError::from(e).context(format!("{country} {} {kind}", v.name)))?;
                let tested = results.iter().filter(|r| r.testable()).count();
                summary.push(GrangerSummary {
                    country: country.clone(),
                    variable: v.name.clone(),
                    panel: kind.to_string(),
                    alpha: cfg.granger.alpha,
                    score_to_macro: count_significant(&results, Direction::ScoreToMacro, cfg.granger.alpha),
                    macro_to_score: count_significant(&results, Direction::MacroToScore, cfg.granger.alpha),
                    tested,
                    untestable: results.len() - tested,
                });
                dir.write_with(&granger_rel(country, &v.name, kind), |p| write_granger_csv(p, &results))?;
            }
        }
    }
    dir.write_json(GRANGER_SUMMARY, &summary)?;
    Ok(())
}

pub fn emotion_inputs(cfg: &PipelineConfig) -> Result<(EmotionMap, Option<ScoreCodebook>)> {
    let mut map = EmotionMap::default_map();
    if let Some(p) = &cfg.emotion_map {
        map = map.overridden_by(&EmotionMap::load(p)?);
    }
    let codebook = cfg.codebook.as_ref().map(|p| ScoreCodebook::load(p)).transpose()?;
    Ok((map, codebook))
}

fn forecast(cfg: &PipelineConfig, dir: &mut OutputDir) -> Result<()> {
    let (map, codebook) = emotion_inputs(cfg)?;
    for country in &cfg.countries {
        let unfiltered = load_panel(dir, &unfiltered_panel_rel(country))?;
        for v in &cfg.variables {
            let frame = load_aligned_frame(dir, cfg, country, &v.name)?;
            let filtered = load_panel(dir, &filtered_panel_rel(country, &v.name))?;
            let ctx = |e: PipelineError| e.context(format!("{country} {}", v.name));
            let mut report = forecast_suite(&frame, &filtered, Some(&unfiltered), &Variant::ALL, &cfg.forecast)
                .map_err(|e| ctx(e.into()))?;
            report.country = country.clone();
            report.variable = v.name.clone();
            log::info!(
                "{country} {}: RMSE MODEL {:.4} BM1 {:.4} BM2 {:.4} BM3 {:.4}",
                v.name,
                report.rmse(Variant::Model).unwrap_or(f64::NAN),
                report.rmse(Variant::Bm1).unwrap_or(f64::NAN),
                report.rmse(Variant::Bm2).unwrap_or(f64::NAN),
                report.rmse(Variant::Bm3).unwrap_or(f64::NAN),
            );
            dir.write_json(&forecast_rel(country, &v.name, "report.json"), &report)?;

            let cv = factor_count_table(&frame, &filtered, report.lag, cfg).map_err(ctx)?;
            dir.write_with(&forecast_rel(country, &v.name, "factor_cv.csv"), |p| {
                let mut w = csv::Writer::from_path(p)?;
                w.write_record(["components", "r2", "cv_rss"])?;
                for r in &cv {
                    w.write_record([r.components.to_string(), r.r2.to_string(), r.rss.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;

            let summary = emotion_summary(&report, &filtered, &map, codebook.as_ref(), cfg.emotion_alpha)?;
            if !summary.profiles.is_empty() {
                let chart = RadarChart::new(country, &v.name, &summary.profiles);
                let rel = forecast_rel(country, &v.name, "radar.json");
                dir.write_with(&rel, |p| Ok(emit_radar(&chart, p)?))?;
                dir.track(&forecast_rel(country, &v.name, "radar.csv"))?;
            }
            dir.write_json(&forecast_rel(country, &v.name, "emotions.json"), &summary)?;
        }
    }
    Ok(())
}

/// In-sample R² and contiguous-fold CV RSS of PLS on full-sample BM1 residuals.
pub fn factor_count_table(
    frame: &crate::econometrics::TimeSeriesFrame,
    panel: &SentimentPanel,
    p: usize,
    cfg: &PipelineConfig,
) -> Result<Vec<FactorCvRow>> {
    let y = frame.target_series();
    let n = y.len();
    let x = ardl_design(&y, &frame.control_matrix(), p, p..n);
    let target = DVector::from_iterator(n - p, y.iter().skip(p).copied());
    let resid = ols_lenient(&x, &target)?.residuals;
    let xs = panel.values.rows(p - 1, n - p).into_owned();
    let max_a = cfg.factor_cv_max.min(panel.n_cols()).min(n - p - 1);
    let components: Vec<usize> = (0..=max_a).collect();
    match factor_cv(&xs, &resid, &components, cfg.factor_cv_folds) {
        Ok(rows) => Ok(rows),
        Err(crate::econometrics::EconError::RankDeficiency { extracted, .. }) => {
            let components: Vec<usize> = (0..=extracted).collect();
            Ok(factor_cv(&xs, &resid, &components, cfg.factor_cv_folds)?)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn emotion_summary(
    report: &ForecastReport,
    panel: &SentimentPanel,
    map: &EmotionMap,
    codebook: Option<&ScoreCodebook>,
    alpha: f64,
) -> Result<EmotionSummary> {
    let profiles = match &report.final_pls {
        Some(pls) => profile_components(&pls.x_loadings, &panel.columns, map, codebook, &report.component_p_values, alpha)?,
        None => Vec::new(),
    };
    let unmapped_columns = panel
        .columns
        .iter()
        .filter(|c| crate::emotions::column_emotion(c, map, codebook).is_none())
        .cloned()
        .collect();
    Ok(EmotionSummary {
        country: report.country.clone(),
        variable: report.variable.clone(),
        alpha,
        profiles,
        unmapped_columns,
    })
}

/// Every report and summary the report stage consumes.
pub fn load_forecast_reports(dir: &OutputDir, cfg: &PipelineConfig) -> Result<Vec<ForecastReport>> {
    let mut out = Vec::new();
    for country in &cfg.countries {
        for v in &cfg.variables {
            out.push(read_json(&dir.require(&forecast_rel(country, &v.name, "report.json"))?)?);
        }
    }
    Ok(out)
}

pub fn load_granger_summary(dir: &OutputDir) -> Result<Vec<GrangerSummary>> {
    read_json(&dir.require(GRANGER_SUMMARY)?)
}

pub fn load_filter_summaries(dir: &OutputDir, cfg: &PipelineConfig) -> Result<Vec<FilterSummary>> {
    cfg.variables
        .iter()
        .map(|v| read_json(&dir.require(&filter_rel(&v.name, "metrics.json"))?))
        .collect()
}

/// Retained-record ids per variable, in corpus order.
pub fn retained_ids(dir: &OutputDir, variable: &str) -> Result<BTreeSet<String>> {
    Ok(read_ids(&dir.require(&filter_rel(variable, "retained_ids.txt"))?)?.into_iter().collect())
}
