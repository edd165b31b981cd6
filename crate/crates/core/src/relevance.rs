//! Relevance filtering: keyword theme filter, theme-sequence encoding, a
//! Bernoulli Naive Bayes baseline classifier, k-fold evaluation, and import of
//! externally produced predictions.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gkg::GkgRecord;

pub const DEFAULT_MAX_LEN: usize = 5000;
/// Probabilities strictly above this map to the relevant class.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum RelevanceError {
    #[error("training data lacks class {0}")]
    DegenerateTraining(u8),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("malformed prediction file: {0}")]
    MalformedPredictionFile(String),
    #[error("duplicate record id `{0}`")]
    DuplicateRecordId(String),
    #[error("no prediction for record `{0}`")]
    MissingPrediction(String),
    #[error("malformed label file: {0}")]
    MalformedLabelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = RelevanceError> = std::result::Result<T, E>;

/// True iff any theme, lower-cased, contains any keyword.
pub fn keyword_filter<S: AsRef<str>>(record: &GkgRecord, keywords: &[S]) -> bool {
    themes_match(&record.themes, keywords)
}

pub fn themes_match<T: AsRef<str>, S: AsRef<str>>(themes: &[T], keywords: &[S]) -> bool {
    themes.iter().any(|t| {
        let lower = t.as_ref().to_lowercase();
        keywords.iter().any(|k| lower.contains(k.as_ref()))
    })
}

/// Label encoder over lower-cased theme tokens.
///
/// Known tokens get ids `0..len`, `len` is the unknown id and `len + 1` pads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile")]
pub struct ThemeVocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    pub max_len: usize,
}

#[derive(Deserialize)]
struct VocabularyFile {
    tokens: Vec<String>,
    max_len: usize,
}

impl From<VocabularyFile> for ThemeVocabulary {
    fn from(f: VocabularyFile) -> Self {
        let mut v = ThemeVocabulary {
            tokens: f.tokens,
            index: HashMap::new(),
            max_len: f.max_len,
        };
        v.reindex();
        v
    }
}

impl ThemeVocabulary {
    /// Ids are assigned in order of first appearance.
    pub fn build<'a, I, T>(corpus: I, max_len: usize) -> Self
    where
        I: IntoIterator<Item = &'a [T]>,
        T: AsRef<str> + 'a,
    {
        let mut tokens = Vec::new();
        let mut index = HashMap::new();
        for themes in corpus {
            for t in themes {
                let lower = t.as_ref().to_lowercase();
                if !index.contains_key(&lower) {
                    index.insert(lower.clone(), tokens.len() as u32);
                    tokens.push(lower);
                }
            }
        }
        ThemeVocabulary {
            tokens,
            index,
            max_len,
        }
    }

    fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unknown_id(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn pad_id(&self) -> u32 {
        self.tokens.len() as u32 + 1
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(&token.to_lowercase()).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Encode to exactly `max_len` ids: truncated, or padded with [`Self::pad_id`].
    pub fn encode<T: AsRef<str>>(&self, themes: &[T]) -> Vec<u32> {
        let mut out: Vec<u32> = themes
            .iter()
            .take(self.max_len)
            .map(|t| self.id(t.as_ref()).unwrap_or(self.unknown_id()))
            .collect();
        out.resize(self.max_len, self.pad_id());
        out
    }
}

pub fn encode_themes(record: &GkgRecord, vocab: &ThemeVocabulary) -> Vec<u32> {
    vocab.encode(&record.themes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub record_id: String,
    pub encoded_themes: Vec<u32>,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn add(&mut self, predicted: u8, actual: u8) {
        match (predicted, actual) {
            (1, 1) => self.tp += 1,
            (1, _) => self.fp += 1,
            (_, 1) => self.fn_ += 1,
            _ => self.tn += 1,
        }
    }

    pub fn metrics(&self) -> ClassifierMetrics {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        ClassifierMetrics::from_precision_recall(precision, recall)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fold_scores: Vec<ClassifierMetrics>,
}

impl ClassifierMetrics {
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        ClassifierMetrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            fold_scores: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevancePrediction {
    pub record_id: String,
    pub probability: f64,
    pub label: u8,
}

impl RelevancePrediction {
    pub fn new(record_id: impl Into<String>, probability: f64) -> Self {
        RelevancePrediction {
            record_id: record_id.into(),
            probability,
            label: label_for(probability),
        }
    }
}

pub fn label_for(probability: f64) -> u8 {
    u8::from(probability > DECISION_THRESHOLD)
}

/// Anything that maps an encoded theme sequence to P(relevant).
pub trait RelevanceScorer {
    fn probability(&self, encoded: &[u32]) -> f64;

    fn predict(&self, encoded: &[u32]) -> u8 {
        label_for(self.probability(encoded))
    }
}

/// Bernoulli Naive Bayes over theme presence, Laplace smoothing α = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NaiveBayesFile")]
pub struct NaiveBayesModel {
    pub vocabulary: ThemeVocabulary,
    /// ln P(y=1) - ln P(y=0)
    pub prior_log_ratio: f64,
    /// Per token: ln θ1 - ln θ0 when present.
    pub present_log_ratio: Vec<f64>,
    /// Per token: ln(1-θ1) - ln(1-θ0) when absent.
    pub absent_log_ratio: Vec<f64>,
    #[serde(skip)]
    absent_total: f64,
}

#[derive(Deserialize)]
struct NaiveBayesFile {
    vocabulary: ThemeVocabulary,
    prior_log_ratio: f64,
    present_log_ratio: Vec<f64>,
    absent_log_ratio: Vec<f64>,
}

impl From<NaiveBayesFile> for NaiveBayesModel {
    fn from(f: NaiveBayesFile) -> Self {
        NaiveBayesModel {
            absent_total: f.absent_log_ratio.iter().sum(),
            vocabulary: f.vocabulary,
            prior_log_ratio: f.prior_log_ratio,
            present_log_ratio: f.present_log_ratio,
            absent_log_ratio: f.absent_log_ratio,
        }
    }
}

const LAPLACE_ALPHA: f64 = 1.0;

impl NaiveBayesModel {
    pub fn vocab_size(&self) -> usize {
        self.present_log_ratio.len()
    }

    /// Log-odds of relevance.
    pub fn log_odds(&self, encoded: &[u32]) -> f64 {
        let n = self.vocab_size() as u32;
        let mut seen = HashSet::new();
        let mut score = self.prior_log_ratio + self.absent_total;
        for &id in encoded {
            if id < n && seen.insert(id) {
                let i = id as usize;
                score += self.present_log_ratio[i] - self.absent_log_ratio[i];
            }
        }
        score
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

impl RelevanceScorer for NaiveBayesModel {
    fn probability(&self, encoded: &[u32]) -> f64 {
        let z = self.log_odds(encoded);
        1.0 / (1.0 + (-z).exp())
    }
}

/// Fit Naive Bayes. Token ids at or above `vocab_size` (unknown, padding) are ignored.
pub fn train_naive_bayes(examples: &[LabeledExample], vocabulary: &ThemeVocabulary) -> Result<NaiveBayesModel> {
    let v = vocabulary.len();
    let mut counts = [vec![0u64; v], vec![0u64; v]];
    let mut class_n = [0u64; 2];
    for ex in examples {
        let c = usize::from(ex.label == 1);
        class_n[c] += 1;
        let mut seen = HashSet::new();
        for &id in &ex.encoded_themes {
            if (id as usize) < v && seen.insert(id) {
                counts[c][id as usize] += 1;
            }
        }
    }
    for (c, n) in class_n.iter().enumerate() {
        if *n == 0 {
            return Err(RelevanceError::DegenerateTraining(c as u8));
        }
    }
    let theta = |c: usize, j: usize| {
        (counts[c][j] as f64 + LAPLACE_ALPHA) / (class_n[c] as f64 + 2.0 * LAPLACE_ALPHA)
    };
    let mut present = Vec::with_capacity(v);
    let mut absent = Vec::with_capacity(v);
    for j in 0..v {
        let (t1, t0) = (theta(1, j), theta(0, j));
        present.push(t1.ln() - t0.ln());
        absent.push((1.0 - t1).ln() - (1.0 - t0).ln());
    }
    let absent_total = absent.iter().sum();
    Ok(NaiveBayesModel {
        vocabulary: vocabulary.clone(),
        prior_log_ratio: (class_n[1] as f64).ln() - (class_n[0] as f64).ln(),
        present_log_ratio: present,
        absent_log_ratio: absent,
        absent_total,
    })
}

/// Seeded fold assignment: shuffled positions dealt round-robin, so fold
/// sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k.max(1) + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// k-fold CV with metrics micro-averaged over all held-out predictions.
pub fn evaluate_kfold<M, F>(examples: &[LabeledExample], k: usize, seed: u64, trainer: F) -> Result<ClassifierMetrics>
where
    M: RelevanceScorer,
    F: Fn(&[LabeledExample]) -> Result<M>,
{
    if k < 2 {
        return Err(RelevanceError::InsufficientData(format!("k = {k}, need k >= 2")));
    }
    if examples.len() < k {
        return Err(RelevanceError::InsufficientData(format!(
            "{} examples for {k} folds",
            examples.len()
        )));
    }
    let folds = kfold_indices(examples.len(), k, seed);
    let mut total = Confusion::default();
    let mut fold_scores = Vec::with_capacity(k);
    for (fi, held) in folds.iter().enumerate() {
        let held_set: HashSet<usize> = held.iter().copied().collect();
        let train: Vec<LabeledExample> = examples
            .iter()
            .enumerate()
            .filter(|(i, _)| !held_set.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        let model = trainer(&train)?;
        let mut fold = Confusion::default();
        for &i in held {
            let pred = model.predict(&examples[i].encoded_themes);
            fold.add(pred, examples[i].label);
            total.add(pred, examples[i].label);
        }
        log::debug!("fold {fi}: {:?}", fold);
        fold_scores.push(fold.metrics());
    }
    let mut metrics = total.metrics();
    metrics.fold_scores = fold_scores;
    Ok(metrics)
}

/// Read a `record_id,probability` CSV.
pub fn import_predictions(path: &Path) -> Result<Vec<RelevancePrediction>> {
    let file = std::fs::File::open(path)?;
    read_predictions(file)
}

pub fn read_predictions<R: std::io::Read>(reader: R) -> Result<Vec<RelevancePrediction>> {
    let bad = |m: String| RelevanceError::MalformedPredictionFile(m);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "record_id" || &headers[1] != "probability" {
        return Err(bad(format!("header must be `record_id,probability`, got {headers:?}")));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        let id = row[0].trim().to_string();
        if id.is_empty() {
            return Err(bad(format!("row {}: empty record id", i + 1)));
        }
        let p: f64 = row[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("row {}: probability `{}` is not a number", i + 1, &row[1])))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(bad(format!("row {}: probability {p} outside [0, 1]", i + 1)));
        }
        if !seen.insert(id.clone()) {
            return Err(RelevanceError::DuplicateRecordId(id));
        }
        out.push(RelevancePrediction::new(id, p));
    }
    Ok(out)
}

pub fn write_predictions<W: std::io::Write>(writer: W, predictions: &[RelevancePrediction]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["record_id", "probability"])?;
    for p in predictions {
        w.write_record([p.record_id.as_str(), &p.probability.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a `record_id,label` fixture.
pub fn read_labels<R: std::io::Read>(reader: R) -> Result<BTreeMap<String, u8>> {
    let bad = |m: String| RelevanceError::MalformedLabelFile(m);
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "record_id" || &headers[1] != "label" {
        return Err(bad(format!("header must be `record_id,label`, got {headers:?}")));
    }
    let mut out = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        let label = match row[1].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("row {}: label `{other}` is not 0 or 1", i + 1))),
        };
        if out.insert(row[0].trim().to_string(), label).is_some() {
            return Err(RelevanceError::DuplicateRecordId(row[0].to_string()));
        }
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<BTreeMap<String, u8>> {
    read_labels(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub total: u64,
    pub keyword_passed: u64,
    pub retained: u64,
    pub discarded: u64,
    pub scored_by_model: u64,
}

/// Steps 1 and 2: keyword filter, then keep records predicted relevant.
///
/// Imported predictions take precedence; records without one fall back to
/// `model` when supplied.
pub fn filter_corpus<'r, S: AsRef<str>>(
    records: impl IntoIterator<Item = &'r GkgRecord>,
    keywords: &[S],
    predictions: Option<&HashMap<String, RelevancePrediction>>,
    model: Option<&NaiveBayesModel>,
) -> Result<(Vec<&'r GkgRecord>, FilterStats)> {
    let mut stats = FilterStats::default();
    let mut kept = Vec::new();
    for r in records {
        stats.total += 1;
        if !keyword_filter(r, keywords) {
            continue;
        }
        stats.keyword_passed += 1;
        let label = match (predictions.and_then(|p| p.get(&r.record_id)), model) {
            (Some(p), _) => p.label,
            (None, Some(m)) => {
                stats.scored_by_model += 1;
                m.predict(&m.vocabulary.encode(&r.themes))
            }
            (None, None) => return Err(RelevanceError::MissingPrediction(r.record_id.clone())),
        };
        if label == 1 {
            stats.retained += 1;
            kept.push(r);
        } else {
            stats.discarded += 1;
        }
    }
    Ok((kept, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkg::{GkgSchema, ToneBlock};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn rec(id: &str, themes: &[&str]) -> GkgRecord {
        GkgRecord::from_parts(
            &GkgSchema::gkg_v21(),
            id,
            NaiveDate::from_ymd_opt(2016, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
            "",
            themes.iter().map(|s| s.to_string()).collect(),
            vec![],
            ToneBlock {
                average_tone: 0.0,
                dimensions: vec![0.0; 5],
            },
            vec![],
        )
    }

    #[test]
    fn keyword_examples() {
        assert!(keyword_filter(&rec("a", &["ECON_INFLATION"]), &["inflation"]));
        assert!(!keyword_filter(&rec("a", &["SPORTS"]), &["inflation"]));
        assert!(!keyword_filter(&rec("a", &[]), &["inflation"]));
    }

    #[test]
    fn encoding_pads_and_truncates() {
        let corpus = [vec!["A".to_string(), "B".to_string()]];
        let vocab = ThemeVocabulary::build(corpus.iter().map(|v| v.as_slice()), DEFAULT_MAX_LEN);
        let e = vocab.encode(&["a", "B"]);
        assert_eq!(e.len(), 5000);
        assert_eq!(&e[..3], &[0, 1, vocab.pad_id()]);
        let e = vocab.encode(&["zzz"]);
        assert_eq!(&e[..2], &[vocab.unknown_id(), vocab.pad_id()]);
        let many: Vec<String> = (0..6000).map(|_| "a".to_string()).collect();
        let e = vocab.encode(&many);
        assert_eq!(e.len(), 5000);
        assert!(e.iter().all(|&x| x == 0));
        assert_ne!(vocab.pad_id(), vocab.unknown_id());
    }

    fn examples_from(data: &[(Vec<&str>, u8)], vocab: &ThemeVocabulary) -> Vec<LabeledExample> {
        data.iter()
            .enumerate()
            .map(|(i, (t, l))| LabeledExample {
                record_id: i.to_string(),
                encoded_themes: vocab.encode(t),
                label: *l,
            })
            .collect()
    }

    #[test]
    fn separable_training_fits_perfectly() {
        let mut data = Vec::new();
        for i in 0..40 {
            if i % 2 == 0 {
                data.push((vec!["A", "X"], 1));
            } else {
                data.push((vec!["B", "X"], 0));
            }
        }
        let vocab = ThemeVocabulary::build(data.iter().map(|(t, _)| t.as_slice()), 16);
        let ex = examples_from(&data, &vocab);
        let m = train_naive_bayes(&ex, &vocab).unwrap();
        let mut c = Confusion::default();
        for e in &ex {
            c.add(m.predict(&e.encoded_themes), e.label);
        }
        assert_eq!(c.metrics().f1, 1.0);
    }

    #[test]
    fn degenerate_training() {
        let data = vec![(vec!["A"], 1u8), (vec!["B"], 1)];
        let vocab = ThemeVocabulary::build(data.iter().map(|(t, _)| t.as_slice()), 4);
        let ex = examples_from(&data, &vocab);
        assert!(matches!(
            train_naive_bayes(&ex, &vocab),
            Err(RelevanceError::DegenerateTraining(0))
        ));
    }

    #[test]
    fn f1_examples() {
        let m = ClassifierMetrics::from_precision_recall(0.8853, 0.9375);
        assert!((m.f1 - 0.9107).abs() < 5e-5);
        let m = ClassifierMetrics::from_precision_recall(0.7, 0.7);
        assert!((m.f1 - 0.7).abs() < 1e-15);
        assert_eq!(ClassifierMetrics::from_precision_recall(0.0, 0.0).f1, 0.0);
        let c = Confusion {
            tp: 5,
            fp: 0,
            tn: 3,
            fn_: 0,
        };
        let m = c.metrics();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn kfold_requires_enough_data() {
        let trainer = |_: &[LabeledExample]| -> Result<NaiveBayesModel> { unreachable!() };
        assert!(evaluate_kfold(&[], 10, 0, trainer).is_err());
        assert!(evaluate_kfold(&[], 1, 0, trainer).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        assert_eq!(RelevancePrediction::new("a", 0.5).label, 0);
        assert_eq!(RelevancePrediction::new("a", 0.51).label, 1);
    }

    #[test]
    fn prediction_file_errors() {
        let dup = "record_id,probability\na,0.2\na,0.9\n";
        assert!(matches!(
            read_predictions(dup.as_bytes()),
            Err(RelevanceError::DuplicateRecordId(_))
        ));
        let bad_header = "id,p\na,0.2\n";
        assert!(matches!(
            read_predictions(bad_header.as_bytes()),
            Err(RelevanceError::MalformedPredictionFile(_))
        ));
        let out_of_range = "record_id,probability\na,1.2\n";
        assert!(read_predictions(out_of_range.as_bytes()).is_err());
        let ok = "record_id,probability\na,0.5\nb,0.51\n";
        let p = read_predictions(ok.as_bytes()).unwrap();
        assert_eq!(p.iter().map(|p| p.label).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn filter_uses_predictions_then_model() {
        let recs: Vec<GkgRecord> = (0..10).map(|i| rec(&format!("r{i}"), &["ECON_GROWTH"])).collect();
        let preds: HashMap<String, RelevancePrediction> = (0..10)
            .map(|i| {
                let p = if i < 4 { 0.9 } else { 0.1 };
                (format!("r{i}"), RelevancePrediction::new(format!("r{i}"), p))
            })
            .collect();
        let (kept, stats) = filter_corpus(&recs, &["econ"], Some(&preds), None).unwrap();
        assert_eq!(kept.len(), 4);
        assert_eq!((stats.retained, stats.discarded), (4, 6));

        assert!(matches!(
            filter_corpus(&recs, &["econ"], None, None),
            Err(RelevanceError::MissingPrediction(_))
        ));

        let data = vec![(vec!["ECON_GROWTH"], 1u8), (vec!["SPORTS"], 0)];
        let vocab = ThemeVocabulary::build(data.iter().map(|(t, _)| t.as_slice()), 8);
        let model = train_naive_bayes(&examples_from(&data, &vocab), &vocab).unwrap();
        let (kept, stats) = filter_corpus(&recs, &["econ"], None, Some(&model)).unwrap();
        assert_eq!(kept.len(), 10);
        assert_eq!(stats.scored_by_model, 10);
    }

    #[test]
    /// Smoothing with a fixed pseudo-count weighs less once counts double, so
    /// decisions near the boundary may flip; the bulk must not.
    fn duplicated_training_set_keeps_most_decisions() {
        use crate::synthetic::{generate_world, WorldSpec};
        let world = generate_world(&WorldSpec {
            relevant_per_month: 10,
            irrelevant_per_month: 4,
            noise_per_month: 10,
            labeled_per_topic: 500,
            ..WorldSpec::default()
        });
        let keywords = &world.spec.topics[0].keyword;
        let passing: Vec<&GkgRecord> = world.records.iter().filter(|r| keyword_filter(r, &[keywords])).collect();
        let vocab = ThemeVocabulary::build(passing.iter().map(|r| r.themes.as_slice()), 5000);
        let by_id: HashMap<&str, &GkgRecord> = passing.iter().map(|r| (r.record_id.as_str(), *r)).collect();
        let examples: Vec<LabeledExample> = world.labels[0]
            .iter()
            .map(|(id, &label)| LabeledExample {
                record_id: id.clone(),
                encoded_themes: encode_themes(by_id[id.as_str()], &vocab),
                label,
            })
            .collect();
        let doubled: Vec<LabeledExample> = examples.iter().chain(examples.iter()).cloned().collect();
        let once = train_naive_bayes(&examples, &vocab).unwrap();
        let twice = train_naive_bayes(&doubled, &vocab).unwrap();
        let agree = passing
            .iter()
            .filter(|r| {
                let e = encode_themes(r, &vocab);
                label_for(once.probability(&e)) == label_for(twice.probability(&e))
            })
            .count();
        let share = agree as f64 / passing.len() as f64;
        assert!(share >= 0.97, "decisions agree on {share:.4}");
    }

    #[test]
    fn model_json_round_trip() {
        let data = vec![(vec!["A", "C"], 1u8), (vec!["B"], 0), (vec!["A"], 1)];
        let vocab = ThemeVocabulary::build(data.iter().map(|(t, _)| t.as_slice()), 8);
        let ex = examples_from(&data, &vocab);
        let model = train_naive_bayes(&ex, &vocab).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nb.json");
        model.save(&path).unwrap();
        let back = NaiveBayesModel::load(&path).unwrap();
        for e in &ex {
            assert_eq!(back.log_odds(&e.encoded_themes), model.log_odds(&e.encoded_themes));
        }
        assert_eq!(back.vocabulary.id("c"), Some(1));
    }

    proptest! {
        #[test]
        fn kfold_partition(n in 10usize..300, k in 2usize..12, seed in any::<u64>()) {
            let folds = kfold_indices(n, k, seed);
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }

        #[test]
        fn keyword_filter_is_monotone(
            themes in proptest::collection::vec("[A-Z_]{1,12}", 0..6),
            kws in proptest::collection::vec("[a-z_]{1,4}", 1..4),
            extra in "[a-z_]{1,4}",
        ) {
            let before = themes_match(&themes, &kws);
            let mut more = kws.clone();
            more.push(extra);
            prop_assert!(!before || themes_match(&themes, &more));
        }

        #[test]
        fn encoded_length_is_fixed(themes in proptest::collection::vec("[A-Z]{1,3}", 0..40), max_len in 1usize..32) {
            let vocab = ThemeVocabulary::build([themes.as_slice()], max_len);
            prop_assert_eq!(vocab.encode(&themes).len(), max_len);
        }

        #[test]
        fn f1_identity(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let m = Confusion { tp, fp, tn, fn_ }.metrics();
            if m.precision + m.recall > 0.0 {
                prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-15);
            } else {
                prop_assert_eq!(m.f1, 0.0);
            }
        }
    }
}
