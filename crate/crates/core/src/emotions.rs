//! Grouping of sentiment scores into seven basic emotions and per-component
//! loading profiles for radar charts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::base_score_name;

const DEFAULT_MAP: &str = include_str!("../data/default_emotion_map.csv");

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("unknown emotion {label:?} for score {score:?}")]
    UnknownEmotion { score: String, label: String },
    #[error("score {0:?} is mapped more than once")]
    DuplicateScore(String),
    #[error("{expected} loadings expected, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl EmotionError {
    pub fn kind(&self) -> &'static str {
        match self {
            EmotionError::UnknownEmotion { .. } => "UnknownEmotion",
            EmotionError::DuplicateScore(_) => "DuplicateScore",
            EmotionError::DimensionMismatch { .. } => "DimensionMismatch",
            EmotionError::Format(_) => "Format",
            EmotionError::Io(_) => "Io",
            EmotionError::Csv(_) => "Csv",
            EmotionError::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = EmotionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Happiness,
    Sadness,
    Anger,
    Fear,
    Surprise,
    Disgust,
    Contempt,
}

impl Emotion {
    /// Fixed axis order.
    pub const ALL: [Emotion; 7] = [
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Surprise,
        Emotion::Disgust,
        Emotion::Contempt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Surprise => "surprise",
            Emotion::Disgust => "disgust",
            Emotion::Contempt => "contempt",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == t)
            .ok_or_else(|| s.to_string())
    }
}

/// Score name to emotion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionMap {
    entries: BTreeMap<String, Emotion>,
}

#[derive(Deserialize)]
struct MapRow {
    score_name: String,
    emotion: String,
}

impl EmotionMap {
    /// Map for the lexicon families shipped with the crate.
    pub fn default_map() -> Self {
        Self::from_reader(DEFAULT_MAP.as_bytes()).expect("bundled emotion map is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(File::open(path)?)
    }

    /// CSV with header `score_name,emotion`.
    pub fn from_reader<R: io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["score_name", "emotion"] {
            return Err(EmotionError::Format(format!("expected header score_name,emotion, got {headers:?}")));
        }
        let mut entries = BTreeMap::new();
        for row in rdr.deserialize::<MapRow>() {
            let row = row?;
            let emotion = row.emotion.parse().map_err(|label| EmotionError::UnknownEmotion {
                score: row.score_name.clone(),
                label,
            })?;
            if entries.insert(row.score_name.clone(), emotion).is_some() {
                return Err(EmotionError::DuplicateScore(row.score_name));
            }
        }
        Ok(EmotionMap { entries })
    }

    /// Entries of `other` replace those of `self`.
    pub fn overridden_by(mut self, other: &EmotionMap) -> Self {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), *v);
        }
        self
    }

    pub fn insert(&mut self, score: impl Into<String>, emotion: Emotion) -> Option<Emotion> {
        self.entries.insert(score.into(), emotion)
    }

    pub fn get(&self, score: &str) -> Option<Emotion> {
        self.entries.get(score).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Emotion)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Names from `scores` with no emotion.
    pub fn unmapped<'a>(&self, scores: &[&'a str]) -> Vec<&'a str> {
        scores.iter().copied().filter(|s| !self.entries.contains_key(*s)).collect()
    }
}

/// Raw GCAM keys to descriptive score names (`c3.1` → `wordnet_affect_joy`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCodebook(pub BTreeMap<String, String>);

#[derive(Deserialize, Serialize)]
struct CodebookRow {
    key: String,
    score_name: String,
}

impl ScoreCodebook {
    /// CSV with header `key,score_name`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(File::open(path)?);
        let mut map = BTreeMap::new();
        for row in rdr.deserialize::<CodebookRow>() {
            let row = row?;
            if map.insert(row.key.clone(), row.score_name).is_some() {
                return Err(EmotionError::DuplicateScore(row.key));
            }
        }
        Ok(ScoreCodebook(map))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for (key, name) in &self.0 {
            w.serialize(CodebookRow {
                key: key.clone(),
                score_name: name.clone(),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Descriptive name for a raw key, or the key itself.
    pub fn resolve<'a>(&'a self, key: &'a str) -> &'a str {
        self.0.get(key).map(String::as_str).unwrap_or(key)
    }
}

/// Emotion behind a panel column: strips the `_mean`/`_std` suffix, looks the
/// key up in the codebook, then in the map.
pub fn column_emotion(column: &str, map: &EmotionMap, codebook: Option<&ScoreCodebook>) -> Option<Emotion> {
    let key = base_score_name(column);
    let name = codebook.map_or(key, |c| c.resolve(key));
    map.get(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionProfile {
    /// 1-based component number.
    pub component: usize,
    pub p_value: f64,
    /// Summed signed loadings in `Emotion::ALL` order.
    pub values: [f64; 7],
    /// Summed loadings of columns with no emotion.
    pub unmapped: f64,
}

impl EmotionProfile {
    pub fn value(&self, e: Emotion) -> f64 {
        self.values[e.index()]
    }
}

/// Sum the loadings (K×A, one row per panel column) of each component whose
/// p-value is below `alpha` by emotion.
pub fn profile_components(
    loadings: &DMatrix<f64>,
    columns: &[String],
    map: &EmotionMap,
    codebook: Option<&ScoreCodebook>,
    component_p_values: &[f64],
    alpha: f64,
) -> Result<Vec<EmotionProfile>> {
    if loadings.nrows() != columns.len() {
        return Err(EmotionError::DimensionMismatch {
            expected: columns.len(),
            found: loadings.nrows(),
        });
    }
    if component_p_values.len() != loadings.ncols() {
        return Err(EmotionError::DimensionMismatch {
            expected: loadings.ncols(),
            found: component_p_values.len(),
        });
    }
    let groups: Vec<Option<Emotion>> = columns.iter().map(|c| column_emotion(c, map, codebook)).collect();
    let mut out = Vec::new();
    for (a, &p) in component_p_values.iter().enumerate() {
        if p.is_nan() || p >= alpha {
            continue;
        }
        let mut values = [0.0; 7];
        let mut unmapped = 0.0;
        for (k, g) in groups.iter().enumerate() {
            let l = loadings[(k, a)];
            match g {
                Some(e) => values[e.index()] += l,
                None => unmapped += l,
            }
        }
        out.push(EmotionProfile {
            component: a + 1,
            p_value: p,
            values,
            unmapped,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarSeries {
    pub component: usize,
    pub p_value: f64,
    pub values: Vec<f64>,
    pub unmapped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarChart {
    pub country: String,
    pub variable: String,
    pub axes: Vec<String>,
    pub series: Vec<RadarSeries>,
}

impl RadarChart {
    pub fn new(country: &str, variable: &str, profiles: &[EmotionProfile]) -> Self {
        RadarChart {
            country: country.to_string(),
            variable: variable.to_string(),
            axes: Emotion::ALL.iter().map(|e| e.name().to_string()).collect(),
            series: profiles
                .iter()
                .map(|p| RadarSeries {
                    component: p.component,
                    p_value: p.p_value,
                    values: p.values.to_vec(),
                    unmapped: p.unmapped,
                })
                .collect(),
        }
    }

    pub fn profiles(&self) -> Result<Vec<EmotionProfile>> {
        let expected: Vec<&str> = Emotion::ALL.iter().map(|e| e.name()).collect();
        if self.axes.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(EmotionError::Format(format!("unexpected axes {:?}", self.axes)));
        }
        self.series
            .iter()
            .map(|s| {
                let values: [f64; 7] = s.values.as_slice().try_into().map_err(|_| EmotionError::DimensionMismatch {
                    expected: 7,
                    found: s.values.len(),
                })?;
                Ok(EmotionProfile {
                    component: s.component,
                    p_value: s.p_value,
                    values,
                    unmapped: s.unmapped,
                })
            })
            .collect()
    }

    /// Flat form: `country,variable,component,p_value,emotion,value`, with
    /// unmapped mass under the emotion name `unmapped`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["country", "variable", "component", "p_value", "emotion", "value"])?;
        for s in &self.series {
            let named = self.axes.iter().map(String::as_str).zip(s.values.iter().copied());
            for (axis, v) in named.chain(std::iter::once(("unmapped", s.unmapped))) {
                w.write_record([
                    self.country.as_str(),
                    self.variable.as_str(),
                    &s.component.to_string(),
                    &s.p_value.to_string(),
                    axis,
                    &v.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Write `<path>` as JSON and a flat CSV next to it (`.csv` extension).
pub fn emit_radar(chart: &RadarChart, path: &Path) -> Result<()> {
    if chart.series.is_empty() {
        return Err(EmotionError::Format("radar chart needs at least one profile".into()));
    }
    let json = serde_json::to_string_pretty(chart)?;
    std::fs::write(path, json + "\n")?;
    chart.write_csv(File::create(path.with_extension("csv"))?)?;
    Ok(())
}

pub fn read_radar(path: &Path) -> Result<RadarChart> {
    let chart: RadarChart = serde_json::from_reader(io::BufReader::new(File::open(path)?))?;
    chart.profiles()?;
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(rows: &str) -> Result<EmotionMap> {
        EmotionMap::from_reader(format!("score_name,emotion\n{rows}").as_bytes())
    }

    #[test]
    fn loading_rules() {
        assert_eq!(map("joy,happiness\n").unwrap().get("joy"), Some(Emotion::Happiness));
        assert!(matches!(map("joy,elation\n"), Err(EmotionError::UnknownEmotion { .. })));
        assert!(matches!(map("joy,happiness\njoy,anger\n"), Err(EmotionError::DuplicateScore(_))));
        let rows: String = (0..20).map(|i| format!("s{i},{}\n", Emotion::ALL[i % 7])).collect();
        let m = map(&rows).unwrap();
        assert_eq!(m.len(), 20);
        let names: Vec<String> = (0..20).map(|i| format!("s{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        assert!(m.unmapped(&refs).is_empty());
    }

    #[test]
    fn default_map_families() {
        let m = EmotionMap::default_map();
        assert_eq!(m.get("lm_positive"), Some(Emotion::Happiness));
        assert_eq!(m.get("lm_negative"), Some(Emotion::Anger));
        assert_eq!(m.get("lm_uncertainty"), Some(Emotion::Fear));
        assert_eq!(m.get("lm_litigious"), None);
        assert_eq!(m.get("hedonometer_english"), Some(Emotion::Happiness));
        assert_eq!(m.get("ml_senticon_en_level3_negative"), Some(Emotion::Anger));
        assert_eq!(m.get("wordnet_affect_wrath"), Some(Emotion::Anger));
        let user = map("lm_positive,surprise\n").unwrap();
        assert_eq!(m.overridden_by(&user).get("lm_positive"), Some(Emotion::Surprise));
    }

    #[test]
    fn worked_profile() {
        let m = map("joy,happiness\nwrath,anger\n").unwrap();
        let cols = vec!["joy_mean".to_string(), "wrath_mean".to_string(), "tone_mean".to_string()];
        let l = DMatrix::from_column_slice(3, 2, &[0.2, 0.3, 0.1, 0.0, 0.0, 0.0]);
        let p = profile_components(&l, &cols, &m, None, &[0.01, 0.5], 0.1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].value(Emotion::Happiness), 0.2);
        assert_eq!(p[0].value(Emotion::Anger), 0.3);
        assert_eq!(p[0].unmapped, 0.1);
        let p = profile_components(&l, &cols, &m, None, &[0.01, 0.01], 0.1).unwrap();
        assert!(p[1].values.iter().all(|v| *v == 0.0));
        assert!(profile_components(&l, &cols[..2], &m, None, &[0.01, 0.01], 0.1).is_err());
    }

    #[test]
    fn codebook_resolution() {
        let m = map("wordnet_affect_joy,happiness\n").unwrap();
        let cb = ScoreCodebook([("c3.1".to_string(), "wordnet_affect_joy".to_string())].into_iter().collect());
        assert_eq!(column_emotion("c3.1_std", &m, Some(&cb)), Some(Emotion::Happiness));
        assert_eq!(column_emotion("c3.1_std", &m, None), None);
    }

    #[test]
    fn radar_round_trip() {
        let profiles = vec![
            EmotionProfile {
                component: 1,
                p_value: 0.004,
                values: [0.1, -0.2, 0.3, 0.0, 1e-17, 2.5, -0.75],
                unmapped: 0.125,
            },
            EmotionProfile {
                component: 3,
                p_value: 0.07,
                values: [1.0 / 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1],
                unmapped: 0.0,
            },
        ];
        let chart = RadarChart::new("US", "ip", &profiles);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("radar.json");
        emit_radar(&chart, &path).unwrap();
        let back = read_radar(&path).unwrap();
        assert_eq!(back, chart);
        assert_eq!(back.profiles().unwrap(), profiles);
        assert_eq!(back.axes.len(), 7);
        let csv = std::fs::read_to_string(path.with_extension("csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 8);
        assert!(emit_radar(&RadarChart::new("US", "ip", &[]), &path).is_err());
    }

    proptest! {
        #[test]
        fn linear_and_order_free(
            l1 in proptest::collection::vec(-1.0f64..1.0, 12),
            l2 in proptest::collection::vec(-1.0f64..1.0, 12),
            alpha in -3.0f64..3.0,
            rot in 0usize..12,
        ) {
            let names: Vec<String> = (0..12).map(|i| format!("s{i}_mean")).collect();
            let rows: String = (0..10).map(|i| format!("s{i},{}\n", Emotion::ALL[i % 7])).collect();
            let m = map(&rows).unwrap();
            let prof = |l: &[f64], cols: &[String]| {
                let mat = DMatrix::from_column_slice(l.len(), 1, l);
                profile_components(&mat, cols, &m, None, &[0.0], 0.1).unwrap().remove(0)
            };
            let combo: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| alpha * a + b).collect();
            let (p1, p2, pc) = (prof(&l1, &names), prof(&l2, &names), prof(&combo, &names));
            for e in 0..7 {
                prop_assert!((pc.values[e] - (alpha * p1.values[e] + p2.values[e])).abs() < 1e-12);
            }
            let mut rl = l1.clone();
            rl.rotate_left(rot);
            let mut rn = names.clone();
            rn.rotate_left(rot);
            let pr = prof(&rl, &rn);
            for e in 0..7 {
                prop_assert!((pr.values[e] - p1.values[e]).abs() < 1e-12);
            }
        }
    }
}
