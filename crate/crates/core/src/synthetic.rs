//! Synthetic world: a GKG-style corpus with labelled relevance, macro series
//! and controls, where news on each topic carries a latent factor that leads
//! the topic's macro target by one month.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::aggregate::{CountryGroupMap, GLOBAL_GROUP};
use crate::emotions::ScoreCodebook;
use crate::gkg::{GcamEntry, GkgRecord, GkgSchema, LocationRef, ToneBlock};
use crate::month::YearMonth;
use crate::pipeline::config::{ClassifierConfig, ClassifierMode, PipelineConfig, Seeds, VariableConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    /// Macro variable the topic leads (`ip`, `cpi`).
    pub variable: String,
    pub keyword: String,
    /// Themes containing the keyword.
    pub keyword_themes: Vec<String>,
    /// Themes typical of relevant articles.
    pub relevant_themes: Vec<String>,
    pub controls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub seed: u64,
    pub start: YearMonth,
    pub end: YearMonth,
    pub countries: Vec<String>,
    pub topics: Vec<TopicSpec>,
    /// Per topic and month.
    pub relevant_per_month: usize,
    /// Keyword-passing but irrelevant articles, per topic and month.
    pub irrelevant_per_month: usize,
    /// Articles with no topic keyword, per month.
    pub noise_per_month: usize,
    pub signal_keys_per_topic: usize,
    pub noise_keys: usize,
    /// Effect of a one-sd move of the news factor on the target.
    pub beta: f64,
    pub target_noise_sd: f64,
    /// Labelled keyword-passing articles per topic.
    pub labeled_per_topic: usize,
    /// Probability that a theme of a relevant article comes from the relevant pool.
    pub theme_signal: f64,
}

fn themes(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            seed: 1,
            start: YearMonth::new(2015, 3).expect("valid"),
            end: YearMonth::new(2020, 6).expect("valid"),
            countries: vec!["US".into()],
            topics: vec![
                TopicSpec {
                    variable: "ip".into(),
                    keyword: "growth".into(),
                    keyword_themes: themes(&["ECON_GROWTH", "WB_GROWTH_AND_PRODUCTIVITY", "GROWTH_OUTLOOK"]),
                    relevant_themes: themes(&[
                        "ECON_STOCKMARKET",
                        "WB_MACROECONOMICS",
                        "MANUFACTURING",
                        "ECON_TRADE",
                        "EMPLOYMENT",
                        "WB_INDUSTRY",
                        "ECON_EARNINGSREPORT",
                        "ECON_DEBT",
                    ]),
                    controls: vec!["bdi".into(), "oil".into()],
                },
                TopicSpec {
                    variable: "cpi".into(),
                    keyword: "inflation".into(),
                    keyword_themes: themes(&["ECON_INFLATION", "WB_INFLATION_TARGETING", "INFLATION_EXPECTATIONS"]),
                    relevant_themes: themes(&[
                        "ECON_CENTRALBANK",
                        "ECON_INTEREST_RATES",
                        "ECON_PRICECONTROL",
                        "ECON_CURRENCY_EXCHANGE_RATE",
                        "WB_MONETARY_POLICY",
                        "ECON_COST_OF_LIVING",
                        "TAX_FNCACT_CONSUMERS",
                        "ECON_OILPRICE",
                    ]),
                    controls: vec!["tot".into(), "oil".into()],
                },
            ],
            relevant_per_month: 60,
            irrelevant_per_month: 20,
            noise_per_month: 400,
            signal_keys_per_topic: 20,
            noise_keys: 12,
            beta: 1.5,
            target_noise_sd: 1.0,
            labeled_per_topic: 1000,
            theme_signal: 0.45,
        }
    }
}

const SHARED_THEMES: [&str; 10] = [
    "GENERAL_GOVERNMENT",
    "LEADER",
    "TAX_FNCACT",
    "USPEC_POLITICS_GENERAL1",
    "CRISISLEX_C07_SAFETY",
    "WB_696_PUBLIC_SECTOR_MANAGEMENT",
    "EPU_POLICY",
    "MEDIA_MSM",
    "TAX_ETHNICITY",
    "ELECTION",
];

const OTHER_THEMES: [&str; 12] = [
    "SPORTS",
    "ENTERTAINMENT",
    "HEALTH_PANDEMIC",
    "RELIGION",
    "ENV_CLIMATECHANGE",
    "MEDIA_SOCIAL",
    "CRIME_COMMON_ROBBERY",
    "TOURISM",
    "EDUCATION",
    "SOC_POINTSOFINTEREST",
    "WEATHER",
    "ARTS_CULTURE",
];

/// Country codes outside every default group.
const OTHER_CODES: [&str; 4] = ["AS", "IN", "SF", "CA"];
const WE_EXTRA: [&str; 12] = ["FR", "IT", "SP", "NL", "SZ", "SW", "BE", "AU", "DA", "FI", "EI", "PO"];

const EMOTION_NAMES: [&str; 24] = [
    "joy", "wrath", "elation", "anger", "gladness", "fury", "cheerfulness", "rage", "enthusiasm", "annoyance",
    "delight", "resentment", "hope", "indignation", "satisfaction", "outrage", "contentment", "hostility",
    "pride", "irritation", "euphoria", "exasperation", "relief", "vexation",
];
const OTHER_EMOTION_NAMES: [&str; 12] = [
    "fear", "sadness", "surprise", "disgust", "contempt", "anxiety", "grief", "astonishment", "loathing", "scorn",
    "panic", "sorrow",
];
const LM_NAMES: [&str; 6] = [
    "lm_litigious",
    "lm_modalstrong",
    "lm_modalweak",
    "lm_negative",
    "lm_positive",
    "lm_uncertainty",
];

/// How a GCAM key responds to the latent factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeySpec {
    pub key: String,
    pub name: Option<String>,
    /// Topic whose relevant articles carry this key's signal.
    pub topic: Option<usize>,
    pub base_rate: f64,
    pub sign: f64,
    pub value_based: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArticleClass {
    Relevant(usize),
    Irrelevant(usize),
    Noise,
}

/// Known facts about a generated world.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Truth {
    pub months: Vec<YearMonth>,
    /// Monthly changes of each topic's latent news factor, per month.
    pub topic_factors: Vec<Vec<f64>>,
    pub relevant_ids: Vec<BTreeSet<String>>,
    /// Records per target country passing its location filter.
    pub location_counts: BTreeMap<String, usize>,
    pub keys: Vec<KeySpec>,
}

pub struct World {
    pub spec: WorldSpec,
    pub schema: GkgSchema,
    pub records: Vec<GkgRecord>,
    /// Per topic: record id → label.
    pub labels: Vec<BTreeMap<String, u8>>,
    /// Series name → one value per month (`oil`, `US_ip`, ...).
    pub series: BTreeMap<String, Vec<f64>>,
    pub codebook: ScoreCodebook,
    pub truth: Truth,
}

fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let noise = Normal::new(0.0, sd).expect("sd > 0");
    let mut x = vec![0.0; n];
    let mut prev: f64 = noise.sample(rng) / (1.0 - phi * phi).sqrt();
    for v in x.iter_mut() {
        prev = phi * prev + noise.sample(rng);
        *v = prev;
    }
    x
}

fn key_specs(spec: &WorldSpec, rng: &mut ChaCha8Rng) -> Vec<KeySpec> {
    let mut keys = Vec::new();
    let n_signal = spec.signal_keys_per_topic * spec.topics.len();
    for i in 0..n_signal {
        let topic = i / spec.signal_keys_per_topic.max(1);
        let name = EMOTION_NAMES.get(i % EMOTION_NAMES.len()).map(|n| format!("wordnet_affect_{n}"));
        // Even positions name positive emotions, odd ones negative.
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        keys.push(KeySpec {
            key: format!("c3.{}", i + 1),
            name: if i < EMOTION_NAMES.len() { name } else { None },
            topic: Some(topic),
            base_rate: rng.random_range(0.003..0.01),
            sign,
            value_based: false,
        });
    }
    for (j, n) in OTHER_EMOTION_NAMES.iter().enumerate() {
        keys.push(KeySpec {
            key: format!("c3.{}", n_signal + j + 1),
            name: Some(format!("wordnet_affect_{n}")),
            topic: None,
            base_rate: rng.random_range(0.002..0.008),
            sign: if j % 2 == 0 { 1.0 } else { -1.0 },
            value_based: false,
        });
    }
    for (j, n) in LM_NAMES.iter().enumerate() {
        keys.push(KeySpec {
            key: format!("c5.{}", j + 1),
            name: Some(n.to_string()),
            topic: None,
            base_rate: rng.random_range(0.005..0.02),
            sign: if j % 2 == 0 { 1.0 } else { -1.0 },
            value_based: false,
        });
    }
    for j in 0..spec.noise_keys {
        keys.push(KeySpec {
            key: format!("c7.{}", j + 1),
            name: None,
            topic: None,
            base_rate: rng.random_range(0.002..0.01),
            sign: if j % 2 == 0 { 1.0 } else { -1.0 },
            value_based: false,
        });
    }
    // A dictionary that never fires.
    keys.push(KeySpec {
        key: "c9.1".into(),
        name: None,
        topic: None,
        base_rate: 0.0,
        sign: 0.0,
        value_based: false,
    });
    for (j, lang) in ["english", "spanish"].iter().enumerate() {
        keys.push(KeySpec {
            key: format!("v10.{}", j + 1),
            name: Some(format!("hedonometer_{lang}")),
            topic: None,
            base_rate: 5.5,
            sign: 1.0,
            value_based: true,
        });
    }
    for (j, n) in ["ml_senticon_en_level1_positive", "ml_senticon_en_level1_negative"].iter().enumerate() {
        keys.push(KeySpec {
            key: format!("v19.{}", j + 1),
            name: Some(n.to_string()),
            topic: None,
            base_rate: 0.4,
            sign: if j == 0 { 1.0 } else { -1.0 },
            value_based: true,
        });
    }
    keys
}

struct Latents {
    topics: Vec<Vec<f64>>,
    /// One unrelated driver per GCAM key.
    noise: Vec<Vec<f64>>,
    tone: Vec<f64>,
}

const RATE_ELASTICITY: f64 = 0.2;

/// Country codes for one article: the first mostly from the modelled ten.
fn draw_locations(rng: &mut ChaCha8Rng) -> Vec<LocationRef> {
    let mut codes: Vec<&str> = Vec::new();
    let first = if rng.random_bool(0.6) {
        *GLOBAL_GROUP.choose(rng).expect("non-empty")
    } else if rng.random_bool(0.5) {
        *WE_EXTRA.choose(rng).expect("non-empty")
    } else if rng.random_bool(0.3) {
        "CH"
    } else {
        *OTHER_CODES.choose(rng).expect("non-empty")
    };
    codes.push(first);
    if rng.random_bool(0.3) {
        let pool: Vec<&str> = GLOBAL_GROUP.iter().chain(&WE_EXTRA).chain(&OTHER_CODES).copied().collect();
        let c = *pool.choose(rng).expect("non-empty");
        if c != first {
            codes.push(c);
        }
    }
    codes
        .into_iter()
        .map(|c| {
            let mut loc = LocationRef::new(format!("Place in {c}"), c);
            loc.trailing = vec![String::new(), "0".into(), "0".into(), c.into()];
            loc
        })
        .collect()
}

fn draw_themes(rng: &mut ChaCha8Rng, class: ArticleClass, topics: &[TopicSpec], theme_signal: f64) -> Vec<String> {
    let n_extra = rng.random_range(1..=4usize);
    let mut out: Vec<String> = Vec::new();
    let topic = match class {
        ArticleClass::Relevant(t) | ArticleClass::Irrelevant(t) => Some(t),
        ArticleClass::Noise => None,
    };
    if let Some(t) = topic {
        out.push(topics[t].keyword_themes.choose(rng).expect("non-empty").clone());
    }
    for _ in 0..n_extra {
        let u: f64 = rng.random();
        let pick = match class {
            ArticleClass::Relevant(t) => {
                if u < theme_signal {
                    topics[t].relevant_themes.choose(rng).cloned()
                } else if u < 0.9 {
                    SHARED_THEMES.choose(rng).map(|s| s.to_string())
                } else {
                    OTHER_THEMES.choose(rng).map(|s| s.to_string())
                }
            }
            ArticleClass::Irrelevant(t) => {
                if u < theme_signal {
                    OTHER_THEMES.choose(rng).map(|s| s.to_string())
                } else if u < 0.9 {
                    SHARED_THEMES.choose(rng).map(|s| s.to_string())
                } else {
                    topics[t].relevant_themes.choose(rng).cloned()
                }
            }
            ArticleClass::Noise => {
                if u < 0.5 {
                    OTHER_THEMES.choose(rng).map(|s| s.to_string())
                } else {
                    SHARED_THEMES.choose(rng).map(|s| s.to_string())
                }
            }
        };
        out.extend(pick);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn draw_gcam(
    rng: &mut ChaCha8Rng,
    keys: &[KeySpec],
    class: ArticleClass,
    lat: &Latents,
    t: usize,
    word_count: u64,
) -> Vec<GcamEntry> {
    let amplitude = match class {
        ArticleClass::Relevant(_) => 1.0,
        ArticleClass::Irrelevant(_) => 2.0,
        ArticleClass::Noise => 3.0,
    };
    let mut out = Vec::with_capacity(keys.len() + 1);
    out.push(GcamEntry::new("wc", word_count as f64));
    for (i, k) in keys.iter().enumerate() {
        if k.value_based {
            if rng.random_bool(0.5) {
                let v = k.base_rate + 0.2 * k.sign * amplitude * lat.noise[i][t] + 0.3 * Normal::new(0.0, 1.0).expect("sd").sample(rng);
                out.push(GcamEntry::new(k.key.clone(), (v * 1e4).round() / 1e4));
            }
            continue;
        }
        if k.base_rate == 0.0 {
            out.push(GcamEntry::new(k.key.clone(), 0.0));
            continue;
        }
        let driver = match (k.topic, class) {
            (Some(j), ArticleClass::Relevant(c)) if j == c => lat.topics[j][t],
            _ => amplitude * lat.noise[i][t],
        };
        let rate = k.base_rate * (RATE_ELASTICITY * k.sign * driver).exp();
        let mean = rate * word_count as f64;
        let count = Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(0.0);
        if count > 0.0 {
            out.push(GcamEntry::new(k.key.clone(), count));
        }
    }
    out
}

pub fn generate_world(spec: &WorldSpec) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let months = YearMonth::range(spec.start, spec.end);
    let n = months.len();
    let schema = GkgSchema::gkg_v21();
    let keys = key_specs(spec, &mut rng);

    let lat = Latents {
        topics: (0..spec.topics.len()).map(|_| ar1(&mut rng, n, 0.8, 1.0)).collect(),
        noise: (0..keys.len()).map(|_| ar1(&mut rng, n, 0.8, 1.0)).collect(),
        tone: ar1(&mut rng, n, 0.5, 1.0),
    };

    let mut records = Vec::new();
    let mut classes = Vec::new();
    let mut seq = 0u64;
    for (t, m) in months.iter().enumerate() {
        let mut plan: Vec<ArticleClass> = Vec::new();
        for j in 0..spec.topics.len() {
            plan.extend(std::iter::repeat_n(ArticleClass::Relevant(j), spec.relevant_per_month));
            plan.extend(std::iter::repeat_n(ArticleClass::Irrelevant(j), spec.irrelevant_per_month));
        }
        plan.extend(std::iter::repeat_n(ArticleClass::Noise, spec.noise_per_month));
        let days = days_in_month(*m);
        for class in plan {
            seq += 1;
            let day = rng.random_range(1..=days);
            let ts = NaiveDate::from_ymd_opt(m.year, m.month, day)
                .expect("valid day")
                .and_hms_opt(rng.random_range(0..24), rng.random_range(0..4) * 15, 0)
                .expect("valid time");
            let id = format!("{}-{seq}", ts.format("%Y%m%d%H%M%S"));
            let wc: u64 = rng.random_range(300..1500);
            let avg = (-1.0 + 0.8 * lat.tone[t] + 2.0 * Normal::new(0.0, 1.0).expect("sd").sample(&mut rng)).clamp(-10.0, 10.0);
            let avg = (avg * 1e4).round() / 1e4;
            let pos = ((3.0 + avg.max(0.0)) * 1e4).round() / 1e4;
            let neg = ((3.0 - avg.min(0.0)) * 1e4).round() / 1e4;
            let tone = ToneBlock {
                average_tone: avg,
                dimensions: vec![pos, neg, ((pos + neg) * 1e4).round() / 1e4, 20.0, 0.5, wc as f64],
            };
            let th = draw_themes(&mut rng, class, &spec.topics, spec.theme_signal);
            let locs = draw_locations(&mut rng);
            let gcam = draw_gcam(&mut rng, &keys, class, &lat, t, wc);
            let url = format!("https://news.example/{seq}");
            records.push(GkgRecord::from_parts(&schema, id, ts, url, th, locs, tone, gcam));
            classes.push(class);
        }
    }

    let mut relevant_ids = vec![BTreeSet::new(); spec.topics.len()];
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); spec.topics.len()];
    for (i, c) in classes.iter().enumerate() {
        match *c {
            ArticleClass::Relevant(j) => {
                relevant_ids[j].insert(records[i].record_id.clone());
                candidates[j].push(i);
            }
            ArticleClass::Irrelevant(j) => candidates[j].push(i),
            ArticleClass::Noise => {}
        }
    }
    let labels: Vec<BTreeMap<String, u8>> = candidates
        .iter()
        .enumerate()
        .map(|(j, idx)| {
            idx.choose_multiple(&mut rng, spec.labeled_per_topic.min(idx.len()))
                .map(|&i| {
                    let id = records[i].record_id.clone();
                    let label = u8::from(relevant_ids[j].contains(&id));
                    (id, label)
                })
                .collect()
        })
        .collect();

    // Observed monthly changes of the topic factors.
    let topic_factors: Vec<Vec<f64>> = lat
        .topics
        .iter()
        .map(|l| {
            let mut d: Vec<f64> = (0..n).map(|t| if t == 0 { 0.0 } else { l[t] - l[t - 1] }).collect();
            let sd = (d.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            d.iter_mut().for_each(|v| *v /= sd);
            d
        })
        .collect();

    let mut series = BTreeMap::new();
    let controls: BTreeSet<&str> = spec.topics.iter().flat_map(|t| t.controls.iter().map(String::as_str)).collect();
    for c in &controls {
        let scale = match *c {
            "oil" => 6.0,
            "bdi" => 9.0,
            _ => 1.5,
        };
        let v: Vec<f64> = ar1(&mut rng, n, 0.3, scale).iter().map(|x| (x * 1e4).round() / 1e4).collect();
        series.insert(c.to_string(), v);
    }
    let eps = Normal::new(0.0, spec.target_noise_sd.max(1e-12)).expect("sd");
    for country in &spec.countries {
        for (j, topic) in spec.topics.iter().enumerate() {
            let beta = spec.beta * rng.random_range(0.8..1.2);
            let loads: Vec<f64> = topic.controls.iter().map(|_| rng.random_range(0.02..0.08)).collect();
            let mut y = vec![0.0; n];
            for t in 1..n {
                let mut v = 0.2 * y[t - 1] + beta * topic_factors[j][t - 1] + eps.sample(&mut rng);
                for (c, w) in topic.controls.iter().zip(&loads) {
                    v += w * series[c][t - 1];
                }
                y[t] = v;
            }
            let y = y.iter().map(|x| (x * 1e6).round() / 1e6).collect();
            series.insert(format!("{country}_{}", topic.variable), y);
        }
    }

    let groups = CountryGroupMap::default();
    let location_counts = spec
        .countries
        .iter()
        .map(|c| {
            let group = groups.get(c).cloned().unwrap_or_else(|| [c.clone()].into_iter().collect());
            let count = records
                .iter()
                .filter(|r| r.country_codes().any(|cc| group.contains(cc)))
                .count();
            (c.clone(), count)
        })
        .collect();

    let codebook = ScoreCodebook(
        keys.iter()
            .filter_map(|k| k.name.as_ref().map(|n| (k.key.clone(), n.clone())))
            .collect(),
    );

    World {
        spec: spec.clone(),
        schema,
        records,
        labels,
        series,
        codebook,
        truth: Truth {
            months,
            topic_factors,
            relevant_ids,
            location_counts,
            keys,
        },
    }
}

fn days_in_month(m: YearMonth) -> u32 {
    let next = m.succ().first_day();
    (next - m.first_day()).num_days() as u32
}

/// Write a `month,value` CSV.
pub fn write_series_csv(path: &Path, months: &[YearMonth], values: &[f64]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["month", "value"])?;
    for (m, v) in months.iter().zip(values) {
        w.write_record([m.to_string(), v.to_string()])?;
    }
    w.flush()
}

impl World {
    /// Serialize the corpus as GKG rows, one per line.
    pub fn write_corpus<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            writeln!(w, "{}", r.serialize(&self.schema))?;
        }
        w.flush()
    }

    /// Write corpus, labels, macro series, codebook and a ready-to-run config
    /// into `dir`. Returns the config path.
    pub fn write(&self, dir: &Path, gzip: bool) -> io::Result<PathBuf> {
        fs::create_dir_all(dir.join("macro"))?;
        let corpus_name = if gzip { "corpus.gkg.gz" } else { "corpus.gkg" };
        let corpus_path = dir.join(corpus_name);
        let file = io::BufWriter::new(fs::File::create(&corpus_path)?);
        if gzip {
            let mut enc = GzEncoder::new(file, Compression::fast());
            self.write_corpus(&mut enc)?;
            enc.finish()?.flush()?;
        } else {
            self.write_corpus(file)?;
        }

        let months = &self.truth.months;
        for (name, values) in &self.series {
            write_series_csv(&dir.join("macro").join(format!("{name}.csv")), months, values)?;
        }
        let mut variables = Vec::new();
        for (j, topic) in self.spec.topics.iter().enumerate() {
            let labels_name = format!("labels_{}.csv", topic.variable);
            let mut w = csv::Writer::from_path(dir.join(&labels_name))?;
            w.write_record(["record_id", "label"])?;
            for (id, label) in &self.labels[j] {
                w.write_record([id.as_str(), &label.to_string()])?;
            }
            w.flush()?;
            variables.push(VariableConfig {
                name: topic.variable.clone(),
                keywords: vec![topic.keyword.clone()],
                controls: topic.controls.clone(),
                labels: Some(PathBuf::from(labels_name)),
                predictions: None,
                targets: self
                    .spec
                    .countries
                    .iter()
                    .map(|c| (c.clone(), PathBuf::from(format!("macro/{c}_{}.csv", topic.variable))))
                    .collect(),
            });
        }
        self.codebook
            .save(&dir.join("codebook.csv"))
            .map_err(|e| io::Error::other(e.to_string()))?;
        let truth = serde_json::to_string_pretty(&self.truth).map_err(io::Error::other)?;
        fs::write(dir.join("truth.json"), truth + "\n")?;

        let controls: BTreeSet<&String> = self.spec.topics.iter().flat_map(|t| &t.controls).collect();
        let config = PipelineConfig {
            corpus: vec![PathBuf::from(corpus_name)],
            schema: self.schema.clone(),
            start: self.spec.start,
            end: self.spec.end,
            countries: self.spec.countries.clone(),
            country_groups: CountryGroupMap::default(),
            variables,
            controls: controls
                .into_iter()
                .map(|c| (c.clone(), PathBuf::from(format!("macro/{c}.csv"))))
                .collect(),
            classifier: ClassifierConfig {
                mode: ClassifierMode::Native,
                ..ClassifierConfig::default()
            },
            seeds: Seeds {
                cv: self.spec.seed,
                sample: self.spec.seed.wrapping_add(1),
            },
            unfiltered_per_year: 2000,
            codebook: Some(PathBuf::from("codebook.csv")),
            ..PipelineConfig::default()
        };
        let path = dir.join("config.json");
        fs::write(&path, serde_json::to_string_pretty(&config).map_err(io::Error::other)? + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relevance::keyword_filter;

    fn small() -> WorldSpec {
        WorldSpec {
            start: YearMonth::new(2019, 1).unwrap(),
            end: YearMonth::new(2019, 6).unwrap(),
            relevant_per_month: 10,
            irrelevant_per_month: 5,
            noise_per_month: 20,
            labeled_per_topic: 40,
            ..WorldSpec::default()
        }
    }

    #[test]
    fn counts_and_determinism() {
        let spec = small();
        let a = generate_world(&spec);
        let b = generate_world(&spec);
        assert_eq!(a.records.len(), 6 * (2 * 15 + 20));
        assert_eq!(a.records, b.records);
        assert_eq!(a.series, b.series);
        assert_eq!(a.labels[0].len(), 40);
        assert_eq!(a.truth.relevant_ids[0].len(), 60);
        let ids: BTreeSet<&str> = a.records.iter().map(|r| r.record_id.as_str()).collect();
        assert_eq!(ids.len(), a.records.len());
    }

    #[test]
    fn keyword_articles_are_topic_articles() {
        let w = generate_world(&small());
        let passing = w.records.iter().filter(|r| keyword_filter(r, &["growth"])).count();
        assert_eq!(passing, 6 * 15);
    }

    #[test]
    fn rows_round_trip() {
        let w = generate_world(&small());
        for r in w.records.iter().take(50) {
            let line = r.serialize(&w.schema);
            let back = crate::gkg::parse_record(&line, &w.schema).unwrap();
            assert_eq!(back.serialize(&w.schema), line);
            assert_eq!(back.gcam, r.gcam);
        }
    }
}
