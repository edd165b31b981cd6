use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use newsmacro::aggregate::{location_filter, CountryGroupMap};
use newsmacro::pipeline::artifacts::sha256_file;
use newsmacro::pipeline::config::{ClassifierMode, PipelineConfig};
use newsmacro::relevance::{import_predictions, ThemeVocabulary};
use newsmacro::pipeline::report::{generate_report, Tables, TABLES_JSON, TABLE_RMSE};
use newsmacro::pipeline::{run, run_stages, OutputDir, PipelineError, Stage};
use newsmacro::synthetic::{generate_world, World, WorldSpec};

fn small_spec(seed: u64) -> WorldSpec {
    WorldSpec {
        seed,
        countries: vec!["US".into(), "PL".into()],
        relevant_per_month: 30,
        irrelevant_per_month: 10,
        noise_per_month: 80,
        labeled_per_topic: 300,
        ..WorldSpec::default()
    }
}

fn world_dir(seed: u64) -> (tempfile::TempDir, PathBuf, World) {
    let dir = tempfile::tempdir().unwrap();
    let world = generate_world(&small_spec(seed));
    let config = world.write(dir.path(), seed.is_multiple_of(2)).unwrap();
    (dir, config, world)
}

fn digests(root: &Path, prefix: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.join(prefix)];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), sha256_file(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_run_is_deterministic_and_stages_are_isolated() {
    let (dir, config, _) = world_dir(3);
    let out_a = dir.path().join("out_a");
    let out_b = dir.path().join("out_b");
    let manifest = run(&config, &out_a, None, None).unwrap();
    run(&config, &out_b, None, None).unwrap();
    for stage in Stage::ALL {
        assert_eq!(digests(&out_a, stage.name()), digests(&out_b, stage.name()), "{stage}");
    }
    for rel in manifest.artifacts.keys() {
        assert!(out_a.join(rel).exists(), "{rel}");
    }
    let rmse = std::fs::read_to_string(out_a.join(TABLE_RMSE)).unwrap();
    // Two countries, two variables.
    assert_eq!(rmse.lines().count(), 5);

    let before: Vec<_> = ["ingest", "filter", "aggregate", "granger"].map(|s| digests(&out_a, s)).into();
    run(&config, &out_a, Some(Stage::Forecast), None).unwrap();
    let after: Vec<_> = ["ingest", "filter", "aggregate", "granger"].map(|s| digests(&out_a, s)).into();
    assert_eq!(before, after);
    assert_eq!(digests(&out_a, "forecast"), digests(&out_b, "forecast"));
}

#[test]
fn report_regenerates_from_artifacts() {
    let (dir, config, _) = world_dir(4);
    let out = dir.path().join("out");
    run(&config, &out, None, None).unwrap();
    let saved: Tables = serde_json::from_slice(&std::fs::read(out.join(TABLES_JSON)).unwrap()).unwrap();
    let cfg = PipelineConfig::load(&config).unwrap();
    let d = OutputDir::open(&out).unwrap();
    assert_eq!(generate_report(&cfg, &d).unwrap(), saved);
    drop(d);
    let before = digests(&out, "report");
    run(&config, &out, Some(Stage::Report), None).unwrap();
    assert_eq!(digests(&out, "report"), before);
}

#[test]
fn forecast_without_panels_names_missing_artifact() {
    let (dir, config, _) = world_dir(5);
    let out = dir.path().join("out");
    let err = run(&config, &out, Some(Stage::Forecast), None).unwrap_err();
    assert_eq!(err.kind(), "MissingArtifact");
    assert_eq!(err.stage(), Some(Stage::Forecast));
    assert!(err.to_string().contains("unfiltered.csv"), "{err}");
}

#[test]
fn locked_output_is_refused() {
    let (dir, config, _) = world_dir(6);
    let out = dir.path().join("out");
    let _held = OutputDir::open(&out).unwrap();
    let err = run(&config, &out, Some(Stage::Ingest), None).unwrap_err();
    assert!(matches!(err, PipelineError::Locked { .. }));
}

#[test]
fn imported_predictions_reproduce_native_filtering() {
    let (dir, config, _) = world_dir(7);
    let out = dir.path().join("native");
    run_stages(&PipelineConfig::load(&config).unwrap(), &out, &[Stage::Ingest, Stage::Filter]).unwrap();

    let mut cfg = PipelineConfig::load(&config).unwrap();
    cfg.classifier.mode = ClassifierMode::Imported;
    for v in &mut cfg.variables {
        v.predictions = Some(out.join(format!("filter/{}/predictions.csv", v.name)));
    }
    let out2 = dir.path().join("imported");
    run_stages(&cfg, &out2, &[Stage::Ingest, Stage::Filter]).unwrap();
    for v in &cfg.variables {
        let rel = format!("filter/{}/retained_ids.txt", v.name);
        assert_eq!(std::fs::read(out.join(&rel)).unwrap(), std::fs::read(out2.join(&rel)).unwrap());
    }
}

#[test]
fn native_filter_recovers_planted_relevant_records() {
    let (dir, config, world) = world_dir(8);
    let out = dir.path().join("out");
    run_stages(&PipelineConfig::load(&config).unwrap(), &out, &[Stage::Ingest, Stage::Filter]).unwrap();
    for (j, topic) in world.spec.topics.iter().enumerate() {
        let kept = std::fs::read_to_string(out.join(format!("filter/{}/retained_ids.txt", topic.variable))).unwrap();
        let truth = &world.truth.relevant_ids[j];
        let hit = kept.lines().filter(|id| truth.contains(*id)).count();
        let recall = hit as f64 / truth.len() as f64;
        assert!(recall >= 0.9, "{}: recovered {recall:.3}", topic.variable);
    }
}

#[test]
fn external_classifier_interfaces() {
    let (dir, config, world) = world_dir(13);
    let out = dir.path().join("out");
    let cfg = PipelineConfig::load(&config).unwrap();
    run_stages(&cfg, &out, &[Stage::Ingest, Stage::Filter]).unwrap();
    let v = &cfg.variables[0].name;
    let vocab: ThemeVocabulary =
        serde_json::from_slice(&std::fs::read(out.join(format!("filter/{v}/vocabulary.json"))).unwrap()).unwrap();

    // Encoded sequences: unpadded ids that re-pad to the in-process encoding.
    let mut rdr = csv::Reader::from_path(out.join(format!("filter/{v}/encoded.csv"))).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["record_id", "tokens"]);
    let by_id: std::collections::HashMap<_, _> = world.records.iter().map(|r| (r.record_id.clone(), r)).collect();
    let mut rows = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        let mut ids: Vec<u32> = row[1].split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert!(ids.len() <= vocab.max_len && ids.iter().all(|&i| i < vocab.pad_id()));
        ids.resize(vocab.max_len, vocab.pad_id());
        assert_eq!(ids, vocab.encode(&by_id[&row[0]].themes));
        rows += 1;
    }
    assert!(rows > 0);

    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join(format!("filter/{v}/metrics.json"))).unwrap()).unwrap();
    let m = &metrics["metrics"];
    let (p, r, f1) = (m["precision"].as_f64().unwrap(), m["recall"].as_f64().unwrap(), m["f1"].as_f64().unwrap());
    assert!((f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
    assert_eq!(m["fold_scores"].as_array().unwrap().len(), cfg.classifier.folds);

    // A prediction file as a Python exporter might write it.
    let exported = dir.path().join("bilstm_predictions.csv");
    std::fs::write(&exported, "record_id,probability\r\nabc-1,0.9871234\r\nabc-2,1e-05\r\nabc-3,0.5\r\n").unwrap();
    let preds = import_predictions(&exported).unwrap();
    assert_eq!(preds.iter().map(|p| p.label).collect::<Vec<_>>(), vec![1, 0, 0]);
}

#[test]
fn location_filter_matches_generator_counts() {
    let world = generate_world(&small_spec(9));
    let groups = CountryGroupMap::default();
    for (country, expected) in &world.truth.location_counts {
        let kept = location_filter(world.records.iter(), groups.get(country).unwrap());
        assert_eq!(kept.len(), *expected, "{country}");
    }
}

#[test]
fn seed_override_changes_unfiltered_sample() {
    let (dir, config, _) = world_dir(10);
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&config).unwrap()).unwrap();
    v["unfiltered_per_year"] = serde_json::json!(200);
    std::fs::write(&config, v.to_string()).unwrap();
    let digest = |seed: u64, name: &str| {
        let out = dir.path().join(name);
        for stage in [Stage::Ingest, Stage::Filter, Stage::Aggregate] {
            run(&config, &out, Some(stage), Some(seed)).unwrap();
        }
        sha256_file(&out.join("aggregate/US/unfiltered.csv")).unwrap()
    };
    let a = digest(1, "a");
    assert_eq!(a, digest(1, "a2"));
    assert_ne!(a, digest(2, "b"));
}

#[test]
fn bad_config_is_rejected() {
    let (dir, config, _) = world_dir(11);
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&config).unwrap()).unwrap();
    v["end"] = serde_json::json!("2016-01");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let err = PipelineConfig::load(&bad).unwrap_err();
    assert_eq!(err.kind(), "Config");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_newsmacro"))
}

#[test]
fn cli_generate_and_run_all() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, serde_json::to_string(&small_spec(12)).unwrap()).unwrap();
    let world = dir.path().join("world");
    let status = cli()
        .args(["generate-synthetic", "--out"])
        .arg(&world)
        .arg("--spec")
        .arg(&spec)
        .args(["--seed", "12", "--countries", "US"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let out = dir.path().join("out");
    let status = cli()
        .args(["run", "--stage", "all", "--config"])
        .arg(world.join("config.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("report/report.md").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn cli_error_is_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let output = cli()
        .args(["forecast", "--config"])
        .arg(dir.path().join("missing.json"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"], "Io");
    assert!(err["message"].as_str().unwrap().contains("missing.json"));
}
