use jsonschema::JSONSchema;
use proptest::prelude::*;
use serde_json::Value;
use tempred_core::redundancy::{GranularitySummary, ProjectSummary, ScopeSummary};
use tempred_core::report::{format_percent, render, to_csv, to_json, CSV_HEADER};
use tempred_core::synth::{generate_history, HistorySpec};
use tempred_core::{
    run_analysis, AnalysisConfig, Diagnostics, Granularity, Normalization, OutputFormat, Report, Scope,
};

fn schema() -> JSONSchema {
    let raw = include_str!("../schema/report.schema.json");
    let schema: Value = serde_json::from_str(raw).unwrap();
    JSONSchema::compile(&schema).expect("schema compiles")
}

fn assert_valid(json: &str) {
    let value: Value = serde_json::from_str(json).unwrap();
    let reports = match value {
        Value::Array(items) => items,
        single => vec![single],
    };
    let schema = schema();
    for report in &reports {
        if let Err(errors) = schema.validate(report) {
            let messages: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
            panic!("schema violations: {messages:#?}");
        }
    }
}

fn synthetic(seed: u64) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let spec = HistorySpec {
        seed,
        commit_count: 15,
        ..HistorySpec::default()
    };
    generate_history(&spec, dir.path()).unwrap();
    dir
}

#[test]
fn reports_validate_against_schema() {
    let dir = synthetic(3);
    let mut variants = Vec::new();
    let base = AnalysisConfig::bundle(dir.path());
    variants.push(base.clone());
    let mut traced = base.clone();
    traced.trace_commits = true;
    variants.push(traced);
    let mut narrow = base.clone();
    narrow.granularities = vec![Granularity::Token];
    narrow.scopes = vec![Scope::Local];
    variants.push(narrow);
    let mut post = base.clone();
    post.normalization = Normalization::Post;
    variants.push(post);

    let reports: Vec<Report> = variants.iter().map(|c| run_analysis(c).unwrap()).collect();
    for report in &reports {
        assert_valid(&to_json(std::slice::from_ref(report)).unwrap());
    }
    assert_valid(&to_json(&reports).unwrap());
}

#[test]
fn empty_bundle_report_has_null_ratios() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("manifest.json"), r#"{"commits": []}"#).unwrap();
    let report = run_analysis(&AnalysisConfig::bundle(dir.path())).unwrap();
    let json = to_json(std::slice::from_ref(&report)).unwrap();
    assert_valid(&json);
    let value: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["acceptable_commits"]["line"], 0);
    assert_eq!(value["metrics"].as_array().unwrap().len(), 4);
    for metric in value["metrics"].as_array().unwrap() {
        assert!(metric["temporal_redundancy"].is_null());
    }
    assert!(render(&[report], OutputFormat::Table).unwrap().contains("n/a"));
}

#[test]
fn schema_rejects_out_of_range_ratio() {
    let dir = synthetic(4);
    let json = to_json(&[run_analysis(&AnalysisConfig::bundle(dir.path())).unwrap()]).unwrap();
    let mut value: Value = serde_json::from_str(&json).unwrap();
    value["metrics"][0]["temporal_redundancy"] = Value::from(1.5);
    assert!(!schema().is_valid(&value));
}

#[test]
fn csv_has_one_row_per_project_granularity_scope() {
    let a = synthetic(5);
    let b = synthetic(6);
    let mut reports = Vec::new();
    for dir in [&a, &b] {
        reports.push(run_analysis(&AnalysisConfig::bundle(dir.path())).unwrap());
    }
    let mut narrow = AnalysisConfig::bundle(a.path());
    narrow.scopes = vec![Scope::Global];
    narrow.project = Some("narrow".into());
    reports.push(run_analysis(&narrow).unwrap());

    let csv = to_csv(&reports).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    assert_eq!(reader.records().count(), 4 + 4 + 2);
}

fn summary(acceptable: u64, redundant: u64) -> ProjectSummary {
    let scope = ScopeSummary {
        redundant_commits: redundant,
        temporal_redundancy: (acceptable > 0).then(|| redundant as f64 / acceptable as f64),
    };
    ProjectSummary {
        granularities: Granularity::ALL
            .iter()
            .map(|g| GranularitySummary {
                granularity: *g,
                acceptable_commits: acceptable,
                global: scope.clone(),
                local: scope.clone(),
                global_pool_size: 10,
                local_pool_size_median: Some(2.5),
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn table_percent_is_rounded_ratio(acceptable in 1u64..5000, frac in 0.0f64..=1.0) {
        let redundant = (acceptable as f64 * frac).floor() as u64;
        let ratio = redundant as f64 / acceptable as f64;
        prop_assert_eq!(format_percent(Some(ratio)), format!("{}%", (100.0 * ratio).round() as i64));

        let config = AnalysisConfig::bundle("p");
        let report = Report::from_summary(&config, &summary(acceptable, redundant), Diagnostics::default());
        let json: Value = serde_json::from_str(&to_json(std::slice::from_ref(&report)).unwrap()).unwrap();
        // machine output keeps the exact ratio
        prop_assert_eq!(json["metrics"][0]["temporal_redundancy"].as_f64(), Some(ratio));
        let csv = to_csv(std::slice::from_ref(&report)).unwrap();
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let row = reader.records().next().unwrap().unwrap();
        let col = CSV_HEADER.iter().position(|h| *h == "temporal_redundancy").unwrap();
        prop_assert_eq!(row[col].parse::<f64>().unwrap(), ratio);
    }
}
