use std::collections::BTreeMap;
use std::path::Path;

use statecrawl::config::RunConfig;
use statecrawl::pipeline::{self, DirectEstimate, Preset, TimeSource};
use statecrawl::report;
use statecrawl::Error;

const TOP10: [u64; 10] = [1782, 1656, 1629, 1503, 1330, 1291, 1208, 1151, 1112, 907];

fn config(dir: &Path) -> RunConfig {
    RunConfig {
        fixtures: dir.join("fixtures"),
        out: dir.join("out"),
        holdings: Some(dir.join("fixtures").join(pipeline::HOLDINGS_FILE)),
        ..RunConfig::default()
    }
}

#[test]
fn reference_preset_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config = config(dir.path());
    let generated = pipeline::gen_fixture(&config.fixtures, &Preset::Reference { rng_seed: 2016 }).unwrap();
    assert_eq!(generated.fixtures, 440);

    let crawl = pipeline::crawl(&config).unwrap();
    assert_eq!((crawl.seeds, crawl.deferred, crawl.descendants), (440, 303, 8_691));

    let analysis = pipeline::analyze(&config).unwrap();
    let stats = analysis.stats.as_ref().unwrap();
    assert_eq!((stats.deferred.seeds, stats.nondeferred.seeds), (303, 137));
    assert_eq!(stats.deferred.descendant_total(), 8_519);
    assert_eq!(stats.nondeferred.descendant_total(), 172);
    assert_eq!(stats.all.contributing_paths, 2_080);
    assert_eq!(
        stats.level_contributions,
        BTreeMap::from([(0, 11_942), (1, 56_957), (2, 66_320)])
    );
    assert_eq!(stats.all.depth.max, 2);
    assert_eq!(stats.nondeferred.depth.max, 1);
    assert_eq!(stats.nondeferred.descendants.max, 13);
    assert_eq!(stats.nondeferred.level_distinct.get(&0), Some(&4_250));
    assert_eq!(stats.deferred.root_resources_total, 7_692);
    // 45,005 single-use level-1 URIs, the planted top-10 and 9,363 level-2 URIs.
    let planted: u64 = TOP10.iter().sum();
    assert_eq!(planted, 13_569);
    assert_eq!(stats.total_insertions, 45_005 + planted + 9_363);

    let ranking = analysis.ranking.as_ref().unwrap();
    let counts: Vec<u64> = ranking.top().iter().map(|e| e.1).collect();
    assert_eq!(counts, TOP10);
    assert_eq!(ranking.top_k_total, planted);
    assert_eq!(ranking.distinct_new, 54_378);
    assert!((ranking.share_of_distinct_new - planted as f64 / 54_378.0).abs() < 1e-12);
    assert!((ranking.share_of_insertions - planted as f64 / 67_937.0).abs() < 1e-12);
    assert_eq!(ranking.top()[0].0, "http://ads.adnet-a.test/AdServer/js/showad.js");

    let cov = pipeline::coverage_stage(&config).unwrap();
    let fractions: Vec<f64> = cov.levels.iter().map(|l| l.fraction_unarchived).collect();
    for (got, want) in fractions.iter().zip([0.12, 0.92, 0.96]) {
        assert!((got - want).abs() <= 0.01, "{fractions:?}");
    }
    assert_eq!(cov.lookups, 66_320);

    let est = pipeline::estimate(&config, None).unwrap();
    assert_eq!(est.times, TimeSource::Modelled);
    assert_eq!(est.crawl.baseline_size, 4_250);
    let storage = est.storage.as_ref().unwrap();
    assert_eq!(storage.total.records, 8_691);
    assert_eq!(storage.total.metadata_bytes, 8_691 * 16_450);
    assert_eq!(storage.deferred.level_bytes, [7_692 * 2_600, 45_015 * 2_400, 9_363 * 2_400]);
    assert_eq!(storage.nondeferred.level_bytes, [4_250 * 2_600, 0]);
    let x = storage.extrapolation.as_ref().unwrap();
    assert_eq!(x.yearly_additional_bytes, 12 * x.monthly_additional_bytes);

    let summary = report::report(&config).unwrap();
    assert_eq!(summary.descendants, 8_691);
    assert_eq!(summary.coverage.as_ref().unwrap()[&1], 0.92);
    let report_dir = config.out.join(pipeline::REPORT_DIR);
    for name in [
        "descendant_distribution",
        "descendant_range",
        "event_kinds",
        "contributing_paths",
        "crawl_estimate",
        "top_new_uris",
        "storage",
        "series_level_contributions",
        "series_occurrence_ranking",
        "series_contribution_cdf",
        "series_coverage_by_level",
        "series_mime_unarchived",
        "series_unarchived_sizes",
    ] {
        assert!(report_dir.join(format!("{name}.csv")).is_file(), "{name}.csv");
        assert!(report_dir.join(format!("{name}.json")).is_file(), "{name}.json");
    }
    let ranking_csv = std::fs::read_to_string(report_dir.join("series_occurrence_ranking.csv")).unwrap();
    assert_eq!(ranking_csv.lines().count(), 301);
    for stage in ["crawl", "analyze", "coverage", "estimate", "report"] {
        assert!(pipeline::manifest_path(&config.out, stage).is_file(), "{stage}");
    }
    let ndjson = std::fs::read_to_string(config.out.join(pipeline::METADATA_FILE)).unwrap();
    assert_eq!(ndjson.lines().count(), 8_691);
}

#[test]
fn empty_seed_list_writes_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config(dir.path());
    pipeline::gen_fixture(&config.fixtures, &Preset::Random(Default::default())).unwrap();
    let seeds = dir.path().join("seeds.txt");
    std::fs::write(&seeds, "# nothing today\n").unwrap();
    config.seeds = Some(seeds);
    let summary = pipeline::crawl(&config).unwrap();
    assert_eq!(summary.seeds, 0);
    let text = std::fs::read_to_string(config.out.join(pipeline::CRAWL_FILE)).unwrap();
    assert_eq!(text, "{\"seeds\":[]}\n");
    assert_eq!(std::fs::read_to_string(config.out.join(pipeline::METADATA_FILE)).unwrap(), "");
    let analysis = pipeline::analyze(&config).unwrap();
    assert!(analysis.stats.is_none() && analysis.seeds.is_empty());
}

#[test]
fn seed_list_selects_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config(dir.path());
    pipeline::gen_fixture(&config.fixtures, &Preset::Random(Default::default())).unwrap();
    let seeds = dir.path().join("seeds.txt");
    std::fs::write(&seeds, "http://SITE3.test/\nhttp://site1.test/#top\n").unwrap();
    config.seeds = Some(seeds.clone());
    assert_eq!(pipeline::crawl(&config).unwrap().seeds, 2);
    let crawl: pipeline::CrawlOutput = serde_json::from_str(
        &std::fs::read_to_string(config.out.join(pipeline::CRAWL_FILE)).unwrap(),
    )
    .unwrap();
    let names: Vec<&str> = crawl.seeds.iter().map(|s| s.fixture.as_str()).collect();
    assert_eq!(names, ["0003.json", "0001.json"]);

    std::fs::write(&seeds, "http://elsewhere.test/\n").unwrap();
    let err = pipeline::crawl(&config).unwrap_err();
    assert!(matches!(err, Error::Stage(_)), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn missing_upstream_artifacts_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = config(dir.path());
    let err = pipeline::analyze(&config).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("crawl.json") && msg.contains("statecrawl crawl"), "{msg}");
    assert_eq!(err.exit_code(), 1);
    let err = report::report(&config).unwrap_err();
    assert!(err.to_string().contains("analysis.json"));
    assert!(matches!(pipeline::estimate(&config, None), Err(Error::MissingArtifact { stage: "analyze", .. })));
    // Fixture directory that does not exist is a configuration problem.
    assert_eq!(pipeline::crawl(&config).unwrap_err().exit_code(), 2);
}

#[test]
fn direct_estimate_reproduces_crawl_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = config(dir.path());
    let direct = DirectEstimate {
        baseline_size: 4_250,
        baseline_time: 1_035.0,
        sizes: vec![11_942, 56_957, 66_320],
        times: vec![8_452.0, 27_990.0, 40_258.0],
    };
    let out = pipeline::estimate(&config, Some(&direct)).unwrap();
    assert_eq!(out.times, TimeSource::Measured);
    assert!(out.storage.is_none());
    let table = pipeline::estimate_table(&out);
    for needle in ["8.17x", "27.04x", "38.90x", "2.81x", "13.40x", "15.60x", "1.04", "2.30", "0.76"] {
        assert!(table.contains(needle), "{needle} missing from\n{table}");
    }
    assert!(table.contains("MaxROI (selected): s0,s1"), "{table}");
    let mismatched = DirectEstimate {
        times: vec![1.0],
        ..direct
    };
    assert_eq!(pipeline::estimate(&config, Some(&mismatched)).unwrap_err().exit_code(), 2);
}

#[test]
fn stages_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        holdings: None,
        ..config(dir.path())
    };
    let spec = statecrawl::generate::RandomSpec {
        seeds: 25,
        breadth: 4,
        depth: 3,
        rng_seed: 5,
        ..Default::default()
    };
    pipeline::gen_fixture(&config.fixtures, &Preset::Random(spec)).unwrap();
    let files = ["crawl.json", "metadata.ndjson", "analysis.json", "estimate.json", "manifest-crawl.json"];
    let run = || {
        pipeline::crawl(&config).unwrap();
        pipeline::analyze(&config).unwrap();
        pipeline::estimate(&config, None).unwrap();
        report::report(&config).unwrap();
        files
            .iter()
            .map(|f| std::fs::read(config.out.join(f)).unwrap())
            .collect::<Vec<_>>()
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
}
