use std::path::Path;
use std::process::{Command, Output};

fn statecrawl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statecrawl"))
        .current_dir(dir)
        .env_remove("STATECRAWL_TIMEMAP_ENDPOINT")
        .args(args)
        .output()
        .expect("spawn statecrawl")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn fixture_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_string_lossy().starts_with("manifest-"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn gen_fixture_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = statecrawl(dir.path(), &["gen-fixture", "--out", out, "--count", "12", "--depth", "3", "--rng-seed", "9"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fixture_bytes(&dir.path().join("a"));
    assert_eq!(a.len(), 12);
    assert_eq!(a, fixture_bytes(&dir.path().join("b")));

    let o = statecrawl(dir.path(), &["gen-fixture", "--out", "c", "--count", "12", "--depth", "3", "--rng-seed", "10"]);
    assert_eq!(code(&o), 0);
    assert_ne!(a, fixture_bytes(&dir.path().join("c")));
}

#[test]
fn pipeline_runs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let o = statecrawl(dir.path(), &["gen-fixture", "--count", "8", "--rng-seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    std::fs::write(dir.path().join("holdings.txt"), "# nothing archived\n").unwrap();

    let stages: [&[&str]; 5] = [
        &["crawl"],
        &["analyze"],
        &["coverage", "--holdings", "holdings.txt"],
        &["estimate"],
        &["report"],
    ];
    let run = || {
        for args in stages {
            let o = statecrawl(dir.path(), args);
            assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        }
        ["crawl.json", "metadata.ndjson", "analysis.json", "coverage.json", "estimate.json"]
            .map(|f| std::fs::read(dir.path().join("out").join(f)).unwrap())
    };
    let first = run();
    assert_eq!(first, run());

    let coverage: serde_json::Value = serde_json::from_slice(&first[3]).unwrap();
    for level in coverage["levels"].as_array().unwrap() {
        assert_eq!(level["fraction_unarchived"], 1.0, "{level}");
    }
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = statecrawl(dir.path(), &["gen-fixture", "--count", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&statecrawl(dir.path(), &["crawl"])), 0);
    assert_eq!(code(&statecrawl(dir.path(), &["analyze"])), 0);
    std::fs::write(dir.path().join("holdings.txt"), "").unwrap();

    std::fs::write(dir.path().join("bad.toml"), "workerz = 3\n").unwrap();
    let o = statecrawl(dir.path(), &["crawl", "--config", "bad.toml"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("bad.toml"));

    assert_eq!(code(&statecrawl(dir.path(), &["crawl", "--config", "absent.toml"])), 2);
    assert_eq!(code(&statecrawl(dir.path(), &["crawl", "--policy", "MaxFun"])), 2);
    assert_eq!(code(&statecrawl(dir.path(), &["crawl", "--workers", "0"])), 2);
    assert_eq!(code(&statecrawl(dir.path(), &["crawl", "--fixtures", "nowhere"])), 2);

    let o = statecrawl(dir.path(), &["coverage"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("STATECRAWL_TIMEMAP_ENDPOINT"));

    let both = Command::new(env!("CARGO_BIN_EXE_statecrawl"))
        .current_dir(dir.path())
        .env("STATECRAWL_TIMEMAP_ENDPOINT", "http://127.0.0.1:9/timemap/link/")
        .args(["coverage", "--holdings", "holdings.txt"])
        .output()
        .unwrap();
    assert_eq!(code(&both), 2, "{}", stderr(&both));

    let o = statecrawl(dir.path(), &["estimate", "--baseline-size", "10"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_artifacts_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = statecrawl(dir.path(), &["analyze"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("crawl.json"), "{}", stderr(&o));
    let o = statecrawl(dir.path(), &["report"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn direct_estimate_prints_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let o = statecrawl(
        dir.path(),
        &[
            "estimate",
            "--baseline-size",
            "4250",
            "--baseline-time",
            "1035",
            "--sizes",
            "11942,56957,66320",
            "--times",
            "8452,27990,40258",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for needle in ["8.17x", "27.04x", "38.90x", "13.40x", "15.60x", "MaxROI (selected): s0,s1"] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
    let o = statecrawl(
        dir.path(),
        &[
            "estimate",
            "--policy",
            "MaxCoverage",
            "--baseline-size",
            "4250",
            "--baseline-time",
            "1035",
            "--sizes",
            "11942,56957,66320",
            "--times",
            "8452,27990,40258",
        ],
    );
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("MaxCoverage (selected): s0,s1,s2"), "{text}");
}

#[test]
fn reference_preset_has_an_alias() {
    let dir = tempfile::tempdir().unwrap();
    for (out, name) in [("a", "reference"), ("b", "paper")] {
        let o = statecrawl(dir.path(), &["gen-fixture", "--preset", name, "--out", out, "--rng-seed", "4"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fixture_bytes(&dir.path().join("a"));
    assert_eq!(a.len(), 441);
    assert_eq!(a, fixture_bytes(&dir.path().join("b")));
}
