use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use soliclone::artifacts::read_meta;
use soliclone::PipelineConfig;

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soliclone"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1735689600")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ingest(out: &Path) {
    let c = corpus();
    let o = run(
        out,
        &[
            "ingest",
            "--addresses",
            c.join("addresses.csv").to_str().unwrap(),
            "--sources",
            c.join("sources").to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&run(out, &["dedup"])), 0);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let bad = out.join("bad.toml");

    fs::write(&bad, "[pairs]\nunknown_key = 1\n").unwrap();
    let o = run(out, &["--config", bad.to_str().unwrap(), "stats"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    fs::write(&bad, "[pairs]\ncode_threshold = 1.5\n").unwrap();
    assert_eq!(
        code(&run(out, &["--config", bad.to_str().unwrap(), "stats"])),
        2
    );

    assert_eq!(
        code(&run(out, &["--config", "/nonexistent.toml", "stats"])),
        2
    );
    assert_eq!(code(&run(out, &["sample", "--n", "lots"])), 2);
    assert_eq!(code(&run(out, &["pairs", "--policy", "nearest"])), 2);
    assert_eq!(
        code(&run(out, &["ingest"])),
        2,
        "ingest without an address list"
    );
}

#[test]
fn missing_or_stale_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    let o = run(out, &["extract"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("run `ingest` first"), "{}", stderr(&o));

    ingest(out);
    assert_eq!(code(&run(out, &["extract"])), 0);
    let o = run(out, &["pairs"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("run `embed` first"), "{}", stderr(&o));

    assert_eq!(code(&run(out, &["embed"])), 0);
    assert_eq!(code(&run(out, &["pairs"])), 0);

    // re-extracting with another filter invalidates the embeddings
    assert_eq!(code(&run(out, &["extract", "--keep-all-visibilities"])), 0);
    let o = run(out, &["pairs"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("stale"), "{}", stderr(&o));

    let o = run(out, &["review", "create", "--name", "s"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("run `sample` first"), "{}", stderr(&o));
}

#[test]
fn provider_failures_exit_4_after_writing_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ingest(out);
    // an empty recording answers nothing
    let replay = out.join("replay.jsonl");
    fs::write(&replay, "").unwrap();
    let o = run(
        out,
        &[
            "llm",
            "scan",
            "--provider",
            "replay",
            "--replay",
            replay.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("llm/scan.json")).unwrap()).unwrap();
    assert_eq!(report["eligible_pairs"], 1);
    assert_eq!(report["failures"].as_array().unwrap().len(), 1);

    let o = run(out, &["llm", "scan"]);
    assert_eq!(code(&o), 0, "the stub provider never fails: {}", stderr(&o));
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ingest(out);
    assert_eq!(code(&run(out, &["extract"])), 0);
    assert_eq!(code(&run(out, &["embed"])), 0);
    assert_eq!(code(&run(out, &["pairs"])), 0);

    let cfg = out.join("c.toml");
    fs::write(&cfg, "seed = 7\n[sample]\nset = \"baseline\"\nn = \"20\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&run(out, &["--config", c, "sample"])), 0);
    let meta = read_meta(&out.join("sample-baseline.jsonl")).unwrap();
    assert_eq!(meta.config["seed"], 7);
    assert_eq!(meta.config["sample"]["n"], "20");

    assert_eq!(
        code(&run(
            out,
            &["--config", c, "--seed", "9", "sample", "--n", "5"]
        )),
        0
    );
    let meta = read_meta(&out.join("sample-baseline.jsonl")).unwrap();
    assert_eq!(meta.config["seed"], 9);
    let plan: serde_json::Value = serde_json::from_str(
        fs::read_to_string(out.join("sample-baseline.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(plan["total_n"], 5);
    assert_eq!(plan["seed"], 9);

    let mut want = PipelineConfig::load(Some(&cfg)).unwrap();
    want.seed = 9;
    want.sample.n = "5".into();
    assert_eq!(meta.config_hash, want.hash());
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, flag) in [(&a, None), (&b, Some("--sequential"))] {
        ingest(out);
        for stage in ["extract", "embed", "pairs"] {
            let mut args = vec![stage];
            args.extend(flag);
            assert_eq!(code(&run(out, &args)), 0);
        }
    }
    assert_eq!(
        fs::read(a.join("pairs.jsonl")).unwrap(),
        fs::read(b.join("pairs.jsonl")).unwrap()
    );
}

#[test]
fn stats_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path());
    let o = run(dir.path(), &["stats", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["file_count"], 12);
    assert_eq!(v["function_count"], 48);
}
