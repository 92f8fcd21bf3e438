use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lyricist-entropy"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn mock_plugin(mode: &str) -> String {
    let script: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "fixtures", "mock_plugin.py"]
        .iter()
        .collect();
    format!("plugin:python3 {} {mode}", script.display())
}

fn synth(dir: &Path) {
    let out = run(dir, &["synth", "--seed", "4", "--out", "data"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&run(dir, &[])), 1);
    assert_eq!(code(&run(dir, &["frobnicate"])), 1);
    assert_eq!(code(&run(dir, &["entropy", "x.jsonl", "--log-base", "7"])), 1);
    assert_eq!(code(&run(dir, &["--help"])), 0);
    assert_eq!(code(&run(dir, &["entropy", "missing.jsonl"])), 2);

    fs::write(dir.join("bad.jsonl"), "{\"song_id\": 1}\n").unwrap();
    let out = run(dir, &["entropy", "bad.jsonl"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn stepwise_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let corpus = "data/corpus.jsonl";

    assert_eq!(code(&run(dir, &["ingest", corpus, "--out", "ingested"])), 0);
    assert!(dir.join("ingested/corpus.jsonl").exists());
    assert!(dir.join("ingested/name_variants.csv").exists());

    assert_eq!(code(&run(dir, &["entropy", corpus, "--out", "e", "--log-base", "2"])), 0);
    let csv = fs::read_to_string(dir.join("e/lyricist_entropy.csv")).unwrap();
    assert!(csv.starts_with("lyricist_id,song_count,n_singers,entropy\n"));
    assert_eq!(csv.lines().count(), 101);

    let out = run(dir, &["group", corpus, "--out", "g"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("A0"));
    for f in ["groups_quantile.csv", "groups_kmeans.csv", "assignment_quantile.csv", "assignment_kmeans.csv"] {
        assert!(dir.join("g").join(f).exists(), "{f}");
    }

    let out = run(dir, &["sample", corpus, "--mode", "homogenous", "--repetitions", "1", "--out", "s"]);
    assert_eq!(code(&out), 0);
    let mut datasets: Vec<_> = fs::read_dir(dir.join("s/datasets")).unwrap().map(|e| e.unwrap().path()).collect();
    datasets.sort();
    assert_eq!(datasets.len(), 5);
    let dataset = datasets[0].to_str().unwrap();

    assert_eq!(code(&run(dir, &["train", corpus, dataset, "--out", "t"])), 0);
    let model = fs::read_dir(dir.join("t/models")).unwrap().next().unwrap().unwrap().path();
    let out = run(dir, &["evaluate", corpus, dataset, "--model", model.to_str().unwrap(), "--out", "t"]);
    assert_eq!(code(&out), 0);
    let saved = String::from_utf8_lossy(&out.stdout).into_owned();
    let out = run(dir, &["evaluate", corpus, dataset, "--out", "t2"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), saved);

    // Plug-in training lives in the plug-in; `train` refuses it.
    let plugin = mock_plugin("ok");
    assert_eq!(code(&run(dir, &["train", corpus, dataset, "--classifier", &plugin])), 1);
    assert_eq!(code(&run(dir, &["evaluate", corpus, dataset, "--classifier", &plugin, "--out", "p"])), 0);
    let broken = mock_plugin("garbage");
    assert_eq!(code(&run(dir, &["evaluate", corpus, dataset, "--classifier", &broken])), 3);
}

#[test]
fn experiment_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    fs::write(
        dir.join("config.json"),
        r#"{"groupings": ["quantile"], "homogenous_repetitions": 1, "heterogenous_repetitions": 2}"#,
    )
    .unwrap();
    let args = ["experiment", "data/corpus.jsonl", "--config", "config.json", "--out", "run", "--jobs", "2"];
    let out = run(dir, &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("homogenous sampling A*"));
    assert!(stdout.contains("7 datasets (7 trained now, 0 failed)"));

    let table = fs::read(dir.join("run/tables/A_homogenous.csv")).unwrap();
    let again = run(dir, &args);
    assert!(String::from_utf8_lossy(&again.stdout).contains("(0 trained now"));
    assert_eq!(fs::read(dir.join("run/tables/A_homogenous.csv")).unwrap(), table);

    let out = run(dir, &["report", "run"]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(dir.join("run/tables/A_homogenous.csv")).unwrap(), table);

    // A different seed cannot reuse the directory.
    let mut reseeded = args.to_vec();
    reseeded.extend(["--seed", "5"]);
    assert_eq!(code(&run(dir, &reseeded)), 1);

    let crash = mock_plugin("crash");
    let out = run(
        dir,
        &["experiment", "data/corpus.jsonl", "--config", "config.json", "--out", "crashed", "--classifier", &crash],
    );
    assert_eq!(code(&out), 3);
    assert!(dir.join("crashed/manifest.json").exists());
}

#[test]
fn synth_from_params_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("params.json"),
        r#"{"n_lyricists": 5, "songs_per_lyricist": [10, 10],
            "singers_per_lyricist": {"kind": "fixed", "count": 1},
            "singer_pool": {"kind": "disjoint"}, "vocab_size": 50, "tokens_per_song": [5, 8],
            "style_support": 5, "alpha": 0.4, "beta": 0.4, "seed": 1}"#,
    )
    .unwrap();
    let out = run(dir, &["synth", "--params", "params.json", "--out", "s"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let corpus = fs::read_to_string(dir.join("s/corpus.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 50);

    fs::write(dir.join("bad.json"), r#"{"n_lyricists": 0}"#).unwrap();
    assert_ne!(code(&run(dir, &["synth", "--params", "bad.json"])), 0);
}
