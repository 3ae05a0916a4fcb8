//! End-to-end tests of the `targcn` binary: exit codes, file outputs,
//! determinism and report formats.

use std::path::Path;
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn targcn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_targcn"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Copy-pattern toy dataset as TSV with ISO dates (January 2014): 15 query
/// subjects, 15 carrier entities, queries at days 2, 5, …, 29, each answer
/// recoverable from the unique carrier edge one day earlier.
fn write_toy_dataset(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut train = String::new();
    let mut valid = String::new();
    let mut test = String::new();
    let date = |t: u32| format!("2014-01-{:02}", t + 1);
    for k in 0..10u32 {
        let t = 3 * k + 1;
        let mut sigma: Vec<u32> = (15..30).collect();
        sigma.shuffle(&mut rng);
        let mut held: Vec<u32> = (0..15).collect();
        held.shuffle(&mut rng);
        for s in 0..15u32 {
            let o = sigma[s as usize];
            train.push_str(&format!("e{o}\tcarries\te{s}\t{}\n", date(t - 1)));
            let answer = format!("e{s}\tanswers\te{o}\t{}\n", date(t));
            if held[..2].contains(&s) {
                valid.push_str(&answer);
            } else if held[2..4].contains(&s) {
                test.push_str(&answer);
            } else {
                train.push_str(&answer);
            }
        }
    }
    std::fs::write(dir.join("train.txt"), train).unwrap();
    std::fs::write(dir.join("valid.txt"), valid).unwrap();
    std::fs::write(dir.join("test.txt"), test).unwrap();
}

fn write_toy_config(path: &Path, epochs: usize) {
    let cfg = format!(
        "embedding_size = 32\ntime_dim = 32\nsearch_range = 1\nmax_neighbors = 100\n\
         exclude_query_time = true\nlearning_rate = 0.01\nbatch_size = 64\n\
         epochs = {epochs}\nseed = 7\nlog_wall_time = false\n"
    );
    std::fs::write(path, cfg).unwrap();
}

#[test]
fn missing_data_dir_exits_one_and_names_path() {
    let out = targcn()
        .args(["stats", "--data-dir", "/no/such/dataset-dir"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("/no/such/dataset-dir"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_flag_rejected_with_exit_one() {
    let out = targcn().args(["stats", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_ablation_variant_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_dataset(dir.path());
    let out = targcn()
        .args([
            "ablate",
            "--variant",
            "no-such-variant",
            "--data-dir",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = targcn().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("sweep-range"));
}

#[test]
fn stats_prints_six_keys() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_dataset(dir.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "stats",
            "--data-dir",
            dir.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in [
        "n_train",
        "n_valid",
        "n_test",
        "n_entities",
        "n_relations",
        "n_timestamps",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["n_entities"], 30);
    assert_eq!(json["n_relations"], 2);
    assert!(out_dir.path().join("stats.json").is_file());
    assert!(out_dir.path().join("entities.tsv").is_file());
    let entities = std::fs::read_to_string(out_dir.path().join("entities.tsv")).unwrap();
    assert!(entities.lines().next().unwrap().contains('\t'));
}

#[test]
fn data_dir_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_dataset(dir.path());
    let out = targcn()
        .arg("stats")
        .env("TARGCN_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["n_entities"], 30);
}

#[test]
fn train_writes_logs_checkpoints_and_reports() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let cfg = data.path().join("run.cfg");
    write_toy_config(&cfg, 2);
    let out_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--data-dir",
            data.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    // the resolved config is printed before execution
    let text = stdout(&out);
    assert!(text.contains("# resolved config"));
    assert!(text.contains("embedding_size = 32"));

    let log = std::fs::read_to_string(out_dir.path().join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2, "one record per epoch");
    for line in log.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(rec.get("valid_mrr").is_some());
    }
    assert!(out_dir.path().join("checkpoint_best.ckpt").is_file());
    assert!(out_dir.path().join("checkpoint_last.ckpt").is_file());
    assert!(out_dir.path().join("metrics_valid.json").is_file());
    assert!(out_dir.path().join("metrics_valid.csv").is_file());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["command"], "train");
    assert!(report["resolved_config"]["seed"].is_string());
    assert!(report["input_sha256"]["combined"].is_string());
}

#[test]
fn train_twice_is_byte_identical() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let cfg = data.path().join("run.cfg");
    write_toy_config(&cfg, 2);
    let mut logs = Vec::new();
    let mut ckpts = Vec::new();
    for _ in 0..2 {
        let out_dir = tempfile::tempdir().unwrap();
        let out = targcn()
            .args([
                "train",
                "--config",
                cfg.to_str().unwrap(),
                "--data-dir",
                data.path().to_str().unwrap(),
                "--out-dir",
                out_dir.path().to_str().unwrap(),
                "--threads",
                "1",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        logs.push(std::fs::read(out_dir.path().join("train_log.jsonl")).unwrap());
        ckpts.push(std::fs::read(out_dir.path().join("checkpoint_best.ckpt")).unwrap());
    }
    assert_eq!(logs[0], logs[1], "logs must be byte-identical");
    assert_eq!(ckpts[0], ckpts[1], "checkpoints must be byte-identical");
}

#[test]
fn eval_loads_checkpoint_and_dumps_ranks() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let cfg = data.path().join("run.cfg");
    write_toy_config(&cfg, 12);
    let out_dir = tempfile::tempdir().unwrap();
    let train_out = targcn()
        .args([
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--data-dir",
            data.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(train_out.status.code(), Some(0), "{}", stderr(&train_out));

    let eval_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "eval",
            "--checkpoint",
            out_dir
                .path()
                .join("checkpoint_best.ckpt")
                .to_str()
                .unwrap(),
            "--data-dir",
            data.path().to_str().unwrap(),
            "--split",
            "test",
            "--out-dir",
            eval_dir.path().to_str().unwrap(),
            "--dump-ranks",
            "--threads",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let metrics: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(eval_dir.path().join("metrics_test.json")).unwrap(),
    )
    .unwrap();
    // 20 held-out test facts expand into 40 reciprocal queries
    assert_eq!(metrics["num_queries"], 40);
    assert!(metrics["mrr"].as_f64().unwrap() > 0.9);
    let ranks = std::fs::read_to_string(eval_dir.path().join("ranks_test.tsv")).unwrap();
    assert_eq!(ranks.lines().count(), 40);
    assert_eq!(ranks.lines().next().unwrap().split('\t').count(), 5);
}

#[test]
fn ablate_flips_exactly_one_switch() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let cfg = data.path().join("run.cfg");
    write_toy_config(&cfg, 1);
    for variant in ["absolute-time", "random-sample", "whole-neighborhood"] {
        let out_dir = tempfile::tempdir().unwrap();
        let out = targcn()
            .args([
                "ablate",
                "--variant",
                variant,
                "--config",
                cfg.to_str().unwrap(),
                "--data-dir",
                data.path().to_str().unwrap(),
                "--out-dir",
                out_dir.path().to_str().unwrap(),
                "--threads",
                "1",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{variant}: {}", stderr(&out));
        let dir = out_dir.path().join(format!("ablate_{variant}"));
        let base = std::fs::read_to_string(dir.join("config_baseline.txt")).unwrap();
        let var = std::fs::read_to_string(dir.join("config_variant.txt")).unwrap();
        let diff: Vec<(&str, &str)> = base
            .lines()
            .zip(var.lines())
            .filter(|(a, b)| a != b)
            .collect();
        assert_eq!(diff.len(), 1, "{variant} flipped {diff:?}");
        assert!(dir.join("metrics_test.json").is_file());
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap())
                .unwrap();
        assert_eq!(report["result"]["variant"], variant);
    }
}

#[test]
fn sweep_range_emits_exact_csv_columns() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let cfg = data.path().join("run.cfg");
    // cap 4 keeps the weighted sampler focused when the range is open
    std::fs::write(
        &cfg,
        "embedding_size = 32\ntime_dim = 32\nmax_neighbors = 4\nexclude_query_time = true\n\
         learning_rate = 0.01\nbatch_size = 64\nepochs = 60\nseed = 7\nlog_wall_time = false\n",
    )
    .unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "sweep-range",
            "--ranges",
            "1,28",
            "--split",
            "test",
            "--config",
            cfg.to_str().unwrap(),
            "--data-dir",
            data.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.path().join("sweep_range/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "range,mrr,hits1,hits3,hits10");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[1][0], "28");
    // all signal sits at Δt = 1: the full timeline matches the tight range
    let mrr_1: f64 = rows[0][1].parse().unwrap();
    let mrr_max: f64 = rows[1][1].parse().unwrap();
    assert!(
        mrr_1 > 0.85,
        "range=1 should learn the pattern, got {mrr_1}"
    );
    assert!(
        mrr_max >= mrr_1 - 0.05,
        "whole timeline {mrr_max} vs range=1 {mrr_1}"
    );
}

#[test]
fn divergence_exits_with_code_two() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let cfg = data.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "embedding_size = 32\ntime_dim = 32\nsearch_range = 1\nactivation = relu\n\
         learning_rate = 1e150\nbatch_size = 64\nepochs = 3\nseed = 7\nlog_wall_time = false\n",
    )
    .unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--data-dir",
            data.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("diverged"), "{}", stderr(&out));
    // the last good checkpoint is preserved on disk
    assert!(out_dir.path().join("checkpoint_last.ckpt").is_file());
}

#[test]
fn params_reports_breakdown() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "params",
            "--entities",
            "7128",
            "--relations",
            "230",
            "--out-dir",
            out_dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["total"], 2_637_600);
    let csv = std::fs::read_to_string(out_dir.path().join("params.csv")).unwrap();
    assert!(csv.starts_with("tensor,parameters\n"));
    assert!(csv.contains("entity,2138400"));
    assert!(csv.trim_end().ends_with("total,2637600"));
}

#[test]
fn gen_unseen_excludes_days_5_15_25() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "gen-unseen",
            "--data-dir",
            data.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
            "--seed",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let train = std::fs::read_to_string(out_dir.path().join("train.txt")).unwrap();
    for line in train.lines() {
        let day: u32 = line.rsplit('-').next().unwrap().parse().unwrap();
        assert!(day != 5 && day != 15 && day != 25, "{line}");
    }
    let valid = std::fs::read_to_string(out_dir.path().join("valid.txt")).unwrap();
    let test = std::fs::read_to_string(out_dir.path().join("test.txt")).unwrap();
    for line in valid.lines().chain(test.lines()) {
        let day: u32 = line.rsplit('-').next().unwrap().parse().unwrap();
        assert!(day == 5 || day == 15 || day == 25, "{line}");
    }
    assert!(out_dir.path().join("stats.json").is_file());
}

#[test]
fn gen_irregular_keeps_snapshot_subsequence() {
    let data = tempfile::tempdir().unwrap();
    write_toy_dataset(data.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = targcn()
        .args([
            "gen-irregular",
            "--data-dir",
            data.path().to_str().unwrap(),
            "--out-dir",
            out_dir.path().to_str().unwrap(),
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let train = std::fs::read_to_string(out_dir.path().join("train.txt")).unwrap();
    let mut days: Vec<u32> = train
        .lines()
        .map(|l| l.rsplit('-').next().unwrap().parse::<u32>().unwrap())
        .collect();
    days.sort_unstable();
    days.dedup();
    assert_eq!(days[0], 1, "anchored at the first timestamp");
    for w in days.windows(2) {
        // retained snapshots are a subset of the selected subsequence, so
        // observed gaps can merge several selection gaps but never shrink
        assert!(w[1] > w[0]);
    }
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.path().join("stats.json")).unwrap())
            .unwrap();
    assert!(stats["n_train"].as_u64().unwrap() > 0);
}
