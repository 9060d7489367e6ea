use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jntm::data::read_dataset;
use jntm::model::read_checkpoint;
use jntm::train::{init_params, TrainConfig};

fn jntm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jntm")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn preprocess_empty_inputs_gives_zero_stats() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.tsv"), "").unwrap();
    fs::write(dir.path().join("e.tsv"), "").unwrap();
    let o = jntm(&["preprocess", "--checkins", "c.tsv", "--edges", "e.tsv", "--out", "d.bin"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "|V|=0 |E|=0 |D|=0 |L|=0 subtrajectories=0");
    assert_eq!(read_dataset(dir.path().join("d.bin")).unwrap().num_users(), 0);
}

#[test]
fn preprocess_reports_missing_file_and_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.tsv"), "").unwrap();
    let o = jntm(&["preprocess", "--checkins", "absent.tsv", "--edges", "e.tsv", "--out", "d.bin"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.tsv"));

    fs::write(dir.path().join("bad.tsv"), "u1\t2010-10-17T01:48:53Z\t39.7\t-104.9\n").unwrap();
    let o = jntm(&["preprocess", "--checkins", "bad.tsv", "--edges", "e.tsv", "--out", "d.bin"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn preprocess_applies_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..4 {
        text += &format!("a\t2010-10-17T0{i}:00:00Z\t0\t0\tx\n");
    }
    text += "b\t2010-10-17T00:00:00Z\t0\t0\tx\n";
    fs::write(dir.path().join("c.tsv"), text).unwrap();
    fs::write(dir.path().join("e.tsv"), "a\tb\nb\ta\n").unwrap();
    let args = ["preprocess", "--checkins", "c.tsv", "--edges", "e.tsv", "--out", "d.bin"];
    let o = jntm(&[&args[..], &["--min-user-checkins", "2", "--min-location-checkins", "1"]].concat(), dir.path());
    assert_eq!(stdout(&o).trim(), "|V|=1 |E|=0 |D|=4 |L|=1 subtrajectories=1");
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.bin", "b.bin"] {
        let o = jntm(&["synth", "--seed", "1", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let o = jntm(&["synth", "--seed", "2", "--out", "c.bin"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.bin"), read("b.bin"));
    assert_ne!(read("a.bin"), read("c.bin"));
}

#[test]
fn train_then_eval_writes_parsable_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(jntm(&["synth", "--seed", "3", "--subtrajectories-per-user", "6", "--out", "d.bin"], d).status.code(), Some(0));
    fs::write(d.join("c.json"), r#"{"train": {"dim": 8, "max_iterations": 2}, "split": {"link_train_ratio": 0.6}}"#).unwrap();
    let o = jntm(&["train", "--data", "d.bin", "--config", "c.json", "--seed", "3", "--out", "m.jntm"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
    let log = fs::read_to_string(d.join("m.log.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("epoch,net_loss,traj_loss,val_recall5,seconds"));
    assert_eq!(log.lines().count(), 3);

    let o = jntm(
        &["eval", "--model", "m.jntm", "--data", "d.bin", "--config", "c.json", "--seed", "3", "--out", "r.csv", "--per-user", "u.json"],
        d,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(d.join("r.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("task,mode,slice,K,recall,num_events"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 3 + 2 * 2);
    for r in &rows {
        assert_eq!(r.len(), 6);
        let k: usize = r[3].parse().unwrap();
        let events: usize = r[5].parse().unwrap();
        assert!(k >= 1);
        if events > 0 {
            let v: f64 = r[4].parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        } else {
            assert!(r[4].is_empty());
        }
    }
    let per_user: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("u.json")).unwrap()).unwrap();
    assert_eq!(per_user["users"].as_array().unwrap().len(), 40);
}

#[test]
fn zero_iterations_checkpoints_initial_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    jntm(&["synth", "--seed", "4", "--subtrajectories-per-user", "2", "--out", "d.bin"], d);
    let o = jntm(&["train", "--data", "d.bin", "--out", "m.jntm", "--seed", "4", "--dim", "6", "--max-iterations", "0"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(d.join("m.log.csv")).unwrap(), "epoch,net_loss,traj_loss,val_recall5,seconds\n");
    let ckpt = read_checkpoint(d.join("m.jntm")).unwrap();
    let data = read_dataset(d.join("d.bin")).unwrap();
    let cfg = TrainConfig { dim: 6, seed: 4, ..TrainConfig::default() };
    assert_eq!(ckpt.params, init_params(&cfg, data.num_users(), data.num_locations()));
}

#[test]
fn config_errors_exit_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    jntm(&["synth", "--seed", "1", "--subtrajectories-per-user", "2", "--out", "d.bin"], d);
    fs::write(d.join("c.json"), r#"{"train": {"learnig_rate": 0.1}}"#).unwrap();
    let o = jntm(&["train", "--data", "d.bin", "--config", "c.json", "--out", "m.jntm"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learnig_rate"));

    let o = jntm(&["train", "--data", "d.bin", "--out", "m.jntm", "--learning-rate=-1"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rate"));

    fs::write(d.join("s.json"), r#"{"synth": {"markov_stickiness": 2.0}}"#).unwrap();
    let o = jntm(&["synth", "--config", "s.json", "--out", "x.bin"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("markov_stickiness"));

    assert_eq!(jntm(&["train", "--data", "d.bin"], d).status.code(), Some(2));
}

#[test]
fn gradcheck_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = jntm(&["gradcheck", "--seed", "7", "--out", "g.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("tensor,max_rel,max_abs,worst_index,pass"));
    assert_eq!(csv.lines().count(), 18);
}

#[test]
fn stats_and_bench_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    jntm(&["synth", "--seed", "5", "--subtrajectories-per-user", "3", "--out", "d.bin"], d);
    let o = jntm(&["stats", "--data", "d.bin", "--out", "s.json"], d);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("|V|=40 "));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    assert!(report["friend_mean_overlap"].as_f64().unwrap() > report["non_friend_mean_overlap"].as_f64().unwrap());

    let o = jntm(&["bench", "--data", "d.bin", "--out", "b.csv", "--iterations", "2", "--dim", "8"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("b.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("600")));
}
