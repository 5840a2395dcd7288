use std::path::Path;
use std::process::{Command, Output};

use hdmap::mapfile::{read_map, render_map};

fn hdmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdmap")).args(args).env("HDMAP_THREADS", "2").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bad_usage_exits_one() {
    let o = hdmap(&["teleport"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("teleport"));
    assert_eq!(hdmap(&["eval", "only-one.json"]).status.code(), Some(1));
    assert_eq!(hdmap(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_hdmap")).args(["grad-check", "--trials", "1"]).env("HDMAP_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ground_truth_scores_perfectly_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.json");
    assert!(hdmap(&["generate", "--seed", "41", "-o", s(&gt)]).status.success());
    let o = hdmap(&["eval", s(&gt), s(&gt)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mAP 1.0000"), "{}", stdout(&o));
}

#[test]
fn generation_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert!(hdmap(&["generate", "--seed", "9", "--range", "long", "--crossings", "2", "-o", s(p)]).status.success());
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let map = read_map(&a).unwrap();
    assert_eq!(render_map(&map).as_bytes(), &bytes[..]);
    assert_eq!(read_map(&a).unwrap(), map);
}

#[test]
fn malformed_input_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version": "1", "range": {"x": [-15, 15], "y": [-30, 30]},
        "elements": [{"category": "ped_crossing", "closed": true, "vertices": [[0, 0], [1, 1]]}]}"#)
    .unwrap();
    let out = dir.path().join("out.json");
    let o = hdmap(&["simplify", s(&bad), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("element 0"));
    assert!(!out.exists());
    let o = hdmap(&["fit", s(&bad), "-o", s(&out), "--trajectory", s(&dir.path().join("t.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn simplify_and_densify_rewrite_vertex_counts() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.json");
    assert!(hdmap(&["generate", "--seed", "3", "--roads", "1", "--lanes", "2", "--crossings", "0", "-o", s(&gt)]).status.success());
    let dense = dir.path().join("dense.json");
    assert!(hdmap(&["densify", s(&gt), "-o", s(&dense), "--density", "33"]).status.success());
    let map = read_map(&dense).unwrap();
    assert!(map.content.elements().iter().all(|(e, _)| e.shape().len() == 33));
    let simple = dir.path().join("simple.json");
    assert!(hdmap(&["simplify", s(&dense), "-o", s(&simple), "--epsilon", "0.05"]).status.success());
    let back = read_map(&simple).unwrap();
    assert!(back.content.elements().iter().all(|(e, _)| e.shape().len() < 33));
}

#[test]
fn suite_fit_and_eval_over_directories() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let o = hdmap(&["generate", "--suite", s(&suite)]);
    assert!(o.status.success());
    let names: Vec<String> = std::fs::read_dir(&suite)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 21);
    assert!(names.iter().any(|n| n == "manifest.json"));

    // a short schedule keeps the test quick; the point is directory plumbing
    let preds = dir.path().join("preds");
    let traj = dir.path().join("traj");
    let o = hdmap(&["fit", s(&suite), "-o", s(&preds), "--trajectory", s(&traj), "--schedule", "3,5", "--steps", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_dir(&preds).unwrap().count(), 20);
    assert_eq!(std::fs::read_dir(&traj).unwrap().count(), 20);
    let header = std::fs::read_to_string(traj.join("scene_011.csv")).unwrap();
    assert!(header.starts_with("step,layer,vertex,edge_point,edge_slope,edge_angle,cls,total\n"));

    let csv = dir.path().join("ap.csv");
    let o = hdmap(&["eval", s(&preds), s(&suite), "--csv", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("over 20 scene(s)"));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 5);

    std::fs::remove_file(preds.join("scene_011.json")).unwrap();
    assert_eq!(hdmap(&["eval", s(&preds), s(&suite)]).status.code(), Some(1));
}

#[test]
fn grad_check_reports_and_passes() {
    let o = hdmap(&["grad-check", "--trials", "10", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("edge_slope") && text.contains("grad-check passed"));
}
