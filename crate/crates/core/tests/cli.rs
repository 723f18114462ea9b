use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scoutplan::grid_map::load_scene;
use scoutplan::sim::oracle_optimum;

fn scoutplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scoutplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("scene");
    let out = scoutplan(&["generate", "--seed", "4", "--gradient", "8", "--out", path(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scene = load_scene(&dir).unwrap();
    assert_eq!(scene.costs().c_max(), 8.0);

    let out = scoutplan(&["oracle", "--scene", path(&dir)]);
    assert!(out.status.success());
    let printed: f64 = stdout(&out).trim().parse().unwrap();
    assert_eq!(printed, oracle_optimum(&scene).unwrap().total_cost);

    let out = scoutplan(&["oracle", "--layout", "closed_box"]);
    assert_eq!(stdout(&out).trim(), "no path");
}

#[test]
fn run_writes_rows_and_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scoutplan(&["run", "--layout", "open_box", "--seed", "2", "--out", path(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("outcome=optimal "), "{text}");
    let rows = fs::read_to_string(tmp.path().join("runs/run_path_aware_open_box_2.csv")).unwrap();
    assert!(rows.starts_with("step,time_s,"));
    assert!(rows.lines().last().unwrap().ends_with(",true"));
    let pgm = fs::read(tmp.path().join("explored.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 48\n65535\n") || pgm.starts_with(b"P5\n64 48 65535\n"));
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.cfg");
    fs::write(
        &config,
        "# closed box, both planners\nlayout=closed_box\nplanner=path_aware\nseeds=0..2\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("c");
    let out = scoutplan(&[
        "campaign",
        "--config",
        path(&config),
        "--planner",
        "path_aware,exploration",
        "--out",
        path(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 5);
    assert!(runs.contains("path_aware,closed_box,1,infeasible"));
    assert!(runs.contains("exploration,closed_box,0,explored"));
    let table = fs::read_to_string(out_dir.join("table.csv")).unwrap();
    assert!(table.starts_with("metric,path_aware,exploration\n"));
    assert!(table.contains("tau_1,N/A,N/A"));
}

#[test]
fn campaign_output_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let out = scoutplan(&[
            "campaign",
            "--planner",
            "all",
            "--scene-seeds",
            "0,1",
            "--seeds",
            "3",
            "--width",
            "32",
            "--height",
            "24",
            "--out",
            path(&dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut files = Vec::new();
        for sub in [dir.clone(), dir.join("runs")] {
            for entry in fs::read_dir(sub).unwrap() {
                let p = entry.unwrap().path();
                if p.is_file() {
                    files.push((p.file_name().unwrap().to_owned(), fs::read(&p).unwrap()));
                }
            }
        }
        files.sort();
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 14);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_config = tmp.path().join("bad.cfg");
    fs::write(&bad_config, "colour=blue\n").unwrap();
    for args in [
        vec!["run", "--planner", "teleport"],
        vec!["run", "--obstacles", "1.5"],
        vec!["run", "--fill-min", "2", "--out", path(tmp.path())],
        vec!["run", "--config", path(&bad_config)],
        vec!["run", "--config", path(&tmp.path().join("absent.cfg"))],
        vec!["campaign", "--seeds", "0", "--out", path(tmp.path())],
    ] {
        let out = scoutplan(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }

    let broken = tmp.path().join("broken");
    fs::create_dir(&broken).unwrap();
    fs::write(broken.join("scene.txt"), "format=scoutplan-scene/1\nwidth=2\n").unwrap();
    for scene in [broken, tmp.path().join("absent")] {
        let out = scoutplan(&["oracle", "--scene", path(&scene)]);
        assert_eq!(out.status.code(), Some(3), "{}", scene.display());
    }
}
