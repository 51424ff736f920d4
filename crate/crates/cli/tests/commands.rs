use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gesture_cli::corpus::write_synth_corpus;
use gesture_cli::synth::{generate, SynthSpec};

fn gesture(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gesture")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Corpus, models and database for three short sessions.
fn setup(dir: &Path) -> SynthSpec {
    let spec = SynthSpec {
        sessions: 3,
        seconds: 6.0,
        seed: 5,
        ..SynthSpec::default()
    };
    write_synth_corpus(
        &dir.join("corpus"),
        &generate(&spec),
        spec.token_rate,
        spec.text_dim,
        spec.fps / spec.d as f64,
    )
    .unwrap();
    let corpus = dir.join("corpus");
    let (code, _, err) = gesture(&["fit", p(&corpus), "--out", p(&dir.join("models")), "--set", "codebook_size=16"]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = gesture(&["build-db", p(&corpus), "--models", p(&dir.join("models")), "--out", p(&dir.join("db"))]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("top codes"), "{out}");
    spec
}

fn read_dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn usage_errors_exit_one_with_an_error_line() {
    let (code, _, err) = gesture(&["match"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error\tusage\t"), "{err}");
    let (code, _, err) = gesture(&["fit", "x", "--out", "y", "--set", "bogus=1"]);
    assert_eq!(code, 1);
    assert!(err.contains("bogus"), "{err}");
    let (code, out, _) = gesture(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("build-db"));
}

#[test]
fn fit_errors_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let (code, _, err) = gesture(&["fit", p(&empty), "--out", p(&dir.path().join("m"))]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error\tinsufficient-data\t"), "{err}");

    // Default 512 codes exceed the 45 windows of one 6 s session.
    let spec = SynthSpec {
        sessions: 1,
        seconds: 6.0,
        ..SynthSpec::default()
    };
    write_synth_corpus(&dir.path().join("c"), &generate(&spec), 50.0, 16, 7.5).unwrap();
    let (code, _, err) = gesture(&["fit", p(&dir.path().join("c")), "--out", p(&dir.path().join("m"))]);
    assert_eq!(code, 2, "{err}");
    assert!(err.starts_with("error\t"), "{err}");
}

#[test]
fn fit_and_build_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d);
    let models = read_dir_bytes(&d.join("models"));
    let db = read_dir_bytes(&d.join("db"));
    let corpus = d.join("corpus");
    let (code, _, _) = gesture(&["fit", p(&corpus), "--out", p(&d.join("models")), "--set", "codebook_size=16"]);
    assert_eq!(code, 0);
    let (code, _, _) = gesture(&["build-db", p(&corpus), "--models", p(&d.join("models")), "--out", p(&d.join("db"))]);
    assert_eq!(code, 0);
    assert_eq!(read_dir_bytes(&d.join("models")), models);
    assert_eq!(read_dir_bytes(&d.join("db")), db);
}

#[test]
fn fps_mismatch_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d);
    let bvh = d.join("corpus/s001.bvh");
    let text = fs::read_to_string(&bvh).unwrap();
    let frame_time = text.lines().find(|l| l.starts_with("Frame Time:")).unwrap().to_string();
    fs::write(&bvh, text.replace(&frame_time, "Frame Time: 0.04")).unwrap();
    let (code, _, err) = gesture(&["build-db", p(&d.join("corpus")), "--models", p(&d.join("models")), "--out", p(&d.join("db2"))]);
    assert_eq!(code, 2);
    assert!(err.contains("s001.bvh"), "{err}");
}

#[test]
fn match_outputs_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d);
    let db = d.join("db");
    let corpus = d.join("corpus");
    let out = d.join("m");
    let (code, _, err) = gesture(&["match", p(&db), "--query", p(&corpus), "--session", "s002", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let codes: Vec<usize> = fs::read_to_string(out.join("codes.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(codes.len(), 45);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 46);
    assert!(trace.lines().skip(1).all(|l| l.contains(",audio,") || l.contains(",text,")));
    let bvh = gesture_core::motion::parse_bvh_file(out.join("motion.bvh")).unwrap();
    assert_eq!(bvh.frames(), 45 * 8);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["codes"].as_array().unwrap().len(), 45);

    // Replacing an absent code leaves the decode alone and warns.
    let absent = (0..16).find(|c| !codes.contains(c));
    if let Some(a) = absent {
        let out2 = d.join("m2");
        let r = format!("{a}:{}", codes[0]);
        let (code, _, err) = gesture(&[
            "match", p(&db), "--query", p(&corpus), "--session", "s002", "--replace", &r, "--out", p(&out2),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(err.contains("warning"), "{err}");
        assert_eq!(fs::read(out.join("motion.bvh")).unwrap(), fs::read(out2.join("motion.bvh")).unwrap());
    }

    // A mask with the wrong number of steps is rejected.
    let mask = d.join("mask.txt");
    fs::write(&mask, "1\n".repeat(10)).unwrap();
    let (code, _, err) = gesture(&[
        "match", p(&db), "--query", p(&corpus), "--mask", p(&mask), "--constraint", "wrist-above:-1000", "--out",
        p(&d.join("m3")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("mask.txt"), "{err}");
    let (code, _, _) = gesture(&["match", p(&db), "--query", p(&corpus), "--replace", "3", "--out", p(&d.join("m4"))]);
    assert_eq!(code, 1);
}

#[test]
fn wrist_constraint_holds_on_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d);
    let db = gesture_core::store::load_database(&d.join("db")).unwrap();
    // Median code height, so roughly half of the codes qualify.
    let sk = db.codebook.skeleton.clone();
    let mut heights: Vec<f64> = (0..db.code_count())
        .map(|c| {
            let m = db.codebook.decode(&gesture_core::codebook::CodeSequence {
                codes: vec![c],
                d: db.codebook.d,
                source_fps: 60.0,
            });
            gesture_core::matcher::mean_joint_height(&sk, &m.unwrap(), "LeftHand").unwrap()
        })
        .collect();
    let by_code = heights.clone();
    heights.sort_by(f64::total_cmp);
    let r = heights[heights.len() / 2] - 1e-9;
    let out = d.join("w");
    let c = format!("wrist-above:{r}");
    let (code, _, err) = gesture(&["match", p(&d.join("db")), "--query", p(&d.join("corpus")), "--constraint", &c, "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    for l in fs::read_to_string(out.join("codes.txt")).unwrap().lines() {
        let code: usize = l.parse().unwrap();
        assert!(by_code[code] > r, "code {code} at height {}", by_code[code]);
    }
}

#[test]
fn metrics_report_and_beat_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d);
    let reference = d.join("ref");
    fs::create_dir_all(&reference).unwrap();
    fs::copy(d.join("corpus/s000.bvh"), reference.join("s000.bvh")).unwrap();
    let (code, stdout, err) = gesture(&[
        "metrics", p(&reference), p(&reference), "--beats", p(&d.join("corpus")), "--beat-align", "--out", p(&d.join("r")),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("hellinger_average,0\n"), "{stdout}");
    assert!(stdout.contains("fgd_feature,unavailable"), "{stdout}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("r/metrics.json")).unwrap()).unwrap();
    assert!(json["cca_global"].as_f64().unwrap() > 0.999);
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
    assert!(d.join("r/metrics.csv").is_file());

    let (code, _, err) = gesture(&[
        "metrics", p(&reference), p(&reference), "--beats", p(d), "--beat-align", "--out", p(&d.join("r2")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("s000.beats.txt"), "{err}");
    let (code, _, _) = gesture(&["metrics", p(&reference), p(&reference), "--beat-align", "--out", p(&d.join("r3"))]);
    assert_eq!(code, 1);
}
