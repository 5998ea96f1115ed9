//! End-to-end checks of the command-line binary: the synth, extract,
//! batch, and eval subcommands driven through real processes and files.

use std::path::Path;
use std::process::{Command, Output};

use platemat::io::load_matte;

fn platemat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_platemat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn platemat")
}

fn assert_ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn assert_fails(out: &Output) -> String {
    assert!(!out.status.success(), "expected a nonzero exit");
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

/// Colors are 8-bit quantized on disk, so the color-distance scale drops
/// to match; strong matting fidelity anchors the confident regions.
const TUNED: &str = "sigma_delta = 0.08\nhr = 0.2\nhs = 2.0\nlambda1 = 1.0\n";

fn synth_scene(dir: &Path, out: &str, frames: usize, seed: u64) {
    let frames_s = frames.to_string();
    let seed_s = seed.to_string();
    let out = platemat(
        dir,
        &[
            "synth",
            out,
            "--seed",
            &seed_s,
            "--frames",
            &frames_s,
            "--width",
            "40",
            "--height",
            "40",
            "--size",
            "18",
            "--fg-color",
            "0.85,0.2,0.2",
            "--texture-amp",
            "0.15",
        ],
    );
    assert_ok(&out);
}

#[test]
fn synth_extract_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "scene", 1, 42);
    for sub in ["plate.png", "frames/000.png", "truth/000.png"] {
        assert!(dir.path().join("scene").join(sub).exists(), "missing {sub}");
    }
    std::fs::write(dir.path().join("tuned.conf"), TUNED).unwrap();

    let out = platemat(
        dir.path(),
        &[
            "extract",
            "scene/frames/000.png",
            "scene/plate.png",
            "matte.png",
            "--config",
            "tuned.conf",
        ],
    );
    let stdout = assert_ok(&out);
    assert!(stdout.contains("after"), "summary line: {stdout}");

    let out = platemat(dir.path(), &["eval", "matte.png", "scene/truth/000.png"]);
    let stdout = assert_ok(&out);
    let aggregate = stdout
        .lines()
        .find(|l| l.starts_with("aggregate "))
        .expect("aggregate line");
    let fields: Vec<&str> = aggregate.split_whitespace().collect();
    assert_eq!(fields[1], "iou");
    let iou: f64 = fields[2].parse().unwrap();
    assert!(iou >= 0.9, "iou {iou}");
}

#[test]
fn synth_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "a", 2, 7);
    synth_scene(dir.path(), "b", 2, 7);
    for sub in ["plate.png", "frames/001.png", "truth/001.png"] {
        let a = std::fs::read(dir.path().join("a").join(sub)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(sub)).unwrap();
        assert_eq!(a, b, "{sub} differs between identical runs");
    }
}

#[test]
fn batch_directory_mode_scores_against_the_truth_dir() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "scene", 3, 11);
    std::fs::write(dir.path().join("tuned.conf"), TUNED).unwrap();

    let out = platemat(
        dir.path(),
        &[
            "batch",
            "--frames",
            "scene/frames",
            "--plate",
            "scene/plate.png",
            "--out-dir",
            "mattes",
            "--truth-dir",
            "scene/truth",
            "--config",
            "tuned.conf",
            "--report",
            "report.txt",
        ],
    );
    let stdout = assert_ok(&out);
    assert!(stdout.contains("wrote 3 mattes"), "{stdout}");
    for t in 0..3 {
        assert!(dir.path().join(format!("mattes/{t:03}.png")).exists());
    }
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(report.lines().count(), 4, "3 frame rows + aggregate");
    assert!(report.lines().all(|l| l.contains(" iou ")
        && l.contains(" mae ")
        && l.contains(" contour_f ")));

    // The eval subcommand re-reads the stored mattes, so its scores sit a
    // quantization step away from the batch report's in-memory scores.
    let out = platemat(dir.path(), &["eval", "mattes", "scene/truth"]);
    let evaluated = assert_ok(&out);
    let aggregate_iou = |text: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with("aggregate "))
            .and_then(|l| l.split_whitespace().nth(2))
            .expect("aggregate iou")
            .parse()
            .unwrap()
    };
    let drift = (aggregate_iou(&report) - aggregate_iou(&evaluated)).abs();
    assert!(drift <= 5e-3, "quantization drift {drift}");
}

#[test]
fn batch_manifest_resolves_paths_against_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "scene", 2, 13);
    std::fs::write(
        dir.path().join("scene/jobs.txt"),
        "# demo jobs\n\
         frames/000.png plate.png m000.png truth/000.png\n\
         frames/001.png plate.png m001.png\n",
    )
    .unwrap();

    let out = platemat(dir.path(), &["batch", "--manifest", "scene/jobs.txt"]);
    let stdout = assert_ok(&out);
    assert!(stdout.contains("wrote 2 mattes"), "{stdout}");
    // One job carried a reference, so the report has one row.
    assert!(stdout.contains("frame 000 "), "{stdout}");
    assert!(!stdout.contains("frame 001 "), "{stdout}");
    assert!(dir.path().join("scene/m000.png").exists());
    assert!(dir.path().join("scene/m001.png").exists());
}

#[test]
fn temporal_flag_couples_a_short_sequence() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "scene", 3, 17);
    std::fs::write(dir.path().join("tuned.conf"), TUNED).unwrap();

    let out = platemat(
        dir.path(),
        &[
            "batch",
            "--frames",
            "scene/frames",
            "--plate",
            "scene/plate.png",
            "--out-dir",
            "mattes",
            "--config",
            "tuned.conf",
            "--set",
            "temporal_window=3",
            "--temporal",
        ],
    );
    assert_ok(&out);
    let matte = load_matte(dir.path().join("mattes/001.png")).unwrap();
    assert!(matte.mean() > 0.05, "foreground went missing");

    // Two frames cannot fill a window of three.
    synth_scene(dir.path(), "short", 2, 17);
    let out = platemat(
        dir.path(),
        &[
            "batch",
            "--frames",
            "short/frames",
            "--plate",
            "short/plate.png",
            "--out-dir",
            "mattes2",
            "--set",
            "temporal_window=3",
            "--temporal",
        ],
    );
    let stderr = assert_fails(&out);
    assert!(stderr.contains("at least 3 frames"), "{stderr}");
}

#[test]
fn set_overrides_win_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "scene", 1, 19);
    // The file pins one iteration; the override restores enough to move
    // past the initial prior.
    std::fs::write(dir.path().join("one.conf"), "max_iter = 1\n").unwrap();

    let run = |extra: &[&str]| {
        let mut args = vec![
            "extract",
            "scene/frames/000.png",
            "scene/plate.png",
            "matte.png",
            "--config",
            "one.conf",
        ];
        args.extend_from_slice(extra);
        let out = platemat(dir.path(), &args);
        assert_ok(&out)
    };
    let capped = run(&[]);
    assert!(capped.contains("after 1 iterations"), "{capped}");
    let restored = run(&["--set", "max_iter=30"]);
    assert!(!restored.contains("after 1 iterations"), "{restored}");
}

#[test]
fn sixteen_bit_mattes_round_trip_with_more_levels() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "scene", 1, 23);
    std::fs::write(dir.path().join("tuned.conf"), TUNED).unwrap();
    let out = platemat(
        dir.path(),
        &[
            "extract",
            "scene/frames/000.png",
            "scene/plate.png",
            "matte16.png",
            "--bits",
            "16",
            "--config",
            "tuned.conf",
        ],
    );
    assert_ok(&out);
    let matte = load_matte(dir.path().join("matte16.png")).unwrap();
    let off_grid = matte
        .as_slice()
        .iter()
        .any(|v| (v * 255.0 - (v * 255.0).round()).abs() > 1e-6);
    assert!(off_grid, "expected values between 8-bit levels");
}

#[test]
fn bad_inputs_exit_nonzero_with_a_named_cause() {
    let dir = tempfile::tempdir().unwrap();
    synth_scene(dir.path(), "scene", 1, 29);

    let out = platemat(
        dir.path(),
        &[
            "extract",
            "scene/frames/000.png",
            "scene/plate.png",
            "m.png",
            "--set",
            "lambda9=1",
        ],
    );
    assert!(assert_fails(&out).contains("lambda9"));

    let out = platemat(
        dir.path(),
        &["extract", "scene/frames/000.png", "absent.png", "m.png"],
    );
    assert!(assert_fails(&out).contains("absent.png"));

    let out = platemat(dir.path(), &["eval", "scene/truth/000.png", "nothing"]);
    assert_fails(&out);

    // Mismatched dimensions report both sizes.
    synth_scene(dir.path(), "small", 1, 29);
    let small = platemat(
        dir.path(),
        &[
            "synth",
            "tiny",
            "--seed",
            "29",
            "--width",
            "24",
            "--height",
            "24",
        ],
    );
    assert_ok(&small);
    let out = platemat(
        dir.path(),
        &["extract", "scene/frames/000.png", "tiny/plate.png", "m.png"],
    );
    let stderr = assert_fails(&out);
    assert!(stderr.contains("40x40") && stderr.contains("24x24"), "{stderr}");
}
