//! End-to-end tests of the `kaze` binary: command contracts, exit codes,
//! and feature file round-trips.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kaze_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kaze"))
}

fn run(args: &[&str]) -> Output {
    kaze_bin().args(args).output().expect("spawn kaze binary")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_pgm(path: &Path, w: usize, h: usize, mut f: impl FnMut(usize, usize) -> u8) {
    let mut file = std::fs::File::create(path).unwrap();
    write!(file, "P5\n{w} {h}\n255\n").unwrap();
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            pixels.push(f(x, y));
        }
    }
    file.write_all(&pixels).unwrap();
}

fn textured_pgm(path: &Path, w: usize, h: usize) {
    write_pgm(path, w, h, |x, y| {
        let v = 0.5
            + 0.2 * (x as f32 * 0.31).sin() * (y as f32 * 0.23).cos()
            + 0.15 * (x as f32 * 0.071 + y as f32 * 0.113).sin();
        (v.clamp(0.0, 1.0) * 255.0).round() as u8
    })
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Fixture { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

#[test]
fn detect_writes_feature_file_with_matching_count() {
    let fx = Fixture::new();
    let img = fx.path("in.pgm");
    let feats = fx.path("out.kazefeat");
    textured_pgm(&img, 96, 96);
    let out = run(&[
        "detect",
        img.to_str().unwrap(),
        "--output",
        feats.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = std::fs::read_to_string(&feats).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header[0], "KAZEFEAT");
    assert_eq!(header[1], "1");
    let count: usize = header[2].parse().unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * count);
    assert!(stdout_of(&out).contains(&format!("keypoints={count}")));
}

#[test]
fn detect_on_constant_image_finds_nothing_and_succeeds() {
    let fx = Fixture::new();
    let img = fx.path("flat.pgm");
    let feats = fx.path("flat.kazefeat");
    write_pgm(&img, 64, 64, |_, _| 128);
    let out = run(&[
        "detect",
        img.to_str().unwrap(),
        "--output",
        feats.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read_to_string(&feats).unwrap().trim(),
        "KAZEFEAT 1 0"
    );
}

#[test]
fn detect_rejects_truncated_png_with_exit_2_and_no_output() {
    let fx = Fixture::new();
    let img = fx.path("broken.png");
    let feats = fx.path("never.kazefeat");
    std::fs::write(&img, b"\x89PNG\r\n\x1a\n truncated").unwrap();
    let out = run(&[
        "detect",
        img.to_str().unwrap(),
        "--output",
        feats.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        !feats.exists(),
        "output must not be created on decode failure"
    );
}

#[test]
fn detect_rejects_too_small_image_with_exit_3() {
    let fx = Fixture::new();
    let img = fx.path("tiny.pgm");
    let feats = fx.path("tiny.kazefeat");
    write_pgm(&img, 16, 16, |x, y| ((x * y) % 256) as u8);
    let out = run(&[
        "detect",
        img.to_str().unwrap(),
        "--output",
        feats.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!feats.exists());
}

#[test]
fn bad_flags_exit_5() {
    let out = run(&["detect", "x.pgm", "--output", "y", "--diffusivity", "g7"]);
    assert_eq!(out.status.code(), Some(5));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn detect_is_byte_identical_across_thread_counts() {
    let fx = Fixture::new();
    let img = fx.path("in.pgm");
    textured_pgm(&img, 96, 80);
    let f1 = fx.path("t1.kazefeat");
    let f4 = fx.path("t4.kazefeat");
    for (feats, threads) in [(&f1, "1"), (&f4, "4")] {
        let out = run(&[
            "detect",
            img.to_str().unwrap(),
            "--output",
            feats.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f4).unwrap());
}

#[test]
fn feature_file_round_trips_through_match_self() {
    let fx = Fixture::new();
    let img = fx.path("in.pgm");
    let feats = fx.path("self.kazefeat");
    textured_pgm(&img, 96, 96);
    assert!(run(&[
        "detect",
        img.to_str().unwrap(),
        "--output",
        feats.to_str().unwrap()
    ])
    .status
    .success());

    // Self-match at ratio 1.0: every nondegenerate keypoint pairs with itself
    // at distance 0.
    let out = run(&[
        "match",
        feats.to_str().unwrap(),
        feats.to_str().unwrap(),
        "--ratio",
        "1.0",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let mut n = 0usize;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("matches=") {
            assert_eq!(rest.parse::<usize>().unwrap(), n);
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(toks.len(), 3, "match line: {line}");
        assert_eq!(toks[0], toks[1], "self-match must pair identical indices");
        assert_eq!(toks[2].parse::<f32>().unwrap(), 0.0);
        n += 1;
    }
    assert!(
        n > 0,
        "expected at least one keypoint on the textured image"
    );
}

#[test]
fn match_with_empty_file_reports_zero() {
    let fx = Fixture::new();
    let empty = fx.path("empty.kazefeat");
    std::fs::write(&empty, "KAZEFEAT 1 0\n").unwrap();
    let out = run(&[
        "match",
        empty.to_str().unwrap(),
        empty.to_str().unwrap(),
        "--ratio",
        "0.8",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_of(&out).trim(), "matches=0");
}

#[test]
fn match_rejects_version_mismatch_with_exit_4() {
    let fx = Fixture::new();
    let good = fx.path("good.kazefeat");
    let bad = fx.path("bad.kazefeat");
    std::fs::write(&good, "KAZEFEAT 1 0\n").unwrap();
    std::fs::write(&bad, "KAZEFEAT 2 0\n").unwrap();
    let out = run(&["match", good.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn match_rejects_out_of_range_ratio_with_exit_5() {
    let fx = Fixture::new();
    let empty = fx.path("empty.kazefeat");
    std::fs::write(&empty, "KAZEFEAT 1 0\n").unwrap();
    let out = run(&[
        "match",
        empty.to_str().unwrap(),
        empty.to_str().unwrap(),
        "--ratio",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn bench_emits_key_value_timings() {
    let fx = Fixture::new();
    let img = fx.path("in.pgm");
    textured_pgm(&img, 96, 96);
    let out = run(&[
        "bench",
        img.to_str().unwrap(),
        "--repeats",
        "3",
        "--threads",
        "1",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    for key in [
        "scale_space_ms=",
        "detection_ms=",
        "description_ms=",
        "total_ms=",
        "keypoint_count=",
    ] {
        assert!(text.contains(key), "missing {key} in:\n{text}");
    }
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap_or_else(|| panic!("missing {key}"))
            .parse()
            .unwrap()
    };
    assert!(value("scale_space_ms=") > 0.0);
    assert!(value("detection_ms=") > 0.0);
    assert!(value("description_ms=") > 0.0);
    assert_eq!(value("thread_count="), 1.0);
    assert_eq!(value("repeats="), 3.0);
}

#[test]
fn bench_rejects_zero_repeats_with_exit_5() {
    let fx = Fixture::new();
    let img = fx.path("in.pgm");
    textured_pgm(&img, 64, 64);
    let out = run(&["bench", img.to_str().unwrap(), "--repeats", "0"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn draw_with_no_keypoints_reencodes_input() {
    let fx = Fixture::new();
    let img = fx.path("in.pgm");
    let feats = fx.path("empty.kazefeat");
    let overlay = fx.path("out.png");
    write_pgm(&img, 40, 32, |x, y| ((x * 5 + y * 3) % 256) as u8);
    std::fs::write(&feats, "KAZEFEAT 1 0\n").unwrap();
    let out = run(&[
        "draw",
        img.to_str().unwrap(),
        feats.to_str().unwrap(),
        overlay.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rendered = image::open(&overlay).unwrap().to_rgb8();
    assert_eq!((rendered.width(), rendered.height()), (40, 32));
    for y in 0..32u32 {
        for x in 0..40u32 {
            let v = ((x * 5 + y * 3) % 256) as u8;
            assert_eq!(rendered.get_pixel(x, y).0, [v, v, v]);
        }
    }
}

#[test]
fn draw_clips_border_keypoints_without_crashing() {
    let fx = Fixture::new();
    let img = fx.path("in.pgm");
    let feats = fx.path("border.kazefeat");
    let overlay = fx.path("out.png");
    write_pgm(&img, 48, 48, |_, _| 100);
    // One keypoint hanging off the top-left corner, one in the middle.
    let zero = "0.00000000e0";
    let desc = vec!["1.25000000e-1"; 64].join(" ");
    let body = format!(
        "KAZEFEAT 1 2\n\
         {zero} {zero} 2.00000000e1 1.00000000e0 0 0 {zero}\n\
         2.40000000e1 2.40000000e1 5.00000000e0 1.00000000e0 0 0 {zero}\n\
         {desc}\n{desc}\n"
    );
    std::fs::write(&feats, body).unwrap();
    let out = run(&[
        "draw",
        img.to_str().unwrap(),
        feats.to_str().unwrap(),
        overlay.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rendered = image::open(&overlay).unwrap().to_rgb8();
    // The middle keypoint's circle must have left non-gray pixels.
    let painted = rendered
        .pixels()
        .filter(|p| p.0[0] != p.0[1] || p.0[1] != p.0[2])
        .count();
    assert!(painted > 0, "overlay drew nothing");
}
