use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use giffel::gifio::read_gif;
use giffel::imagecore::io::{encode_png, encode_ppm};
use giffel::{FloatImage, Image, Indexed};
use giffel_cli::report::REPORT_SCHEMA;

fn giffel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_giffel"))
        .args(args)
        .output()
        .expect("spawn giffel")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_ppm(dir: &Path, name: &str, img: &Image) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, encode_ppm(img)).unwrap();
    p
}

fn smooth(h: usize, w: usize, phase: f64) -> Image {
    FloatImage::from_fn(h, w, 3, |r, c, k| {
        0.5 + 0.4 * ((r as f64 * 0.11 + phase) + (c as f64 * 0.07) * (k + 1) as f64).sin()
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(giffel(&["--help"]).status.code(), Some(0));
    assert_eq!(giffel(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_ppm(dir.path(), "a.ppm", &smooth(48, 48, 0.0));
    let out = dir.path().join("o.gif");
    assert_eq!(giffel(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        giffel(&["encode", "/nonexistent/x.ppm", s(&out)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        giffel(&["encode", s(&img), s(&out), "--np", "300"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        giffel(&["encode", s(&img), s(&out), "--weights", "1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        giffel(&["encode", s(&img), s(&out), "--lr", "0.001,0.01"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        giffel(&["banding", s(&img), "--eta", "1.0"]).status.code(),
        Some(2)
    );
    assert!(!out.exists());
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_ppm(dir.path(), "a.ppm", &smooth(48, 48, 0.3));
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"pipeline": "classical", "np": 4}"#).unwrap();
    let out = dir.path().join("o.gif");
    let o = giffel(&["encode", s(&img), s(&out), "--config", s(&cfg)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let gif: Indexed = read_gif(&std::fs::read(&out).unwrap()).unwrap();
    assert!(gif.indices().iter().all(|&i| i < 4));
    let o = giffel(&["encode", s(&img), s(&out), "--config", s(&cfg), "--np", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let gif: Indexed = read_gif(&std::fs::read(&out).unwrap()).unwrap();
    assert!(gif.indices().iter().any(|&i| i >= 4));
    std::fs::write(&cfg, r#"{"nope": 1}"#).unwrap();
    assert_eq!(
        giffel(&["encode", s(&img), s(&out), "--config", s(&cfg)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn encode_constant_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::filled(48, 48, 3, 0.4);
    let input = dir.path().join("c.png");
    std::fs::write(&input, encode_png(&img).unwrap()).unwrap();
    let out = dir.path().join("c.gif");
    let report = dir.path().join("r.json");
    let trace = dir.path().join("t.jsonl");
    let o = giffel(&[
        "encode",
        s(&input),
        s(&out),
        "--np",
        "4",
        "--steps",
        "5,3",
        "--report",
        s(&report),
        "--trace",
        s(&trace),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("inf"), "{}", stdout(&o));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(rep["psnr_db"], "inf");
    let lines = std::fs::read_to_string(&trace).unwrap();
    let stages: Vec<u64> = lines
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"]
                .as_u64()
                .unwrap()
        })
        .collect();
    assert!(stages.contains(&2) && stages.contains(&3));
    let gif: Indexed = read_gif(&std::fs::read(&out).unwrap()).unwrap();
    let want = giffel::imagecore::io::to_byte(0.4f64);
    let got = gif.palette().to_rgb8()[gif.indices()[0] as usize];
    assert_eq!(got, [want; 3]);
}

#[test]
fn banding_command() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write_ppm(dir.path(), "flat.ppm", &Image::filled(48, 48, 3, 0.6));
    let o = giffel(&["banding", s(&flat)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "Z 0\nB_1.5 0\n");

    let ramp = write_ppm(
        dir.path(),
        "ramp.ppm",
        &Image::from_fn(64, 256, 3, |_, c, _| (c * 8 / 256) as f64 / 7.0),
    );
    let heat = dir.path().join("heat.ppm");
    let o = giffel(&["banding", s(&ramp), "--heatmap", s(&heat)]);
    assert_eq!(o.status.code(), Some(0));
    let z: f64 = stdout(&o)
        .lines()
        .next()
        .unwrap()
        .strip_prefix("Z ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(z > 0.0);
    let hm: Image = giffel::imagecore::io::decode_ppm(&std::fs::read(&heat).unwrap()).unwrap();
    assert_eq!((hm.height(), hm.width()), (64, 256));
    assert_eq!(hm.data().iter().cloned().fold(0.0, f64::max), 1.0);

    let tiny = write_ppm(dir.path(), "tiny.ppm", &Image::filled(8, 8, 3, 0.2));
    let o = giffel(&["banding", s(&tiny)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("Z 0\n"));
}

#[test]
fn selftest_passes_and_catches_corrupt_golden() {
    let o = giffel(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("[FAIL]"));

    let dir = tempfile::tempdir().unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden");
    let mut oracles: serde_json::Value =
        serde_json::from_slice(&std::fs::read(golden.join("oracles.json")).unwrap()).unwrap();
    oracles["ramp8_z"] = serde_json::json!(oracles["ramp8_z"].as_f64().unwrap() * 1.01);
    std::fs::write(dir.path().join("oracles.json"), oracles.to_string()).unwrap();
    std::fs::copy(
        golden.join("pillow_4x4.gif"),
        dir.path().join("pillow_4x4.gif"),
    )
    .unwrap();
    let o = giffel(&["selftest", "--golden-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("[FAIL] banding-goldens"), "{text}");
    assert!(text.contains("1 failed"), "{text}");

    assert_eq!(
        giffel(&["selftest", "--golden-dir", "/nonexistent"])
            .status
            .code(),
        Some(2)
    );
}

fn small_corpus(dir: &Path) -> PathBuf {
    let corpus = dir.join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    write_ppm(&corpus, "a.ppm", &smooth(48, 48, 0.0));
    write_ppm(&corpus, "b.ppm", &smooth(48, 64, 1.3));
    write_ppm(&corpus, "flat.ppm", &Image::filled(48, 48, 3, 0.25));
    corpus
}

fn compare(corpus: &Path, report: &Path, gifs: &Path) -> Output {
    giffel(&[
        "compare",
        s(corpus),
        "--np",
        "4,8",
        "--steps",
        "6,3",
        "--report",
        s(report),
        "--gif-dir",
        s(gifs),
        "--no-timing",
    ])
}

#[test]
fn compare_report_validates_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let (r1, r2) = (dir.path().join("r1.json"), dir.path().join("r2.json"));
    let (g1, g2) = (dir.path().join("g1"), dir.path().join("g2"));
    let o = compare(&corpus, &r1, &g1);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("optimized-nobanding"));
    assert_eq!(compare(&corpus, &r2, &g2).status.code(), Some(0));

    let a = std::fs::read(&r1).unwrap();
    assert_eq!(a, std::fs::read(&r2).unwrap());
    let mut names: Vec<_> = std::fs::read_dir(&g1)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3 * 2 * 5);
    for n in &names {
        assert_eq!(
            std::fs::read(g1.join(n)).unwrap(),
            std::fs::read(g2.join(n)).unwrap(),
            "{n:?}"
        );
    }

    let value: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    if let Err(errors) = compiled.validate(&value) {
        let msgs: Vec<String> = errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect();
        panic!("schema violations: {msgs:?}");
    }
    let rows = value["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().any(|r| r["psnr_db"] == "inf"));
    assert_eq!(value["means"].as_array().unwrap().len(), 10);
}

#[test]
fn compare_rejects_bad_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(
        giffel(&["compare", s(&empty), "--report", s(&report)])
            .status
            .code(),
        Some(2)
    );
    write_ppm(&empty, "tiny.ppm", &Image::filled(8, 8, 3, 0.5));
    assert_eq!(
        giffel(&["compare", s(&empty), "--report", s(&report)])
            .status
            .code(),
        Some(2)
    );
    let corpus = small_corpus(dir.path());
    let o = giffel(&[
        "compare",
        s(&corpus),
        "--report",
        s(&report),
        "--pipelines",
        "lloyd,bogus",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
