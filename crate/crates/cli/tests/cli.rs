use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_clotseg");

fn clotseg(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Phantom corpus written by the CLI itself.
fn phantoms(dir: &Path, kind: &str, count: &str, seed: &str) -> Vec<PathBuf> {
    let out = clotseg(&[
        "phantom",
        "--kind",
        kind,
        "--count",
        count,
        "--seed",
        seed,
        "--manifest",
        "--out",
        p(dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(PathBuf::from)
        .collect()
}

#[test]
fn phantom_writes_two_files_per_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = clotseg(&[
        "phantom",
        "--kind",
        "clean_lumen",
        "--count",
        "1",
        "--seed",
        "3",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["case_clean_lumen_000.json", "case_clean_lumen_000.pgm"]
    );

    let again = tempfile::tempdir().unwrap();
    clotseg(&[
        "phantom",
        "--kind",
        "clean_lumen",
        "--count",
        "1",
        "--seed",
        "3",
        "--out",
        p(again.path()),
    ]);
    for name in &names {
        assert_eq!(
            std::fs::read(dir.path().join(name)).unwrap(),
            std::fs::read(again.path().join(name)).unwrap()
        );
    }
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        clotseg(&["phantom", "--kind", "blood", "--out", p(dir.path())])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(clotseg(&[]).status.code(), Some(64));
    assert_eq!(clotseg(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(
        clotseg(&["batch", "m.json", "--jobs", "0"]).status.code(),
        Some(64)
    );
    assert_eq!(clotseg(&["--help"]).status.code(), Some(0));
}

#[test]
fn classify_reports_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "real_clot", "1", "11");
    let img = dir.path().join("case_real_clot_000.pgm");
    let roi = dir.path().join("case_real_clot_000.json");

    let a = clotseg(&["classify", p(&img), p(&roi), "--no-timings"]);
    assert_eq!(a.status.code(), Some(0));
    let b = clotseg(&["classify", p(&img), p(&roi), "--no-timings"]);
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let case = &report["cases"][0];
    assert_eq!(case["source_id"], "case_real_clot_000");
    assert_eq!(case["assessment"]["verdict"], "POSITIVE");
    for key in ["intensity", "occupation", "eccentricity"] {
        assert!(case["assessment"][key]["value"].is_number());
    }
    assert!(case.get("timings").is_none());
    assert!(report.get("statistics").is_none());

    let timed = clotseg(&["classify", p(&img), p(&roi)]);
    let v: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(v["cases"][0]["timings"]["classify_ms"].as_f64().unwrap() > 0.0);

    let out_file = dir.path().join("report.json");
    let c = clotseg(&[
        "classify",
        p(&img),
        p(&roi),
        "--no-timings",
        "--out",
        p(&out_file),
    ]);
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&out_file).unwrap(), a.stdout);

    let outside = dir.path().join("outside.json");
    std::fs::write(
        &outside,
        r#"{"lumen":{"kind":"ellipse","cx":128,"cy":128,"a":60,"b":40},
            "clot":{"kind":"ellipse","cx":12,"cy":12,"a":6,"b":6}}"#,
    )
    .unwrap();
    let e = clotseg(&["classify", p(&img), p(&outside)]);
    assert_eq!(e.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&e.stderr).unwrap();
    assert_eq!(err["error"], "clot_not_contained");

    let missing = clotseg(&["classify", p(&dir.path().join("nope.pgm")), p(&roi)]);
    assert_eq!(missing.status.code(), Some(74));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{]").unwrap();
    let g = clotseg(&["classify", p(&img), p(&garbage)]);
    assert_eq!(g.status.code(), Some(2));

    let bad_params = clotseg(&[
        "classify",
        p(&img),
        p(&roi),
        "--params",
        r#"{"lambda": 3.0}"#,
    ]);
    assert_eq!(bad_params.status.code(), Some(2));
    let unknown = clotseg(&[
        "classify",
        p(&img),
        p(&roi),
        "--params",
        r#"{"lamda": 0.3}"#,
    ]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn params_inline_or_file_agree() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "turbulence", "1", "4");
    let img = dir.path().join("case_turbulence_000.pgm");
    let roi = dir.path().join("case_turbulence_000.json");
    let json = r#"{"lambda": 0.4, "clahe_clip": 0.02}"#;
    let file = dir.path().join("params.json");
    std::fs::write(&file, json).unwrap();
    let inline = clotseg(&[
        "classify",
        p(&img),
        p(&roi),
        "--no-timings",
        "--params",
        json,
    ]);
    let from_file = clotseg(&[
        "classify",
        p(&img),
        p(&roi),
        "--no-timings",
        "--params",
        p(&file),
    ]);
    assert_eq!(inline.status.code(), Some(0));
    assert_eq!(inline.stdout, from_file.stdout);
    let v: serde_json::Value = serde_json::from_slice(&inline.stdout).unwrap();
    assert_eq!(v["cases"][0]["assessment"]["params"]["lambda"], 0.4);
    assert_eq!(v["cases"][0]["assessment"]["params"]["unsharp_sigma"], 1.5);
}

#[test]
fn batch_is_ordered_and_job_independent() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "all", "2", "21");
    let manifest = dir.path().join("manifest.json");
    let one = clotseg(&["batch", p(&manifest), "--no-timings", "--jobs", "1"]);
    let four = clotseg(&["batch", p(&manifest), "--no-timings", "--jobs", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let v: serde_json::Value = serde_json::from_slice(&one.stdout).unwrap();
    let ids: Vec<_> = v["cases"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["source_id"].as_str().unwrap())
        .collect();
    assert_eq!(
        ids,
        [
            "case_real_clot_000",
            "case_real_clot_001",
            "case_turbulence_000",
            "case_turbulence_001",
            "case_clean_lumen_000",
            "case_clean_lumen_001",
        ]
    );
    let s = &v["statistics"];
    let c = &s["counts"];
    let total = ["tp", "fp", "tn", "fn"]
        .iter()
        .map(|k| c[k].as_u64().unwrap())
        .sum::<u64>();
    assert_eq!(total, 6);
    let acc = (c["tp"].as_u64().unwrap() + c["tn"].as_u64().unwrap()) as f64 / total as f64;
    assert_eq!(s["accuracy"].as_f64().unwrap(), acc);
}

#[test]
fn batch_without_labels_has_no_statistics() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "real_clot", "1", "8");
    let roi: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("case_real_clot_000.json")).unwrap())
            .unwrap();
    std::fs::write(dir.path().join("bare.json"), roi["roi"].to_string()).unwrap();
    let manifest = dir.path().join("unlabeled.json");
    std::fs::write(
        &manifest,
        r#"{"cases":[{"image":"case_real_clot_000.pgm","roi":"bare.json"}]}"#,
    )
    .unwrap();
    let out = clotseg(&["batch", p(&manifest), "--no-timings"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("statistics").is_none());
    assert_eq!(v["cases"][0]["image"], "case_real_clot_000.pgm");
}

#[test]
fn batch_continues_past_failures() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "clean_lumen", "2", "8");
    let manifest = dir.path().join("mixed.json");
    std::fs::write(
        &manifest,
        r#"{"cases":[
            {"image":"case_clean_lumen_000.pgm","roi":"case_clean_lumen_000.json"},
            {"image":"missing.pgm","roi":"case_clean_lumen_000.json","expected":"NEGATIVE"},
            {"image":"case_clean_lumen_001.pgm","roi":"case_clean_lumen_001.json"}
        ]}"#,
    )
    .unwrap();
    let out = clotseg(&["batch", p(&manifest), "--no-timings"]);
    assert_eq!(out.status.code(), Some(74));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["failed"], 1);
    assert_eq!(v["cases"][1]["error"]["error"], "io");
    assert_eq!(v["cases"][2]["assessment"]["verdict"], "NEGATIVE");
    assert_eq!(v["statistics"]["counts"]["tn"], 2);
}

#[test]
fn render_writes_nine_images() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "real_clot", "1", "2");
    let img = dir.path().join("case_real_clot_000.pgm");
    let roi = dir.path().join("case_real_clot_000.json");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert!(clotseg(&["render", p(&img), p(&roi), "--out", p(&out_a)])
        .status
        .success());
    assert!(clotseg(&["render", p(&img), p(&roi), "--out", p(&out_b)])
        .status
        .success());
    let mut names: Vec<_> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for n in &names {
        assert_eq!(
            std::fs::read(out_a.join(n)).unwrap(),
            std::fs::read(out_b.join(n)).unwrap()
        );
    }
}

#[test]
fn render_of_constant_image_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("flat.pgm");
    std::fs::write(
        &img,
        clotseg::image_io::write_pgm16(64, 64, &[1234; 64 * 64]),
    )
    .unwrap();
    let roi = dir.path().join("roi.json");
    std::fs::write(
        &roi,
        r#"{"lumen":{"kind":"ellipse","cx":32,"cy":32,"a":20,"b":20},
            "clot":{"kind":"ellipse","cx":32,"cy":32,"a":6,"b":6}}"#,
    )
    .unwrap();
    let out = dir.path().join("r");
    let run = clotseg(&["render", p(&img), p(&roi), "--out", p(&out)]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let filtered: Vec<_> = String::from_utf8(run.stdout)
        .unwrap()
        .lines()
        .take(5)
        .map(PathBuf::from)
        .collect();
    let first = std::fs::read(&filtered[0]).unwrap();
    for f in &filtered {
        // identical PNG bytes for identical constant 64×64 images
        assert_eq!(std::fs::read(f).unwrap(), first, "{}", f.display());
    }
}

#[test]
fn serve_answers_over_http() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "clean_lumen", "2", "1");
    let mut child = Command::new(BIN)
        .args(["serve", "--bind", "127.0.0.1:0", "--studies", p(dir.path())])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap()
        .to_string();
    let mut stream = std::net::TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "GET /api/studies HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains(r#""id":"case_clean_lumen_000""#));
    assert!(response.contains(r#""id":"case_clean_lumen_001""#));
}

#[test]
fn serve_rejects_duplicate_ids() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "clean_lumen", "1", "1");
    std::fs::copy(
        dir.path().join("case_clean_lumen_000.pgm"),
        dir.path().join("case_clean_lumen_000.PGM"),
    )
    .unwrap();
    let out = clotseg(&["serve", "--bind", "127.0.0.1:0", "--studies", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "duplicate_study_id");
}
