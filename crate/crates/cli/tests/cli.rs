use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/scene").join(name)
}

fn r2s(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r2s")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn self_agreement_is_100() {
    let a = fixture("pred_baseline_real.json");
    let out = r2s(&["agreement", "--a", p(&a), "--b", p(&a)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["da"].as_f64(), Some(100.0));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = r2s(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = r2s(&["agreement", "--a", "x.json", "--b", "x.json", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_error_is_one_line_with_kind() {
    let out = r2s(&["eval-det", "--gt", "/nonexistent/gt.json", "--pred", "/nonexistent/p.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: IoError: "), "{err}");
}

#[test]
fn frame_mismatch_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("moved.json");
    let text = std::fs::read_to_string(fixture("pred_baseline_sim.json")).unwrap();
    std::fs::write(&out, text.replace("synthetic-0001", "other-scene")).unwrap();
    let res = r2s(&["agreement", "--a", p(&fixture("pred_baseline_real.json")), "--b", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error: FrameMismatchError"));
}

#[test]
fn full_pipeline_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = r2s(&["report", "--config", p(&fixture("report.json")), "--out", p(&d.join("report"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("report/report.json")).unwrap()).unwrap();
    let rows = json["table"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(json["table"]["baseline"], "Real data only");
    // real-row DA is self-agreement
    assert_eq!(rows[0]["real"][2].as_f64(), Some(100.0));
    let csv = std::fs::read_to_string(d.join("report/report.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("method,data,mAP,NDS,DA"));
    assert_eq!(csv.lines().count(), 7);
    let md = std::fs::read_to_string(d.join("report/report.md")).unwrap();
    assert!(md.contains("| NeRF | Gap (%) |"));

    let scene_csv = d.join("scene.csv");
    let da = json["table"]["rows"][0]["sim"][2].as_f64().unwrap().to_string();
    let out = r2s(&[
        "img-metrics",
        "--real", p(&fixture("images/real")),
        "--sim", p(&fixture("images/sim")),
        "--scene", "synthetic-0001",
        "--lpips", p(&fixture("lpips.csv")),
        "--feats-real", p(&fixture("feats_real.fvec")),
        "--feats-sim", p(&fixture("feats_sim.fvec")),
        "--da", &da,
        "--out", p(&scene_csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&scene_csv).unwrap();
    assert!(text.starts_with("scene_id,psnr,ssim,lpips,fid,da\n"));
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields.len(), 6);
    assert!(fields[1..].iter().all(|f| f.parse::<f64>().is_ok()), "{text}");

    // three more synthetic scenes so the correlation has enough points
    let mut rows = String::from("scene_id,psnr,ssim,lpips,fid,da\n");
    rows.push_str(text.lines().nth(1).unwrap());
    rows.push('\n');
    for (i, (psnr, da)) in [(24.0, 48.0), (31.0, 70.5), (27.5, 61.0)].iter().enumerate() {
        rows.push_str(&format!("extra-{i},{psnr},0.6,0.1,2.0,{da}\n"));
    }
    let all = d.join("all.csv");
    std::fs::write(&all, rows).unwrap();
    let out = r2s(&[
        "correlate",
        "--in", &format!("nerf={}", p(&all)),
        "--metrics", "psnr,fid",
        "--out", p(&d.join("corr.json")),
        "--svg-dir", p(&d.join("svg")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let corr: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("corr.json")).unwrap()).unwrap();
    assert_eq!(corr.as_array().unwrap().len(), 2);
    assert_eq!(corr[0]["n_scenes"], 4);
    let svg = std::fs::read_to_string(d.join("svg/psnr.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 4);
}

#[test]
fn report_table_mode_reproduces_gap() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("table.json");
    std::fs::write(
        &input,
        r#"{"columns": ["mAP"], "methods": [
            {"method": "Real data only", "real": [32.2], "sim": [13.5]},
            {"method": "NeRF", "real": [31.2], "sim": [23.5]}]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = r2s(&["report", "--table", p(&input), "--out", p(&out_dir)]);
    assert!(out.status.success());
    let md = std::fs::read_to_string(out_dir.join("report.md")).unwrap();
    assert!(md.contains("| Real data only | Gap (%) | 58.1 |"), "{md}");
    assert!(md.contains("| NeRF | Gap (%) | 27.0 |"), "{md}");
    let out = r2s(&["report", "--table", p(&input), "--baseline", "Missing", "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: MissingBaselineError"));
}

#[test]
fn range_curve_ends_at_plain_agreement() {
    let a = fixture("pred_baseline_real.json");
    let b = fixture("pred_baseline_sim.json");
    let curve = stdout(&r2s(&["range-curve", "--a", p(&a), "--b", p(&b), "--fractions", "0.5,1.0"]));
    let last = curve.lines().last().unwrap().split(',').nth(1).unwrap().parse::<f64>().unwrap();
    let agreement: serde_json::Value =
        serde_json::from_str(&stdout(&r2s(&["agreement", "--a", p(&a), "--b", p(&b)]))).unwrap();
    assert_eq!(Some(last), agreement["da"].as_f64());
}

#[test]
fn transform_round_trip_and_mix_plan() {
    let dir = tempfile::tempdir().unwrap();
    let shifted = dir.path().join("shifted.json");
    let back = dir.path().join("back.json");
    let gt = fixture("gt.json");
    assert!(r2s(&["transform", "--in", p(&gt), "--pert", "lateral:+2.0", "--out", p(&shifted)]).status.success());
    assert!(r2s(&["transform", "--in", p(&shifted), "--pert", "lateral:-2.0", "--out", p(&back)]).status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&shifted).unwrap()).unwrap();
    assert_eq!(v["variant"]["kind"], "shifted");
    let out = r2s(&["agreement", "--a", p(&gt), "--b", p(&back)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["da"].as_f64().unwrap() - 100.0).abs() < 1e-9);

    let samples = dir.path().join("samples.json");
    let rendered = dir.path().join("rendered.json");
    std::fs::write(&samples, r#"[{"sample_id": "a", "path": "real/a.jpg"}, {"sample_id": "b", "path": "real/b.jpg"}]"#).unwrap();
    std::fs::write(&rendered, r#"{"a": "sim/a.jpg"}"#).unwrap();
    let args = ["mix-plan", "--in", p(&samples), "--rendered", p(&rendered), "--p", "1.0", "--seed", "3", "--epochs", "2"];
    let plan = stdout(&r2s(&args));
    assert_eq!(plan.lines().count(), 4);
    assert!(plan.lines().next().unwrap().contains(r#""chosen_path":"sim/a.jpg""#));
    assert_eq!(plan, stdout(&r2s(&args)));
}

#[test]
fn augment_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("aug.json");
    std::fs::write(&cfg, r#"{"p_noise": 1.0, "p_blur": 1.0, "p_photometric": 1.0, "p_downup": 1.0}"#).unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = r2s(&["augment", "--in", p(&fixture("images/real")), "--out", p(&out), "--config", p(&cfg), "--seed", seed]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("f0.png")).unwrap()
    };
    let a = run("a", "7");
    assert_eq!(a, run("b", "7"));
    assert_ne!(a, run("c", "8"));
}

#[test]
fn frechet_prints_distance() {
    let out = r2s(&["frechet", "--a", p(&fixture("feats_real.fvec")), "--b", p(&fixture("feats_real.fvec"))]);
    assert!(out.status.success());
    let d: f64 = stdout(&out).trim().parse().unwrap();
    assert!(d.abs() < 6e-6);
}
