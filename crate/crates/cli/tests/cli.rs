use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use nimbus::march::{tone_map, HdrImage};
use nimbus::png_io::decode_rgba8;
use nimbus::volume::read_vtex;
use nimbus_cli::service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn nimbus(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nimbus"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn cheap_scene() -> Value {
    json!({
        "camera": {"width": 24, "height": 14},
        "march_params": {"view_scale": 0.25, "shadow_scale": 0.25},
        "textures": {"base": "procedural:perlin_worley:16", "erosion": "procedural:curly_alligator:16"},
    })
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

#[test]
fn default_render_writes_png_and_hdr() {
    let dir = tempfile::tempdir().unwrap();
    let out = nimbus(&["render", "--width", "128", "--height", "72", "--out", "frame.png", "--hdr"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let png = decode_rgba8(&fs::read(dir.path().join("frame.png")).unwrap()).unwrap();
    assert_eq!((png.width, png.height), (128, 72));
    let raw = fs::read(dir.path().join("frame.raw")).unwrap();
    assert_eq!(raw.len(), 8 + 128 * 72 * 3 * 4);
    // The PNG is exactly the tone-mapped raw dump.
    let hdr = HdrImage::read_raw(&raw[..]).unwrap();
    let ldr = tone_map(&hdr, 1.0).unwrap();
    let rgb: Vec<u8> = png.rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    assert_eq!(rgb, ldr.data);
}

#[test]
fn diff_of_identical_files_is_black() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_json(dir.path(), "a.json", &cheap_scene());
    let b = write_json(dir.path(), "b.json", &cheap_scene());
    let out = nimbus(
        &["render", "--diff", a.to_str().unwrap(), b.to_str().unwrap(), "--out", "diff.png", "--hdr", "diff.raw"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let png = decode_rgba8(&fs::read(dir.path().join("diff.png")).unwrap()).unwrap();
    assert_eq!((png.width, png.height), (24, 14));
    assert!(png.rgba.chunks_exact(4).all(|p| p[..3] == [0, 0, 0]));
    let hdr = HdrImage::read_raw(&fs::read(dir.path().join("diff.raw")).unwrap()[..]).unwrap();
    assert!(hdr.rgb.iter().all(|&v| v == 0.0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    let missing = nimbus(&["render", "--scene", "missing.json"], p);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.json"));

    write_json(p, "bad.json", &json!({"cloud_params": {"P4": -1}}));
    let bad = nimbus(&["render", "--scene", "bad.json"], p);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("cloud_params.P4"));

    fs::write(p.join("broken.json"), "{\"camera\": }").unwrap();
    assert_eq!(code(&nimbus(&["render", "--scene", "broken.json"], p)), 1);
    assert_eq!(code(&nimbus(&["render", "--preset", "nope"], p)), 1);
    assert_eq!(code(&nimbus(&["render", "--width", "0"], p)), 1);
    assert_eq!(code(&nimbus(&["render", "--no-such-flag"], p)), 1);
    assert_eq!(code(&nimbus(&["bench", "--frames", "3"], p)), 1);
    assert_eq!(code(&nimbus(&["bake", "--texture", "procedural:simplex:8", "--out", "x.vtex.json"], p)), 1);

    write_json(p, "ok.json", &cheap_scene());
    let unwritable = nimbus(&["render", "--scene", "ok.json", "--out", "no/such/dir/out.png"], p);
    assert_eq!(code(&unwritable), 2);

    assert_eq!(code(&nimbus(&["--help"], p)), 0);
}

#[tokio::test]
async fn cli_and_api_produce_identical_png() {
    let dir = tempfile::tempdir().unwrap();
    let scene = cheap_scene();
    write_json(dir.path(), "scene.json", &scene);
    let out = nimbus(&["render", "--scene", "scene.json", "--out", "cli.png"], dir.path());
    assert_eq!(code(&out), 0);
    let cli_png = fs::read(dir.path().join("cli.png")).unwrap();

    let mut body = scene.clone();
    body["preview_scale"] = json!(1);
    let req = Request::post("/render").body(Body::from(body.to_string())).unwrap();
    let res = router(AppState::new(4, None)).oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let api_png = res.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&api_png[..], &cli_png[..]);
}

#[test]
fn bench_report_matches_schema_and_counters() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "scene.json", &cheap_scene());
    let out = nimbus(
        &[
            "bench", "--scene", "scene.json", "--frames", "4", "--scales", "4.0,2.0", "--sun-elevations", "2,60",
            "--json", "report.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("scene"), "table first: {stdout}");

    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/bench-report.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    // Standard output carries the same report after the table.
    let printed: Value = serde_json::from_str(&stdout[stdout.find('{').unwrap()..]).unwrap();
    assert_eq!(printed["entries"].as_array().unwrap().len(), 4);

    let entries = report["entries"].as_array().unwrap();
    let get = |elev: f64, scale: f64, key: &str| {
        entries
            .iter()
            .find(|e| e["sun_elevation_deg"] == elev && e["view_scale"] == scale)
            .unwrap()[key]
            .as_u64()
            .unwrap()
    };
    for elev in [2.0, 60.0] {
        let ratio = get(elev, 2.0, "extinction_samples") as f64 / get(elev, 4.0, "extinction_samples") as f64;
        assert!(ratio <= 0.55, "sun {elev}: ratio {ratio}");
    }
    assert!(get(2.0, 4.0, "shadow_samples") > get(60.0, 4.0, "shadow_samples"));
    assert!(entries.iter().all(|e| e["frames"] == 3));
}

#[test]
fn corpus_and_bake_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = nimbus(&["corpus", "--out", "corpus", "--count", "10", "--resolution", "64x32", "--split", "0.7"], p);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value = serde_json::from_slice(&fs::read(p.join("corpus/manifest.json")).unwrap()).unwrap();
    assert_eq!((manifest["train_count"].as_u64(), manifest["test_count"].as_u64()), (Some(7), Some(3)));
    assert_eq!(manifest["resolution"], json!([64, 32]));
    for e in manifest["entries"].as_array().unwrap() {
        let scene = nimbus::load_config(&p.join("corpus").join(e["file"].as_str().unwrap())).unwrap();
        assert_eq!((scene.camera.width, scene.camera.height), (64, 32));
    }
    assert_eq!(code(&nimbus(&["corpus", "--out", "c2", "--split", "1.5"], p)), 1);
    assert_eq!(code(&nimbus(&["corpus", "--out", "c2", "--resolution", "wide"], p)), 1);

    for (args, data) in [
        (vec!["bake", "--texture", "procedural:worley:8", "--out", "w.vtex.json"], "w.vtex.raw"),
        (vec!["bake", "--texture", "procedural:perlin:8", "--out", "p.vtex.json", "--png"], "p.vtex.png"),
    ] {
        let out = nimbus(&args, p);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(p.join(data).exists());
        let (header, tex) = read_vtex(&p.join(args[4])).unwrap();
        assert_eq!(tex.dims(), [8, 8, 8]);
        assert_eq!(header.seed, 7);
    }
}
