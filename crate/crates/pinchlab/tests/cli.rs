use std::path::{Path, PathBuf};
use std::process::Command;

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pinchlab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn pinchlab(sub: &str, config: &str, dir: &Path, threads: Option<&str>) -> (i32, PathBuf) {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pinchlab"));
    cmd.args([sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    match threads {
        Some(t) => cmd.env("PINCHLAB_THREADS", t),
        None => cmd.env_remove("PINCHLAB_THREADS"),
    };
    let status = cmd.status().unwrap();
    (status.code().unwrap(), out)
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

#[test]
fn classify_writes_raster_and_counts() {
    let (code, out) = pinchlab("classify", "resolution = 64\n", &workdir("classify"), Some("1"));
    assert_eq!(code, 0);
    assert!(out.join("classes.png").exists());
    let counts = std::fs::read_to_string(out.join("counts.csv")).unwrap();
    assert!(counts.starts_with("class,cells,fraction\n"));
    let total: usize = counts.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 64 * 64);
    assert_eq!(json(out.join("classify.json"))["resolution"], 64);
}

#[test]
fn uniformize_passes_its_certificates() {
    let (code, out) = pinchlab("uniformize", "psi_resolution = 256\n", &workdir("uniformize"), None);
    assert_eq!(code, 0);
    let v = json(out.join("uniformize.json"));
    assert_eq!(v["pass"], true);
    assert_eq!(v["dilation"], 2.0);
    assert!(out.join("psi.table").exists());
}

#[test]
fn laminate_and_render() {
    let cfg = "leaf = 1,1.3\nresolution = 64\npsi_resolution = 256\n";
    let (code, out) = pinchlab("laminate", cfg, &workdir("laminate"), None);
    assert_eq!(code, 0);
    assert!(out.join("laminate.png").exists());
    assert!(std::fs::read_to_string(out.join("leaves.csv")).unwrap().lines().count() > 1);
    let (code, out) = pinchlab("render", cfg, &workdir("render"), None);
    assert_eq!(code, 0);
    assert!(out.join("render.png").exists());
    // A crossing lamination is rejected.
    let (code, _) = pinchlab("laminate", "leaf = 1,3\nresolution = 64\n", &workdir("bad-leaf"), None);
    assert_ne!(code, 0);
}

#[test]
fn small_pinch_run() {
    let cfg = "leaf = 1,1.3\nresolution = 128\npsi_resolution = 256\nt_schedule = 0,0.5\n";
    let (code, out) = pinchlab("pinch", cfg, &workdir("pinch"), Some("2"));
    let v = json(out.join("summary.json"));
    assert_eq!(v["completed"], true);
    assert_eq!(code == 0, v["contracts"] == true);
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,residual,leaf_diam,probe_abs,modulus_lb");
    assert_eq!(csv.lines().count(), 3);
    assert!(out.join("frame_00.png").exists() && out.join("frame_01.png").exists());
    assert!(out.join("limit.png").exists());
}

#[test]
fn bad_inputs_exit_nonzero() {
    let (code, _) = pinchlab("classify", "resolution = 64\n", &workdir("threads"), Some("zero"));
    assert_eq!(code, 2);
    let (code, _) = pinchlab("classify", "resolution = banana\n", &workdir("config"), None);
    assert_eq!(code, 2);
    let status = Command::new(env!("CARGO_BIN_EXE_pinchlab")).args(["classify"]).status().unwrap();
    assert_ne!(status.code(), Some(0));
}
