use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn attrbounds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attrbounds"))
        .current_dir(dir)
        .env_remove("ATTRBOUNDS_THREADS")
        .args(args)
        .output()
        .expect("spawn attrbounds")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn bounds_json_for_unit_square() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "b.cfg", "domain.kind=square\nparams.nu=1\nparams.f=-1,0,1\n");
    let out = attrbounds(dir.path(), &["bounds", "--config", &cfg, "--format", "json", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("o/bounds.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["regime"], "dim<=d0");
    assert!((v["d0"].as_f64().unwrap() - 0.1492).abs() < 1e-4);
    assert!((v["kappa1"].as_f64().unwrap() - 0.9375).abs() < 1e-12);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["task"], "bounds");
}

#[test]
fn verify_square_writes_fifty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = attrbounds(
        dir.path(),
        &["verify", "--set", "domain.h=0.0078125", "--set", "verify.m_max=50", "--out", "v"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("v/verify.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(lines.len(), 52);
    assert!(!csv.contains("violated"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = config(dir.path(), "empty.cfg", "");
    let out = attrbounds(dir.path(), &["bounds", "--config", &empty]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    let unknown = config(dir.path(), "unknown.cfg", "params.nu=1\nparams.zeta=2\n");
    let out = attrbounds(dir.path(), &["bounds", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.zeta"));

    // supercritical potential
    let out = attrbounds(
        dir.path(),
        &["bounds", "--set", "params.potential=borderline", "--set", "params.delta=0.5"],
    );
    assert_eq!(out.status.code(), Some(1));

    // explicit cubic term overflows from a huge initial field
    let out = attrbounds(
        dir.path(),
        &[
            "simulate",
            "--set",
            "domain.h=0.25",
            "--set",
            "params.f=0,0,1",
            "--set",
            "simulate.amplitude=1000",
            "--set",
            "simulate.dt=0.1",
            "--set",
            "simulate.burn_in=0",
            "--out",
            "s",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flags_override_file_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.cfg", "params.nu=0.01\noutput.format=json\n");
    let out = attrbounds(
        dir.path(),
        &["bounds", "--config", &cfg, "--set", "params.nu=1", "--format", "csv", "--out", "o"],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("o/bounds.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[2], "1");
}

#[test]
fn sweep_nu_has_one_sign_change() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "s.cfg",
        "sweep.axis1=params.nu\nsweep.values1=0.01,0.1,1,2,5,10,20,50,100\n",
    );
    let out = attrbounds(dir.path(), &["sweep", "--config", &cfg, "--threads", "2", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    let mut lines = csv.lines().skip(1);
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "kappa1").unwrap();
    let k1: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(k1.len(), 9);
    let changes = k1.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    assert_eq!(changes, 1, "{k1:?}");
}

#[test]
fn sweep_scale_ratio_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = attrbounds(
        dir.path(),
        &[
            "sweep",
            "--set",
            "sweep.axis1=domain.scale",
            "--set",
            "sweep.values1=1,2,4",
            "--format",
            "json",
            "--out",
            "o",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/sweep.json")).unwrap()).unwrap();
    let r: Vec<f64> = (0..3).map(|i| v[i]["report"]["ratio"].as_f64().unwrap()).collect();
    assert!((r[1] / r[0] - 0.25).abs() < 1e-12 && (r[2] / r[0] - 1.0 / 16.0).abs() < 1e-12);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "s.cfg",
        "sweep.axis1=params.nu\nsweep.values1=0.05,0.5,-2,5\nsweep.axis2=domain.h\nsweep.values2=0.0625,0.03125\ndomain.geometry=grid\n",
    );
    let a = attrbounds(dir.path(), &["sweep", "--config", &cfg, "--threads", "1", "--out", "a"]);
    let b = Command::new(env!("CARGO_BIN_EXE_attrbounds"))
        .current_dir(dir.path())
        .env("ATTRBOUNDS_THREADS", "3")
        .args(["sweep", "--config", &cfg, "--out", "b"])
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    let sa = fs::read(dir.path().join("a/sweep.csv")).unwrap();
    let sb = fs::read(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(sa, sb);
    assert!(String::from_utf8(sa).unwrap().contains(",failed,"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "sim.cfg",
        "domain.h=0.0625\nparams.nu=0.05\nsimulate.m=3\nsimulate.t=0.2\nsimulate.dt=0.01\nsimulate.burn_in=0.5\n",
    );
    for out in ["a", "b"] {
        let o = attrbounds(dir.path(), &["simulate", "--config", &cfg, "--seed", "7", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["timeseries.csv", "summary.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
    let ts = fs::read_to_string(dir.path().join("a/timeseries.csv")).unwrap();
    assert!(ts.starts_with("# schema=1\nt,m,measured_trace,analytic_bound,log_volume\n"));
}

#[test]
fn geometry_and_spectrum_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let out = attrbounds(dir.path(), &["geometry", "--set", "domain.kind=interval", "--set", "domain.h=0.01", "--format", "json"]);
    assert!(out.status.success());
    let g: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("geometry.json")).unwrap()).unwrap();
    assert_eq!(g["dim"], 1);

    let out = attrbounds(dir.path(), &["spectrum", "--set", "spectrum.m=4", "--set", "domain.h=0.0625"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 4);
}
