use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lightfluct::records::CountRecord;
use lightfluct_cli::config::{ExperimentConfig, OUTPUT_DIR_ENV, SEED_ENV};
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

const COHERENT: &str = r#"
[model]
model = "coherent"
amplitude = 2.0

[run]
duration = 200.0
n_trajectories = 4
seed = 3
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lightfluct"));
    c.env_remove(SEED_ENV).env_remove(OUTPUT_DIR_ENV);
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(c: &mut Command) -> Output {
    let out = c.output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    out
}

fn run(config: &Path, out: &Path) -> Output {
    run_ok(bin().arg("run").arg("--config").arg(config).arg("--out").arg(out))
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn records(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir.join("records"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn count_records(dir: &Path) -> Vec<CountRecord> {
    records(dir)
        .into_iter()
        .filter(|(n, _)| n.starts_with("counts_"))
        .map(|(_, b)| CountRecord::from_text(std::str::from_utf8(&b).unwrap()).unwrap())
        .collect()
}

#[test]
fn shipped_configs_round_trip() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in fs::read_dir(root).unwrap() {
        let cfg = ExperimentConfig::load(&e.unwrap().path()).unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        seen += 1;
    }
    assert!(seen >= 3);
    let d = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::parse(&d.to_toml()).unwrap(), d);
    assert_eq!(ExperimentConfig::parse("").unwrap(), d);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn config_round_trip(
        duration in 10.0f64..1e4,
        dt in 1e-3f64..0.02,
        n in 1usize..100,
        seed in 0..=i64::MAX as u64,
        amp in 0.0f64..10.0,
        lo in proptest::option::of(-3.0f64..3.0),
        quantum in any::<bool>(),
    ) {
        let mut cfg = ExperimentConfig::default();
        cfg.run.duration = duration;
        cfg.run.dt = dt;
        cfg.run.n_trajectories = n;
        cfg.run.seed = seed;
        cfg.detection.lo_phase = lo;
        cfg.model = lightfluct::field::FieldModel::Coherent { amplitude: amp, phase: 0.5 };
        if quantum {
            cfg.engine = lightfluct_cli::config::Engine::Quantum;
        }
        prop_assume!(cfg.validate().is_ok());
        let text = cfg.to_toml();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("unknown_top.toml", "colour = 3\n"),
        ("unknown_nested.toml", "[run]\nduraton = 5.0\n"),
        ("bad_value.toml", "[run]\ndt = -1.0\n"),
        ("bad_model.toml", "[model]\nmodel = \"laser\"\n"),
        ("bad_split.toml", "[detection]\nsplit_to_counter = 0.3\n"),
        ("quantum_detector.toml", "engine = \"quantum\"\n[detection]\nefficiency = 0.5\n"),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let out = bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(tmp.path().join("x")).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!tmp.path().join("x").exists(), "{name} left output behind");
    }
    let out = bin().arg("run").arg("--config").arg(tmp.path().join("absent.toml")).arg("--out").arg(tmp.path().join("x")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["blackbody", "--x", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_records_for_any_worker_count() {
    let tmp = TempDir::new().unwrap();
    let a = write_config(tmp.path(), "a.toml", COHERENT);
    let b = write_config(tmp.path(), "b.toml", &format!("{COHERENT}workers = 1\n"));
    run(&a, &tmp.path().join("a"));
    run(&b, &tmp.path().join("b"));
    let (ra, rb) = (records(&tmp.path().join("a")), records(&tmp.path().join("b")));
    assert_eq!(ra.len(), 8);
    assert!(ra == rb, "records differ");
    let c = write_config(tmp.path(), "c.toml", &COHERENT.replace("seed = 3", "seed = 4"));
    run(&c, &tmp.path().join("c"));
    assert!(records(&tmp.path().join("c")) != ra);
}

#[test]
fn quantum_without_drive_never_clicks() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q.toml", "engine = \"quantum\"\n[system]\ndrive = 0.0\n[run]\nduration = 50.0\nn_trajectories = 3\n");
    let dir = tmp.path().join("q");
    run(&cfg, &dir);
    let counts = count_records(&dir);
    assert_eq!(counts.len(), 3);
    assert!(counts.iter().all(|r| r.is_empty() && r.window() == (0.0, 50.0)));
    let out = bin().arg("analyze").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(!json(&out)["problems"].as_array().unwrap().is_empty());
}

#[test]
fn coherent_run_is_poissonian() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", COHERENT);
    let dir = tmp.path().join("c");
    run(&cfg, &dir);

    // each arm of the 50/50 split carries |2|²/2 = 2 photons per unit time
    let total: usize = count_records(&dir).iter().map(CountRecord::len).sum();
    let expected = 2.0 * 200.0 * 4.0;
    assert!((total as f64 - expected).abs() < 3.0 * expected.sqrt(), "{total} counts, expected {expected}");

    let report = json(&run_ok(bin().arg("analyze").arg(&dir)));
    for f in ["g2.csv", "h.csv", "spectrum.csv", "audit.json", "report.json"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    assert_eq!(read_json(&dir.join("report.json")), report);
    let g = &report["g2_zero"];
    let (v, se) = (g["value"].as_f64().unwrap(), g["stderr"].as_f64().unwrap());
    assert!((v - 1.0).abs() < 3.0 * se, "g2(0) = {v} ± {se}");
    assert_eq!(report["violations"], 0);
    assert_eq!(report["verdicts"].as_object().unwrap().len(), read_json(&dir.join("audit.json"))["checks"].as_array().unwrap().len());

    let audit = run_ok(bin().arg("audit").arg("--g2").arg(dir.join("g2.csv")).arg("--h").arg(dir.join("h.csv")));
    assert_eq!(json(&audit), read_json(&dir.join("audit.json")));
}

#[test]
fn quantum_run_violates_classical_g2_bound() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q.toml", "engine = \"quantum\"\n[run]\nduration = 2000.0\nn_trajectories = 8\nseed = 2\n[units]\nmode = \"si\"\n");
    let dir = tmp.path().join("q");
    run(&cfg, &dir);
    let report = json(&run_ok(bin().arg("analyze").arg(&dir)));
    let audit = read_json(&dir.join("audit.json"));
    let check = audit["checks"].as_array().unwrap().iter().find(|c| c["name"] == "g2_zero_delay").unwrap().clone();
    assert_eq!(check["verdict"], "violated");
    assert_eq!(report["verdicts"]["g2_zero_delay"], "violated");
    assert_eq!(report["estimator"], "conditional");
    let min = &report["spectrum_minimum"];
    assert!(min["value"].as_f64().unwrap() < 0.0);
    let f = min["frequency"].as_f64().unwrap();
    assert!((min["frequency_mhz"].as_f64().unwrap() - f / 50.0 * 1e3).abs() < 1e-9);
    for f in ["expected_current_00000.csv", "counting_rate_00007.csv"] {
        assert!(dir.join("records").join(f).exists());
    }
}

#[test]
fn comparison_of_runs() {
    let tmp = TempDir::new().unwrap();
    let a = write_config(tmp.path(), "a.toml", COHERENT);
    let b = write_config(tmp.path(), "b.toml", &COHERENT.replace("seed = 3", "seed = 9"));
    let c = write_config(tmp.path(), "c.toml", &format!("{COHERENT}[analysis]\nbin_width = 0.05\n"));
    for (cfg, name) in [(&a, "a"), (&b, "b"), (&c, "c")] {
        run(cfg, &tmp.path().join(name));
        run_ok(bin().arg("analyze").arg(tmp.path().join(name)));
    }
    let (da, db) = (tmp.path().join("a"), tmp.path().join("b"));

    let out = tmp.path().join("cmp");
    let same = json(&run_ok(bin().arg("compare").arg(&da).arg(&da).arg("--out").arg(&out)));
    for d in same["differences"].as_array().unwrap() {
        assert_eq!(d["max_abs_difference"], 0.0);
        assert_eq!(d["beyond_sigma_rule"], 0);
    }
    assert_eq!(same["h_extremum_a"], same["h_extremum_b"]);
    assert_eq!(read_json(&out.join("comparison.json")), same);
    let table = fs::read_to_string(out.join("comparison_h.csv")).unwrap();
    let h_rows = fs::read_to_string(da.join("h.csv")).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(table.lines().count(), h_rows);

    let seeds = json(&run_ok(bin().arg("compare").arg(&da).arg(&db)));
    for d in seeds["differences"].as_array().unwrap() {
        let (n, beyond) = (d["lags"].as_u64().unwrap(), d["beyond_sigma_rule"].as_u64().unwrap());
        assert!(beyond * 20 <= n, "{beyond} of {n} lags differ beyond 3σ");
    }

    let bad = bin().arg("compare").arg(&da).arg(tmp.path().join("c")).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("incompatible"));
    let missing = bin().arg("compare").arg(&da).arg(tmp.path().join("nope")).output().unwrap();
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn environment_overrides_seed_and_output_dir() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", COHERENT);
    let dir = tmp.path().join("from_env");
    let out = run_ok(bin().arg("run").arg("--config").arg(&cfg).env(SEED_ENV, "17").env(OUTPUT_DIR_ENV, &dir));
    assert_eq!(json(&out)["seed"], 17);
    let manifest = read_json(&dir.join("manifest.json"));
    assert_eq!(manifest["seed"], 17);
    assert!(fs::read_to_string(dir.join("config.toml")).unwrap().contains("seed = 17"));
    assert!(fs::read_to_string(dir.join("records/counts_00000.txt")).unwrap().starts_with("# seed=17\n"));

    let flag = tmp.path().join("flag");
    let out = run_ok(bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(&flag).arg("--seed").arg("5").env(SEED_ENV, "17"));
    assert_eq!(json(&out)["seed"], 5);

    for seed in ["many", "9223372036854775808"] {
        let bad = bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(tmp.path().join("x")).env(SEED_ENV, seed).output().unwrap();
        assert_eq!(bad.status.code(), Some(2), "{seed}");
    }
}

#[test]
fn analyze_detects_tampered_records() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", COHERENT);
    let dir = tmp.path().join("c");
    run(&cfg, &dir);
    fs::write(dir.join("records/counts_00001.txt"), "# seed=3\n").unwrap();
    let out = bin().arg("analyze").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn blackbody_report() {
    let out = run_ok(bin().args(["blackbody", "--x", "1", "--n", "200000", "--seed", "4"]));
    let v = json(&out);
    assert_eq!(v["x"], 1.0);
    let d = &v["analytic_discrete"];
    let (m, var) = (d["mean"].as_f64().unwrap(), d["variance"].as_f64().unwrap());
    assert!((var - (m * m + m)).abs() <= 1e-12 * var);
    for (sampled, analytic) in [("sampled_continuous", "analytic_continuous"), ("sampled_discrete", "analytic_discrete")] {
        let s = &v[sampled];
        let a = &v[analytic];
        for (k, se) in [("mean", "mean_stderr"), ("variance", "variance_stderr")] {
            let diff = (s[k].as_f64().unwrap() - a[k].as_f64().unwrap()).abs();
            assert!(diff < 3.0 * s[se].as_f64().unwrap(), "{sampled}.{k}");
        }
    }
    assert_eq!(out.stdout, run_ok(bin().args(["blackbody", "--x", "1", "--samples", "200000", "--seed", "4"])).stdout);
}
