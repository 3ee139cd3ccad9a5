use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use imm::io::{RunManifest, Table, TRAJECTORY_FILES};
use rand::SeedableRng;
use rand_distr::{Distribution, StudentT};

const MINIMAL: &str = r#"
n = 1
mode = "info_minimizing"
net_risk_adjusted_return = 0.05
initial_values = "sample_stationary"
horizon = 2.0
grid_step = 0.01
paths = 3
seed = 11

[interest_rate]
kind = "constant"
r0 = 0.03

[activity.model]
kind = "constant"
a0 = 0.2
"#;

fn imm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imm")).args(args).env("IMM_THREADS", "2").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", MINIMAL);
    let out = out_arg(tmp.path(), "run");
    let o = imm(&["simulate", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in TRAJECTORY_FILES {
        let t = Table::read_csv(&Path::new(&out).join(f)).unwrap();
        assert_eq!(t.rows.len(), 3 * 201, "{f}");
    }
    let m = RunManifest::read(&Path::new(&out).join("manifest.json")).unwrap();
    assert_eq!(m.seed, 11);
    assert_eq!(m.config.n, 1);
    assert!(m.finished_at >= m.started_at);
    assert_eq!(m.outputs.len(), TRAJECTORY_FILES.len() + 1);
    let y = Table::read_csv(&Path::new(&out).join("normalized.csv")).unwrap();
    assert_eq!(y.header, ["path", "t", "Y^1"]);
}

#[test]
fn same_seed_and_manifest_rerun_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", MINIMAL);
    let a = out_arg(tmp.path(), "a");
    let b = out_arg(tmp.path(), "b");
    let c = out_arg(tmp.path(), "c");
    assert_eq!(code(&imm(&["simulate", "--config", &cfg, "--out", &a])), 0);
    assert_eq!(code(&imm(&["simulate", "--config", &cfg, "--out", &b])), 0);
    let manifest = Path::new(&a).join("manifest.json");
    assert_eq!(code(&imm(&["simulate", "--config", manifest.to_str().unwrap(), "--out", &c])), 0);
    for f in TRAJECTORY_FILES {
        let first = fs::read(Path::new(&a).join(f)).unwrap();
        assert_eq!(first, fs::read(Path::new(&b).join(f)).unwrap(), "{f}");
        assert_eq!(first, fs::read(Path::new(&c).join(f)).unwrap(), "{f}");
    }
    let d = out_arg(tmp.path(), "d");
    assert_eq!(code(&imm(&["simulate", "--config", &cfg, "--out", &d, "--seed", "12"])), 0);
    assert_ne!(fs::read(Path::new(&a).join("atoms.csv")).unwrap(), fs::read(Path::new(&d).join("atoms.csv")).unwrap());
}

#[test]
fn overrides_change_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", MINIMAL);
    let out = out_arg(tmp.path(), "o");
    let o = imm(&["simulate", "--config", &cfg, "--out", &out, "--paths", "2", "--horizon", "1", "--dt", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read_csv(&Path::new(&out).join("clocks.csv")).unwrap();
    assert_eq!(t.rows.len(), 2 * 11);
}

#[test]
fn missing_or_invalid_config_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = out_arg(tmp.path(), "nope.toml");
    let o = imm(&["simulate", "--config", &missing, "--out", &out_arg(tmp.path(), "o")]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.toml"));

    let bad = write_config(tmp.path(), "bad.toml", &MINIMAL.replace("n = 1", "n = 1\nrisk_premium_factors = [0.9]"));
    let o = imm(&["simulate", "--config", &bad, "--out", &out_arg(tmp.path(), "o")]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("invalid config"));

    assert_eq!(code(&imm(&["simulate"])), 1);
    assert_eq!(code(&imm(&["bogus"])), 1);
}

#[test]
fn unwritable_output_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", MINIMAL);
    let file = write_config(tmp.path(), "occupied", "");
    let o = imm(&["simulate", "--config", &cfg, "--out", &file]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn validate_selected_suites_on_reference_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path(), "v");
    let o = imm(&["validate", "--suite", "mvp,additivity", "--out", &out]);
    assert_eq!(code(&o), 0, "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&out).join("validation.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["suites"].as_array().unwrap().len(), 2);
    assert_eq!(report["suites"][0]["suite"], "mvp");
}

#[test]
fn unknown_suite_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = imm(&["validate", "--suite", "mvp,nonsense", "--out", &out_arg(tmp.path(), "v")]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nonsense"));
}

fn info_json(dir: &Path, text: &str) -> serde_json::Value {
    let cfg = write_config(dir, "i.toml", text);
    let out = out_arg(dir, "info");
    let o = imm(&["info", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_str(&fs::read_to_string(Path::new(&out).join("info.json")).unwrap()).unwrap()
}

#[test]
fn info_reports_closed_form_kl() {
    let tmp = tempfile::tempdir().unwrap();
    let r = info_json(tmp.path(), MINIMAL);
    assert!((r["kl_closed_form"].as_f64().unwrap() - 0.21025).abs() < 1e-12);
    assert_eq!(r["kl_status"], "exact");
    // Gamma(2, 2): ∫ p ln p = ln 2 - 1 - γ
    let euler_gamma = 0.5772156649015329;
    assert!((r["self_information"][0].as_f64().unwrap() - (2f64.ln() - 1.0 - euler_gamma)).abs() < 1e-12);
    assert!(r["kl_monte_carlo"]["value"].as_f64().unwrap() > 0.0);

    let r = info_json(tmp.path(), &MINIMAL.replace("net_risk_adjusted_return = 0.05", "net_risk_adjusted_return = 0.0"));
    assert!((r["kl_closed_form"].as_f64().unwrap() - 0.5 * 0.2 * 2.0).abs() < 1e-12);

    let r = info_json(tmp.path(), &MINIMAL.replace("n = 1", "n = 3"));
    assert_eq!(r["kl_status"], "truncated");
    assert_eq!(r["kl_monte_carlo"]["heavy_tailed"], true);
}

#[test]
fn fit_recovers_t4_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let t = StudentT::new(4.0).unwrap();
    let text: String = (0..100_000).map(|_| format!("{}\n", 0.01 * t.sample(&mut rng))).collect();
    let file = write_config(tmp.path(), "r.txt", &format!("# daily log-returns\n{text}"));
    let out = out_arg(tmp.path(), "f");
    let o = imm(&["fit", "--returns", &file, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&out).join("fit.json")).unwrap()).unwrap();
    let nu = fit["nu"].as_f64().unwrap();
    assert!((3.7..=4.3).contains(&nu), "ν = {nu}");
}

#[test]
fn fit_of_simulated_ap_returns_reports_standard_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL
        .replace("n = 1", "n = 20")
        .replace("horizon = 2.0", "horizon = 1.0")
        .replace("grid_step = 0.01", "grid_step = 0.003968253968253968")
        .replace("paths = 3", "paths = 60")
        .replace("kind = \"constant\"\na0 = 0.2", "kind = \"cir\"\na0 = 0.2\nspeed = 5.0\nlevel = 0.2\nvol = 0.4");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let o = imm(&["fit", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("ν = ") && stdout.contains(" ± "), "{stdout}");
}

#[test]
fn empty_or_malformed_returns_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write_config(tmp.path(), "empty.txt", "");
    assert_eq!(code(&imm(&["fit", "--returns", &empty])), 1);
    let bad = write_config(tmp.path(), "bad.txt", "0.01\nabc\n");
    let o = imm(&["fit", "--returns", &bad]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 2"));
    let short = write_config(tmp.path(), "short.txt", "0.01\n-0.02\n");
    assert_eq!(code(&imm(&["fit", "--returns", &short])), 1);
}
