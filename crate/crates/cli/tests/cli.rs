use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn groundlab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_groundlab"));
    cmd.args(args).env_remove("GROUNDLAB_OUT");
    if let Some(dir) = env_out {
        cmd.env("GROUNDLAB_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn constants_mode_writes_the_soliton_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[problem]\nd = 1\np = 2.0\n");
    let out = tmp.path().join("out");
    let o = groundlab(&["constants", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("constants.json")).unwrap()).unwrap();
    let k = &v["constants"];
    assert!((k["a_star"].as_f64().unwrap() - 6.0).abs() < 1e-6);
    assert!((k["lambda"].as_f64().unwrap() - 0.3).abs() < 1e-15);
    assert!((k["c_gn"].as_f64().unwrap() - 1.36507).abs() < 1e-4);
    assert_eq!(v["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn out_flag_beats_the_environment_which_beats_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let from_cfg = tmp.path().join("cfg");
    let from_env = tmp.path().join("env");
    let from_flag = tmp.path().join("flag");
    let cfg = write_config(
        tmp.path(),
        &format!("output = {:?}\n[problem]\nd = 1\np = 3.0\n", from_cfg.to_str().unwrap()),
    );
    assert!(groundlab(&["soliton", "--config", &cfg], None).status.success());
    assert!(from_cfg.join("soliton.json").exists());
    assert!(groundlab(&["soliton", "--config", &cfg], Some(&from_env))
        .status
        .success());
    assert!(from_env.join("profile.txt").exists());
    let flag = from_flag.to_str().unwrap();
    assert!(
        groundlab(&["soliton", "--config", &cfg, "--out", flag], Some(&from_env))
            .status
            .success()
    );
    assert!(from_flag.join("soliton.json").exists());
    let v: Value = serde_json::from_str(&fs::read_to_string(from_flag.join("soliton.json")).unwrap()).unwrap();
    assert!(v["closed_form_max_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn invalid_config_exits_nonzero_naming_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[problem]\nd = 1\np = 2.0\npotential = { family = \"power\", center = [0.0], exponent = 4.0 }\n[run]\nrho_list = [40.0, 20.0]\n",
    );
    let o = groundlab(
        &["sweep", "--config", &cfg, "--out", tmp.path().to_str().unwrap()],
        None,
    );
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.rho_list") && err.contains("line 6"), "{err}");
}

#[test]
fn critical_exponent_is_rejected_for_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[problem]\nd = 1\np = 5.0\npotential = { family = \"power\", center = [0.0], exponent = 2.0 }\n[run]\nrho_list = [1.0, 2.0, 3.0, 4.0]\n",
    );
    let o = groundlab(
        &["verify", "--config", &cfg, "--out", tmp.path().to_str().unwrap()],
        None,
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("problem.p"));
}

#[test]
fn minimize_and_probe_modes_produce_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "seed = 3\n[problem]\nd = 1\np = 2.0\npotential = { family = \"power\", center = [0.0], exponent = 2.0 }\n[run]\nrho = 60.0\n[probe]\nn_inits = 3\n",
    );
    let out = tmp.path().join("out");
    let dir = out.to_str().unwrap();
    let o = groundlab(&["minimize", "--config", &cfg, "--out", dir], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("minimize.json")).unwrap()).unwrap();
    assert!(v["dist_linf"].as_f64().unwrap() < 0.05);
    assert!(out.join("field.txt").exists() && out.join("rescaled_profile.csv").exists());

    let o = groundlab(&["probe", "--config", &cfg, "--out", dir, "--threads", "2"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS uniqueness"));
    let csv = fs::read_to_string(out.join("probe.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256="));
    assert_eq!(csv.lines().count(), 2 + 3);
}

#[test]
fn sweep_csv_has_the_documented_column_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[problem]\nd = 1\np = 2.0\npotential = { family = \"power\", center = [0.0], exponent = 4.0 }\n[run]\nrho_list = [20.0, 40.0, 80.0]\n",
    );
    let out = tmp.path().join("out");
    let o = groundlab(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header = csv.lines().nth(1).unwrap();
    assert!(header.starts_with("rho,energy,tilde_e,predicted_e,mu,epsilon,dist_Linf,rate_x,iterations"));
    assert_eq!(csv.lines().count(), 2 + 3);
    for name in [
        "plot_energy_vs_rho.csv",
        "plot_profile_distance_vs_epsilon.csv",
        "plot_expansion_vs_rho.csv",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
}
