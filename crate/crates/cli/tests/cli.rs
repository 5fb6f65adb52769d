use hgibbs_cli::registry::{ParamValue, EXPERIMENTS};
use hgibbs_cli::{emit_default_config, parse_config};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hgibbs(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hgibbs"));
    cmd.args(args).env_remove(hgibbs_cli::OUTPUT_DIR_ENV);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_ORDERING: &str = "experiment = ordering\nseed = 11\nk = 1\nt_list = 1, 8\nrho = 0.1\nn_chains = 200\nburn_in = 3\n";

#[test]
fn default_configs_round_trip() {
    for e in &EXPERIMENTS {
        let text = emit_default_config(e.name).unwrap();
        let cfg = parse_config(&text).unwrap_or_else(|err| panic!("{}: {err}", e.name));
        let defaults: BTreeMap<String, ParamValue> =
            e.params.iter().map(|s| (s.name.to_string(), ParamValue::parse(s.kind, s.default).unwrap())).collect();
        assert_eq!(cfg.params, defaults, "{}", e.name);
        assert_eq!(cfg.experiment, e.name);
    }
}

#[test]
fn list_and_emit() {
    let out = hgibbs(&["list-experiments"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["separation", "z_lowerbound", "ordering", "fluctuation", "bbjump"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
    let out = hgibbs(&["emit-default-config", "bbjump"], &[]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), emit_default_config("bbjump").unwrap());
    assert_eq!(hgibbs(&["emit-default-config", "nope"], &[]).status.code(), Some(2));
}

#[test]
fn separation_defaults_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = String::from_utf8(hgibbs(&["emit-default-config", "separation"], &[]).stdout).unwrap();
    let cfg = write(dir.path(), "sep.cfg", &text);
    let out = dir.path().join("sep.jsonl");
    let res = hgibbs(&["run", &cfg, "--output", out.to_str().unwrap()], &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Vec<serde_json::Value> = fs::read_to_string(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let find = |kind: &str, label: &str| rows.iter().find(|r| r["kind"] == kind && r["label"] == label).cloned();
    for label in ["p_E", "p_A_all", "p_F_all"] {
        let row = find("estimate", label).unwrap_or_else(|| panic!("{label} missing"));
        assert!(row["value"].as_f64().unwrap() > 0.0);
    }
    assert!(find("value", "ess").unwrap()["value"].as_f64().unwrap() >= 100.0);
    assert_eq!(find("meta", "version").unwrap()["text"], env!("CARGO_PKG_VERSION"));
    assert_eq!(find("meta", "seed").unwrap()["seed"], 1);
    let timing: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sep.jsonl.timing.json")).unwrap()).unwrap();
    assert!(timing["wall_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.cfg", SMALL_ORDERING);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        assert!(hgibbs(&["run", &cfg, "--threads", "1", "--output", p.to_str().unwrap()], &[]).status.code().unwrap() <= 1);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // More threads change only the meta rows.
    let c = dir.path().join("c.jsonl");
    hgibbs(&["run", &cfg, "--threads", "4", "--output", c.to_str().unwrap()], &[]);
    let body = |p: &Path| fs::read_to_string(p).unwrap().lines().filter(|l| !l.contains("\"kind\":\"meta\"")).map(String::from).collect::<Vec<_>>();
    assert_eq!(body(&a), body(&c));
}

#[test]
fn csv_and_json_lines_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.cfg", SMALL_ORDERING);
    let j = dir.path().join("r.jsonl");
    let cfg_csv = write(dir.path(), "c.cfg", &format!("{SMALL_ORDERING}output_format = csv\n"));
    let c = dir.path().join("r.csv");
    hgibbs(&["run", &cfg, "--output", j.to_str().unwrap()], &[]);
    hgibbs(&["run", &cfg_csv, "--output", c.to_str().unwrap()], &[]);

    let json: Vec<serde_json::Value> = fs::read_to_string(&j).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let mut rd = csv::Reader::from_path(&c).unwrap();
    let header = rd.headers().unwrap().clone();
    let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(json.len(), recs.len());
    let mut estimates = 0;
    for (row, rec) in json.iter().zip(&recs) {
        for (i, col) in header.iter().enumerate() {
            let cell = &rec[i];
            match &row[col] {
                serde_json::Value::Null => assert_eq!(cell, "", "{col}"),
                serde_json::Value::String(s) => assert_eq!(cell, s, "{col}"),
                serde_json::Value::Number(n) if n.is_f64() => assert_eq!(cell.parse::<f64>().unwrap(), n.as_f64().unwrap(), "{col}"),
                v => assert_eq!(cell, v.to_string(), "{col}"),
            }
        }
        estimates += (row["kind"] == "estimate") as usize;
    }
    assert_eq!(estimates, 2);
}

#[test]
fn output_dir_from_environment_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.cfg", SMALL_ORDERING);
    let outdir = dir.path().join("reports");
    let res = hgibbs(&["run", &cfg, "--seed", "99"], &[(hgibbs_cli::OUTPUT_DIR_ENV, &outdir)]);
    assert!(res.status.code().unwrap() <= 1);
    let text = fs::read_to_string(outdir.join("ordering_seed99.jsonl")).unwrap();
    assert!(text.contains("\"label\":\"seed\",\"seed\":99"));
}

#[test]
fn bad_configs_exit_2_with_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "experiment = separation\nk = 2\nL = 1.0\nt = 100\nM = 0.5\nn_samples = 1000\n");
    let res = hgibbs(&["run", &cfg], &[]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("seed required"), "{err}");
    assert!(err.contains("M >= sqrt(L)"), "{err}");

    let cfg = write(dir.path(), "unknown.cfg", "experiment = nope\nseed = 1\n");
    assert_eq!(hgibbs(&["run", &cfg], &[]).status.code(), Some(2));
    assert_eq!(hgibbs(&["run", "/nonexistent/config"], &[]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_1() {
    // Wide threshold: near-coincident curves grow likelier as the repulsion
    // of positive gaps fades with t, so the monotonicity check fails.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.cfg", "experiment = ordering\nseed = 5\nk = 1\nt_list = 1, 1000\nrho = 1.2\nn_chains = 4000\n");
    let out = dir.path().join("o.jsonl");
    let res = hgibbs(&["run", &cfg, "--output", out.to_str().unwrap()], &[]);
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(fs::read_to_string(out).unwrap().contains("\"passed\":false"));
}
