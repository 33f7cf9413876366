use std::process::{Command, Output};

use serde_json::Value;

fn charpoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charpoly"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

/// Data lines of a CSV report (config comment dropped).
fn csv_lines(out: &Output) -> Vec<String> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn ratio_at_coincidence_is_one() {
    let out = charpoly(&["corr", "--kind", "f2", "--n", "10", "--eps", "0.1+0.5i", "--mu", "0.1+0.5i"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["value_log_mag"].as_f64().unwrap().abs() < 1e-8);
    assert!((v["value_phase"]["re"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(v["kind"], "f2");
    assert_eq!(v["config"]["n"], 10);
}

#[test]
fn identity_suite_passes() {
    let out = charpoly(&["identities", "--suite", "all", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["all_passed"], true);
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.len() > 30);
    assert!(rows.iter().all(|r| r["passed"] == true));
}

#[test]
fn scaling_error_decreases() {
    let out = charpoly(&["scaling", "--kind", "f2", "--x", "0", "--n-list", "20,40,80"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = csv_lines(&out);
    assert_eq!(lines[0], "N,abs_err,rel_err");
    let rel: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(rel.len(), 3);
    assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
}

#[test]
fn unmet_order_is_a_breach() {
    let out = charpoly(&["scaling", "--kind", "f2", "--n-list", "20,40", "--min-order", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ortho_dump_matches_hermite() {
    let out = charpoly(&["ortho", "--n", "4", "--k-max", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = csv_lines(&out);
    assert_eq!(lines[0], "k,a,b,log_c2");
    for (k, l) in lines[1..].iter().enumerate() {
        let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(f[0] as usize, k);
        assert!(f[1].abs() < 1e-12);
        assert!((f[2] - k as f64 / 4.0).abs() < 1e-11);
    }
}

#[test]
fn cauchy_and_kernel_csv() {
    let out = charpoly(&["cauchy", "--k", "2", "--eps=-0.2,0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_lines(&out)[0], "log_mag,phase_re,phase_im");
    let out = charpoly(&["kernel", "--kind", "s1", "--args", "0.5,0"]);
    let row = &csv_lines(&out)[1];
    let re: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert!((re - 2.0 / std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn mc_report_fields() {
    let out = charpoly(&["mc", "--n", "4", "--samples", "4000", "--corr", "f2;eps=0.1+0.5i;mu=0.3+0.5i"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for key in ["mean_re", "mean_im", "stderr", "n", "seed", "acceptance"] {
        assert!(!v[key].is_null(), "{key}");
    }
    let z = (v["mean_re"].as_f64().unwrap() - v["exact_re"].as_f64().unwrap()).abs();
    assert!(z < 5.0 * v["stderr"].as_f64().unwrap());
}

#[test]
fn equilibrium_columns() {
    let out = charpoly(&["equilibrium", "--m", "1", "--grid", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = csv_lines(&out);
    assert_eq!(lines[0], "x,psi,alpha,residual");
    assert_eq!(lines.len(), 8);
    for l in &lines[1..] {
        let res: f64 = l.split(',').nth(3).unwrap().parse().unwrap();
        assert!(res < 1e-6);
    }
}

#[test]
fn reports_are_reproducible() {
    let args = ["mc", "--n", "3", "--samples", "2000", "--seed", "9", "--corr", "f1;lambda=0.2;mu=-0.1", "--threads", "2"];
    let a = charpoly(&args);
    let b = charpoly(&args[..args.len() - 2]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(charpoly(&["corr", "--kind", "f9"]).status.code(), Some(64));
    assert_eq!(charpoly(&["corr", "--kind", "f2", "--eps", "0.1+0.5i", "--mu", "1+"]).status.code(), Some(64));
    // real denominator argument
    assert_eq!(charpoly(&["corr", "--kind", "f2", "--eps", "0.1", "--mu", "0.3"]).status.code(), Some(1));
    assert_eq!(charpoly(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_and_out_flags() {
    let dir = std::env::temp_dir().join(format!("charpoly-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("o.json");
    let out = charpoly(&["ortho", "--n", "3", "--k-max", "3", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["subcommand"], "ortho");
    std::fs::remove_dir_all(dir).ok();
}
