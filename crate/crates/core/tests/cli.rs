use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gsrdp::accountant::BoundSummary;

fn gsrdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsrdp"))
        .args(args)
        .env_remove("GSRDP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_toy(dir: &Path) -> String {
    let path = dir.join("toy.csv");
    let mut s = String::from("age,income\n");
    for i in 0..60 {
        let a = (i * 37 % 60) as f64;
        let b = ((i * 11 + 7) % 60) as f64 * 1000.0;
        s += &format!("{a},{b}\n");
    }
    fs::write(&path, s).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn bound_json_round_trips() {
    let o = gsrdp(&[
        "bound", "--alpha", "4", "--n", "1000000", "--d", "6", "--sigma", "0.01", "--mode",
        "bounded", "--compose", "n", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: BoundSummary = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((s.epsilon_composed - 23.3577).abs() < 5e-3);
    assert_eq!(s.composed_over, 1_000_000);
    let again = serde_json::to_string_pretty(&s).unwrap();
    assert_eq!(again.trim(), stdout(&o).trim());
}

#[test]
fn bound_infeasible_exits_two() {
    let o = gsrdp(&[
        "bound", "--alpha", "4", "--n", "10000", "--d", "6", "--sigma", "0.01", "--mode",
        "bounded",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha < c^2/(2c-1)"));
}

#[test]
fn usage_errors_exit_one() {
    let o = gsrdp(&["convert", "--alpha", "4", "--eps", "1", "--delta", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = gsrdp(&["bound", "--alpha", "0.5", "--n", "10", "--d", "1", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = gsrdp(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = gsrdp(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn convert_prints_three_decimals() {
    let o = gsrdp(&["convert", "--alpha", "4", "--eps", "0.5764", "--delta", "1e-10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "8.252");
}

#[test]
fn curve_has_cutoff_footer() {
    let o = gsrdp(&[
        "curve", "--n", "10000,100000", "--d", "6", "--sigma", "0.01", "--alpha-min", "1.5",
        "--alpha-max", "20", "--steps", "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let footer: Vec<&str> = out.lines().filter(|l| l.ends_with(",cutoff")).collect();
    assert_eq!(footer.len(), 1, "{out}");
    assert!(footer[0].starts_with("10000,4.167"), "{out}");
    // 10^5 admits every order up to 20, so its curve is complete
    let n5 = out.lines().filter(|l| l.starts_with("100000,")).count();
    assert_eq!(n5, 50);
}

#[test]
fn curve_empty_range_is_condition_error() {
    let o = gsrdp(&[
        "curve", "--n", "10000", "--d", "6", "--sigma", "0.01", "--alpha-min", "5",
        "--alpha-max", "6", "--mode", "bounded",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tables_are_deterministic_and_complete() {
    let a = gsrdp(&["tables"]);
    let b = gsrdp(&["tables"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    for v in ["3535.1719", "62.5859", "5.8064", "266.7349", "23.3577", "2.3071"] {
        assert!(out.contains(v), "missing {v}\n{out}");
    }
    for v in ["7.341*", "16.209*", "1.777*", "7.879*", "13.482*"] {
        assert!(out.contains(v), "missing {v}\n{out}");
    }
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_toy(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = gsrdp(&[
            "generate", "--input", &input, "--output", out.to_str().unwrap(), "--count", "100",
            "--seed", "7", "--sigma", "0.2",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = run("a.csv");
    let b = run("b.csv");
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("age,income"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    assert!(rows
        .iter()
        .all(|r| (0.0..=59.0).contains(&r[0]) && (0.0..=59_000.0).contains(&r[1])));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.json")).unwrap()).unwrap();
    assert_eq!(report["n"], 60);
    assert_eq!(report["output_count"], 100);
    assert_eq!(report["seed"], 7);
    let g = report["guarantees"].as_array().unwrap();
    assert_eq!(g.len(), 2);
    assert_eq!(g[0]["mode"], "unbounded");
    assert_eq!(report["scaling"][1]["column"], "income");
}

#[test]
fn generate_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_toy(dir.path());
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_gsrdp"))
            .args([
                "generate", "--input", &input, "--output", out.to_str().unwrap(), "--count",
                "20", "--sigma", "0.2",
            ])
            .env("GSRDP_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success());
        fs::read_to_string(out).unwrap()
    };
    let explicit = dir.path().join("explicit.csv");
    let o = gsrdp(&[
        "generate", "--input", &input, "--output", explicit.to_str().unwrap(), "--count", "20",
        "--sigma", "0.2", "--seed", "11",
    ]);
    assert!(o.status.success());
    assert_eq!(run("env.csv", "11"), fs::read_to_string(explicit).unwrap());
    assert_ne!(run("env12.csv", "12"), run("env11.csv", "11"));
}

#[test]
fn generate_refuses_below_sigma_floor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("thin.csv");
    // Values in [-1, 1] with variance 0.009 along the second axis.
    let mut s = String::from("x,y\n");
    let b = 0.009f64.sqrt();
    for i in 0..100 {
        let x = if i % 2 == 0 { 0.9 } else { -0.9 };
        let y = if i % 4 < 2 { b } else { -b };
        s += &format!("{x},{y}\n");
    }
    fs::write(&path, s).unwrap();
    let out = dir.path().join("out.csv");
    let o = gsrdp(&[
        "generate", "--input", path.to_str().unwrap(), "--output", out.to_str().unwrap(),
        "--sigma", "0.01", "--scale", "none",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("D_sigma"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn generate_emits_preclip_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pm.csv");
    fs::write(&path, "v\n1\n-1\n1\n-1\n").unwrap();
    let out = dir.path().join("out.csv");
    let pre = dir.path().join("pre.csv");
    let o = gsrdp(&[
        "generate", "--input", path.to_str().unwrap(), "--output", out.to_str().unwrap(),
        "--sigma", "0.5", "--scale", "none", "--count", "500", "--seed", "3", "--emit-preclip",
        pre.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pre = fs::read_to_string(pre).unwrap();
    let post = fs::read_to_string(out).unwrap();
    let mut pre_lines = pre.lines();
    assert_eq!(pre_lines.next(), Some("v,v_clipped"));
    let mut flagged = 0;
    for (p, q) in pre_lines.zip(post.lines().skip(1)) {
        let (raw, flag) = p.split_once(',').unwrap();
        let raw: f64 = raw.parse().unwrap();
        let clipped: f64 = q.parse().unwrap();
        assert_eq!(flag == "1", raw.abs() > 1.0);
        if flag == "1" {
            flagged += 1;
            assert_eq!(clipped, raw.signum());
        } else {
            assert_eq!(clipped, raw);
        }
    }
    assert!(flagged > 100 && flagged < 250, "{flagged}");
}

#[test]
fn generate_missing_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = gsrdp(&[
        "generate", "--input", "/nonexistent/in.csv", "--output", out.to_str().unwrap(),
        "--sigma", "0.1",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_reports_nonnegative_margin() {
    let o = gsrdp(&[
        "verify", "--d", "1", "--sigma", "0.25", "--n", "200", "--alpha", "3", "--trials",
        "10000", "--seed", "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r["margin"].as_f64().unwrap() >= 0.0);
        assert_eq!(r["passed"], true);
    }
}
