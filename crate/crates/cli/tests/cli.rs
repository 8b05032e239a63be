use std::path::Path;
use std::process::{Command, Output};

fn fredet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fredet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Rows of a CSV document as header-keyed maps.
fn rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| {
            header
                .iter()
                .cloned()
                .zip(rec.unwrap().iter().map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {}", row[key]))
}

#[test]
fn det_bernoulli_at_one() {
    let o = fredet(&[
        "det",
        "--kernel",
        "bernoulli",
        "--scheme",
        "ngl",
        "--n",
        "64",
        "--z",
        "1,0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    let exact = 2.0 * (1.0 - 1f64.cos());
    assert!((num(&r[0], "value_re") - exact).abs() < 5e-6);
    assert_eq!(r[0]["route"], "lu_trace");
}

#[test]
fn det_is_one_at_origin_for_every_route() {
    for kernel in ["green", "bernoulli", "sign", "abs_pow"] {
        let mut args = vec!["det", "--kernel", kernel, "--n", "12", "--z", "0,0", "--route", "all"];
        if kernel == "sign" {
            args.extend(["--scheme", "ncc"]);
        }
        let o = fredet(&args);
        assert!(o.status.success(), "{kernel}: {}", stderr(&o));
        for r in rows(&stdout(&o)) {
            assert_eq!(num(&r, "value_re"), 1.0, "{kernel} {}", r["route"]);
            assert_eq!(num(&r, "value_im"), 0.0);
        }
    }
}

#[test]
fn det_sign_grid_tracks_cosh() {
    let o = fredet(&[
        "det",
        "--kernel",
        "sign",
        "--scheme",
        "rect",
        "--zero-diag",
        "--n",
        "30",
        "--p",
        "2",
        "--grid",
        "-1,1,-0.5,0.5,5",
        "--ref",
        "sign",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 25);
    for row in &r {
        let scale = num(row, "ref_re").hypot(num(row, "ref_im"));
        assert!(num(row, "abs_err") < 0.15 * scale, "{row:?}");
        if num(row, "z_im") == 0.0 {
            assert!(num(row, "value_im").abs() < 1e-12);
        }
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = fredet(&[
            "det",
            "--kernel",
            "green",
            "--n-sweep",
            "8:32:geometric",
            "--grid",
            "0,10,-1,1,4",
            "--route",
            "all",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn converge_reports_slopes() {
    let o = fredet(&[
        "converge",
        "--kernel",
        "green",
        "--n-sweep",
        "10:320:geometric",
        "--z",
        "pi^2,0",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["command", "config", "slopes", "roots", "residuals"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let slope = v["slopes"]
        .as_object()
        .unwrap()
        .values()
        .next()
        .unwrap()
        .as_f64()
        .unwrap();
    assert!((-2.5..=-1.6).contains(&slope), "{slope}");
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn converge_without_reference_suggests_none() {
    let o = fredet(&[
        "converge",
        "--kernel",
        "abs_pow",
        "--n-sweep",
        "8:32:geometric",
        "--z",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--ref none"));

    let o = fredet(&[
        "converge",
        "--kernel",
        "abs_pow",
        "--n-sweep",
        "8:32:geometric",
        "--z",
        "0.1",
        "--ref",
        "none",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    assert!(!r[0].contains_key("abs_err"));
}

#[test]
fn eigs_green_and_bernoulli() {
    let o = fredet(&["eigs", "--kernel", "green", "--n", "128", "--region", "52.5,0,48"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 3);
    let pi2 = std::f64::consts::PI.powi(2);
    for (k, r) in roots.iter().enumerate() {
        let lambda = r["lambda"][0].as_f64().unwrap();
        let want = 1.0 / (((k + 1) * (k + 1)) as f64 * pi2);
        assert!((lambda - want).abs() < 5e-3 * want, "{lambda} vs {want}");
    }

    let o = fredet(&["eigs", "--kernel", "bernoulli", "--n", "128", "--region", "4*pi^2,0,10"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert_eq!(roots[0]["mult_estimate"], 2);
}

#[test]
fn eigs_sign_on_unit_disc() {
    let o = fredet(&[
        "eigs",
        "--kernel",
        "sign",
        "--scheme",
        "rect",
        "--zero-diag",
        "--n",
        "200",
        "--p",
        "2",
        "--region",
        "0,0,1",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2);
    for row in &r {
        assert!(num(row, "z_re").abs() < 1e-3);
        assert!((num(row, "z_im").abs() - std::f64::consts::FRAC_PI_4).abs() < 1e-2);
    }
}

#[test]
fn identity_passes_on_seeded_trials() {
    let o = fredet(&["identity", "--trials", "100", "--n", "6", "--seed", "42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in rows(&stdout(&o)) {
        assert!(num(&r, "max_residual") <= 1e-10, "{r:?}");
    }
    let o = fredet(&[
        "identity", "--trials", "20", "--n", "1", "--seed", "3", "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for id in ["det1_sq_vs_det2_pair", "det2_sq_vs_det3_pair", "det2_sq_vs_det4_pair"] {
        assert!(v["residuals"][format!("random/{id}")].as_f64().unwrap() <= 1e-15);
    }
}

#[test]
fn validation_errors_exit_one() {
    let cases: &[&[&str]] = &[
        &["det", "--kernel", "nope", "--z", "1"],
        &["det", "--kernel", "green", "--n", "1", "--z", "1"],
        &["det", "--kernel", "green", "--p", "0", "--z", "1"],
        &["det", "--kernel", "green"],
        &["det", "--kernel", "sign", "--scheme", "rect", "--p", "2", "--z", "1"],
        &["det", "--kernel", "green", "--scheme", "singular", "--z", "1"],
        &["det", "--kernel", "green", "--grid", "0,1,0,1"],
        &["det", "--kernel", "green", "--sign", "x", "--z", "1"],
        &["eigs", "--kernel", "green"],
        &["converge", "--kernel", "green", "--n", "8", "--z", "1"],
        &["identity", "--trials", "0"],
        &["example", "7"],
        &["bogus"],
    ];
    for args in cases {
        let o = fredet(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    let o = fredet(&["det", "--kernel", "sign", "--scheme", "rect", "--p", "2", "--z", "1"]);
    assert!(stderr(&o).contains("Hilbert"));
}

#[test]
fn numerical_failure_exits_two_and_names_stage() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("k.json");
    std::fs::write(&file, r#"{"expr": {"k": "1/(x-y)"}, "domain": [0, 1]}"#).unwrap();
    let o = fredet(&["det", "--kernel-file", file.to_str().unwrap(), "--n", "8", "--z", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("`assemble`"), "{}", stderr(&o));
}

#[test]
fn kernel_file_matches_registry() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("green.json");
    std::fs::write(
        &file,
        r#"{"expr": {"k1": "y*(1-x)", "k2": "x*(1-y)"}, "domain": [0, 1]}"#,
    )
    .unwrap();
    let a = fredet(&[
        "det",
        "--kernel-file",
        file.to_str().unwrap(),
        "--n",
        "16",
        "--z",
        "3,1",
    ]);
    let b = fredet(&["det", "--kernel", "green", "--n", "16", "--z", "3,1"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let (ra, rb) = (rows(&stdout(&a)), rows(&stdout(&b)));
    assert!((num(&ra[0], "value_re") - num(&rb[0], "value_re")).abs() < 1e-14);
    assert!((num(&ra[0], "value_im") - num(&rb[0], "value_im")).abs() < 1e-14);

    std::fs::write(&file, r#"{"expr": {"k": "x +"}, "domain": [0, 1]}"#).unwrap();
    let o = fredet(&["det", "--kernel-file", file.to_str().unwrap(), "--z", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    rows(&std::fs::read_to_string(path).unwrap())
}

#[test]
fn example_one_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex1");
    let o = fredet(&["example", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let conv = read_csv(&out.join("convergence.csv"));
    assert_eq!(conv.len(), 2 * 2 * 6);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in ["ngl@pi^2", "ngl@1"] {
        let s = summary["slopes"][key].as_f64().unwrap();
        assert!((-2.5..=-1.6).contains(&s), "{key}: {s}");
    }
    assert_eq!(read_csv(&out.join("eigenvalues.csv")).len(), 3);
}

#[test]
fn example_three_grid_decays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex3");
    let o = fredet(&["example", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let s = summary["slopes"]["grid_max"].as_f64().unwrap();
    assert!((-1.5..=-0.6).contains(&s), "{s}");
    let sq = summary["residuals"]["square_identity@0.5/n=200"].as_f64().unwrap();
    assert!(sq <= 5e-2);
    assert!(sq < summary["residuals"]["square_identity@0.5/n=100"].as_f64().unwrap());
    assert_eq!(read_csv(&out.join("grid.csv")).len(), 5 * 81);
}

#[test]
fn example_four_iterated_route_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex4");
    let o = fredet(&["example", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let conv = read_csv(&out.join("convergence.csv"));
    let errs: Vec<f64> = conv.iter().map(|r| num(r, "abs_err")).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert_eq!(read_csv(&out.join("eigenvalues.csv")).len(), 5);
    assert_eq!(read_csv(&out.join("identity_grid.csv")).len(), 12);
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = fredet(&["example", "1", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot write"));
}
