//! End-to-end checks of the `georeweight` binary: exit codes, CSV
//! output, config overrides and the partition dump.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_georeweight"))
}

#[test]
fn convergence_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let status = bin()
        .args([
            "convergence",
            "--n",
            "16,64",
            "--trials",
            "20",
            "--seed",
            "1",
            "--estimators",
            "mc,gr",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,estimator,mode,N,S,batch_size,n_batches,trials,mean,mse,variance,bias,se,seed"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let status = bin()
            .args(["orderstats", "--n", "5", "--trials", "500", "--seed", "9", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"convergence","n":[16],"trials":10,"seed":3,"estimators":["mc"]}"#,
    )
    .unwrap();
    let out = dir.path().join("rows.csv");
    let status = bin()
        .args(["convergence", "--config"])
        .arg(&cfg)
        .args(["--estimators", "mc,con", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3, "flag override should yield two estimators");
}

#[test]
fn bad_experiment_exits_1() {
    let output = bin().arg("no_such_experiment").output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn bad_strata_exits_1() {
    let output = bin()
        .args(["strata_sweep", "--n", "100", "--strata", "3", "--trials", "2"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_image_exits_2() {
    let output = bin()
        .args([
            "convergence",
            "--function",
            "image:/no/such/file.pgm",
            "--trials",
            "2",
            "--n",
            "8",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_2() {
    let output = bin()
        .args([
            "convergence",
            "--n",
            "8",
            "--trials",
            "2",
            "--estimators",
            "mc",
            "--out",
            "/no/such/dir/rows.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn partition_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let dump = dir.path().join("partition.csv");
    let status = bin()
        .args([
            "convergence",
            "--function",
            "product2d",
            "--n",
            "8",
            "--trials",
            "5",
            "--estimators",
            "mc",
            "--seed",
            "4",
            "--out",
        ])
        .arg(&out)
        .arg("--dump-partition")
        .arg(&dump)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "site_index,volume,boundary_order,vertex_list");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    // volumes tile the unit square
    let total: f64 = rows
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(rows[0].contains(':'), "2D dump should carry x:y vertices");
}

#[test]
fn image_integrand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("g.pgm");
    std::fs::write(&img, "P2\n2 2\n255\n0 255\n255 0\n").unwrap();
    let output = bin()
        .arg("convergence")
        .arg("--function")
        .arg(format!("image:{}", img.display()))
        .args(["--n", "64", "--trials", "10", "--estimators", "mc,con"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
}
