use std::f64::consts::PI;
use std::process::Command;

fn ptwell(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ptwell")).args(args).output().unwrap()
}

#[test]
fn spectrum_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("roots.csv");
    let out = ptwell(&[
        "spectrum",
        "--L",
        "1",
        "--ell",
        "0.5",
        "--g",
        "0",
        "--rmax",
        "10",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["index", "R", "sigma", "tau", "energy", "residual", "stability"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    for (i, row) in rows.iter().enumerate() {
        let n = (i + 1) as f64;
        assert_eq!(row[0].parse::<usize>().unwrap(), i + 1);
        assert!((row[4].parse::<f64>().unwrap() - n * n * PI * PI / 4.0).abs() < 1e-10 * n * n);
        // at least 15 significant digits
        let mantissa = row[1].split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 15, "{}", &row[1]);
    }
}

#[test]
fn ep_json_example() {
    let out = ptwell(&["ep", "--lambda", "1e-6", "--free", "Z", "--hint", "2.2", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let z = v["exceptional_point"]["z"].as_f64().unwrap();
    assert!((z - 2.24).abs() < 0.02);
    assert_eq!(v["header"]["options"]["ep"]["max_iterations"], 100);
    assert_eq!(v["header"]["tool"], "ptwell");
}

#[test]
fn nodal_grid_example() {
    let out = ptwell(&["nodal-grid", "--lambda", "0.275", "--sigma", "0:6", "--tau", "3:7", "--clip", "0.05"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sigma,tau,D");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 201 * 201);
    let kept = rows.iter().filter(|r| !r.ends_with(",null")).count();
    assert!(kept > 0 && kept < rows.len());
}

#[test]
fn sweep_and_classify_outputs() {
    let out = ptwell(&[
        "sweep", "--lambda", "1e-6", "--Z", "0", "--param", "Z", "--from", "0", "--to", "3", "--steps", "13", "--rmax",
        "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("param,track_id,R,status\n"));
    assert!(text.lines().skip(1).any(|l| l.ends_with(",merged")));

    let out = ptwell(&["classify", "--lambda", "20", "--Z", "0", "--rmax", "0.6", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["header"]["options"]["z_cap"], 50.0);
    assert!(v["roots"].as_array().unwrap().iter().all(|r| r["stability"] == "robust"));
}

#[test]
fn shallow_and_oracle_outputs() {
    let out = ptwell(&["shallow", "--T", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,omega,eta,k,energy,R,alpha,p,q,G_plus,G_minus\n"));
    assert_eq!(text.lines().count(), 14);

    let out = ptwell(&["compare", "--lambda", "1", "--Z", "0.5", "--scale", "0.5", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["comparison"].as_array().unwrap();
    assert!(rows.len() >= 4);
    assert!(rows.iter().all(|r| r["relative_error"].as_f64().unwrap() < 1e-3));
}

#[test]
fn byte_identical_reruns() {
    let args = ["spectrum", "--lambda", "0.7", "--Z", "1.3", "--format", "json"];
    assert_eq!(ptwell(&args).stdout, ptwell(&args).stdout);
}

#[test]
fn exit_codes() {
    let out = ptwell(&["spectrum", "--L", "1", "--ell", "0.5", "--g", "1", "--Z", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = ptwell(&["spectrum", "--lambda", "-1", "--Z", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = ptwell(&["ep", "--lambda", "1", "--Z", "0", "--free", "Z", "--hint", "0", "--r-hint", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = ptwell(&["spectrum", "--lambda", "1", "--Z", "0", "--rmax", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
}
