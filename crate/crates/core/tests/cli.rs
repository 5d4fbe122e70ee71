use std::path::Path;
use std::process::{Command, Output};

fn sfpca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfpca")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    sfpca(args).status.code().unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["simulate", "--scenario", "3"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["fit", "--input", &p(dir.path(), "missing.csv")]), 2);
    assert_eq!(code(&["bench", "--methods", "svd,nope"]), 2);
    assert_eq!(code(&["fit", "--input", "x.csv", "--penalty-order", "3"]), 2);
}

#[test]
fn simulate_fit_deflate_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&["simulate", "--scenario", "2", "--seed", "3", "--out", &p(d, "sim")]), 0);
    for f in ["x.csv", "u_star.csv", "v_star.csv", "d_star.csv", "meta.json"] {
        assert!(d.join("sim").join(f).exists(), "{f}");
    }
    let x = p(d, "sim/x.csv");

    // an explicit deflation only makes sense for the rank-one pipeline
    assert_eq!(code(&["fit", "--input", &x, "--method", "madmm", "--deflation", "schur"]), 2);
    assert_eq!(code(&["fit", "--input", &x, "--method", "rank1", "--rank", "2"]), 2);

    let fit = [
        "fit", "--input", &x, "--method", "rank1", "--deflation", "schur", "--rank", "3",
        "--lambda-u", "1", "--lambda-v", "1", "--alpha-u", "3", "--alpha-v", "3", "--out",
    ];
    let mut args = fit.to_vec();
    let out = p(d, "fit");
    args.push(&out);
    assert_eq!(code(&args), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("fit/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["converged"], true);

    let out = sfpca(&[
        "deflate", "--input", &x, "--u", &p(d, "fit/u_hat.csv"), "--v", &p(d, "fit/v_hat.csv"),
        "--scheme", "schur", "--sequential", "--out", &p(d, "defl"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("SD"));
    assert!(d.join("defl/orthogonality.json").exists());
}

#[test]
fn non_convergence_exits_3_and_singular_pivot_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&["simulate", "--scenario", "1", "--seed", "1", "--out", &p(d, "sim")]), 0);
    let x = p(d, "sim/x.csv");
    let rc = code(&[
        "fit", "--input", &x, "--method", "amanpg", "--rank", "3", "--lambda-u", "1", "--lambda-v", "1",
        "--max-outer", "1", "--out", &p(d, "fit"),
    ]);
    assert_eq!(rc, 3);
    assert!(d.join("fit/u_hat.csv").exists());

    std::fs::write(d.join("x.csv"), "1,0\n0,0\n").unwrap();
    std::fs::write(d.join("e2.csv"), "0\n1\n").unwrap();
    let rc = code(&[
        "deflate", "--input", &p(d, "x.csv"), "--u", &p(d, "e2.csv"), "--v", &p(d, "e2.csv"), "--out", &p(d, "o"),
    ]);
    assert_eq!(rc, 4);
}
