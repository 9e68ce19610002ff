use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nmf2::io::{parse_matrix, read_matrix, to_csv};
use nmf2::DenseMatrix;

fn nmf2(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmf2")).args(args).current_dir(dir).output().expect("binary runs")
}

fn rank2_positive() -> DenseMatrix {
    let l = DenseMatrix::from_rows(&[[1.0, 0.2], [0.3, 1.0], [0.7, 0.7], [2.0, 0.1]]).unwrap();
    let r = DenseMatrix::from_rows(&[[1.0, 0.5], [0.1, 2.0], [0.4, 0.4]]).unwrap();
    l.matmul_t(&r)
}

#[test]
fn qdr_on_rank2_reproduces_input() {
    let dir = tempfile::tempdir().unwrap();
    let n = rank2_positive();
    fs::write(dir.path().join("n.csv"), to_csv(&n)).unwrap();
    let out = nmf2(&["qdr", "n.csv", "--out", "fac"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let l = read_matrix(&dir.path().join("fac.L.csv")).unwrap();
    let r = read_matrix(&dir.path().join("fac.R.csv")).unwrap();
    assert!(l.min_entry() >= 0.0 && r.min_entry() >= 0.0);
    assert!(l.matmul_t(&r).frobenius_distance(&n) <= 1e-10 * n.frobenius_norm());
}

#[test]
fn qdr_to_stdout_in_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("n.csv"), to_csv(&rank2_positive())).unwrap();
    let out = nmf2(&["qdr", "n.csv", "--format", "mtx"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let l_part = text.split("# R").next().unwrap().replace("# L\n", "");
    assert_eq!(parse_matrix(&l_part).unwrap().shape(), (4, 2));
}

#[test]
fn exact_with_explicit_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let n = rank2_positive();
    fs::write(dir.path().join("n.csv"), to_csv(&n)).unwrap();
    let out = nmf2(&["exact", "n.csv", "--out", "e"], dir.path());
    assert!(out.status.success());
    let l = read_matrix(&dir.path().join("e.L.csv")).unwrap();
    let r = read_matrix(&dir.path().join("e.R.csv")).unwrap();
    assert!(l.matmul_t(&r).frobenius_distance(&n) <= 1e-10 * n.frobenius_norm());

    // A point far outside the box is a numerical failure, not an input error.
    let out = nmf2(&["exact", "n.csv", "--t1", "-50", "--t2", "-50"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_rejects_full_rank() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("n.csv"), "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let out = nmf2(&["exact", "n.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn threeway_both_forms() {
    let dir = tempfile::tempdir().unwrap();
    let n = rank2_positive();
    fs::write(dir.path().join("n.csv"), to_csv(&n)).unwrap();
    let out = nmf2(&["threeway", "n.csv", "--min-defect", "--out", "t"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let l = read_matrix(&dir.path().join("t.L.csv")).unwrap();
    let m = read_matrix(&dir.path().join("t.M.csv")).unwrap();
    let r = read_matrix(&dir.path().join("t.R.csv")).unwrap();
    assert!(l.matmul(&m).matmul_t(&r).frobenius_distance(&n) <= 1e-10 * n.frobenius_norm());

    let l = DenseMatrix::from_rows(&[[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]).unwrap();
    let s = l.matmul_t(&l);
    fs::write(dir.path().join("s.csv"), to_csv(&s)).unwrap();
    let out = nmf2(&["threeway", "s.csv", "--symmetric", "--out", "u"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let l = read_matrix(&dir.path().join("u.L.csv")).unwrap();
    let m = read_matrix(&dir.path().join("u.M.csv")).unwrap();
    assert!(l.matmul(&m).matmul_t(&l).frobenius_distance(&s) <= 1e-10 * s.frobenius_norm());
}

#[test]
fn anls_every_init() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("n.csv"), "1,2,0.5\n0.1,3,1\n2,0.2,1\n1,1,1\n").unwrap();
    for init in ["qdr", "spa", "nndsvd", "random"] {
        let out = nmf2(&["anls", "n.csv", "--init", init, "--eps", "1e-6", "--max-iters", "500"], dir.path());
        assert!(out.status.success(), "{init}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("neg.csv"), "1,-2\n3,4\n").unwrap();
    fs::write(dir.path().join("bad.csv"), "1,x\n").unwrap();
    assert_eq!(nmf2(&["qdr", "neg.csv"], dir.path()).status.code(), Some(1));
    assert_eq!(nmf2(&["qdr", "bad.csv"], dir.path()).status.code(), Some(1));
    assert_eq!(nmf2(&["qdr", "missing.csv"], dir.path()).status.code(), Some(1));
    let usage = nmf2(&["anls"], dir.path());
    assert_eq!(usage.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("Usage"));
    assert_eq!(nmf2(&["bench", "--family", "int4", "--out", "x.csv"], dir.path()).status.code(), Some(1));
}

#[test]
fn bench_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["bench", "--family", "int4", "--count", "1000", "--seed", "7", "--out", out];
    assert!(nmf2(&args("a.csv"), dir.path()).status.success());
    assert!(nmf2(&args("b.csv"), dir.path()).status.success());
    let strip_time = |p: &str| -> Vec<String> {
        fs::read_to_string(dir.path().join(p))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let a = strip_time("a.csv");
    assert_eq!(a.len(), 1 + 4 * 1000);
    assert_eq!(a[0], "instance_id,method,init_objective,final_objective,delta,delta_init,iters");
    assert_eq!(a, strip_time("b.csv"));
    let agg = fs::read_to_string(dir.path().join("a.agg.csv")).unwrap();
    assert!(agg.starts_with("metric,qdr,spa,nndsvd,random\nmean time,"));
}

#[test]
fn bench_thread_count_does_not_change_records() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, out: &str| {
        let st = Command::new(env!("CARGO_BIN_EXE_nmf2"))
            .args(["bench", "--family", "lognormal", "--m", "20", "--n", "15", "--count", "6", "--seed", "3"])
            .args(["--out", out])
            .env("NMF2_THREADS", threads)
            .current_dir(dir.path())
            .status()
            .unwrap();
        assert!(st.success());
        fs::read_to_string(dir.path().join(out))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(run("1", "one.csv"), run("3", "three.csv"));
}

#[test]
fn bench_qdr_beats_random_init() {
    let dir = tempfile::tempdir().unwrap();
    let out = nmf2(
        &["bench", "--family", "boundary", "--m", "30", "--n", "30", "--count", "20", "--seed", "5", "--out", "b.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("b.agg.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let mean_init = rows.iter().find(|r| &r[0] == "mean acc init").unwrap();
    let qdr: f64 = mean_init[1].parse().unwrap();
    let random: f64 = mean_init[4].parse().unwrap();
    assert!(qdr < random, "qdr {qdr} random {random}");
}
