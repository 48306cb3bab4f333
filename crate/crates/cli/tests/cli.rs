use std::path::Path;
use std::process::{Command, Output};

use clilm::io;

fn ilm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilm")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_toy(dir: &Path) {
    let (pop, rec) = clilm::toy::toy();
    io::write_population(&dir.join("pop.csv"), &pop).unwrap();
    io::write_record(&dir.join("epi.csv"), &rec, &pop).unwrap();
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    write_toy(d.path());
    assert_eq!(code(&ilm(d.path(), &["simulate", "--beta", "2"])), 2);
    assert_eq!(code(&ilm(d.path(), &["frobnicate"])), 2);
    assert_eq!(code(&ilm(d.path(), &["--jobs", "0", "simulate", "--alpha", "1", "--beta", "2"])), 2);
    let irls = ilm(d.path(), &["fit", "--model", "ilm", "--method", "irls", "--population", "pop.csv", "--epidemic", "epi.csv"]);
    assert_eq!(code(&irls), 2);
    assert_eq!(code(&ilm(d.path(), &["simulate", "--alpha", "1", "--beta", "2", "--n", "1"])), 1);
    let missing = ilm(d.path(), &["convert", "--population", "nope.csv", "--epidemic", "epi.csv", "--beta0", "2"]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));
    assert_eq!(code(&ilm(d.path(), &["experiment", "--set", "bogus=1"])), 2);
}

#[test]
fn toy_conversion_and_singleton_tune() {
    let d = tempfile::tempdir().unwrap();
    write_toy(d.path());
    let o = ilm(d.path(), &["--out", "t.csv", "convert", "--population", "pop.csv", "--epidemic", "epi.csv", "--beta0", "2", "--transform", "identity"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = io::read_table(&d.path().join("t.csv")).unwrap();
    assert_eq!(table.len(), 6);
    assert!(stdout(&o).starts_with("6 rows"));

    let o = ilm(d.path(), &["tune", "--population", "pop.csv", "--epidemic", "epi.csv", "--grid", "2.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(io::read_tune(&d.path().join("tune.csv")).unwrap().chosen_beta0, 2.5);
}

#[test]
fn simulate_fit_ppc_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let run = |args: &[&str]| {
        let o = ilm(p, args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["--seed", "5", "--out", "data", "simulate", "--alpha", "0.7", "--beta", "4", "--n", "150", "--side", "6", "--t-end", "12"]);
    let pop = io::read_population(&p.join("data/population.csv")).unwrap();
    let rec = io::read_record(&p.join("data/epidemic.csv"), &pop).unwrap();
    assert_eq!(pop.len(), 150);
    let data = ["--population", "data/population.csv", "--epidemic", "data/epidemic.csv"];

    let args = |extra: &[&'static str]| -> Vec<&'static str> { [&data[..], extra].concat() };
    run(&[&["--out", "tune.csv", "tune"][..], &args(&[])].concat());
    let beta0 = io::read_tune(&p.join("tune.csv")).unwrap().chosen_beta0.to_string();

    run(&[&["--out", "est.csv", "fit", "--model", "clilm", "--method", "irls", "--beta0"][..], &[beta0.as_str()], &args(&[])].concat());
    let est = io::read_estimate(&p.join("est.csv")).unwrap();
    assert!(est.converged && est.std_errors.iter().all(|s| s.is_finite()));

    let mcmc = ["--iters", "3000", "--burn-in", "500", "--thin", "5"];
    run(&[&["--out", "post.csv", "fit", "--model", "ilm"][..], &args(&mcmc)].concat());
    let post = io::read_posterior(&p.join("post.csv")).unwrap();
    assert_eq!(post.len(), 500);

    run(&[&["--out", "ppc", "ppc", "--model", "ilm", "--posterior", "post.csv", "--replicates", "40"][..], &args(&[])].concat());
    let bundle = io::read_ppc_bundle(&p.join("ppc")).unwrap();
    assert_eq!(bundle.observed.len(), rec.t_max() as usize);
    assert_eq!(bundle.curves.len(), 40);

    // Same seed, same bytes.
    run(&[&["--out", "post2.csv", "fit", "--model", "ilm"][..], &args(&mcmc)].concat());
    assert_eq!(std::fs::read(p.join("post.csv")).unwrap(), std::fs::read(p.join("post2.csv")).unwrap());
}

#[test]
fn experiment_config_overrides() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("exp.txt"), "scenarios = 0.7:4\nframeworks = si\nfmd = false\nstage1 = 2\nstage2 = 1\niters = 600\nburn_in = 100\nthin = 1\nreplicates = 10\nn = 150\nside = 6\n").unwrap();
    let o = ilm(d.path(), &["--out", "rep", "experiment", "--config", "exp.txt", "--set", "stage1=3", "--set", "grid=3.5,4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = std::fs::read_to_string(d.path().join("rep/config.txt")).unwrap();
    assert!(cfg.contains("stage1 = 3"), "{cfg}");
    assert!(cfg.contains("n = 150"));
    let sel = std::fs::read_to_string(d.path().join("rep/stage1_selection.csv")).unwrap();
    let total: usize = sel.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 3);
}
