use std::path::Path;
use std::process::{Command, Output};

use spectral_series::data_io::Table;
use spectral_series::likelihood::ThetaGrid;
use spectral_series::persist::load_model;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-series"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert_eq!(
        code(&o),
        0,
        "{args:?}\n{}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(
        d,
        &[
            "generate",
            "--simulator",
            "spiral",
            "--n",
            "10",
            "--output",
            "a.csv",
            "--seed",
            "4",
        ],
    );
    assert!(out.contains("10 rows x 3 columns"));
    ok(
        d,
        &[
            "generate",
            "--simulator",
            "spiral",
            "--n",
            "10",
            "--output",
            "b.csv",
            "--seed",
            "4",
        ],
    );
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    let t = Table::read(&a[..]).unwrap();
    assert_eq!(t.headers, ["theta_0", "x_0", "x_1"]);
    assert_eq!(t.rows.len(), 10);

    ok(
        d,
        &[
            "generate",
            "--simulator",
            "edges",
            "--n",
            "3",
            "--output",
            "e.csv",
        ],
    );
    let e = Table::read_path(&d.join("e.csv")).unwrap();
    assert_eq!(e.rows.len(), 3);
    assert_eq!(e.headers.len(), 2 + 400);

    ok(
        d,
        &[
            "generate",
            "--simulator",
            "gaussian-shift",
            "--theta",
            "0.5",
            "--dim",
            "3",
            "--n",
            "4",
            "--output",
            "g.csv",
        ],
    );
    let g = Table::read_path(&d.join("g.csv")).unwrap();
    assert_eq!(g.headers, ["theta_0", "x_0", "x_1", "x_2"]);
    assert!(g.rows.iter().all(|r| r[0] == 0.5));

    assert_eq!(
        code(&run(d, &["generate", "--simulator", "torus", "--n", "3"])),
        2
    );
    assert_eq!(code(&run(d, &["generate", "--simulator", "spiral"])), 2);
}

#[test]
fn fit_ratio_fixture_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(
        d,
        &[
            "fit-ratio",
            "--mu",
            "0.5",
            "--n",
            "1000",
            "--out-dir",
            "run",
        ],
    );
    assert!(out.contains("test loss"));
    let run_dir = d.join("run");
    let s = summary(&run_dir.join("ratio_summary.json"));
    assert!(s["test_loss"].as_f64().unwrap() < 0.0);
    assert!(load_model(&run_dir.join("ratio_model.json"))
        .unwrap()
        .ratio()
        .is_some());
    let report = Table::read_path(&run_dir.join("ratio_loss.csv")).unwrap();
    assert_eq!(report.headers, ["eps", "j", "loss"]);

    ok(
        d,
        &[
            "fit-ratio",
            "--mu",
            "0.5",
            "--n",
            "300",
            "--eps-grid",
            "0.5",
            "--j-max",
            "1",
            "--out-dir",
            "single",
        ],
    );
    let single = Table::read_path(&d.join("single/ratio_loss.csv")).unwrap();
    assert_eq!(single.rows, vec![vec![0.5, 1.0, single.rows[0][2]]]);
}

#[test]
fn fit_ratio_from_files_with_config_and_standardization() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate",
            "--simulator",
            "gaussian-shift",
            "--theta",
            "0.5",
            "--dim",
            "2",
            "--n",
            "400",
            "--output",
            "f.csv",
            "--seed",
            "1",
        ],
    );
    ok(
        d,
        &[
            "generate",
            "--simulator",
            "gaussian-shift",
            "--theta",
            "0",
            "--dim",
            "2",
            "--n",
            "400",
            "--output",
            "g.csv",
            "--seed",
            "2",
        ],
    );
    std::fs::write(
        d.join("run.toml"),
        "j_max = 4\nsplits = [0.5, 0.25, 0.25]\nstandardize = true\n",
    )
    .unwrap();
    let args = [
        "--config",
        "run.toml",
        "fit-ratio",
        "--f",
        "f.csv",
        "--g",
        "g.csv",
        "--out-dir",
        "a",
    ];
    ok(d, &args);
    let model = load_model(&d.join("a/ratio_model.json")).unwrap();
    assert!(model.standardizer.is_some());
    assert!(model.ratio().unwrap().j_kept() <= 4);
    let mut again = args;
    again[8] = "b";
    ok(d, &again);
    let (a, b) = (
        load_model(&d.join("a/ratio_model.json")).unwrap(),
        load_model(&d.join("b/ratio_model.json")).unwrap(),
    );
    assert_eq!(a.payload, b.payload);
    assert_ne!(a.provenance.config_hash, b.provenance.config_hash);
    let sa = summary(&d.join("a/ratio_summary.json"));
    assert_eq!(
        sa["config_hash"],
        serde_json::json!(a.provenance.config_hash)
    );
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "fit-ratio",
            "--f",
            "f.csv",
            "--g",
            "g.csv",
            "--out-dir",
            "c",
            "--j-max",
            "2",
        ],
    );
    assert!(
        load_model(&d.join("c/ratio_model.json"))
            .unwrap()
            .ratio()
            .unwrap()
            .j_kept()
            <= 2
    );
}

#[test]
fn malformed_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("f.csv"), "x_0,x_1\n1,2\n3,4\n5,oops\n").unwrap();
    std::fs::write(d.join("g.csv"), "x_0,x_1\n1,2\n").unwrap();
    let o = run(d, &["fit-ratio", "--f", "f.csv", "--g", "g.csv"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 4") && err.contains("x_1"), "{err}");

    std::fs::write(d.join("h.csv"), "x_0,x_2\n1,2\n").unwrap();
    assert_eq!(
        code(&run(d, &["fit-ratio", "--f", "g.csv", "--g", "h.csv"])),
        3
    );
    assert_eq!(
        code(&run(
            d,
            &["fit-ratio", "--f", "missing.csv", "--g", "g.csv"]
        )),
        3
    );
    assert_eq!(code(&run(d, &["fit-ratio", "--f", "g.csv"])), 2);
    assert_eq!(
        code(&run(
            d,
            &[
                "fit-ratio",
                "--mu",
                "0.5",
                "--n",
                "100",
                "--splits",
                "0.5,0.5"
            ]
        )),
        2
    );
    assert_eq!(code(&run(d, &["fit-likelihood", "--joint", "g.csv"])), 3);
    std::fs::write(d.join("bad.toml"), "j_maxx = 3\n").unwrap();
    assert_eq!(
        code(&run(
            d,
            &[
                "--config",
                "bad.toml",
                "fit-ratio",
                "--mu",
                "0",
                "--n",
                "50"
            ]
        )),
        2
    );
    assert_eq!(code(&run(d, &["no-such-command"])), 2);
}

#[test]
fn fit_likelihood_singleton_grid_and_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate",
            "--simulator",
            "spiral",
            "--n",
            "400",
            "--output",
            "joint.csv",
        ],
    );
    let args = [
        "fit-likelihood",
        "--joint",
        "joint.csv",
        "--eps-grid",
        "1.0",
        "--theta-eps-grid",
        "0.5",
        "--i-max",
        "1",
        "--j-max",
        "1",
        "--b-permutations",
        "3",
        "--out-dir",
        "one",
    ];
    ok(d, &args);
    let report = Table::read_path(&d.join("one/likelihood_loss.csv")).unwrap();
    assert_eq!(report.headers, ["eps_x", "eps_theta", "i", "j", "loss"]);
    assert_eq!(report.rows.len(), 1);
    assert_eq!(&report.rows[0][..4], &[1.0, 0.5, 1.0, 1.0]);
    let m = load_model(&d.join("one/likelihood_model.json")).unwrap();
    let (_, param_box) = m.likelihood().unwrap();
    let theta = Table::read_path(&d.join("joint.csv")).unwrap();
    let lo = theta
        .rows
        .iter()
        .map(|r| r[0])
        .fold(f64::INFINITY, f64::min);
    assert_eq!(param_box.0[0].0, lo);
}

#[test]
fn klein_fit_then_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(
        d,
        &[
            "fit-likelihood",
            "--simulator",
            "klein",
            "--n",
            "2000",
            "--out-dir",
            "k",
            "--seed",
            "2",
        ],
    );
    assert!(out.contains("test loss"));
    let s = summary(&d.join("k/likelihood_summary.json"));
    assert!(s["test_loss"].as_f64().unwrap() < 0.0, "{s}");
    assert!(s["validation_loss"].as_f64().unwrap() < 0.0);

    ok(
        d,
        &[
            "generate",
            "--simulator",
            "klein",
            "--theta",
            "1.0,2.0",
            "--n",
            "10",
            "--output",
            "obs.csv",
        ],
    );
    ok(
        d,
        &[
            "posterior",
            "--model",
            "k/likelihood_model.json",
            "--observations",
            "obs.csv",
            "--grid-resolution",
            "20",
            "--out-dir",
            "k",
        ],
    );
    let post = Table::read_path(&d.join("k/posterior.csv")).unwrap();
    assert_eq!(post.headers, ["theta_0", "theta_1", "density"]);
    assert_eq!(post.rows.len(), 400);
    let model = load_model(&d.join("k/likelihood_model.json")).unwrap();
    let grid = ThetaGrid::new(model.likelihood().unwrap().1, 20).unwrap();
    let mass: f64 = post.rows.iter().map(|r| r[2]).sum::<f64>() * grid.cell_volume();
    assert!((mass - 1.0).abs() <= 1e-9);

    ok(
        d,
        &[
            "generate",
            "--simulator",
            "spiral",
            "--theta",
            "3",
            "--n",
            "5",
            "--output",
            "wrong.csv",
        ],
    );
    let o = run(
        d,
        &[
            "posterior",
            "--model",
            "k/likelihood_model.json",
            "--observations",
            "wrong.csv",
        ],
    );
    assert_eq!(code(&o), 3);
    std::fs::write(d.join("empty.csv"), "x_0,x_1,x_2,x_3\n").unwrap();
    assert_eq!(
        code(&run(
            d,
            &[
                "posterior",
                "--model",
                "k/likelihood_model.json",
                "--observations",
                "empty.csv"
            ]
        )),
        3
    );
}

#[test]
fn spiral_posterior_mean_near_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "fit-likelihood",
            "--simulator",
            "spiral",
            "--n",
            "2000",
            "--out-dir",
            "s",
            "--seed",
            "5",
        ],
    );
    ok(
        d,
        &[
            "generate",
            "--simulator",
            "spiral",
            "--theta",
            "7",
            "--n",
            "25",
            "--output",
            "obs.csv",
            "--seed",
            "6",
        ],
    );
    ok(
        d,
        &[
            "posterior",
            "--model",
            "s/likelihood_model.json",
            "--observations",
            "obs.csv",
            "--out-dir",
            "s",
        ],
    );
    let post = Table::read_path(&d.join("s/posterior.csv")).unwrap();
    let model = load_model(&d.join("s/likelihood_model.json")).unwrap();
    let grid = ThetaGrid::new(model.likelihood().unwrap().1, 50).unwrap();
    let cv = grid.cell_volume();
    let mass: f64 = post.rows.iter().map(|r| r[1]).sum::<f64>() * cv;
    assert!((mass - 1.0).abs() <= 1e-9);
    let mean: f64 = post.rows.iter().map(|r| r[0] * r[1] * cv).sum();
    assert!((mean - 7.0).abs() <= 1.0, "posterior mean {mean}");
}

#[test]
fn study_outputs_and_monotone_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "study",
            "--benchmark",
            "gaussian-shift",
            "--sizes",
            "200",
            "--seeds",
            "2",
            "--out-dir",
            "one",
        ],
    );
    let study = Table::read_path(&d.join("one/study.csv")).unwrap();
    assert_eq!(study.headers, ["size", "seed", "mise"]);
    assert_eq!(study.rows.len(), 2);
    let summary = Table::read_path(&d.join("one/summary.csv")).unwrap();
    assert_eq!(summary.headers, ["size", "mean", "se"]);
    assert_eq!(summary.rows.len(), 1);

    let o = run(
        d,
        &[
            "study",
            "--benchmark",
            "gaussian-shift",
            "--sizes",
            "400,100",
            "--seeds",
            "3",
            "--assert-monotone",
        ],
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(code(&run(d, &["study", "--benchmark", "nonsense"])), 2);
}
