//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{normal_sample, shifted_joint, ConstRatio, ConstTensor};
use spectral_series::cli;
use spectral_series::data_io::Table;
use spectral_series::evaluation::{
    convergence_study, Benchmark, LikelihoodBenchmark, RatioBenchmark,
};
use spectral_series::kernels::{bandwidth_grid, KernelSpec};
use spectral_series::likelihood::{
    average_likelihood, estimate_likelihood_loss, estimate_likelihood_loss_with_perms,
    likelihood_ij_scan, permutations, LikelihoodModel, ThetaGrid,
};
use spectral_series::persist::{load_model, save_model, ModelFile, ModelPayload, Provenance};
use spectral_series::ratio::{estimate_ratio_loss, ratio_j_scan, RatioModel};
use spectral_series::simulators::{ParamBox, SimulatorSpec};
use spectral_series::spectral_basis::SpectralBasis;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s as f64, format!("{s:.1} s (limit {limit_s} s)"))
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn fixture_bases() -> Result<(spectral_series::sample::SampleSet, Vec<SpectralBasis>), String> {
    let s = normal_sample(200, 3, 2024);
    let bases = bandwidth_grid(&s)
        .map_err(fail)?
        .into_iter()
        .map(|eps| {
            SpectralBasis::fit(&s, KernelSpec::gaussian(eps).map_err(fail)?, 20).map_err(fail)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((s, bases))
}

fn c1_training_point_identity() -> Outcome {
    let start = Instant::now();
    let (s, bases) = fixture_bases()?;
    let root_n = (s.n() as f64).sqrt();
    let mut worst = 0.0f64;
    for b in &bases {
        let psi = b.evaluate_batch(&s).map_err(fail)?;
        for k in 0..s.n() {
            for j in 0..b.n_kept() {
                worst = worst.max((psi[[k, j]] - root_n * b.eigvecs()[[k, j]]).abs());
            }
        }
    }
    let (fast, t) = within(start.elapsed(), 5);
    let bound = 1e-8 * root_n;
    check(
        worst <= bound && fast,
        format!("max error {worst:.2e} (bound {bound:.2e}), {t}"),
    )
}

fn c2_empirical_orthonormality() -> Outcome {
    let (s, bases) = fixture_bases()?;
    let mut worst = 0.0f64;
    for b in &bases {
        let psi = b.evaluate_batch(&s).map_err(fail)?;
        let g = psi.t().dot(&psi) / s.n() as f64;
        for i in 0..b.n_kept() {
            for j in 0..b.n_kept() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[[i, j]] - target).abs());
            }
        }
    }
    check(
        worst <= 1e-8,
        format!("max deviation {worst:.2e} (bound 1e-8)"),
    )
}

fn c3_constant_predictor_losses() -> Outcome {
    let mut worst = 0.0f64;
    for c in [0.0, 0.5, 1.0, 2.0] {
        let target = c * c - 2.0 * c;
        for seed in 0..5u64 {
            let g = normal_sample(37 + seed as usize, 2, seed);
            let f = normal_sample(23, 2, seed + 100);
            worst = worst.max(
                (estimate_ratio_loss(&ConstRatio(c), &g, &f, 1).map_err(fail)? - target).abs(),
            );
            let joint = shifted_joint(31, 2, seed + 200);
            let xg = normal_sample(31, 2, seed + 300);
            for b in [1, 7, 20] {
                let l = estimate_likelihood_loss(&ConstTensor::new(c), &xg, &joint, b, 1, 1, seed)
                    .map_err(fail)?;
                worst = worst.max((l - target).abs());
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("max |loss - (c^2 - 2c)| = {worst:.2e} (bound 1e-12)"),
    )
}

fn c4_scan_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..5u64 {
        let g = normal_sample(40, 2, seed);
        let f = normal_sample(30, 2, seed + 1);
        let eps = 0.2 + 0.3 * seed as f64;
        let basis =
            SpectralBasis::fit(&g, KernelSpec::gaussian(eps).map_err(fail)?, 12).map_err(fail)?;
        let model = RatioModel::fit(basis, &f).map_err(fail)?;
        let (vg, vf) = (
            normal_sample(25, 2, seed + 2),
            normal_sample(19, 2, seed + 3),
        );
        for (j, loss) in ratio_j_scan(&model, &vg, &vf).map_err(fail)? {
            worst =
                worst.max((loss - estimate_ratio_loss(&model, &vg, &vf, j).map_err(fail)?).abs());
            count += 1;
        }

        let joint = shifted_joint(35, 2, seed + 10);
        let xg = normal_sample(35, 2, seed + 11);
        let lm = LikelihoodModel::fit(
            &joint,
            &xg,
            KernelSpec::gaussian(1.0 + eps).map_err(fail)?,
            KernelSpec::gaussian(eps).map_err(fail)?,
            6,
            8,
        )
        .map_err(fail)?;
        let val = shifted_joint(20, 2, seed + 12);
        let vxg = normal_sample(20, 2, seed + 13);
        let perms = permutations(20, 4, seed);
        let scan = likelihood_ij_scan(&lm, &vxg, &val, &perms).map_err(fail)?;
        for i in 1..=lm.basis_theta().n_kept() {
            for j in 1..=lm.basis_x().n_kept() {
                let direct = estimate_likelihood_loss_with_perms(&lm, &vxg, &val, &perms, i, j)
                    .map_err(fail)?;
                worst = worst.max((scan[[i - 1, j - 1]] - direct).abs());
                count += 1;
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("{count} truncations, max difference {worst:.2e} (bound 1e-12)"),
    )
}

fn c5_known_ratio_benchmark() -> Outcome {
    let start = Instant::now();
    let bench = RatioBenchmark::default();
    let seeds: Vec<u64> = (0..10).collect();
    let mut losses = Vec::new();
    let mut means = Vec::new();
    for &s in &seeds {
        let run = bench
            .run_series(&bench.replicate(2000, s).map_err(fail)?)
            .map_err(fail)?;
        losses.push(run.test_loss);
        means.push(run.mean_prediction);
    }
    let a = losses.iter().all(|&l| l < -1.0);
    let b = means.iter().all(|m| (0.85..=1.15).contains(m));
    let study = convergence_study(
        &Benchmark::GaussianShiftMise(bench),
        &[250, 1000, 4000],
        &seeds,
    )
    .map_err(fail)?;
    let c =
        study.is_monotone_non_increasing() && study.summary.iter().all(|r| r.valid == seeds.len());
    let mise: Vec<String> = study
        .summary
        .iter()
        .map(|r| format!("{}: {:.4}", r.size, r.mean))
        .collect();
    let worst_loss = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = means
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &m| {
            (l.min(m), h.max(m))
        });
    let (fast, t) = within(start.elapsed(), 300);
    check(
        a && b && c && fast,
        format!(
            "(a) worst test loss {worst_loss:.4} < -1: {a}; (b) mean prediction in [{lo:.3}, {hi:.3}]: {b}; \
             (c) MISE [{}] non-increasing: {c}; {t}",
            mise.join(", ")
        ),
    )
}

fn c6_kde_baseline_direction() -> Outcome {
    let seeds: Vec<u64> = (0..10).collect();
    let [series, kde] = RatioBenchmark::default()
        .compare(2000, &seeds)
        .map_err(fail)?;
    let (s, k) = (
        series.loss.ok_or("missing series loss")?,
        kde.loss.ok_or("missing kde loss")?,
    );
    let se = (s.se * s.se + k.se * k.se).sqrt();
    let threshold = s.mean - 2.0 * se;
    check(
        k.mean >= threshold,
        format!(
            "series {:.4} ({:.4}), kde {:.4} ({:.4}); kde mean >= {threshold:.4}",
            s.mean, s.se, k.mean, k.se
        ),
    )
}

fn c7_klein_average_likelihood() -> Outcome {
    let start = Instant::now();
    let bench = LikelihoodBenchmark::new(SimulatorSpec::klein());
    let grid = bench.grid().map_err(fail)?;
    let mut series = Vec::new();
    let mut flat = Vec::new();
    for seed in 0..5u64 {
        let (model, _, test) = bench.fit(seed).map_err(fail)?;
        series.push(average_likelihood(&model, &test, &grid).map_err(fail)?);
        flat.push(average_likelihood(&ConstTensor::new(1.0), &test, &grid).map_err(fail)?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m, f) = (mean(&series), mean(&flat));
    let sd =
        (series.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (series.len() - 1) as f64).sqrt();
    let se = sd / (series.len() as f64).sqrt();
    let (fast, t) = within(start.elapsed(), 600);
    check(
        m > 1.5 * f && fast,
        format!(
            "series {m:.3} ({se:.3}) vs flat {f:.3}, need > {:.3}; {t}",
            1.5 * f
        ),
    )
}

fn distance_curve(spec: SimulatorSpec, seeds: u64) -> Result<(bool, String), String> {
    let ms = [1usize, 5, 25];
    let res = LikelihoodBenchmark::new(spec)
        .evaluate(&ms, &(0..seeds).collect::<Vec<_>>())
        .map_err(fail)?;
    let means: Vec<f64> = res.avg_distance.iter().map(|(_, e)| e.mean).collect();
    let ok = means.windows(2).all(|w| w[1] <= w[0]);
    let text = res
        .avg_distance
        .iter()
        .map(|(m, e)| format!("m={m}: {:.4} ({:.4})", e.mean, e.se))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((ok, text))
}

fn c8_posterior_concentration() -> Outcome {
    let (spiral_ok, spiral) = distance_curve(SimulatorSpec::spiral(), 10)?;
    let (edges_ok, edges) = distance_curve(SimulatorSpec::edges(), 5)?;
    check(
        spiral_ok && edges_ok,
        format!("spiral [{spiral}]; edges [{edges}]"),
    )
}

fn posterior_mass(dir: &Path, model: &str, out: &str, resolution: usize) -> Result<f64, String> {
    let file = load_model(&dir.join(model)).map_err(fail)?;
    let grid = ThetaGrid::new(
        file.likelihood().ok_or("not a likelihood model")?.1,
        resolution,
    )
    .map_err(fail)?;
    let t = Table::read_path(&dir.join(out)).map_err(fail)?;
    let col = t.headers.len() - 1;
    Ok(t.rows.iter().map(|r| r[col]).sum::<f64>() * grid.cell_volume())
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let mut full = vec!["spectral-series", "--out-dir", dir.to_str().ok_or("path")?];
    full.extend_from_slice(args);
    match cli::run(full) {
        0 => Ok(()),
        code => Err(format!("{args:?} exited with {code}")),
    }
}

fn c9_posterior_normalisation() -> Outcome {
    let tmp = tempfile::tempdir().map_err(fail)?;
    let d = tmp.path();
    let p = |name: &str| d.join(name).to_string_lossy().into_owned();
    let mut worst = 0.0f64;
    let mut outputs = 0;
    for (sim, theta) in [("spiral", "7"), ("klein", "2,3")] {
        let model = format!("{sim}_model.json");
        cli(
            d,
            &[
                "fit-likelihood",
                "--simulator",
                sim,
                "--n",
                "800",
                "--i-max",
                "20",
                "--j-max",
                "20",
            ],
        )?;
        std::fs::rename(d.join("likelihood_model.json"), d.join(&model)).map_err(fail)?;
        for (m, res) in [(1usize, 10usize), (10, 30), (200, 50)] {
            let obs = format!("{sim}_{m}.csv");
            let out = format!("{sim}_{m}_posterior.csv");
            cli(
                d,
                &[
                    "generate",
                    "--simulator",
                    sim,
                    "--theta",
                    theta,
                    "--n",
                    &m.to_string(),
                    "--output",
                    &p(&obs),
                ],
            )?;
            cli(
                d,
                &[
                    "posterior",
                    "--model",
                    &p(&model),
                    "--observations",
                    &p(&obs),
                    "--grid-resolution",
                    &res.to_string(),
                    "--output",
                    &p(&out),
                ],
            )?;
            worst = worst.max((posterior_mass(d, &model, &out, res)? - 1.0).abs());
            outputs += 1;
        }
    }
    // observations far outside the data range put every estimate at the floor
    let far = "x_0,x_1\n1e6,1e6\n-1e6,1e6\n";
    std::fs::write(d.join("far.csv"), far).map_err(fail)?;
    cli(
        d,
        &[
            "posterior",
            "--model",
            &p("spiral_model.json"),
            "--observations",
            &p("far.csv"),
            "--output",
            &p("far_post.csv"),
        ],
    )?;
    worst = worst.max((posterior_mass(d, "spiral_model.json", "far_post.csv", 50)? - 1.0).abs());
    outputs += 1;
    check(
        worst <= 1e-9,
        format!("{outputs} posterior files, max |mass - 1| = {worst:.2e} (bound 1e-9)"),
    )
}

fn c10_persistence_round_trip() -> Outcome {
    let tmp = tempfile::tempdir().map_err(fail)?;
    let prov = Provenance::new(&"acceptance", 10).map_err(fail)?;

    let g = normal_sample(300, 2, 1);
    let f = normal_sample(300, 2, 2);
    let basis =
        SpectralBasis::fit(&g, KernelSpec::gaussian(0.4).map_err(fail)?, 15).map_err(fail)?;
    let ratio = RatioModel::fit(basis, &f)
        .map_err(fail)?
        .with_j(9)
        .map_err(fail)?;
    let rpath = tmp.path().join("ratio.json");
    save_model(
        &rpath,
        &ModelFile::new(
            ModelPayload::Ratio {
                model: ratio.clone(),
            },
            prov.clone(),
            None,
        ),
    )
    .map_err(fail)?;
    let rfile = load_model(&rpath).map_err(fail)?;
    let rback = rfile.ratio().ok_or("ratio payload")?;

    let joint = shifted_joint(300, 3, 3);
    let xg = normal_sample(300, 3, 4);
    let lik = LikelihoodModel::fit(
        &joint,
        &xg,
        KernelSpec::gaussian(1.0).map_err(fail)?,
        KernelSpec::gaussian(0.2).map_err(fail)?,
        12,
        15,
    )
    .map_err(fail)?;
    let lpath = tmp.path().join("lik.json");
    let payload = ModelPayload::Likelihood {
        model: lik.clone(),
        param_box: ParamBox::new(vec![(-3.0, 3.0)]).map_err(fail)?,
    };
    save_model(&lpath, &ModelFile::new(payload, prov, None)).map_err(fail)?;
    let lfile = load_model(&lpath).map_err(fail)?;
    let (lback, _) = lfile.likelihood().ok_or("likelihood payload")?;

    let (xr, xl, tl) = (
        normal_sample(100, 2, 5),
        normal_sample(100, 3, 6),
        normal_sample(100, 1, 7),
    );
    let mut worst = 0.0f64;
    for k in 0..100 {
        let x = xr.row(k).to_vec();
        worst = worst.max(
            (ratio.predict(&x, None).map_err(fail)? - rback.predict(&x, None).map_err(fail)?).abs(),
        );
        let (x, t) = (xl.row(k).to_vec(), tl.row(k).to_vec());
        let a = lik.predict(&x, &t, None, None).map_err(fail)?;
        let b = lback.predict(&x, &t, None, None).map_err(fail)?;
        worst = worst.max((a - b).abs());
    }
    let exact = rback.coeffs() == ratio.coeffs() && lback.coeffs() == lik.coeffs();
    check(
        worst <= 1e-12 && exact,
        format!(
            "200 probes, max difference {worst:.2e} (bound 1e-12); coefficients bit-exact: {exact}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "Nystrom training-point identity",
            c1_training_point_identity,
        ),
        ("empirical orthonormality", c2_empirical_orthonormality),
        (
            "constant-predictor loss analytics",
            c3_constant_predictor_losses,
        ),
        ("incremental scan equivalence", c4_scan_equivalence),
        ("known-ratio benchmark", c5_known_ratio_benchmark),
        ("KDE baseline direction", c6_kde_baseline_direction),
        (
            "Klein bottle average likelihood",
            c7_klein_average_likelihood,
        ),
        ("posterior concentration", c8_posterior_concentration),
        ("posterior normalisation", c9_posterior_normalisation),
        ("persistence round trip", c10_persistence_round_trip),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag}: {name}: {detail} [{secs:.1} s]",
            k + 1
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
