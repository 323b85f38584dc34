//! Estimate the density ratio between two shifted Gaussians and compare the
//! series estimator with the true ratio and a ratio of kernel density estimates.
//!
//! cargo run --release --example density_ratio

use spectral_series::evaluation::{mean_prediction, mise_vs_truth, KdeRatio, RatioBenchmark};
use spectral_series::kernels::bandwidth_grid;
use spectral_series::ratio::{plugin_ratio_loss, select_ratio_model, RatioData};
use spectral_series::simulators::simulate_gaussian_shift;

fn main() -> spectral_series::Result<()> {
    let n = 2000;
    // F = N(0.5, 1), G = N(0, 1); train / validation / test draws
    let data = RatioData {
        train_g: simulate_gaussian_shift(0.0, n, 1, 1)?,
        train_f: simulate_gaussian_shift(0.5, n, 1, 2)?,
        val_g: simulate_gaussian_shift(0.0, n / 2, 1, 3)?,
        val_f: simulate_gaussian_shift(0.5, n / 2, 1, 4)?,
    };
    let test_g = simulate_gaussian_shift(0.0, n / 2, 1, 5)?;
    let test_f = simulate_gaussian_shift(0.5, n / 2, 1, 6)?;

    let grid = bandwidth_grid(&data.train_g)?;
    let (model, report) = select_ratio_model(&data, &grid, 8)?;
    println!("bandwidth grid: {grid:?}");
    println!(
        "selected eps = {:.4}, J = {}, validation loss = {:.4}",
        report.selected.eps, report.selected.j, report.selected.loss
    );

    let truth = RatioBenchmark::default();
    println!("{:>6} {:>10} {:>10}", "x", "estimate", "truth");
    for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        println!(
            "{x:>6.1} {:>10.4} {:>10.4}",
            model.predict(&[x], None)?,
            truth.truth(&[x])
        );
    }

    let kde = KdeRatio::fit(
        &data.train_f,
        &data.train_g,
        Some(&data.val_f),
        Some(&data.val_g),
    )?;
    println!(
        "test loss: series {:.4}, kde ratio {:.4}, constant one -1",
        plugin_ratio_loss(&model, &test_g, &test_f)?,
        plugin_ratio_loss(&kde, &test_g, &test_f)?
    );
    println!(
        "mean prediction over G (ideal 1): {:.4}",
        mean_prediction(&model, &test_g)?
    );
    println!(
        "MISE vs truth: {:.5}",
        mise_vs_truth(&model, |x: &[f64]| truth.truth(x), &test_g)?
    );
    Ok(())
}
