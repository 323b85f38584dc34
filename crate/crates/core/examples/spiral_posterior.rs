//! Fit a likelihood model on simulated spiral data and watch the posterior for
//! a fixed parameter concentrate as observations accumulate.
//!
//! cargo run --release --example spiral_posterior

use spectral_series::kernels::bandwidth_grid;
use spectral_series::likelihood::{
    average_likelihood, sample_log_likelihood, select_likelihood_model, LikelihoodData,
    LikelihoodSelection, ThetaGrid,
};
use spectral_series::sample::{split_joint, split_sample, SplitFractions};
use spectral_series::simulators::SimulatorSpec;

fn main() -> spectral_series::Result<()> {
    let spec = SimulatorSpec::spiral();
    let joint = spec.simulate_joint(2000, 1)?;
    let marginal = spec.simulate_marginal(2000, 2)?;
    let fr = SplitFractions::default();
    let sj = split_joint(&joint, &fr, 3)?;
    let sg = split_sample(&marginal, &fr, 4)?;

    let cfg = LikelihoodSelection {
        eps_x: bandwidth_grid(&sg.train)?,
        eps_theta: bandwidth_grid(sj.train.theta())?,
        i_max: 30,
        j_max: 30,
        permutations: 20,
        seed: 5,
    };
    let data = LikelihoodData {
        train: sj.train,
        train_g: sg.train,
        val: sj.validation,
        val_g: sg.validation,
    };
    let (model, report) = select_likelihood_model(&data, &cfg)?;
    let s = &report.selected;
    println!(
        "selected eps_x = {:.3}, eps_theta = {:.3}, I = {}, J = {}, loss = {:.3}",
        s.eps_x, s.eps_theta, s.i, s.j, s.loss
    );

    let grid = ThetaGrid::new(&spec.param_box, 200)?;
    if let Some(test) = &sj.test {
        println!(
            "test likelihood relative to a flat prior: {:.2}",
            average_likelihood(&model, test, &grid)?
        );
    }

    let theta_star = 7.0;
    let obs = spec.simulate(&[theta_star], 64, 6)?;
    let cv = grid.cell_volume();
    println!("{:>4} {:>10} {:>10} {:>10}", "m", "mean", "sd", "distance");
    for m in [1, 4, 16, 64] {
        let post = sample_log_likelihood(&model, &obs.head(m)?, &grid)?;
        let thetas = grid.points().points().column(0);
        let mean: f64 = thetas
            .iter()
            .zip(&post.density)
            .map(|(t, p)| t * p * cv)
            .sum();
        let var: f64 = thetas
            .iter()
            .zip(&post.density)
            .map(|(t, p)| (t - mean).powi(2) * p * cv)
            .sum();
        println!(
            "{m:>4} {mean:>10.3} {:>10.3} {:>10.4}",
            var.sqrt(),
            post.expected_distance(&grid, &[theta_star])?
        );
    }
    Ok(())
}
