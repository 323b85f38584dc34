mod common;

use common::{normal_sample, ConstRatio};
use proptest::prelude::*;
use spectral_series::evaluation::mean_prediction;
use spectral_series::kernels::{bandwidth_grid, KernelSpec};
use spectral_series::ratio::{
    estimate_ratio_loss, ratio_j_scan, select_ratio_model, RatioData, RatioModel, RatioPredictor,
};
use spectral_series::simulators::simulate_gaussian_shift;
use spectral_series::spectral_basis::SpectralBasis;

fn random_model(seed: u64, n: usize, d: usize, eps: f64, j: usize) -> RatioModel {
    let g = normal_sample(n, d, seed);
    let f = normal_sample(n / 2 + 1, d, seed + 1);
    let basis = SpectralBasis::fit(&g, KernelSpec::gaussian(eps).unwrap(), j).unwrap();
    RatioModel::fit(basis, &f).unwrap()
}

#[test]
fn equal_distributions_give_mean_prediction_near_one() {
    let data = RatioData {
        train_g: normal_sample(2000, 1, 1),
        train_f: normal_sample(2000, 1, 2),
        val_g: normal_sample(1000, 1, 3),
        val_f: normal_sample(1000, 1, 4),
    };
    let grid = bandwidth_grid(&data.train_g).unwrap();
    let (model, _) = select_ratio_model(&data, &grid, 8).unwrap();
    let m = mean_prediction(&model, &normal_sample(5000, 1, 5)).unwrap();
    assert!((0.9..=1.1).contains(&m), "mean prediction {m}");
}

#[test]
fn shifted_gaussian_selected_loss_beats_constant_one() {
    let data = RatioData {
        train_g: simulate_gaussian_shift(0.0, 2000, 1, 11).unwrap(),
        train_f: simulate_gaussian_shift(0.5, 2000, 1, 12).unwrap(),
        val_g: simulate_gaussian_shift(0.0, 1000, 1, 13).unwrap(),
        val_f: simulate_gaussian_shift(0.5, 1000, 1, 14).unwrap(),
    };
    let grid = bandwidth_grid(&data.train_g).unwrap();
    let (model, report) = select_ratio_model(&data, &grid, 8).unwrap();
    assert!(
        report.selected.loss < -1.0,
        "selected loss {}",
        report.selected.loss
    );
    let min = report
        .entries
        .iter()
        .map(|e| e.loss)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(report.selected.loss, min);
    assert!(model.j_selected() >= 1 && model.j_selected() <= model.j_kept());
    assert!(model.coeffs().iter().all(|c| c.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_series_loss_is_c_squared_minus_two_c(
        c in 0.0..3.0f64,
        seed in 0u64..1000,
        ng in 1usize..50,
        nf in 1usize..50,
    ) {
        let g = normal_sample(ng, 2, seed);
        let f = normal_sample(nf, 2, seed + 7);
        let loss = estimate_ratio_loss(&ConstRatio(c), &g, &f, 1).unwrap();
        prop_assert!((loss - (c * c - 2.0 * c)).abs() <= 1e-12);
    }

    #[test]
    fn scan_matches_direct_recomputation(
        seed in 0u64..1000,
        eps in 0.05..3.0f64,
        d in 1usize..3,
        clip in any::<bool>(),
    ) {
        let model = random_model(seed, 30, d, eps, 10).with_clip(clip);
        let vg = normal_sample(17, d, seed + 100);
        let vf = normal_sample(13, d, seed + 200);
        let scan = ratio_j_scan(&model, &vg, &vf).unwrap();
        prop_assert_eq!(scan.len(), model.j_kept());
        for (j, loss) in scan {
            let direct = estimate_ratio_loss(&model, &vg, &vf, j).unwrap();
            prop_assert!((loss - direct).abs() <= 1e-12, "J = {}: {} vs {}", j, loss, direct);
        }
    }

    #[test]
    fn clipped_predictions_are_non_negative(seed in 0u64..1000, eps in 0.05..3.0f64) {
        let model = random_model(seed, 25, 2, eps, 10);
        let q = normal_sample(40, 2, seed + 3);
        prop_assert!(model.predict_batch(&q).unwrap().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn selection_ignores_grid_order(seed in 0u64..200) {
        let data = RatioData {
            train_g: normal_sample(40, 1, seed),
            train_f: simulate_gaussian_shift(0.5, 40, 1, seed + 1).unwrap(),
            val_g: normal_sample(20, 1, seed + 2),
            val_f: simulate_gaussian_shift(0.5, 20, 1, seed + 3).unwrap(),
        };
        let grid = bandwidth_grid(&data.train_g).unwrap();
        let mut rev = grid.clone();
        rev.reverse();
        let (a, ra) = select_ratio_model(&data, &grid, 6).unwrap();
        let (b, rb) = select_ratio_model(&data, &rev, 6).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ra.selected, rb.selected);
    }
}
