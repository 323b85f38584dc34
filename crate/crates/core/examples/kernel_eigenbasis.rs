//! Build the kernel eigenbasis of a sample and extend it to new points.
//!
//! cargo run --example kernel_eigenbasis

use spectral_series::kernels::{bandwidth_grid, KernelSpec};
use spectral_series::sample::SampleSet;
use spectral_series::simulators::SimulatorSpec;
use spectral_series::spectral_basis::SpectralBasis;

fn main() -> spectral_series::Result<()> {
    let x = SimulatorSpec::spiral().simulate_marginal(600, 3)?;
    let grid = bandwidth_grid(&x)?;
    println!("bandwidth grid {grid:?}");

    for &eps in &grid {
        let basis = SpectralBasis::fit(&x, KernelSpec::gaussian(eps)?, 10)?;
        let l = basis.eigvals();
        println!(
            "eps {eps:>8.4}: leading eigenvalues {:?}{}",
            l.iter()
                .take(5)
                .map(|v| (v * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            if basis.near_degenerate() {
                " (near-degenerate)"
            } else {
                ""
            }
        );
    }

    let basis = SpectralBasis::fit(&x, KernelSpec::gaussian(grid[1])?, 6)?;
    let psi = basis.evaluate_batch(&x)?;
    let gram = psi.t().dot(&psi) / x.n() as f64;
    println!("empirical inner products of the first 3 basis functions:");
    for i in 0..3 {
        println!(
            "  {:?}",
            (0..3)
                .map(|j| (gram[[i, j]] * 1e6).round() / 1e6)
                .collect::<Vec<_>>()
        );
    }
    let fresh = SampleSet::from_rows(&[vec![0.0, 0.0], vec![3.0, -2.0], vec![50.0, 50.0]])?;
    println!(
        "extension to new points:\n{:.4}",
        basis.evaluate_batch(&fresh)?
    );
    Ok(())
}
