//! Seeded convergence study of the ratio estimator's MISE over sample sizes.
//!
//! cargo run --release --example convergence_study

use spectral_series::evaluation::{convergence_study, Benchmark, RatioBenchmark};

fn main() -> spectral_series::Result<()> {
    let bench = Benchmark::GaussianShiftMise(RatioBenchmark::default());
    let seeds: Vec<u64> = (0..5).collect();
    let table = convergence_study(&bench, &[250, 500, 1000, 2000], &seeds)?;
    println!("{:>6} {:>10} {:>10} {:>6}", "n", table.metric, "se", "runs");
    for row in &table.summary {
        let se = row.se.map_or("-".to_string(), |s| format!("{s:.5}"));
        println!(
            "{:>6} {:>10.5} {:>10} {:>6}",
            row.size, row.mean, se, row.valid
        );
    }
    println!("non-increasing: {}", table.is_monotone_non_increasing());
    table.write_summary_csv(std::io::stdout())?;
    Ok(())
}
