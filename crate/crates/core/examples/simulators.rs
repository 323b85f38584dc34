//! Draw from each built-in simulator and write a joint sample to CSV.
//!
//! cargo run --example simulators -- [output.csv]

use std::fs::File;

use spectral_series::data_io::write_joint;
use spectral_series::simulators::{rasterize_edge, ModelKind, SimulatorSpec};

fn main() -> spectral_series::Result<()> {
    for kind in [
        ModelKind::Spiral,
        ModelKind::Klein,
        ModelKind::Edges,
        ModelKind::GaussianShift,
    ] {
        let spec = SimulatorSpec::of_kind(kind);
        let joint = spec.simulate_joint(500, 7)?;
        let means = joint.x().column_means();
        println!(
            "{kind:<15} theta dim {} box {:?}, x dim {:>3}, first x means {:?}",
            spec.theta_dim(),
            spec.param_box.0,
            spec.x_dim(),
            means
                .iter()
                .take(3)
                .map(|m| (m * 1e3).round() / 1e3)
                .collect::<Vec<_>>()
        );
    }

    // a noiseless 20x20 edge image, printed row by row
    let img = rasterize_edge(0.6, 1.5);
    for row in img.chunks(20) {
        println!(
            "{}",
            row.iter()
                .map(|&p| if p > 0.5 { '#' } else { '.' })
                .collect::<String>()
        );
    }

    if let Some(path) = std::env::args().nth(1) {
        let joint = SimulatorSpec::klein().simulate_joint(1000, 11)?;
        write_joint(File::create(&path)?, &joint)?;
        println!("wrote {} rows to {path}", joint.n());
    }
    Ok(())
}
