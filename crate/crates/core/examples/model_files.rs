//! Save a fitted ratio model with provenance and standardisation, reload it
//! and check that predictions survive the round trip.
//!
//! cargo run --example model_files

use spectral_series::kernels::KernelSpec;
use spectral_series::persist::{load_model, save_model, ModelFile, ModelPayload, Provenance};
use spectral_series::ratio::RatioModel;
use spectral_series::sample::Standardizer;
use spectral_series::simulators::simulate_gaussian_shift;
use spectral_series::spectral_basis::SpectralBasis;

fn main() -> spectral_series::Result<()> {
    let g = simulate_gaussian_shift(0.0, 400, 2, 1)?;
    let f = simulate_gaussian_shift(0.5, 400, 2, 2)?;
    let st = Standardizer::fit(&g);
    let (g, f) = (st.apply(&g)?, st.apply(&f)?);
    let basis = SpectralBasis::fit(&g, KernelSpec::gaussian(0.5)?, 10)?;
    let model = RatioModel::fit(basis, &f)?.with_j(6)?;

    let config = serde_json::json!({ "eps": 0.5, "j": 6, "n": 400 });
    let file = ModelFile::new(
        ModelPayload::Ratio {
            model: model.clone(),
        },
        Provenance::new(&config, 1)?,
        Some(st),
    );
    let path = std::env::temp_dir().join("spectral_series_ratio_model.json");
    save_model(&path, &file)?;

    let loaded = load_model(&path)?;
    println!(
        "format {} v{}, config hash {}",
        loaded.format, loaded.version, loaded.provenance.config_hash
    );
    let back = loaded.ratio().expect("ratio payload");
    let probe = loaded
        .standardizer
        .as_ref()
        .expect("standardizer")
        .apply(&simulate_gaussian_shift(0.0, 5, 2, 3)?)?;
    for k in 0..probe.n() {
        let x = probe.row(k).to_vec();
        println!(
            "{:>10.6} {:>10.6}",
            model.predict(&x, None)?,
            back.predict(&x, None)?
        );
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
