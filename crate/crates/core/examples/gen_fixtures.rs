//! Regenerates the oracle fixtures under `tests/fixtures`.
//!
//! cargo run --release --example gen_fixtures

use std::path::Path;

use shwave::oracle::{bessel_mode_frequencies, fd_mode_frequencies, Fixture, OracleResult};
use shwave::{MaterialProfile, ProfileSpec};

/// Truncation depth with `e^{−λL} ≤ 1e−10` for the slowest-decaying mode.
fn truncation_depth(k: f64, cutoff_ratio: f64, omegas: &[f64]) -> f64 {
    let top = omegas.iter().copied().fold(0.0, f64::max);
    let lambda = (k * cutoff_ratio - top).max(1e-6).sqrt();
    (10.0 * 10f64.ln() / lambda).max(20.0).ceil()
}

fn write(dir: &Path, name: &str, profile: &ProfileSpec, k: f64, oracle: OracleResult) {
    let f = Fixture { profile: profile.clone(), k, oracle };
    std::fs::write(dir.join(name), serde_json::to_string_pretty(&f).unwrap() + "\n").unwrap();
    println!("{name}: {:?}", f.oracle.omegas);
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::create_dir_all(&dir).unwrap();

    let exp = ProfileSpec::ExpDensity { rho_inf: 1.0, delta_rho: 5.0, d: 1.0, mu: 1.0 };
    let exp_p = MaterialProfile::from_spec(&exp).unwrap();
    for k in [1.0, 4.0, 16.0] {
        let b = bessel_mode_frequencies(5.0, 1.0, k).unwrap();
        let l = truncation_depth(k, 1.0, &b.omegas);
        let fd = fd_mode_frequencies(&exp_p, k, l, 20_000).unwrap();
        assert!(fd.usable, "finite differences not converged at K = {k}");
        write(&dir, &format!("exp_q5_d1_K{k}_bessel.json"), &exp, k, b);
        write(&dir, &format!("exp_q5_d1_K{k}_fd.json"), &exp, k, fd);
    }

    let layer = ProfileSpec::SmoothedLayer { rho_1: 2.0, mu_1: 1.0, rho_s: 1.0, mu_s: 1.0, y_s: 2.0, width: 0.5 };
    let layer_p = MaterialProfile::from_spec(&layer).unwrap();
    {
        let k = 4.0;
        let coarse = fd_mode_frequencies(&layer_p, k, 60.0, 4_000).unwrap();
        let l = truncation_depth(k, 1.0, &coarse.omegas);
        let fd = fd_mode_frequencies(&layer_p, k, l, 20_000).unwrap();
        assert!(fd.usable, "finite differences not converged at K = {k}");
        write(&dir, &format!("layer_K{k}_fd.json"), &layer, k, fd);
    }
}
