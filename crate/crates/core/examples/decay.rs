//! Soliton-region decay: a perturbed circle soliton is evolved directly and compared
//! with the reflectionless field of the eigenvalues whose stationary ray lies in the
//! window ξ ∈ (5, 7). Pass a final time to shorten the run, e.g. `-- 15`.

use mnls_ist::harness::{decay_experiment, perturbed_soliton, DecayConfig};
use mnls_ist::{Grid, Result};

fn main() -> Result<()> {
    let t_end: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(40.0);
    let mut config = DecayConfig::default();
    config.t_samples.retain(|&t| t <= t_end);

    let grid = Grid::new(48.0, 4097)?;
    let initial = perturbed_soliton(&grid, 1.0, 2.0 * std::f64::consts::PI / 3.0, 0.01, 0.0)?;
    let exp = decay_experiment(&initial, &config)?;

    for p in &exp.spectrum.circle {
        println!("eigenvalue {:.10}", p.zeta);
    }
    println!("Lambda = {:?}, T(inf) = {:.3e}", exp.partition.lambda_set, exp.t_infinity);
    for e in &exp.errors {
        println!("t = {:5.1}  Linf = {:.4e}  L2 = {:.4e}", e.t, e.linf, e.l2);
    }
    println!("log-log slope {:.3}, R^2 {:.3}", exp.fitted_slope, exp.fit_r2);
    exp.write_csv(std::io::stdout())?;
    Ok(())
}
