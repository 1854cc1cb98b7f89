//! Sign charts of Im θ over the z-plane for the charted rays, and the lens-angle
//! estimate in the soliton region.

use mnls_ist::harness::{figure3_suite, figure_grid, FIGURE_XI};
use mnls_ist::spectral_plane::{lens_angle_admissible, phase_bound_check};
use mnls_ist::{ProblemParams, Result};

fn main() -> Result<()> {
    let charts = figure3_suite(&FIGURE_XI, 1.0, &figure_grid(), 1e-12)?;
    for c in &charts {
        println!("xi = {:6.2}: {} sign regions in the first quadrant", c.xi, c.first_quadrant_regions);
    }
    let six_five = charts.iter().find(|c| c.xi == 6.5).unwrap();
    let path = std::env::temp_dir().join("sign_chart_6.5.csv");
    six_five.chart.write_csv(std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());

    let xi = 6.5;
    let psi = 0.4;
    assert!(lens_angle_admissible(psi, xi));
    let radii: Vec<f64> = (1..=30).map(|k| 0.1 * k as f64).filter(|r| (r - 1.0f64).abs() > 1e-9).collect();
    let report = phase_bound_check(psi, &ProblemParams::unit(1.0).with_xi(xi), &radii)?;
    println!(
        "psi = {psi}: worst printed margin {:.3e}, decay-sign violations {}",
        report.worst_printed_margin, report.decay_sign_violations
    );
    Ok(())
}
