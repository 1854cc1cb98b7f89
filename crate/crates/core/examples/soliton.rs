//! Reflectionless fields from discrete data: a circle soliton next to a breather
//! quartet, the residue conditions of the underlying solve, and a CSV dump.

use mnls_ist::soliton::{reconstruct, residue_residual, solve_coefficients, SolitonEnsemble};
use mnls_ist::spectrum::{CircleEigenpair, DiscreteSpectrum, EigenQuartet};
use mnls_ist::{Grid, Result};
use num_complex::Complex64 as C;

fn main() -> Result<()> {
    let zeta = C::from_polar(1.0, 2.1);
    let spectrum = DiscreteSpectrum {
        quartets: vec![EigenQuartet { z: C::from_polar(1.5, 2.3), c: C::new(0.5, 0.2) }],
        circle: vec![CircleEigenpair { zeta, c: -zeta }],
        alpha: 1.0,
        q_minus: C::new(1.0, 0.0),
    };
    let ens = SolitonEnsemble::reflectionless(&spectrum)?;
    let grid = Grid::new(30.0, 601)?;
    let t = 0.5;
    let rec = reconstruct(t, &grid, &ens)?;

    let (jmin, qmin) = rec.field.q.iter().enumerate().min_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
    println!("min |q| = {:.6} at x = {:.2}", qmin.norm(), grid.x(jmin));
    println!("max |q| = {:.6}", rec.field.max_modulus());

    for j in [100, 300, 500] {
        let sol = solve_coefficients(grid.x(j), t, rec.nu_minus[j], &ens)?;
        println!("x = {:6.2}: residue residual {:.2e}", grid.x(j), residue_residual(&sol, &ens, 1e-4)?);
    }

    let path = std::env::temp_dir().join("soliton.csv");
    rec.field.write_csv(std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
