//! Plant a unit-circle eigenvalue, recover it with the argument-principle search,
//! then rebuild s11 off the contour from the trace formula.

use mnls_ist::quadrature::RhoProducts;
use mnls_ist::scattering::{nu0, s11_analytic, JostOptions};
use mnls_ist::soliton::{reconstruct_q_sol, SolitonEnsemble};
use mnls_ist::spectrum::{find_zeros, trace_s11, CircleEigenpair, DiscreteSpectrum, SearchRegion};
use mnls_ist::{Grid, Result};
use num_complex::Complex64 as C;

fn main() -> Result<()> {
    let zeta = C::from_polar(1.0, 2.1);
    let planted = DiscreteSpectrum {
        quartets: vec![],
        circle: vec![CircleEigenpair { zeta, c: -zeta }],
        alpha: 1.0,
        q_minus: C::new(1.0, 0.0),
    };
    let grid = Grid::new(30.0, 3001)?;
    let field = reconstruct_q_sol(0.0, &grid, &SolitonEnsemble::reflectionless(&planted)?)?;

    let found = find_zeros(&field, &SearchRegion::standard(3.0))?;
    for p in &found.circle {
        println!("zeta = {:.12}  (error {:.1e})", p.zeta, (p.zeta - zeta).norm());
        println!("c    = {:.12}  (error {:.1e})", p.c, (p.c + zeta).norm());
    }

    let rho = RhoProducts::from_field(&field, 20.0, 200)?;
    let n0 = nu0(&field);
    let opts = JostOptions::default();
    for z in [C::new(-1.0, 0.5), C::new(1.5, -0.7), C::new(-2.0, 2.0)] {
        let direct = s11_analytic(&field, z, &opts)?;
        let traced = trace_s11(&rho, &found, z, n0)?;
        println!("z = {z}: |direct - trace| = {:.2e}", (direct - traced).norm());
    }
    Ok(())
}
