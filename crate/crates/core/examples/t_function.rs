//! The partial transmission T(z) for a synthetic ρρ̃: jump across the contour,
//! T(0)T(∞), the symmetries and the 1/z coefficient, on both candidate contours.

use mnls_ist::quadrature::RhoProducts;
use mnls_ist::tfunc::{JumpContour, TFunction};
use mnls_ist::Result;
use num_complex::Complex64 as C;

fn main() -> Result<()> {
    // even in log|s|, so the data is invariant under s -> -1/s
    let rho = RhoProducts::from_fn(|s| C::new(0.25 * (-2.0 * s.norm().ln().powi(2)).exp(), 0.0), 50.0, 4000);
    let base = TFunction::from_points(vec![C::from_polar(1.4, 2.0)], vec![C::from_polar(1.0, 2.3)], rho);

    for (contour, points) in [
        (JumpContour::ImaginaryAxis, [C::new(0.0, 0.5), C::new(0.0, 1.7), C::new(0.0, -2.3)]),
        (JumpContour::RealAxis, [C::new(0.5, 0.0), C::new(1.7, 0.0), C::new(-2.3, 0.0)]),
    ] {
        let t = base.clone().with_contour(contour);
        println!("{contour:?}");
        for s in points {
            println!("  jump residual at {s}: {:.2e}", t.jump_residual(s, 1e-6)?);
        }
        let t_inf = t.t_infinity()?;
        println!("  T(inf) = {t_inf:.10}, |T(0)T(inf) - 1| = {:.1e}", (t.t_zero()? * t_inf - 1.0).norm());
        let (conj, inv) = t.symmetry_residuals(&[C::new(0.7, 0.4), C::new(-1.3, 2.0), C::new(0.3, -0.5)])?;
        println!("  symmetry residuals {conj:.1e} {inv:.1e}");
        let (num, closed) = t.expansion_coefficient(2000.0)?;
        println!("  1/z coefficient {num:.8} vs {closed:.8}");
    }
    Ok(())
}
