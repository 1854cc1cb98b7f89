//! Spectral-plane geometry: uniformization maps, the phase function θ(z; ξ),
//! sign charts of Im θ and the ∇/Δ/Λ partition of the discrete spectrum.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::spectrum::DiscreteSpectrum;

/// Uniformized spectral point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub z: Complex64,
    pub k: Complex64,
    pub lambda: Complex64,
    pub theta: Option<Complex64>,
}

/// Sign convention of the drift term inside θ.
///
/// `Lax` is θ = −kλ[ξ + (2αk² − 4α − α⁻¹)], the form forced by the time part of the
/// Lax pair at x → ±∞ (scattering data evolve as e^{2ikλ(x + v t)} = e^{−2itθ}).
/// `AsPrinted` flips the drift sign, θ = −kλ[ξ − (2αk² − 4α − α⁻¹)].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PhaseConvention {
    #[default]
    Lax,
    AsPrinted,
}

fn check_nonzero(z: Complex64) -> Result<()> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("uniformization pole at z = {z}")));
    }
    Ok(())
}

/// k(z) = (z − 1/z)/(2α).
pub fn k_of(z: Complex64, alpha: f64) -> Complex64 {
    (z - z.inv()) / (2.0 * alpha)
}

/// λ(z) = (z + 1/z)/2.
pub fn lambda_of(z: Complex64) -> Complex64 {
    (z + z.inv()) * 0.5
}

/// kλ = (z² − z⁻²)/(4α), evaluated without cancellation near z = ±1.
pub fn k_lambda(z: Complex64, alpha: f64) -> Complex64 {
    let z2 = z * z;
    (z2 - z2.inv()) / (4.0 * alpha)
}

/// Drift v(z) = 2αk² − 4α − α⁻¹.
pub fn drift(z: Complex64, alpha: f64) -> Complex64 {
    let z2 = z * z;
    let k2 = (z2 - 2.0 + z2.inv()) / (4.0 * alpha * alpha);
    k2 * (2.0 * alpha) - 4.0 * alpha - 1.0 / alpha
}

pub fn uniformize(z: Complex64, params: &ProblemParams) -> Result<SpectralPoint> {
    check_nonzero(z)?;
    Ok(SpectralPoint { z, k: k_of(z, params.alpha), lambda: lambda_of(z), theta: None })
}

/// θ(z) under the default (`Lax`) convention.
pub fn phase_theta(z: Complex64, params: &ProblemParams) -> Result<Complex64> {
    phase_theta_with(z, params, PhaseConvention::Lax)
}

pub fn phase_theta_with(z: Complex64, params: &ProblemParams, conv: PhaseConvention) -> Result<Complex64> {
    check_nonzero(z)?;
    let xi = params.xi()?;
    Ok(theta_raw(z, params.alpha, xi, conv))
}

pub(crate) fn theta_raw(z: Complex64, alpha: f64, xi: f64, conv: PhaseConvention) -> Complex64 {
    let v = drift(z, alpha);
    let bracket = match conv {
        PhaseConvention::Lax => v + xi,
        PhaseConvention::AsPrinted => -v + xi,
    };
    -k_lambda(z, alpha) * bracket
}

/// e^{−2itθ(z)} written as e^{2ikλ(x + v t)}; well defined at t = 0.
pub fn evolution_factor(z: Complex64, x: f64, t: f64, alpha: f64) -> Complex64 {
    let kl = k_lambda(z, alpha);
    (Complex64::i() * 2.0 * kl * (x + drift(z, alpha) * t)).exp()
}

/// Re(2itθ) = −2t·Im θ.
pub fn re_exponent(z: Complex64, t: f64, params: &ProblemParams) -> Result<f64> {
    Ok(-2.0 * t * phase_theta(z, params)?.im)
}

/// The explicit xy-form of Re(2itθ) carrying the constant 6 (valid at α = 1).
pub fn re_exponent_xy(z: Complex64, t: f64, xi: f64) -> f64 {
    let (x, y) = (z.re, z.im);
    let r2 = x * x + y * y;
    t * x * y * ((xi - 6.0) * (1.0 + 1.0 / (r2 * r2)) + (x * x - y * y) * (1.0 + 1.0 / r2.powi(4)))
}

/// Rectangular sampling grid in the z-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub n_re: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub n_im: usize,
}

impl PlaneGrid {
    pub fn re(&self, j: usize) -> f64 {
        lin(self.re_min, self.re_max, self.n_re, j)
    }
    pub fn im(&self, i: usize) -> f64 {
        lin(self.im_min, self.im_max, self.n_im, i)
    }
}

fn lin(a: f64, b: f64, n: usize, j: usize) -> f64 {
    if n <= 1 {
        a
    } else {
        a + (b - a) * j as f64 / (n - 1) as f64
    }
}

/// Sign of Im θ on a grid; `signs[i][j]` is row i (Im z) and column j (Re z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignChart {
    pub xi: f64,
    pub grid: PlaneGrid,
    pub zero_tol: f64,
    pub signs: Vec<Vec<i8>>,
}

pub fn sign_chart(params: &ProblemParams, grid: &PlaneGrid, zero_tol: f64) -> Result<SignChart> {
    let xi = params.xi()?;
    let rows: Result<Vec<Vec<i8>>> = (0..grid.n_im)
        .into_par_iter()
        .map(|i| {
            (0..grid.n_re)
                .map(|j| {
                    let z = Complex64::new(grid.re(j), grid.im(i));
                    check_nonzero(z)?;
                    let im = theta_raw(z, params.alpha, xi, PhaseConvention::Lax).im;
                    Ok(if im.abs() < zero_tol { 0 } else if im > 0.0 { 1 } else { -1 })
                })
                .collect()
        })
        .collect();
    Ok(SignChart { xi, grid: *grid, zero_tol, signs: rows? })
}

impl SignChart {
    /// CSV matrix: header row holds Re z, first column Im z.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "im\\re")?;
        for j in 0..self.grid.n_re {
            write!(w, ",{}", self.grid.re(j))?;
        }
        writeln!(w)?;
        for (i, row) in self.signs.iter().enumerate() {
            write!(w, "{}", self.grid.im(i))?;
            for s in row {
                write!(w, ",{s}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Connected nonzero-sign regions (4-connectivity) among nodes with Re z > 0, Im z > 0.
    pub fn first_quadrant_regions(&self) -> usize {
        let (ni, nj) = (self.grid.n_im, self.grid.n_re);
        let inside = |i: usize, j: usize| self.grid.re(j) > 0.0 && self.grid.im(i) > 0.0 && self.signs[i][j] != 0;
        let mut seen = vec![vec![false; nj]; ni];
        let mut count = 0;
        for i0 in 0..ni {
            for j0 in 0..nj {
                if seen[i0][j0] || !inside(i0, j0) {
                    continue;
                }
                count += 1;
                let s = self.signs[i0][j0];
                let mut stack = vec![(i0, j0)];
                seen[i0][j0] = true;
                while let Some((i, j)) = stack.pop() {
                    let mut nb = Vec::with_capacity(4);
                    if i > 0 {
                        nb.push((i - 1, j));
                    }
                    if i + 1 < ni {
                        nb.push((i + 1, j));
                    }
                    if j > 0 {
                        nb.push((i, j - 1));
                    }
                    if j + 1 < nj {
                        nb.push((i, j + 1));
                    }
                    for (a, b) in nb {
                        if !seen[a][b] && inside(a, b) && self.signs[a][b] == s {
                            seen[a][b] = true;
                            stack.push((a, b));
                        }
                    }
                }
            }
        }
        count
    }
}

/// Index sets ∇, Δ, Λ over the expanded spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub nabla: Vec<usize>,
    pub delta: Vec<usize>,
    pub lambda_set: Vec<usize>,
    pub epsilon0: f64,
    /// min |Im θ_n| over n ∉ Λ; `f64::INFINITY` when every eigenvalue is in Λ.
    pub varrho0: f64,
}

impl RegionPartition {
    pub fn empty() -> Self {
        Self { nabla: vec![], delta: vec![], lambda_set: vec![], epsilon0: 1.0, varrho0: f64::INFINITY }
    }
}

/// Classify every expanded eigenvalue η_n by the sign and size of Im θ(η_n).
/// `epsilon0 = None` selects half the smallest nonzero |Im θ_n|.
pub fn classify_spectrum(
    spectrum: &DiscreteSpectrum,
    params: &ProblemParams,
    epsilon0: Option<f64>,
) -> Result<RegionPartition> {
    let etas: Vec<Complex64> = spectrum.expanded().iter().map(|e| e.eta).collect();
    classify_points(&etas, params, epsilon0)
}

pub fn classify_points(etas: &[Complex64], params: &ProblemParams, epsilon0: Option<f64>) -> Result<RegionPartition> {
    let xi = params.xi()?;
    let ims: Vec<f64> = etas
        .iter()
        .map(|&z| {
            check_nonzero(z)?;
            let th = theta_raw(z, params.alpha, xi, PhaseConvention::Lax);
            // round-off on an Im θ = 0 curve counts as zero
            Ok(if th.im.abs() < 1e-13 * (1.0 + th.norm()) { 0.0 } else { th.im })
        })
        .collect::<Result<_>>()?;
    let eps = match epsilon0 {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(Error::Config(format!("epsilon0 must be positive, got {e}"))),
        None => {
            let m = ims.iter().map(|v| v.abs()).filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
            if m.is_finite() {
                0.5 * m
            } else {
                1.0
            }
        }
    };
    let mut part = RegionPartition { epsilon0: eps, varrho0: f64::INFINITY, ..RegionPartition::empty() };
    for (n, &im) in ims.iter().enumerate() {
        if im <= 0.0 {
            part.nabla.push(n);
        } else {
            part.delta.push(n);
        }
        if im.abs() < eps {
            part.lambda_set.push(n);
        } else {
            part.varrho0 = part.varrho0.min(im.abs());
        }
    }
    Ok(part)
}

/// One sample of the phase estimate on a lens ray.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseBoundSample {
    pub region: usize,
    pub r: f64,
    pub angle: f64,
    /// Re(2itθ)/t at z = r e^{i·angle}.
    pub value: f64,
    /// (1/8)|sin 2ψ|(|ξ−6|+3)G²(r) with G(r) = r² + r⁻².
    pub bound: f64,
    /// Margin of the inequality as printed: bound − value (odd), value + bound (even).
    pub printed_margin: f64,
    /// Whether e^{∓2itθ} used in the region decays: value > 0 (odd), value < 0 (even).
    pub decay_sign_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseBoundReport {
    pub psi: f64,
    pub xi: f64,
    pub samples: Vec<PhaseBoundSample>,
    pub worst_printed_margin: f64,
    pub decay_sign_violations: usize,
    /// Same bound with G(s) = s + s⁻¹ (the statement's reading) for comparison.
    pub worst_printed_margin_alt_g: f64,
}

/// Lens-angle admissibility 2|ξ−6|/(|ξ−6|+1) < cos ψ < 1.
pub fn lens_angle_admissible(psi: f64, xi: f64) -> bool {
    let d = (xi - 6.0).abs();
    let c = psi.cos();
    2.0 * d / (d + 1.0) < c && c < 1.0
}

/// Ray angle of region Ω_j, j = 1..8, for lens angle ψ.
pub fn region_ray(j: usize, psi: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    match j {
        1 => psi,
        2 => FRAC_PI_2 - psi,
        3 => FRAC_PI_2 + psi,
        4 => PI - psi,
        5 => PI + psi,
        6 => 3.0 * FRAC_PI_2 - psi,
        7 => 3.0 * FRAC_PI_2 + psi,
        _ => 2.0 * PI - psi,
    }
}

pub fn phase_bound_check(psi: f64, params: &ProblemParams, radii: &[f64]) -> Result<PhaseBoundReport> {
    let xi = params.xi()?;
    if !(xi > 5.0 && xi < 7.0) {
        return Err(Error::Config(format!("xi = {xi} outside (5, 7)")));
    }
    if !lens_angle_admissible(psi, xi) {
        return Err(Error::Config(format!("psi = {psi} violates the lens-angle condition at xi = {xi}")));
    }
    let d = (xi - 6.0).abs();
    let mut samples = Vec::new();
    let mut worst = f64::INFINITY;
    let mut worst_alt = f64::INFINITY;
    let mut violations = 0;
    for j in 1..=8 {
        let angle = region_ray(j, psi);
        for &r in radii {
            let z = Complex64::from_polar(r, angle);
            let value = -2.0 * theta_raw(z, params.alpha, xi, PhaseConvention::Lax).im;
            let pref = (2.0 * psi).sin().abs() * (d + 3.0) / 8.0;
            let g = r * r + 1.0 / (r * r);
            let g_alt = r + 1.0 / r;
            let (bound, bound_alt) = (pref * g * g, pref * g_alt * g_alt);
            let odd = j % 2 == 1;
            let margin = |b: f64| if odd { b - value } else { value + b };
            let printed_margin = margin(bound);
            worst = worst.min(printed_margin);
            worst_alt = worst_alt.min(margin(bound_alt));
            let decay_sign_ok = if odd { value > 0.0 } else { value < 0.0 };
            if !decay_sign_ok {
                violations += 1;
            }
            samples.push(PhaseBoundSample { region: j, r, angle, value, bound, printed_margin, decay_sign_ok });
        }
    }
    Ok(PhaseBoundReport {
        psi,
        xi,
        samples,
        worst_printed_margin: worst,
        decay_sign_violations: violations,
        worst_printed_margin_alt_g: worst_alt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn uniformize_examples() {
        let p = ProblemParams::unit(0.5);
        let s = uniformize(c(1.0, 0.0), &p).unwrap();
        assert_eq!(s.k, c(0.0, 0.0));
        assert_eq!(s.lambda, c(1.0, 0.0));
        let s = uniformize(c(0.0, 1.0), &ProblemParams::unit(0.7)).unwrap();
        assert!(s.lambda.norm() < 1e-15);
        assert_relative_eq!(s.k.im, 1.0 / 0.7, epsilon = 1e-14);
        let s = uniformize(c(2.0, 0.0), &p).unwrap();
        assert_relative_eq!(s.k.re, 1.5, epsilon = 1e-14);
        assert_relative_eq!(s.lambda.re, 1.25, epsilon = 1e-14);
        assert!(uniformize(c(0.0, 0.0), &p).is_err());
    }

    #[test]
    fn theta_at_two() {
        let p = ProblemParams::unit(0.5).with_xi(6.5);
        let printed = phase_theta_with(c(2.0, 0.0), &p, PhaseConvention::AsPrinted).unwrap();
        assert_relative_eq!(printed.re, -15.46875, epsilon = 1e-12);
        // kλ = 1.875, drift = 2·0.5·2.25 − 2 − 2 = −1.75
        let lax = phase_theta(c(2.0, 0.0), &p).unwrap();
        assert_relative_eq!(lax.re, -1.875 * 4.75, epsilon = 1e-12);
        assert_eq!(phase_theta(c(1.0, 0.0), &p).unwrap(), c(0.0, 0.0));
        assert!(phase_theta(c(2.0, 0.0), &ProblemParams::unit(0.5)).is_err());
    }

    #[test]
    fn re_exponent_matches_xy_form() {
        let p = ProblemParams::unit(1.0).with_xi(6.5);
        let z = c(1.0, 1.0) / 2f64.sqrt() * 1.2;
        let a = re_exponent(z, 1.0, &p).unwrap();
        let b = re_exponent_xy(z, 1.0, 6.5);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        assert_eq!(re_exponent(c(1.7, 0.0), 3.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn classify_examples() {
        let p = ProblemParams::unit(1.0).with_xi(6.5);
        let part = classify_points(&[], &p, None).unwrap();
        assert!(part.nabla.is_empty() && part.lambda_set.is_empty());
        assert!(part.varrho0.is_infinite());
        // unit-circle point where Im θ vanishes at ξ = 6.5: 2φ = 4π/3
        let on_curve = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let part = classify_points(&[on_curve], &p, Some(0.1)).unwrap();
        assert_eq!(part.nabla, vec![0]);
        assert_eq!(part.lambda_set, vec![0]);
    }

    #[test]
    fn sign_chart_real_axis_neutral() {
        let p = ProblemParams::unit(1.0).with_xi(6.5);
        let grid = PlaneGrid { re_min: 0.1, re_max: 3.0, n_re: 30, im_min: 0.0, im_max: 2.0, n_im: 11 };
        let ch = sign_chart(&p, &grid, 1e-12).unwrap();
        assert!(ch.signs[0].iter().all(|&s| s == 0));
    }

    #[test]
    fn phase_bound_r1_and_center() {
        let p = ProblemParams::unit(1.0).with_xi(6.5);
        let rep = phase_bound_check(0.2, &p, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        let s = rep.samples.iter().find(|s| s.region == 1 && s.r == 1.0).unwrap();
        assert_relative_eq!(s.bound, 0.5 * (0.4f64).sin() * 3.5, epsilon = 1e-14);
        assert_eq!(rep.decay_sign_violations, 0);
        assert!(phase_bound_check(1.2, &p, &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn map_symmetries(re in -4.0f64..4.0, im in -4.0f64..4.0, alpha in 0.2f64..3.0, xi in -8.0f64..8.0) {
            let z = c(re, im);
            prop_assume!(z.norm() > 0.05);
            let w = -z.inv();
            let tol = |a: Complex64| 1e-12 * (1.0 + a.norm());
            let (k1, k2) = (k_of(z, alpha), k_of(w, alpha));
            prop_assert!((k1 - k2).norm() < tol(k1));
            prop_assert!((lambda_of(z) + lambda_of(w)).norm() < tol(lambda_of(z)));
            let t1 = theta_raw(z, alpha, xi, PhaseConvention::Lax);
            let t2 = theta_raw(w, alpha, xi, PhaseConvention::Lax);
            prop_assert!((t1 + t2).norm() < 1e-11 * (1.0 + t1.norm()));
            let tc = theta_raw(z.conj(), alpha, xi, PhaseConvention::Lax);
            prop_assert!((tc - t1.conj()).norm() < 1e-11 * (1.0 + t1.norm()));
        }
    }
}
