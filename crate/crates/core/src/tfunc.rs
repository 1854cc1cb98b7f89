//! The partial transmission function T(z): Blaschke factors over the growing
//! eigenvalues times the Cauchy factor δ(z) built on iℝ.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C, I, ONE};
use crate::quadrature::{log_one_minus, RhoNode, RhoProducts};
use crate::spectral_plane::RegionPartition;
use crate::spectrum::{DiscreteSpectrum, Member};

/// Points closer than this to iℝ need the boundary-value variant.
pub const CONTOUR_GUARD: f64 = 1e-6;
/// Minimal distance to a pole η̄_n.
pub const POLE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TEvaluation {
    pub z: C,
    pub value: C,
    pub t_infinity: C,
    pub delta_value: C,
}

/// Which side of the jump contour a boundary value is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContourSide {
    /// Left of the orientation: Re z · Im z < 0 next to iℝ, Im z > 0 next to ℝ.
    Plus,
    Minus,
}

/// The contour carrying the δ integral.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpContour {
    /// iℝ, both rays oriented away from 0.
    #[default]
    ImaginaryAxis,
    /// ℝ, oriented left to right.
    RealAxis,
}

impl JumpContour {
    fn holds(self, n: &RhoNode) -> bool {
        match self {
            JumpContour::ImaginaryAxis => n.on_imaginary_axis(),
            JumpContour::RealAxis => !n.on_imaginary_axis(),
        }
    }

    fn weight(self, n: &RhoNode) -> C {
        match self {
            JumpContour::ImaginaryAxis => n.w,
            JumpContour::RealAxis => C::new(n.w.norm(), 0.0),
        }
    }

    /// Signed coordinate along the axis.
    fn coord(self, z: C) -> f64 {
        match self {
            JumpContour::ImaginaryAxis => z.im,
            JumpContour::RealAxis => z.re,
        }
    }

    /// Signed distance off the axis.
    fn offset(self, z: C) -> f64 {
        match self {
            JumpContour::ImaginaryAxis => z.re,
            JumpContour::RealAxis => z.im,
        }
    }

    fn point(self, coord: f64, offset: f64) -> C {
        match self {
            JumpContour::ImaginaryAxis => C::new(offset, coord),
            JumpContour::RealAxis => C::new(coord, offset),
        }
    }

    /// ∫ ds/(s − z) over r0 ≤ |s| ≤ r1 on the ray of sign `up`.
    fn ray_integral(self, up: bool, r0: f64, r1: f64, z: C) -> C {
        match (self, up) {
            (JumpContour::ImaginaryAxis, true) => ((I * r1 - z) / (I * r0 - z)).ln(),
            (JumpContour::ImaginaryAxis, false) => ((-I * r1 - z) / (-I * r0 - z)).ln(),
            (JumpContour::RealAxis, true) => ((r1 - z) / (r0 - z)).ln(),
            (JumpContour::RealAxis, false) => ((-r0 - z) / (-r1 - z)).ln(),
        }
    }
}

/// ∫ kernel(s) log(1 − ρρ̃(s)) ds over the contour.
fn contour_integral(rho: &RhoProducts, contour: JumpContour, kernel: impl Fn(C) -> C) -> Result<C> {
    let mut acc = C::new(0.0, 0.0);
    for n in &rho.nodes {
        if !contour.holds(n) || n.value == C::new(0.0, 0.0) {
            continue;
        }
        acc += kernel(n.s) * log_one_minus(n.s, n.value)? * contour.weight(n);
    }
    Ok(acc)
}

/// log(1 − ρρ̃) at an arbitrary point of the contour, interpolated linearly along its ray.
fn log_on_ray(rho: &RhoProducts, contour: JumpContour, s: C) -> Result<C> {
    let up = contour.coord(s) > 0.0;
    let mut pts: Vec<(f64, C)> = Vec::new();
    for n in &rho.nodes {
        if contour.holds(n) && (contour.coord(n.s) > 0.0) == up {
            pts.push((contour.coord(n.s).abs(), log_one_minus(n.s, n.value)?));
        }
    }
    if pts.is_empty() {
        return Ok(C::new(0.0, 0.0));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r = contour.coord(s).abs();
    if r <= pts[0].0 {
        return Ok(pts[0].1);
    }
    if r >= pts[pts.len() - 1].0 {
        return Ok(if r > rho.r_max { C::new(0.0, 0.0) } else { pts[pts.len() - 1].1 });
    }
    let j = pts.partition_point(|p| p.0 <= r);
    let (r0, l0) = pts[j - 1];
    let (r1, l1) = pts[j];
    Ok(l0 + (l1 - l0) * ((r - r0) / (r1 - r0)))
}

/// ∫ log(1 − ρρ̃)/(s − z) ds with the value at the projection of z onto the contour
/// subtracted and integrated in closed form, so the rule stays accurate near the contour.
fn cauchy(rho: &RhoProducts, contour: JumpContour, z: C) -> Result<C> {
    let s0 = contour.point(contour.coord(z), 0.0);
    let l0 = log_on_ray(rho, contour, s0)?;
    let mut acc = contour_integral(rho, contour, |s| (s - z).inv())?;
    if l0 == C::new(0.0, 0.0) {
        return Ok(acc);
    }
    let up = contour.coord(z) >= 0.0;
    for n in &rho.nodes {
        if contour.holds(n) && (contour.coord(n.s) > 0.0) == up {
            acc -= l0 / (n.s - z) * contour.weight(n);
        }
    }
    acc += l0 * contour.ray_integral(up, rho.r_min, rho.r_max, z);
    Ok(acc)
}

fn delta_exponent(rho: &RhoProducts, contour: JumpContour, z: C) -> Result<C> {
    let c = cauchy(rho, contour, z)?;
    let half = contour_integral(rho, contour, |s| 0.5 / s)?;
    Ok(-(c - half) / (2.0 * PI * I))
}

/// δ(z) = exp{−(1/2πi)∫_{iℝ}(1/(s−z) − 1/(2s)) log(1−ρρ̃) ds}.
pub fn delta_integral(rho: &RhoProducts, z: C) -> Result<C> {
    delta_integral_on(rho, JumpContour::ImaginaryAxis, z)
}

/// δ(z) with the integral taken over `contour`.
pub fn delta_integral_on(rho: &RhoProducts, contour: JumpContour, z: C) -> Result<C> {
    if contour.offset(z).abs() < CONTOUR_GUARD {
        return Err(Error::Domain(format!(
            "z = {z} lies within {CONTOUR_GUARD} of the jump contour; use the boundary-value variant"
        )));
    }
    Ok(delta_exponent(rho, contour, z)?.exp())
}

/// δ(0) = exp{−(1/4πi)∫ s⁻¹ log(1−ρρ̃) ds}, δ(∞) = its inverse.
fn delta_infinity(rho: &RhoProducts, contour: JumpContour) -> Result<C> {
    Ok((contour_integral(rho, contour, |s| s.inv())? / (4.0 * PI * I)).exp())
}

/// Blaschke data of T: growing quartet representatives and circle points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TFunction {
    pub quartets: Vec<C>,
    pub circle: Vec<C>,
    pub rho: RhoProducts,
    #[serde(default)]
    pub contour: JumpContour,
}

impl TFunction {
    /// Δ taken from a partition over the expanded spectrum; a quartet or pair enters
    /// when its representative does.
    pub fn new(partition: &RegionPartition, spectrum: &DiscreteSpectrum, rho: &RhoProducts) -> Self {
        let mut quartets = Vec::new();
        let mut circle = Vec::new();
        for (n, e) in spectrum.expanded().iter().enumerate() {
            if !partition.delta.contains(&n) || partition.lambda_set.contains(&n) {
                continue;
            }
            match e.member {
                Member::Quartet { member: 0, .. } => quartets.push(e.eta),
                Member::Circle { member: 0, .. } => circle.push(e.eta),
                _ => {}
            }
        }
        Self { quartets, circle, rho: rho.clone(), contour: JumpContour::default() }
    }

    pub fn from_points(quartets: Vec<C>, circle: Vec<C>, rho: RhoProducts) -> Self {
        Self { quartets, circle, rho, contour: JumpContour::default() }
    }

    pub fn with_contour(mut self, contour: JumpContour) -> Self {
        self.contour = contour;
        self
    }

    pub fn poles(&self) -> Vec<C> {
        let mut p = Vec::new();
        for &z in &self.quartets {
            p.extend([z.conj(), -z.conj(), z.inv(), -z.inv()]);
        }
        for &w in &self.circle {
            p.extend([w.conj(), -w.conj()]);
        }
        p
    }

    pub fn zeros(&self) -> Vec<C> {
        let mut p = Vec::new();
        for &z in &self.quartets {
            p.extend([z, -z, z.conj().inv(), -z.conj().inv()]);
        }
        for &w in &self.circle {
            p.extend([w, -w]);
        }
        p
    }

    pub fn blaschke(&self, z: C) -> Result<C> {
        for p in self.poles() {
            let d = (z - p).norm();
            if d < POLE_GUARD {
                return Err(Error::Pole { z, pole: p, distance: d });
            }
        }
        let z2 = z * z;
        let mut b = ONE;
        for &zj in &self.quartets {
            let zj2 = zj * zj;
            let wb = zj.conj().powi(-2);
            b *= (z2 - zj2) / (wb * z2 - 1.0) * (z2 - wb) / (zj2 * z2 - 1.0);
        }
        for &w in &self.circle {
            let w2 = w * w;
            b *= (z2 - w2) / (w2 * z2 - 1.0);
        }
        Ok(b)
    }

    pub fn eval(&self, z: C) -> Result<TEvaluation> {
        let b = self.blaschke(z)?;
        let d = delta_integral_on(&self.rho, self.contour, z)?;
        Ok(TEvaluation { z, value: b * d, t_infinity: self.t_infinity()?, delta_value: d })
    }

    pub fn value(&self, z: C) -> Result<C> {
        Ok(self.blaschke(z)? * delta_integral_on(&self.rho, self.contour, z)?)
    }

    /// T(∞) = Π z̄_j² z_j⁻² · Π w̄_ℓ² · exp{(1/4πi)∫ s⁻¹ log(1−ρρ̃) ds}.
    pub fn t_infinity(&self) -> Result<C> {
        let mut b = ONE;
        for &zj in &self.quartets {
            b *= zj.conj().powi(2) / (zj * zj);
        }
        for &w in &self.circle {
            b *= w.conj().powi(2);
        }
        Ok(b * delta_infinity(&self.rho, self.contour)?)
    }

    /// T(0).
    pub fn t_zero(&self) -> Result<C> {
        let mut b = ONE;
        for &zj in &self.quartets {
            b *= zj * zj / zj.conj().powi(2);
        }
        for &w in &self.circle {
            b *= w * w;
        }
        Ok(b / delta_infinity(&self.rho, self.contour)?)
    }

    /// Limit of T at a contour point s from the given side; offsets ε and 2ε with
    /// Richardson extrapolation.
    pub fn boundary_value(&self, s: C, side: ContourSide, eps: f64) -> Result<C> {
        // the plus side lies left of the orientation
        let left = match self.contour {
            JumpContour::ImaginaryAxis if s.im > 0.0 => -1.0,
            JumpContour::ImaginaryAxis => 1.0,
            JumpContour::RealAxis => 1.0,
        };
        let sign = match side {
            ContourSide::Plus => left,
            ContourSide::Minus => -left,
        };
        let c = self.contour.coord(s);
        let at = |e: f64| -> Result<C> {
            let z = self.contour.point(c, sign * e);
            Ok(self.blaschke(z)? * delta_exponent(&self.rho, self.contour, z)?.exp())
        };
        Ok(2.0 * at(eps)? - at(2.0 * eps)?)
    }

    /// |T(Minus side) − (1 − ρρ̃(s)) T(Plus side)| / |T(Plus side)|.
    pub fn jump_residual(&self, s: C, eps: f64) -> Result<f64> {
        let tp = self.boundary_value(s, ContourSide::Plus, eps)?;
        let tm = self.boundary_value(s, ContourSide::Minus, eps)?;
        let factor = log_on_ray(&self.rho, self.contour, s)?.exp();
        Ok((tm - factor * tp).norm() / tp.norm())
    }

    /// z⁻¹ coefficient of T(z)/T(∞) by two-point extrapolation along a ray, and
    /// the closed form (1/2πi)∫ log(1−ρρ̃) ds.
    pub fn expansion_coefficient(&self, radius: f64) -> Result<(C, C)> {
        let tinf = self.t_infinity()?;
        let dir = Complex64::from_polar(1.0, PI / 4.0);
        let f = |r: f64| -> Result<C> {
            let z = dir * r;
            Ok(z * (self.value(z)? / tinf - 1.0))
        };
        let numeric = 2.0 * f(2.0 * radius)? - f(radius)?;
        let closed = contour_integral(&self.rho, self.contour, |_| ONE)? / (2.0 * PI * I);
        Ok((numeric, closed))
    }

    /// Max over the sample pairs of |T(z)conj(T(z̄)) − 1| and the inversion residual:
    /// |T(z)T(−1/z) − 1| on iℝ, |δ(z)/δ(−1/z) − 1| on ℝ, where s ↦ −1/s keeps the orientation.
    pub fn symmetry_residuals(&self, samples: &[C]) -> Result<(f64, f64)> {
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for &z in samples {
            let t = self.value(z)?;
            let w = -z.inv();
            a = a.max((t * self.value(z.conj())?.conj() - 1.0).norm());
            let inv = match self.contour {
                JumpContour::ImaginaryAxis => t * self.value(w)? - 1.0,
                JumpContour::RealAxis => {
                    t / self.blaschke(z)? / (self.value(w)? / self.blaschke(w)?) - 1.0
                }
            };
            b = b.max(inv.norm());
        }
        Ok((a, b))
    }
}

/// Free-function form of [`TFunction::eval`].
pub fn t_eval(partition: &RegionPartition, spectrum: &DiscreteSpectrum, rho: &RhoProducts, z: C) -> Result<TEvaluation> {
    TFunction::new(partition, spectrum, rho).eval(z)
}

/// Free-function form of [`TFunction::t_infinity`].
pub fn t_infinity(partition: &RegionPartition, spectrum: &DiscreteSpectrum, rho: &RhoProducts) -> Result<C> {
    TFunction::new(partition, spectrum, rho).t_infinity()
}

/// max |s11(z)/T(z)| over the samples.
pub fn transmission_bound(t: &TFunction, s11: impl Fn(C) -> Result<C>, samples: &[C]) -> Result<f64> {
    let mut m: f64 = 0.0;
    for &z in samples {
        m = m.max((s11(z)? / t.value(z)?).norm());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech2(x: f64) -> f64 {
        1.0 / x.cosh().powi(2)
    }

    fn symmetric_data(n: usize) -> RhoProducts {
        RhoProducts::from_fn(|s| C::new(0.25 * (-2.0 * s.norm().ln().powi(2)).exp(), 0.0), 50.0, n)
    }

    #[test]
    fn trivial_t_is_one() {
        let t = TFunction::from_points(vec![], vec![], RhoProducts::zero());
        assert_eq!(t.value(C::new(0.3, 2.0)).unwrap(), ONE);
        assert_eq!(t.t_infinity().unwrap(), ONE);
    }

    #[test]
    fn t0_times_tinf() {
        let t = TFunction::from_points(vec![C::from_polar(1.4, 2.0)], vec![C::from_polar(1.0, 2.3)], symmetric_data(4000));
        assert!((t.t_zero().unwrap() * t.t_infinity().unwrap() - 1.0).norm() < 1e-12);
        // T(0) from the formula agrees with a small-|z| evaluation
        let near = t.value(C::new(1e-6, 1e-6)).unwrap();
        assert!((near - t.t_zero().unwrap()).norm() < 1e-5);
    }

    #[test]
    fn symmetry_with_symmetric_data() {
        let t = TFunction::from_points(vec![C::from_polar(1.4, 2.0)], vec![C::from_polar(1.0, 2.3)], symmetric_data(4000));
        let pts = [C::new(0.7, 0.4), C::new(-1.3, 2.0), C::new(2.0, -0.5)];
        let (a, b) = t.symmetry_residuals(&pts).unwrap();
        assert!(a < 1e-6 && b < 1e-6, "{a} {b}");
    }

    #[test]
    fn delta_converges() {
        // data must vanish at s = 0, where the 1/(2s) kernel is not integrable
        let f = |s: C| C::new(0.25 * sech2(s.norm().ln()), 0.0);
        let coarse = delta_integral(&RhoProducts::from_fn(f, 50.0, 4000), C::new(2.0, 0.0)).unwrap();
        let fine = delta_integral(&RhoProducts::from_fn(f, 50.0, 40000), C::new(2.0, 0.0)).unwrap();
        assert!((coarse - fine).norm() < 1e-8, "{}", (coarse - fine).norm());
    }

    #[test]
    fn jump_across_imaginary_axis() {
        let t = TFunction::from_points(vec![C::from_polar(1.4, 2.0)], vec![], symmetric_data(4000));
        for s in [C::new(0.0, 0.5), C::new(0.0, 1.7), C::new(0.0, -2.3)] {
            let r = t.jump_residual(s, 1e-6).unwrap();
            assert!(r < 1e-6, "{s}: {r}");
        }
    }

    #[test]
    fn expansion_matches_closed_form() {
        let t = TFunction::from_points(vec![], vec![C::from_polar(1.0, 2.3)], symmetric_data(4000));
        let (num, closed) = t.expansion_coefficient(2000.0).unwrap();
        assert!((num - closed).norm() < 1e-6, "{num} {closed}");
    }

    #[test]
    fn contour_guard() {
        assert!(delta_integral(&RhoProducts::zero(), C::new(0.0, 2.0)).is_err());
        assert!(delta_integral_on(&RhoProducts::zero(), JumpContour::RealAxis, C::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn real_axis_contour() {
        let t = TFunction::from_points(vec![C::from_polar(1.4, 2.0)], vec![C::from_polar(1.0, 2.3)], symmetric_data(4000))
            .with_contour(JumpContour::RealAxis);
        for s in [C::new(0.5, 0.0), C::new(1.7, 0.0), C::new(-2.3, 0.0)] {
            let r = t.jump_residual(s, 1e-6).unwrap();
            assert!(r < 1e-6, "{s}: {r}");
        }
        assert!((t.t_zero().unwrap() * t.t_infinity().unwrap() - 1.0).norm() < 1e-12);
        let (a, b) = t.symmetry_residuals(&[C::new(0.7, 0.4), C::new(-1.3, 2.0), C::new(0.3, -0.5)]).unwrap();
        assert!(a < 1e-6 && b < 1e-6, "{a} {b}");
        let (num, closed) = t.expansion_coefficient(2000.0).unwrap();
        assert!((num - closed).norm() < 1e-6, "{num} {closed}");
    }
}
