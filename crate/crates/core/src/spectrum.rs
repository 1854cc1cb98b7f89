//! Discrete spectrum: zero search for s11, norming constants, symmetry
//! completion, time evolution and the trace formula.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSnapshot;
use crate::linalg::{C, I, ONE, ZERO};
use crate::quadrature::{gauss_legendre, RhoProducts};
use crate::scattering::{jost_column, s11_analytic, JostOptions, Side};
use crate::spectral_plane::{evolution_factor, k_lambda};

/// A generic eigenvalue z (Im z > 0, |z| > 1, Re z · Im z < 0) with its norming constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenQuartet {
    pub z: C,
    pub c: C,
}

/// An eigenvalue ζ on the upper unit semicircle with its norming constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleEigenpair {
    pub zeta: C,
    pub c: C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Member {
    /// Quartet `index`, orbit member 0..4 (z, −z, 1/z̄, −1/z̄).
    Quartet { index: usize, member: usize },
    /// Circle pair `index`, member 0..2 (ζ, −ζ).
    Circle { index: usize, member: usize },
}

/// One point η_n of the completed spectrum with its residue constant C_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpandedEigenvalue {
    pub eta: C,
    pub big_c: C,
    pub member: Member,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub quartets: Vec<EigenQuartet>,
    pub circle: Vec<CircleEigenpair>,
    pub alpha: f64,
    pub q_minus: C,
}

impl DiscreteSpectrum {
    pub fn empty(alpha: f64, q_minus: C) -> Self {
        Self { quartets: Vec::new(), circle: Vec::new(), alpha, q_minus }
    }

    pub fn is_empty(&self) -> bool {
        self.quartets.is_empty() && self.circle.is_empty()
    }

    /// Residue constant of the 1/z̄ and −1/z̄ orbit members.
    pub fn reciprocal_constant(&self, z: C, c: C) -> C {
        let q = self.q_minus;
        q.conj() / q * z.conj().powi(-2) * c.conj()
    }

    /// Completed list: z_n, −z_n, 1/z̄_n, −1/z̄_n for all quartets, then ζ_m, −ζ_m.
    pub fn expanded(&self) -> Vec<ExpandedEigenvalue> {
        let n1 = self.quartets.len();
        let n2 = self.circle.len();
        let mut out = Vec::with_capacity(4 * n1 + 2 * n2);
        for member in 0..4 {
            for (index, qd) in self.quartets.iter().enumerate() {
                let w = qd.z.conj().inv();
                let (eta, big_c) = match member {
                    0 => (qd.z, qd.c),
                    1 => (-qd.z, qd.c),
                    2 => (w, self.reciprocal_constant(qd.z, qd.c)),
                    _ => (-w, self.reciprocal_constant(qd.z, qd.c)),
                };
                out.push(ExpandedEigenvalue { eta, big_c, member: Member::Quartet { index, member } });
            }
        }
        for member in 0..2 {
            for (index, cp) in self.circle.iter().enumerate() {
                let eta = if member == 0 { cp.zeta } else { -cp.zeta };
                out.push(ExpandedEigenvalue { eta, big_c: cp.c, member: Member::Circle { index, member } });
            }
        }
        out
    }

    /// Representatives in the order quartets then circle pairs.
    pub fn representatives(&self) -> Vec<C> {
        self.quartets.iter().map(|q| q.z).chain(self.circle.iter().map(|c| c.zeta)).collect()
    }

    /// Norming constants at time t under the evolution c ↦ c·e^{2ikλ v t}.
    pub fn evolved(&self, t: f64) -> Self {
        let a = self.alpha;
        let f = |z: C| evolution_factor(z, 0.0, t, a);
        Self {
            quartets: self.quartets.iter().map(|q| EigenQuartet { z: q.z, c: q.c * f(q.z) }).collect(),
            circle: self.circle.iter().map(|p| CircleEigenpair { zeta: p.zeta, c: p.c * f(p.zeta) }).collect(),
            alpha: self.alpha,
            q_minus: self.q_minus,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sp: Self = serde_json::from_str(s)?;
        for q in &sp.quartets {
            if !(q.z.im > 0.0 && q.z.norm() > 1.0) {
                return Err(Error::Config(format!("quartet representative {} must satisfy Im z > 0, |z| > 1", q.z)));
            }
        }
        for p in &sp.circle {
            if (p.zeta.norm() - 1.0).abs() > 1e-10 || p.zeta.im <= 0.0 {
                return Err(Error::Config(format!("circle eigenvalue {} must lie on the upper unit semicircle", p.zeta)));
            }
        }
        Ok(sp)
    }
}

/// Axis-aligned search rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn contains(&self, z: C) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    fn center(&self) -> C {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn quarters(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect { re_min: self.re_min, re_max: c.re, im_min: self.im_min, im_max: c.im },
            Rect { re_min: c.re, re_max: self.re_max, im_min: self.im_min, im_max: c.im },
            Rect { re_min: self.re_min, re_max: c.re, im_min: c.im, im_max: self.im_max },
            Rect { re_min: c.re, re_max: self.re_max, im_min: c.im, im_max: self.im_max },
        ]
    }

    fn corners(&self) -> [C; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

/// Search settings for [`find_zeros`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    /// Rectangles searched for generic zeros (should avoid |z| = 1 and the axes).
    pub rects: Vec<Rect>,
    /// Arc e^{iφ}, φ ∈ (phi_min, phi_max), searched for circle zeros.
    pub arc: Option<(f64, f64)>,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default = "default_arc_scan")]
    pub arc_scan: usize,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
}

fn default_depth() -> usize {
    6
}
fn default_arc_scan() -> usize {
    240
}
fn default_zero_tol() -> f64 {
    1e-10
}

impl SearchRegion {
    /// Upper-left quadrant box for quartets plus the upper-left quarter arc.
    pub fn standard(r_max: f64) -> Self {
        Self {
            rects: vec![Rect { re_min: -r_max, re_max: -0.02, im_min: 0.02, im_max: r_max }],
            arc: Some((PI / 2.0 + 1e-3, PI - 1e-3)),
            max_depth: default_depth(),
            arc_scan: default_arc_scan(),
            zero_tol: default_zero_tol(),
        }
    }
}

const GL_NODES: usize = 64;
const UNIT_CIRCLE_GAP: f64 = 1e-6;

/// Winding number of f around the rectangle boundary from phase increments
/// sampled at Gauss–Legendre nodes on each edge, refined where the phase jumps.
pub fn winding_number<F>(f: &F, rect: &Rect) -> Result<i64>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let (x, _) = gauss_legendre(GL_NODES);
    let corners = rect.corners();
    let mut pts: Vec<C> = Vec::with_capacity(4 * (GL_NODES + 1));
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        pts.push(a);
        for &t in &x {
            pts.push(a + (b - a) * (0.5 * (t + 1.0)));
        }
    }
    pts.push(corners[0]);
    let vals = eval_many(f, &pts)?;
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut total = 0.0;
    for i in 0..pts.len() - 1 {
        total += phase_increment(f, pts[i], pts[i + 1], vals[i], vals[i + 1], scale, 0)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn phase_increment<F>(f: &F, a: C, b: C, fa: C, fb: C, scale: f64, depth: usize) -> Result<f64>
where
    F: Fn(C) -> Result<C> + Sync,
{
    for (z, v) in [(a, fa), (b, fb)] {
        if v.norm() < 1e-13 * scale.max(1.0) {
            return Err(Error::Singularity { z, modulus: v.norm() });
        }
    }
    let d = (fb / fa).arg();
    if d.abs() < PI / 4.0 || depth >= 20 {
        return Ok(d);
    }
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    Ok(phase_increment(f, a, m, fa, fm, scale, depth + 1)? + phase_increment(f, m, b, fm, fb, scale, depth + 1)?)
}

fn eval_many<F>(f: &F, pts: &[C]) -> Result<Vec<C>>
where
    F: Fn(C) -> Result<C> + Sync,
{
    use rayon::prelude::*;
    pts.par_iter().map(|&z| f(z)).collect()
}

/// Newton iteration with a central-difference derivative.
pub fn newton<F>(f: &F, z0: C, tol: f64, max_iter: usize) -> Result<C>
where
    F: Fn(C) -> Result<C>,
{
    let mut z = z0;
    for _ in 0..max_iter {
        let fz = f(z)?;
        if fz.norm() < tol {
            return Ok(z);
        }
        let h = 1e-6 * z.norm().max(1.0);
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.is_finite() {
            return Err(Error::Numerical(format!("vanishing derivative in Newton at {z}")));
        }
        let step = fz / d;
        z -= step;
        if step.norm() < 1e-14 * z.norm().max(1.0) {
            let r = f(z)?.norm();
            return if r < tol.max(1e-9) {
                Ok(z)
            } else {
                Err(Error::Numerical(format!("Newton stalled at {z} with |f| = {r:.3e}")))
            };
        }
    }
    Err(Error::Numerical(format!("Newton did not converge from {z0}")))
}

/// Simple zeros of an analytic function in a rectangle by recursive subdivision.
pub fn find_rect_zeros<F>(f: &F, rect: &Rect, max_depth: usize, tol: f64) -> Result<Vec<C>>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let w = winding_number(f, rect)?;
    if w < 0 {
        return Err(Error::Numerical(format!("negative winding number {w}: function has poles in the region")));
    }
    let found = subdivide(f, rect, w, max_depth, tol)?;
    if found.len() as i64 != w {
        return Err(Error::IncompleteSearch { winding: w, found: found.len() });
    }
    Ok(found)
}

fn subdivide<F>(f: &F, rect: &Rect, w: i64, depth: usize, tol: f64) -> Result<Vec<C>>
where
    F: Fn(C) -> Result<C> + Sync,
{
    if w == 0 {
        return Ok(Vec::new());
    }
    if w == 1 {
        if let Ok(z) = newton(f, rect.center(), tol, 60) {
            if rect.contains(z) {
                return Ok(vec![z]);
            }
        }
    }
    if depth == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut counted = 0;
    for sub in rect.quarters() {
        let ws = winding_number(f, &sub)?;
        counted += ws;
        out.extend(subdivide(f, &sub, ws, depth - 1, tol)?);
    }
    if counted != w {
        return Err(Error::IncompleteSearch { winding: w, found: out.len() });
    }
    Ok(out)
}

/// Zeros of f(e^{iφ}) on an arc: scan |f| for local minima, then Gauss–Newton in φ.
pub fn find_arc_zeros<F>(f: &F, phi_min: f64, phi_max: f64, n_scan: usize, tol: f64) -> Result<Vec<C>>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let phis: Vec<f64> = (0..=n_scan).map(|j| phi_min + (phi_max - phi_min) * j as f64 / n_scan as f64).collect();
    let pts: Vec<C> = phis.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    let vals: Vec<f64> = eval_many(f, &pts)?.iter().map(|v| v.norm()).collect();
    let g = |p: f64| f(Complex64::from_polar(1.0, p));
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let spacing = (phi_max - phi_min) / n_scan as f64;
    let mut out: Vec<C> = Vec::new();
    for j in 1..n_scan {
        // flat stretches of |f| have round-off minima; only genuine dips are refined
        if !(vals[j] <= vals[j - 1] && vals[j] <= vals[j + 1]) || vals[j] > 0.5 * top {
            continue;
        }
        let mut p = phis[j];
        let mut ok = false;
        for _ in 0..60 {
            let v = g(p)?;
            if v.norm() < tol {
                ok = true;
                p = polish_arc(&g, p, v.norm())?;
                break;
            }
            let h = 1e-6;
            let d = (g(p + h)? - g(p - h)?) / (2.0 * h);
            if d.norm() == 0.0 {
                break;
            }
            let step = ((d.conj() * v).re / d.norm_sqr()).clamp(-spacing, spacing);
            p -= step;
            if !(p > phi_min && p < phi_max) {
                break;
            }
            if step.abs() < 1e-15 {
                ok = g(p)?.norm() < tol.max(1e-9);
                break;
            }
        }
        if ok && p > phi_min && p < phi_max {
            let z = Complex64::from_polar(1.0, p);
            if !out.iter().any(|w| (w - z).norm() < 1e-8) {
                out.push(z);
            }
        }
    }
    Ok(out)
}

// A few extra Newton steps past the tolerance, kept only while |f| shrinks.
fn polish_arc<G>(g: &G, mut p: f64, mut best: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<C>,
{
    for _ in 0..3 {
        let v = g(p)?;
        let h = 1e-6;
        let d = (g(p + h)? - g(p - h)?) / (2.0 * h);
        if d.norm() == 0.0 {
            break;
        }
        let q = p - (d.conj() * v).re / d.norm_sqr();
        let fq = g(q)?.norm();
        if fq >= best {
            break;
        }
        p = q;
        best = fq;
    }
    Ok(p)
}

/// Central-difference derivative of s11 along the direction of analyticity.
pub fn s11_derivative(field: &FieldSnapshot, z: C, opts: &JostOptions) -> Result<C> {
    let h = 1e-4 * z.norm().max(1.0);
    Ok((s11_analytic(field, z + h, opts)? - s11_analytic(field, z - h, opts)?) / (2.0 * h))
}

/// Locate the zeros of s11 in the search region and attach their norming constants.
pub fn find_zeros(field: &FieldSnapshot, region: &SearchRegion) -> Result<DiscreteSpectrum> {
    let opts = JostOptions::default();
    let f = |z: C| s11_analytic(field, z, &opts);
    let mut quartets = Vec::new();
    for r in &region.rects {
        // a Q2 box also holds 1/z̄ of each quartet and any unit-circle zeros;
        // only the outer member represents the quartet
        for z in find_rect_zeros(&f, r, region.max_depth, region.zero_tol)? {
            if z.norm() > 1.0 + UNIT_CIRCLE_GAP {
                quartets.push(EigenQuartet { z, c: ZERO });
            }
        }
    }
    let mut circle = Vec::new();
    if let Some((a, b)) = region.arc {
        for zeta in find_arc_zeros(&f, a, b, region.arc_scan, region.zero_tol)? {
            circle.push(CircleEigenpair { zeta, c: ZERO });
        }
    }
    let sp = DiscreteSpectrum { quartets, circle, alpha: field.params.alpha, q_minus: field.params.q_minus };
    norming_constants(field, &sp)
}

/// Proportionality μ₊,₁ = b e^{2ikλx} μ₋,₂ by least squares; returns (b, relative residual).
pub fn proportionality(field: &FieldSnapshot, z: C, opts: &JostOptions) -> Result<(C, f64)> {
    let n = field.grid.n;
    let plus = jost_column(field, z, Side::Plus, 0, 0, opts)?;
    let minus = jost_column(field, z, Side::Minus, 1, n - 1, opts)?;
    let kl = k_lambda(z, field.params.alpha);
    let mut num = ZERO;
    let mut den = 0.0;
    // where either column has decayed to its floor the ratio is noise, so only
    // nodes where both are within PROPORTIONALITY_WINDOW of their peak count
    let size = |c: &[C; 2]| c[0].norm().max(c[1].norm());
    let umax = plus.iter().map(size).fold(0.0, f64::max);
    let mmax = minus.iter().map(size).fold(0.0, f64::max);
    let used: Vec<([C; 2], [C; 2])> = (0..n)
        .filter(|&j| size(&plus[j]) > PROPORTIONALITY_WINDOW * umax && size(&minus[j]) > PROPORTIONALITY_WINDOW * mmax)
        .map(|j| {
            let e = (2.0 * I * kl * field.grid.x(j)).exp();
            (plus[j], [minus[j][0] * e, minus[j][1] * e])
        })
        .collect();
    if used.is_empty() {
        return Err(Error::Numerical(format!("Jost columns at {z} share no significant support")));
    }
    for (u, v) in &used {
        num += v[0].conj() * u[0] + v[1].conj() * u[1];
        den += v[0].norm_sqr() + v[1].norm_sqr();
    }
    let b = num / den;
    let mut res = 0.0;
    let mut norm = 0.0;
    for (u, v) in &used {
        res += (u[0] - b * v[0]).norm_sqr() + (u[1] - b * v[1]).norm_sqr();
        norm += u[0].norm_sqr() + u[1].norm_sqr();
    }
    Ok((b, (res / norm).sqrt()))
}

pub const PROPORTIONALITY_TOL: f64 = 1e-4;
const PROPORTIONALITY_WINDOW: f64 = 1e-4;

/// Fill c = b / s11′ for every eigenvalue of the spectrum.
pub fn norming_constants(field: &FieldSnapshot, spectrum: &DiscreteSpectrum) -> Result<DiscreteSpectrum> {
    let opts = JostOptions::default();
    let constant = |z: C| -> Result<C> {
        let (b, res) = proportionality(field, z, &opts)?;
        if res > PROPORTIONALITY_TOL {
            return Err(Error::Validation(format!(
                "Jost columns not parallel at {z}: residual {res:.3e}, not an eigenvalue"
            )));
        }
        Ok(b / s11_derivative(field, z, &opts)?)
    };
    let mut out = spectrum.clone();
    for q in &mut out.quartets {
        q.c = constant(q.z)?;
    }
    for p in &mut out.circle {
        p.c = constant(p.zeta)?;
    }
    Ok(out)
}

/// Spectrum and reflection data carried to time t.
#[derive(Debug, Clone)]
pub struct EvolvedData {
    pub t: f64,
    pub spectrum: DiscreteSpectrum,
    pub rho: Vec<(C, C)>,
}

/// Time evolution of scattering data: c ↦ c e^{2ikλvt}, ρ ↦ ρ e^{2ikλvt}.
/// Combined with the x-dependence this is the factor e^{−2itθ} at ξ = x/t.
pub fn evolve_scattering(spectrum: &DiscreteSpectrum, rho_samples: &[(C, C)], t: f64) -> EvolvedData {
    let a = spectrum.alpha;
    EvolvedData {
        t,
        spectrum: spectrum.evolved(t),
        rho: rho_samples.iter().map(|&(z, r)| (z, r * evolution_factor(z, 0.0, t, a))).collect(),
    }
}

/// The literal real-exponent factor e^{−(2αk²−4α−α⁻¹)kλt}, kept only as a diagnostic.
pub fn printed_evolution_factor(z: C, t: f64, alpha: f64) -> C {
    let k = crate::spectral_plane::k_of(z, alpha);
    (-(2.0 * alpha * k * k - 4.0 * alpha - 1.0 / alpha) * k_lambda(z, alpha) * t).exp()
}

/// Blaschke product Π (z − η_j)/(z − η̄_j) over the completed spectrum.
pub fn blaschke(spectrum: &DiscreteSpectrum, z: C) -> C {
    spectrum.expanded().iter().fold(ONE, |acc, e| acc * (z - e.eta) / (z - e.eta.conj()))
}

/// Trace formula s11(z) = e^{−iν₀} Π (z−η_j)/(z−η̄_j) · exp{−(1/2πi)∫_Σ log(1−ρρ̃)/(s−z) ds},
/// with Σ oriented so that the analyticity region of s11 lies on its left.
pub fn trace_s11(rho: &RhoProducts, spectrum: &DiscreteSpectrum, z: C, nu0: f64) -> Result<C> {
    for e in spectrum.expanded() {
        if (z - e.eta.conj()).norm() < 1e-12 {
            return Err(Error::Pole { z, pole: e.eta.conj(), distance: (z - e.eta.conj()).norm() });
        }
    }
    let integral = rho.integrate(|s| (s - z).inv(), false)?;
    Ok((-I * nu0).exp() * blaschke(spectrum, z) * (-integral / (2.0 * PI * I)).exp())
}
