//! Direct scattering: Jost solutions, the scattering matrix and its symmetries.
//!
//! Each Jost column is written as μ = Y±·c with c' = D c + Y±⁻¹ΔX± Y± c, where the
//! diagonal part D (0 and ±2ikλ) is propagated exactly and the remainder is stepped
//! with an embedded Dormand–Prince 5(4) pair (Lawson form).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSnapshot;
use crate::linalg::{self, Mat2, Vec2, C, I, ONE, ZERO};
use crate::spectral_plane::{k_lambda, k_of};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

/// Tolerances of the adaptive column integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JostOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for JostOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, max_steps: 5_000_000 }
    }
}

/// Points closer than this to {0, ±i} are rejected.
pub const SINGULAR_GUARD: f64 = 1e-10;

fn check_regular(z: C) -> Result<()> {
    for p in [ZERO, I, -I] {
        if (z - p).norm() < SINGULAR_GUARD {
            return Err(Error::Domain(format!("z = {z} is a singular point of the Jost solutions")));
        }
    }
    Ok(())
}

struct ColumnOde<'a> {
    field: &'a FieldSnapshot,
    k: C,
    q_side: C,
    y: Mat2,
    y_inv: Mat2,
    /// Diagonal exponents of D.
    d: [C; 2],
}

impl<'a> ColumnOde<'a> {
    fn new(field: &'a FieldSnapshot, z: C, side: Side, col: usize) -> Self {
        let alpha = field.params.alpha;
        let q_side = match side {
            Side::Minus => field.params.q_minus,
            Side::Plus => field.params.q_plus,
        };
        let kl = k_lambda(z, alpha);
        let y = linalg::y_matrix(q_side, z);
        let d = if col == 0 { [ZERO, 2.0 * I * kl] } else { [-2.0 * I * kl, ZERO] };
        Self { field, k: k_of(z, alpha), q_side, y, y_inv: linalg::inv(&y), d }
    }

    /// q(x) − q± by cubic Lagrange interpolation; edge values continued outside the grid.
    fn dq_at(&self, x: f64) -> C {
        let g = &self.field.grid;
        let n = g.n;
        let h = g.h();
        let d = |j: usize| self.field.q[j] - self.q_side;
        if x <= -g.half_width {
            return d(0);
        }
        if x >= g.half_width {
            return d(n - 1);
        }
        let s = (x + g.half_width) / h;
        let j = (s.floor() as isize).clamp(1, n as isize - 3) as usize;
        let t = s - j as f64;
        let (a, b, c, e) = (d(j - 1), d(j), d(j + 1), d(j + 2));
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        a * w0 + b * w1 + c * w2 + e * w3
    }

    /// B(x) = Y⁻¹ · ik(Q(x) − Q±) · Y.
    fn b(&self, x: f64) -> Mat2 {
        let dq = self.dq_at(x);
        let dx = [[ZERO, I * self.k * dq], [I * self.k * dq.conj(), ZERO]];
        linalg::mat_mul(&self.y_inv, &linalg::mat_mul(&dx, &self.y))
    }

    /// Lawson right-hand side e^{−Ds} B(x0+s) e^{Ds} u.
    fn rhs(&self, x0: f64, s: f64, u: &Vec2) -> Vec2 {
        let b = self.b(x0 + s);
        let e = [(self.d[0] * s).exp(), (self.d[1] * s).exp()];
        let w = [e[0] * u[0], e[1] * u[1]];
        let bw = linalg::mat_vec(&b, &w);
        [bw[0] / e[0], bw[1] / e[1]]
    }

    /// One Dormand–Prince step of signed length h; returns (c_new, error estimate).
    fn step(&self, x0: f64, c0: &Vec2, h: f64, opts: &JostOptions) -> (Vec2, f64) {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const CS: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let mut ks = [[ZERO; 2]; 7];
        ks[0] = self.rhs(x0, 0.0, c0);
        for st in 1..7 {
            let mut u = *c0;
            for (j, kj) in ks.iter().enumerate().take(st) {
                let a = A[st - 1][j];
                if a != 0.0 {
                    u[0] += kj[0] * (a * h);
                    u[1] += kj[1] * (a * h);
                }
            }
            ks[st] = self.rhs(x0, CS[st] * h, &u);
        }
        // fifth-order solution is the last stage input (FSAL row)
        let mut u5 = *c0;
        for (j, kj) in ks.iter().enumerate().take(6) {
            let a = A[5][j];
            u5[0] += kj[0] * (a * h);
            u5[1] += kj[1] * (a * h);
        }
        let mut err: f64 = 0.0;
        for comp in 0..2 {
            let mut e = ZERO;
            for (j, kj) in ks.iter().enumerate() {
                e += kj[comp] * (E[j] * h);
            }
            let sc = opts.atol + opts.rtol * c0[comp].norm().max(u5[comp].norm());
            err = err.max(e.norm() / sc);
        }
        let ed = [(self.d[0] * h).exp(), (self.d[1] * h).exp()];
        ([u5[0] * ed[0], u5[1] * ed[1]], err)
    }

    /// Integrate from node `from` to node `to` (inclusive), starting at c = e_col.
    fn run(&self, col: usize, from: usize, to: usize, opts: &JostOptions) -> Result<Vec<Vec2>> {
        let g = &self.field.grid;
        let dir: isize = if to >= from { 1 } else { -1 };
        let count = from.abs_diff(to) + 1;
        let mut out = Vec::with_capacity(count);
        let mut c = if col == 0 { [ONE, ZERO] } else { [ZERO, ONE] };
        out.push(c);
        let gh = g.h();
        let mut h_try = gh * dir as f64;
        let mut steps = 0usize;
        let mut node = from as isize;
        for _ in 1..count {
            let x_start = g.x(node as usize);
            let x_end = g.x((node + dir) as usize);
            let mut x = x_start;
            while (x_end - x) * dir as f64 > 1e-14 * gh {
                let remaining = x_end - x;
                let h = if h_try.abs() > remaining.abs() { remaining } else { h_try };
                let (cn, err) = self.step(x, &c, h, opts);
                steps += 1;
                if steps > opts.max_steps {
                    return Err(Error::Numerical(format!("Jost integration exceeded {} steps", opts.max_steps)));
                }
                if !err.is_finite() || !cn[0].is_finite() || !cn[1].is_finite() {
                    if h.abs() < 1e-12 {
                        return Err(Error::Numerical(format!("Jost integration overflow near x = {x}")));
                    }
                    h_try = h * 0.25;
                    continue;
                }
                if err <= 1.0 {
                    x += h;
                    c = cn;
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    h_try = (h * fac).abs().min(gh) * dir as f64;
                } else {
                    let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    h_try = h * fac;
                    if h_try.abs() < 1e-14 {
                        return Err(Error::Numerical(format!("Jost step size underflow near x = {x}")));
                    }
                }
            }
            node += dir;
            out.push(c);
        }
        if dir < 0 {
            out.reverse();
        }
        Ok(out.into_iter().map(|c| linalg::mat_vec(&self.y, &c)).collect())
    }
}

/// Column `col` (0 or 1) of μ_side on the nodes between the side's edge and `stop` (inclusive).
/// The returned vector is ordered by grid index.
pub fn jost_column(field: &FieldSnapshot, z: C, side: Side, col: usize, stop: usize, opts: &JostOptions) -> Result<Vec<Vec2>> {
    check_regular(z)?;
    let ode = ColumnOde::new(field, z, side, col);
    let n = field.grid.n;
    match side {
        Side::Minus => ode.run(col, 0, stop, opts),
        Side::Plus => ode.run(col, n - 1, stop, opts),
    }
}

/// μ±(x; z) on every grid node.
#[derive(Debug, Clone)]
pub struct JostSolution {
    pub z: C,
    pub side: Side,
    pub mu: Vec<Mat2>,
}

impl JostSolution {
    /// max_x |det μ − (1 + z⁻²)| / |1 + z⁻²|.
    pub fn det_residual(&self) -> f64 {
        let gamma = ONE + (self.z * self.z).inv();
        self.mu.iter().map(|m| (linalg::det(m) - gamma).norm()).fold(0.0, f64::max) / gamma.norm()
    }

    /// Same residual scaled by max(|γ|, |μ₁||μ₂|); meaningful off Σ where one column grows.
    pub fn det_residual_scaled(&self) -> f64 {
        let gamma = ONE + (self.z * self.z).inv();
        self.mu
            .iter()
            .map(|m| {
                let c1 = (m[0][0].norm_sqr() + m[1][0].norm_sqr()).sqrt();
                let c2 = (m[0][1].norm_sqr() + m[1][1].norm_sqr()).sqrt();
                (linalg::det(m) - gamma).norm() / gamma.norm().max(c1 * c2)
            })
            .fold(0.0, f64::max)
    }
}

pub fn jost_integrate(field: &FieldSnapshot, z: C, side: Side) -> Result<JostSolution> {
    jost_integrate_with(field, z, side, &JostOptions::default())
}

pub fn jost_integrate_with(field: &FieldSnapshot, z: C, side: Side, opts: &JostOptions) -> Result<JostSolution> {
    let stop = match side {
        Side::Minus => field.grid.n - 1,
        Side::Plus => 0,
    };
    let c0 = jost_column(field, z, side, 0, stop, opts)?;
    let c1 = jost_column(field, z, side, 1, stop, opts)?;
    let mu = c0.iter().zip(&c1).map(|(a, b)| [[a[0], b[0]], [a[1], b[1]]]).collect();
    Ok(JostSolution { z, side, mu })
}

/// Scattering matrix entries and reflection coefficients at one z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSample {
    pub z: C,
    pub s11: C,
    pub s12: C,
    pub s21: C,
    pub s22: C,
    pub rho: C,
    pub rho_tilde: C,
}

impl ScatteringSample {
    pub fn matrix(&self) -> Mat2 {
        [[self.s11, self.s12], [self.s21, self.s22]]
    }
    pub fn det(&self) -> C {
        linalg::det(&self.matrix())
    }
}

/// Threshold below which |s11| signals a spectral singularity.
pub const SINGULARITY_TOL: f64 = 1e-13;

pub(crate) fn matching_node(field: &FieldSnapshot) -> usize {
    (field.grid.n - 1) / 2
}

/// Full scattering matrix on Σ (or anywhere both Jost matrices are computable).
pub fn scattering_matrix(field: &FieldSnapshot, z: C) -> Result<ScatteringSample> {
    scattering_matrix_with(field, z, &JostOptions::default())
}

pub fn scattering_matrix_with(field: &FieldSnapshot, z: C, opts: &JostOptions) -> Result<ScatteringSample> {
    check_regular(z)?;
    let m = matching_node(field);
    let mm1 = jost_column(field, z, Side::Minus, 0, m, opts)?[m];
    let mm2 = jost_column(field, z, Side::Minus, 1, m, opts)?[m];
    let mp1 = jost_column(field, z, Side::Plus, 0, m, opts)?[0];
    let mp2 = jost_column(field, z, Side::Plus, 1, m, opts)?[0];
    let gamma = ONE + (z * z).inv();
    let x = field.grid.x(m);
    let e2 = (2.0 * I * k_lambda(z, field.params.alpha) * x).exp();
    let s11 = linalg::wronskian(&mp1, &mm2) / gamma;
    let s22 = linalg::wronskian(&mm1, &mp2) / gamma;
    // μ₊,₁ = s11 μ₋,₁ + s21 e^{2ikλx} μ₋,₂ and μ₊,₂ = s12 e^{−2ikλx} μ₋,₁ + s22 μ₋,₂
    let s21 = linalg::wronskian(&mm1, &mp1) / gamma / e2;
    let s12 = linalg::wronskian(&mp2, &mm2) / gamma * e2;
    if s11.norm() < SINGULARITY_TOL {
        return Err(Error::Singularity { z, modulus: s11.norm() });
    }
    Ok(ScatteringSample { z, s11, s12, s21, s22, rho: s21 / s11, rho_tilde: s12 / s22 })
}

/// s11 alone, from the columns analytic where Re z·Im z < 0 (also valid on Σ).
pub fn s11_analytic(field: &FieldSnapshot, z: C, opts: &JostOptions) -> Result<C> {
    check_regular(z)?;
    let m = matching_node(field);
    let mm2 = jost_column(field, z, Side::Minus, 1, m, opts)?[m];
    let mp1 = jost_column(field, z, Side::Plus, 0, m, opts)?[0];
    Ok(linalg::wronskian(&mp1, &mm2) / (ONE + (z * z).inv()))
}

/// ν₀ = (1/2α)∫(1 − |q|²) by the trapezoid rule.
pub fn nu0(field: &FieldSnapshot) -> f64 {
    let h = field.grid.h();
    let n = field.q.len();
    let f = |j: usize| 1.0 - field.q[j].norm_sqr();
    let inner: f64 = (1..n - 1).map(f).sum();
    (inner + 0.5 * (f(0) + f(n - 1))) * h / (2.0 * field.params.alpha)
}

/// Samples must keep this distance from {0, ±i}.
pub const SIGMA_GUARD: f64 = 1e-3;

pub fn reflection_on_sigma(field: &FieldSnapshot, z_samples: &[C]) -> Result<Vec<ScatteringSample>> {
    use rayon::prelude::*;
    for &z in z_samples {
        for p in [ZERO, I, -I] {
            if (z - p).norm() < SIGMA_GUARD {
                return Err(Error::Domain(format!("sample {z} within {SIGMA_GUARD} of {p}")));
            }
        }
    }
    z_samples.par_iter().map(|&z| scattering_matrix(field, z)).collect()
}

/// Worst residuals of the scattering-matrix and reflection symmetries.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub samples: usize,
    /// S(z) vs σ₂ conj(S(z̄)) σ₂.
    pub conj_sigma2: f64,
    /// S(z) vs σ₁ conj(S(−z̄)) σ₁.
    pub reflect_sigma1: f64,
    /// S(z) vs (σ₃Q₋)⁻¹ S(−1/z) σ₃Q₊.
    pub inversion: f64,
    /// ρ(z) vs −conj(ρ̃(z̄)).
    pub rho_conj: f64,
    /// ρ(z) vs conj(ρ̃(−z̄)).
    pub rho_reflect: f64,
    /// ρ(z) vs −(q̄₋/q₋) ρ̃(−1/z), the form implied by the matrix inversion symmetry.
    pub rho_inversion: f64,
    /// ρ(z) vs (q̄₋/q₋) conj(ρ(−1/z̄)).
    pub rho_inversion_conj: f64,
    /// ρ(z) vs (q₋/q̄₋) ρ̃(−1/z); reported only, not part of [`SymmetryReport::max`].
    pub rho_inversion_alt_sign: f64,
    /// det S − 1.
    pub det: f64,
}

impl SymmetryReport {
    pub fn max(&self) -> f64 {
        [
            self.conj_sigma2,
            self.reflect_sigma1,
            self.inversion,
            self.rho_conj,
            self.rho_reflect,
            self.rho_inversion,
            self.rho_inversion_conj,
            self.det,
        ]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn find<'a>(samples: &'a [ScatteringSample], z: C) -> Result<&'a ScatteringSample> {
    samples
        .iter()
        .find(|s| (s.z - z).norm() < 1e-10 * (1.0 + z.norm()))
        .ok_or_else(|| Error::Config(format!("sample set not closed under the symmetry maps: missing {z}")))
}

pub fn verify_scattering_symmetries(samples: &[ScatteringSample], q_minus: C, q_plus: C) -> Result<SymmetryReport> {
    let s1 = linalg::sigma1();
    let s2 = linalg::sigma2();
    let s3 = linalg::sigma3();
    let s3qm = linalg::mat_mul(&s3, &linalg::q_matrix(q_minus));
    let s3qp = linalg::mat_mul(&s3, &linalg::q_matrix(q_plus));
    let s3qm_inv = linalg::inv(&s3qm);
    let mut rep = SymmetryReport { samples: samples.len(), ..Default::default() };
    let rel = |a: &Mat2, b: &Mat2| linalg::norm_max(&linalg::sub(a, b)) / (1.0 + linalg::norm_max(a));
    for s in samples {
        let z = s.z;
        let sm = s.matrix();
        let a = find(samples, z.conj())?;
        let b = find(samples, -z.conj())?;
        let c = find(samples, -z.inv())?;
        let ta = linalg::mat_mul(&s2, &linalg::mat_mul(&linalg::conj(&a.matrix()), &s2));
        let tb = linalg::mat_mul(&s1, &linalg::mat_mul(&linalg::conj(&b.matrix()), &s1));
        let tc = linalg::mat_mul(&s3qm_inv, &linalg::mat_mul(&c.matrix(), &s3qp));
        rep.conj_sigma2 = rep.conj_sigma2.max(rel(&sm, &ta));
        rep.reflect_sigma1 = rep.reflect_sigma1.max(rel(&sm, &tb));
        rep.inversion = rep.inversion.max(rel(&sm, &tc));
        let r = |v: C, w: C| (v - w).norm() / (1.0 + v.norm());
        rep.rho_conj = rep.rho_conj.max(r(s.rho, -a.rho_tilde.conj()));
        rep.rho_reflect = rep.rho_reflect.max(r(s.rho, b.rho_tilde.conj()));
        let d = find(samples, -z.conj().inv())?;
        let qq = q_minus.conj() / q_minus;
        rep.rho_inversion = rep.rho_inversion.max(r(s.rho, -qq * c.rho_tilde));
        rep.rho_inversion_conj = rep.rho_inversion_conj.max(r(s.rho, qq * d.rho.conj()));
        rep.rho_inversion_alt_sign = rep.rho_inversion_alt_sign.max(r(s.rho, q_minus / q_minus.conj() * c.rho_tilde));
        rep.det = rep.det.max((s.det() - ONE).norm());
    }
    Ok(rep)
}

/// Σ-points closed under z ↦ z̄, −z̄, −1/z: ±a, ±1/a on ℝ and iℝ for each a.
pub fn symmetric_sigma_set(radii: &[f64]) -> Vec<C> {
    let mut out: Vec<C> = Vec::new();
    let mut push = |z: C| {
        if !out.iter().any(|w| (w - z).norm() < 1e-12) {
            out.push(z);
        }
    };
    for &a in radii {
        for r in [a, 1.0 / a] {
            for s in [1.0, -1.0] {
                push(Complex64::new(s * r, 0.0));
                push(Complex64::new(0.0, s * r));
            }
        }
    }
    out
}
