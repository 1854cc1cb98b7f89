//! Reflectionless N(Λ)-soliton construction.
//!
//! The solution of the pure-soliton problem is written as M = e^{iν₋σ₃}N with
//! N → I at infinity and N ~ σ₃Q₋/z at the origin. Column 1 of N has poles at
//! the Λ eigenvalues and their orbit, column 2 at the conjugates. The symmetries
//! reduce the residues to two complex unknowns per quartet, (β, ς), and two per
//! circle pair, (a, τ).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSnapshot, Grid};
use crate::linalg::{Mat2, Vec2, C, I, ONE, ZERO};
use crate::params::ProblemParams;
use crate::quadrature::{log_one_minus, RhoProducts};
use crate::spectral_plane::{evolution_factor, RegionPartition};
use crate::spectrum::{DiscreteSpectrum, Member};
use crate::tfunc::TFunction;

/// Condition number above which a coefficient system is rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Bound on |q_sol| beyond which a reconstruction is rejected.
pub const MAX_MODULUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaQuartet {
    /// Index of the representative in the expanded spectrum.
    pub index: usize,
    pub z: C,
    /// Residue constant including T(z)².
    pub c: C,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaCircle {
    pub index: usize,
    pub w: C,
    pub c: C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonEnsemble {
    pub quartets: Vec<LambdaQuartet>,
    pub circle: Vec<LambdaCircle>,
    pub params: ProblemParams,
    /// T(η)² per representative, quartets first.
    pub t_factors: Vec<C>,
}

impl SolitonEnsemble {
    /// Every eigenvalue of the spectrum with its raw constant (T ≡ 1).
    pub fn reflectionless(spectrum: &DiscreteSpectrum) -> Result<Self> {
        let n1 = spectrum.quartets.len();
        let params = ProblemParams::new(spectrum.alpha, spectrum.q_minus, spectrum.q_minus)?;
        Ok(Self {
            quartets: spectrum.quartets.iter().enumerate().map(|(i, q)| LambdaQuartet { index: i, z: q.z, c: q.c }).collect(),
            circle: spectrum
                .circle
                .iter()
                .enumerate()
                .map(|(i, p)| LambdaCircle { index: 4 * n1 + i, w: p.zeta, c: p.c })
                .collect(),
            params,
            t_factors: vec![ONE; n1 + spectrum.circle.len()],
        })
    }

    /// The Λ members of a partition with constants C·T(η)².
    pub fn from_partition(spectrum: &DiscreteSpectrum, partition: &RegionPartition, t: &TFunction) -> Result<Self> {
        let params = ProblemParams::new(spectrum.alpha, spectrum.q_minus, spectrum.q_minus)?;
        let mut quartets = Vec::new();
        let mut circle = Vec::new();
        let mut tq = Vec::new();
        let mut tc = Vec::new();
        for (n, e) in spectrum.expanded().iter().enumerate() {
            if !partition.lambda_set.contains(&n) {
                continue;
            }
            match e.member {
                Member::Quartet { member: 0, .. } => {
                    let t2 = t.value(e.eta)?.powi(2);
                    quartets.push(LambdaQuartet { index: n, z: e.eta, c: e.big_c * t2 });
                    tq.push(t2);
                }
                Member::Circle { member: 0, .. } => {
                    let t2 = t.value(e.eta)?.powi(2);
                    circle.push(LambdaCircle { index: n, w: e.eta, c: e.big_c * t2 });
                    tc.push(t2);
                }
                _ => {}
            }
        }
        tq.extend(tc);
        let t_factors = tq;
        Ok(Self { quartets, circle, params, t_factors })
    }

    pub fn is_empty(&self) -> bool {
        self.quartets.is_empty() && self.circle.is_empty()
    }

    fn q(&self) -> C {
        self.params.q_minus
    }

    /// C̃ = c e^{2ikλ(x + v t)} for each representative, quartets first.
    fn dressed(&self, x: f64, t: f64) -> Vec<C> {
        let a = self.params.alpha;
        self.quartets
            .iter()
            .map(|q| q.c * evolution_factor(q.z, x, t, a))
            .chain(self.circle.iter().map(|p| p.c * evolution_factor(p.w, x, t, a)))
            .collect()
    }
}

/// c̊ = C exp{−(1/iπ)∫_ℝ log(1−|ρ(s)|²)(1/(s−η) − 1/(2s)) ds}.
/// `abs_rho_sq` holds |ρ|² on its real-axis nodes, integrated left to right.
pub fn modified_norming(big_c: C, eta: C, abs_rho_sq: &RhoProducts) -> Result<C> {
    let mut acc = ZERO;
    for n in &abs_rho_sq.nodes {
        if n.on_imaginary_axis() || n.value == ZERO {
            continue;
        }
        let kernel = (n.s - eta).inv() - 0.5 / n.s;
        acc += kernel * log_one_minus(n.s, n.value)? * n.w.norm();
    }
    Ok(big_c * (-acc / (I * PI)).exp())
}

/// The iℝ variant: c̊ = C·δ(η)² with δ from the T-function Cauchy factor.
pub fn modified_norming_imaginary(big_c: C, eta: C, rho: &RhoProducts) -> Result<C> {
    Ok(big_c * crate::tfunc::delta_integral(rho, eta)?.powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSolution {
    pub beta: Vec<C>,
    pub varsigma: Vec<C>,
    pub alpha_s: Vec<C>,
    pub tau: Vec<C>,
    pub x: f64,
    pub t: f64,
    pub nu_minus: f64,
    /// Relative residual of the real-split system.
    pub residual: f64,
    pub condition: f64,
}

impl CoefficientSolution {
    /// lim z N₁₂(z) = q₋ − 2Σ(ς̄_k + q₋β_k/z_k) − 2Στ̄_s.
    pub fn n12_limit(&self, ens: &SolitonEnsemble) -> C {
        let q = ens.q();
        let mut m = q;
        for (k, qd) in ens.quartets.iter().enumerate() {
            m -= 2.0 * (self.varsigma[k].conj() + q * self.beta[k] / qd.z);
        }
        for t in &self.tau {
            m -= 2.0 * t.conj();
        }
        m
    }

    /// q_sol = e^{2iν₋} lim z N₁₂.
    pub fn q_sol(&self, ens: &SolitonEnsemble) -> C {
        (2.0 * I * self.nu_minus).exp() * self.n12_limit(ens)
    }
}

/// Column-1 poles with residues, column-2 poles with residues.
type PoleList = Vec<(C, Vec2)>;

fn pole_lists(ens: &SolitonEnsemble, u: &[C]) -> (PoleList, PoleList) {
    let q = ens.q();
    let qb = q.conj();
    let mut col1 = Vec::new();
    let mut col2 = Vec::new();
    for (k, qd) in ens.quartets.iter().enumerate() {
        let (b, s) = (u[2 * k], u[2 * k + 1]);
        let z = qd.z;
        let zb = z.conj();
        col1.push((z, [b, s]));
        col1.push((-z, [-b, s]));
        col1.push((zb.inv(), [qb * s.conj() / zb, qb * b.conj() / zb]));
        col1.push((-zb.inv(), [-qb * s.conj() / zb, qb * b.conj() / zb]));
        col2.push((zb, [-s.conj(), b.conj()]));
        col2.push((-zb, [-s.conj(), -b.conj()]));
        col2.push((z.inv(), [-q * b / z, q * s / z]));
        col2.push((-z.inv(), [-q * b / z, -q * s / z]));
    }
    let off = 2 * ens.quartets.len();
    for (j, p) in ens.circle.iter().enumerate() {
        let (a, t) = (u[off + 2 * j], u[off + 2 * j + 1]);
        let w = p.w;
        col1.push((w, [a, t]));
        col1.push((-w, [-a, t]));
        col2.push((w.conj(), [-t.conj(), a.conj()]));
        col2.push((-w.conj(), [-t.conj(), -a.conj()]));
    }
    (col1, col2)
}

fn column(z: C, lead: Vec2, poles: &PoleList) -> Vec2 {
    let mut v = lead;
    for (p, r) in poles {
        let d = (z - p).inv();
        v[0] += r[0] * d;
        v[1] += r[1] * d;
    }
    v
}

/// Residual of the coefficient equations (β, ς) = C̃ N₂(z_k), (a, τ) = C̃ N₂(w_s).
fn system_residual(ens: &SolitonEnsemble, dressed: &[C], u: &[C]) -> Vec<C> {
    let q = ens.q();
    let (_, col2) = pole_lists(ens, u);
    let reps: Vec<C> = ens.quartets.iter().map(|q| q.z).chain(ens.circle.iter().map(|p| p.w)).collect();
    let mut r = Vec::with_capacity(u.len());
    for (j, &eta) in reps.iter().enumerate() {
        let n2 = column(eta, [q / eta, ONE], &col2);
        r.push(u[2 * j] - dressed[j] * n2[0]);
        r.push(u[2 * j + 1] - dressed[j] * n2[1]);
    }
    r
}

/// Solve the coefficient system at (x, t) in real-split form.
pub fn solve_coefficients(x: f64, t: f64, nu_minus: f64, ens: &SolitonEnsemble) -> Result<CoefficientSolution> {
    let k = ens.quartets.len() + ens.circle.len();
    let n1 = ens.quartets.len();
    if k == 0 {
        return Ok(CoefficientSolution {
            beta: vec![],
            varsigma: vec![],
            alpha_s: vec![],
            tau: vec![],
            x,
            t,
            nu_minus,
            residual: 0.0,
            condition: 1.0,
        });
    }
    let dressed = ens.dressed(x, t);
    let dim = 4 * k;
    let zero_u = vec![ZERO; 2 * k];
    let r0 = system_residual(ens, &dressed, &zero_u);
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for m in 0..dim {
        let mut u = zero_u.clone();
        u[m / 2] = if m % 2 == 0 { ONE } else { I };
        let r = system_residual(ens, &dressed, &u);
        for (i, (ri, r0i)) in r.iter().zip(&r0).enumerate() {
            let d = ri - r0i;
            a[(2 * i, m)] = d.re;
            a[(2 * i + 1, m)] = d.im;
        }
    }
    let b = DVector::from_iterator(dim, r0.iter().flat_map(|c| [-c.re, -c.im]));
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Degenerate { cond });
    }
    let sol = a.clone().full_piv_lu().solve(&b).ok_or(Error::Degenerate { cond })?;
    let res = (&a * &sol - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
    let u: Vec<C> = (0..2 * k).map(|j| Complex64::new(sol[2 * j], sol[2 * j + 1])).collect();
    Ok(CoefficientSolution {
        beta: (0..n1).map(|j| u[2 * j]).collect(),
        varsigma: (0..n1).map(|j| u[2 * j + 1]).collect(),
        alpha_s: (n1..k).map(|j| u[2 * j]).collect(),
        tau: (n1..k).map(|j| u[2 * j + 1]).collect(),
        x,
        t,
        nu_minus,
        residual: res,
        condition: cond,
    })
}

fn unknowns(sol: &CoefficientSolution) -> Vec<C> {
    let mut u = Vec::new();
    for (b, s) in sol.beta.iter().zip(&sol.varsigma) {
        u.extend([*b, *s]);
    }
    for (a, t) in sol.alpha_s.iter().zip(&sol.tau) {
        u.extend([*a, *t]);
    }
    u
}

/// All pole locations of M.
pub fn pole_set(ens: &SolitonEnsemble) -> Vec<C> {
    let u = vec![ZERO; 2 * (ens.quartets.len() + ens.circle.len())];
    let (c1, c2) = pole_lists(ens, &u);
    c1.into_iter().chain(c2).map(|p| p.0).collect()
}

/// N(z) from a coefficient solution.
pub fn n_eval(z: C, sol: &CoefficientSolution, ens: &SolitonEnsemble) -> Result<Mat2> {
    if z.norm() < 1e-8 {
        return Err(Error::Pole { z, pole: ZERO, distance: z.norm() });
    }
    let (c1, c2) = pole_lists(ens, &unknowns(sol));
    for (p, _) in c1.iter().chain(&c2) {
        let d = (z - p).norm();
        if d < 1e-8 {
            return Err(Error::Pole { z, pole: *p, distance: d });
        }
    }
    let q = ens.q();
    let n1 = column(z, [ONE, -q.conj() / z], &c1);
    let n2 = column(z, [q / z, ONE], &c2);
    Ok([[n1[0], n2[0]], [n1[1], n2[1]]])
}

/// Column `col` of M_Λ at z, ignoring the poles of the other column.
fn msol_column(z: C, col: usize, sol: &CoefficientSolution, ens: &SolitonEnsemble) -> Vec2 {
    let (c1, c2) = pole_lists(ens, &unknowns(sol));
    let q = ens.q();
    let v = if col == 0 { column(z, [ONE, -q.conj() / z], &c1) } else { column(z, [q / z, ONE], &c2) };
    let e = (I * sol.nu_minus).exp();
    [e * v[0], v[1] / e]
}

/// M_Λ(z) = e^{iν₋σ₃} N(z).
pub fn msol_eval(z: C, sol: &CoefficientSolution, ens: &SolitonEnsemble) -> Result<Mat2> {
    let n = n_eval(z, sol, ens)?;
    let e = (I * sol.nu_minus).exp();
    Ok([[e * n[0][0], e * n[0][1]], [n[1][0] / e, n[1][1] / e]])
}

/// Worst relative mismatch of the residue conditions Res_η M₁ = C̃ M₂(η) and
/// Res_η̄ M₂ = −conj(C̃) M₁(η̄) over the representatives, with residues taken
/// as contour averages on circles of the given radius.
pub fn residue_residual(sol: &CoefficientSolution, ens: &SolitonEnsemble, radius: f64) -> Result<f64> {
    let dressed = ens.dressed(sol.x, sol.t);
    let reps: Vec<C> = ens.quartets.iter().map(|q| q.z).chain(ens.circle.iter().map(|p| p.w)).collect();
    let m = 64;
    let residue = |eta: C, col: usize| -> Result<Vec2> {
        let mut acc = [ZERO; 2];
        for j in 0..m {
            let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
            let mm = msol_eval(eta + radius * e, sol, ens)?;
            acc[0] += mm[0][col] * e * radius;
            acc[1] += mm[1][col] * e * radius;
        }
        Ok([acc[0] / m as f64, acc[1] / m as f64])
    };
    let mut worst: f64 = 0.0;
    for (j, &eta) in reps.iter().enumerate() {
        let r1 = residue(eta, 0)?;
        let m_at = msol_column(eta, 1, sol, ens);
        let want = [dressed[j] * m_at[0], dressed[j] * m_at[1]];
        let scale = 1.0 + want[0].norm().max(want[1].norm());
        worst = worst.max((r1[0] - want[0]).norm().max((r1[1] - want[1]).norm()) / scale);
        let r2 = residue(eta.conj(), 1)?;
        let m_bar = msol_column(eta.conj(), 0, sol, ens);
        let cc = -dressed[j].conj();
        let want2 = [cc * m_bar[0], cc * m_bar[1]];
        let scale2 = 1.0 + want2[0].norm().max(want2[1].norm());
        worst = worst.max((r2[0] - want2[0]).norm().max((r2[1] - want2[1]).norm()) / scale2);
    }
    Ok(worst)
}

/// |q_sol(x)| without the phase; it does not depend on ν₋.
fn modulus_source(x: f64, t: f64, ens: &SolitonEnsemble) -> Result<(C, f64)> {
    let sol = solve_coefficients(x, t, 0.0, ens)?;
    let m = sol.n12_limit(ens);
    Ok((m, (1.0 - m.norm_sqr()) / (2.0 * ens.params.alpha)))
}

/// Reconstruction together with the phase integral ν₋ on the grid.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: FieldSnapshot,
    pub nu_minus: Vec<f64>,
    /// lim z N₁₂ per node (q without the e^{2iν₋} factor).
    pub n12: Vec<C>,
}

/// q_sol on the grid at time t: ν₋ is marched from ν₋(−L) = 0 with RK4 at step h,
/// re-solving the coefficient system at every stage point.
pub fn reconstruct_q_sol(t: f64, grid: &Grid, ens: &SolitonEnsemble) -> Result<FieldSnapshot> {
    Ok(reconstruct(t, grid, ens)?.field)
}

pub fn reconstruct(t: f64, grid: &Grid, ens: &SolitonEnsemble) -> Result<Reconstruction> {
    reconstruct_shifted(t, grid, 0.0, ens)
}

/// Reconstruction at the points x_j + offset, e.g. on a grid moving with the solitons.
pub fn reconstruct_shifted(t: f64, grid: &Grid, offset: f64, ens: &SolitonEnsemble) -> Result<Reconstruction> {
    let n = grid.n;
    let params = ProblemParams::new(ens.params.alpha, ens.q(), ens.q())?;
    if ens.is_empty() {
        let field = FieldSnapshot::new(*grid, vec![ens.q(); n], params, t)?;
        return Ok(Reconstruction { field, nu_minus: vec![0.0; n], n12: vec![ens.q(); n] });
    }
    let h = grid.h();
    let mut nodes = Vec::with_capacity(n);
    let mut mids = Vec::with_capacity(n - 1);
    for j in 0..n {
        nodes.push(modulus_source(grid.x(j) + offset, t, ens)?);
        if j + 1 < n {
            mids.push(modulus_source(grid.x(j) + offset + 0.5 * h, t, ens)?.1);
        }
    }
    let mut nu = vec![0.0; n];
    for j in 0..n - 1 {
        // the right-hand side does not depend on ν₋, so the RK4 stages collapse to Simpson weights
        nu[j + 1] = nu[j] + h / 6.0 * (nodes[j].1 + 4.0 * mids[j] + nodes[j + 1].1);
    }
    let mut q = Vec::with_capacity(n);
    for j in 0..n {
        let v = (2.0 * I * nu[j]).exp() * nodes[j].0;
        if !(v.norm() <= MAX_MODULUS) {
            return Err(Error::Validation(format!("|q_sol| = {:.3e} at x = {}", v.norm(), grid.x(j) + offset)));
        }
        q.push(v);
    }
    let field = FieldSnapshot::new(*grid, q, params, t)?;
    Ok(Reconstruction { field, nu_minus: nu, n12: nodes.into_iter().map(|p| p.0).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{CircleEigenpair, EigenQuartet};

    fn circle_ensemble() -> SolitonEnsemble {
        let w = Complex64::from_polar(1.0, 2.1);
        let sp = DiscreteSpectrum { quartets: vec![], circle: vec![CircleEigenpair { zeta: w, c: -w }], alpha: 1.0, q_minus: ONE };
        SolitonEnsemble::reflectionless(&sp).unwrap()
    }

    fn quartet_ensemble() -> SolitonEnsemble {
        let sp = DiscreteSpectrum {
            quartets: vec![EigenQuartet { z: Complex64::from_polar(1.6, 2.0), c: Complex64::new(0.7, 0.3) }],
            circle: vec![],
            alpha: 1.0,
            q_minus: ONE,
        };
        SolitonEnsemble::reflectionless(&sp).unwrap()
    }

    #[test]
    fn empty_ensemble_is_background() {
        let sp = DiscreteSpectrum::empty(1.0, Complex64::from_polar(1.0, 0.4));
        let ens = SolitonEnsemble::reflectionless(&sp).unwrap();
        let f = reconstruct_q_sol(1.0, &Grid::new(5.0, 51).unwrap(), &ens).unwrap();
        assert!(f.q.iter().all(|&v| v == sp.q_minus));
        let sol = solve_coefficients(0.3, 0.0, 0.2, &ens).unwrap();
        let m = msol_eval(C::new(0.5, 1.5), &sol, &ens).unwrap();
        let z = C::new(0.5, 1.5);
        let e = (I * 0.2).exp();
        assert!((m[0][0] - e).norm() < 1e-15);
        assert!((m[0][1] - e * sp.q_minus / z).norm() < 1e-15);
    }

    #[test]
    fn circle_soliton_is_dark_and_relaxes() {
        let ens = circle_ensemble();
        let f = reconstruct_q_sol(0.0, &Grid::new(30.0, 3001).unwrap(), &ens).unwrap();
        let n = f.q.len();
        assert!((f.q[0] - ONE).norm() < 1e-8);
        assert!((f.q[n - 1] - ONE).norm() < 1e-8);
        let min = f.q.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        assert!(min < 0.95);
    }

    #[test]
    fn residues_hold() {
        for ens in [circle_ensemble(), quartet_ensemble()] {
            let sol = solve_coefficients(0.4, 0.2, 0.1, &ens).unwrap();
            assert!(sol.residual < 1e-12);
            assert!(residue_residual(&sol, &ens, 1e-3).unwrap() < 1e-8);
        }
    }

    #[test]
    fn symmetry_sigma1() {
        let ens = quartet_ensemble();
        let sol = solve_coefficients(-0.3, 0.1, 0.25, &ens).unwrap();
        for z in [C::new(0.3, 0.8), C::new(-1.2, 2.0), C::new(2.5, -0.4)] {
            let a = msol_eval(z, &sol, &ens).unwrap();
            let b = msol_eval(-z.conj(), &sol, &ens).unwrap();
            let s1 = crate::linalg::sigma1();
            let t = crate::linalg::mat_mul(&s1, &crate::linalg::mat_mul(&crate::linalg::conj(&b), &s1));
            assert!(crate::linalg::norm_max(&crate::linalg::sub(&a, &t)) < 1e-8);
        }
    }

    #[test]
    fn modified_norming_trivial() {
        let c = C::new(0.3, -0.2);
        assert_eq!(modified_norming(c, C::new(0.5, 1.0), &RhoProducts::zero()).unwrap(), c);
    }
}
