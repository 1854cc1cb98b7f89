//! Quadrature rules and sampled ρρ̃ data on the contour Σ = ℝ ∪ iℝ.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSnapshot;
use crate::linalg::{C, ONE};
use crate::scattering::scattering_matrix;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Nodes per Gauss–Legendre panel.
pub const PANEL: usize = 8;

/// Composite Gauss–Legendre rule on [a, b] with ⌈n/8⌉ panels of 8 nodes.
pub fn panel_rule(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = n.div_ceil(PANEL).max(1);
    let (x, w) = gauss_legendre(PANEL);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * PANEL);
    let mut ws = Vec::with_capacity(panels * PANEL);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            xs.push(c + 0.5 * h * xi);
            ws.push(0.5 * h * wi);
        }
    }
    (xs, ws)
}

/// Panel rule on [1, r_max] in u with r = 1 + (r_max − 1)u². Near the branch
/// points ±1, ±i the factor log(1 − ρρ̃) may be logarithmically singular; the
/// grading flattens that endpoint singularity.
pub fn graded_rule(r_max: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (u, wu) = panel_rule(0.0, 1.0, n);
    let span = r_max - 1.0;
    let r = u.iter().map(|&u| 1.0 + span * u * u).collect();
    let w = u.iter().zip(&wu).map(|(&u, &w)| w * 2.0 * span * u).collect();
    (r, w)
}

/// The four rays of Σ and their orientation: ℝ runs toward 0, iℝ away from 0,
/// so that the region Re z · Im z < 0 lies on the left.
pub const RAYS: [(f64, f64, f64); 4] = [(1.0, 0.0, -1.0), (-1.0, 0.0, -1.0), (0.0, 1.0, 1.0), (0.0, -1.0, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoNode {
    pub s: C,
    /// Oriented weight ds.
    pub w: C,
    /// ρ(s)ρ̃(s).
    pub value: C,
}

impl RhoNode {
    pub fn on_imaginary_axis(&self) -> bool {
        self.s.re == 0.0
    }
}

/// Once a whole chunk of consecutive samples on a ray falls below the floor,
/// the rest of the ray is treated as zero. ρρ̃ on ℝ vanishes at ±1 as well,
/// so the cutoff only applies beyond TAIL_START.
const TAIL_START: f64 = 2.0;
const TAIL_CHUNK: usize = 32;
const TAIL_FLOOR: f64 = 1e-16;

/// Quadrature table of ρρ̃ on Σ truncated to r_min ≤ |s| ≤ r_max.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RhoProducts {
    pub nodes: Vec<RhoNode>,
    #[serde(default)]
    pub r_min: f64,
    pub r_max: f64,
}

impl RhoProducts {
    /// ρ ≡ 0.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.nodes.iter().all(|n| n.value == Complex64::new(0.0, 0.0))
    }

    /// Composite Gauss–Legendre rule with about `n` nodes per ray on (0, r_max].
    pub fn from_fn(f: impl Fn(C) -> C, r_max: f64, n: usize) -> Self {
        let (radii, weights) = panel_rule(0.0, r_max, n);
        let mut nodes = Vec::with_capacity(4 * radii.len());
        for (ur, ui, eps) in RAYS {
            let u = Complex64::new(ur, ui);
            for (&r, &w) in radii.iter().zip(&weights) {
                let s = u * r;
                nodes.push(RhoNode { s, w: u * (eps * w), value: f(s) });
            }
        }
        Self { nodes, r_min: 0.0, r_max }
    }

    /// Samples from a field. The part |s| > 1 of each ray uses [`graded_rule`];
    /// the part |s| < 1 is mapped by s ↦ −1/s onto the opposite ray,
    /// where ρρ̃ takes the same value, so no sample comes closer to 0 than 1.
    pub fn from_field(field: &FieldSnapshot, r_max: f64, n: usize) -> Result<Self> {
        use rayon::prelude::*;
        if r_max <= 1.0 {
            return Err(Error::Config(format!("r_max must exceed 1, got {r_max}")));
        }
        let (radii, weights) = graded_rule(r_max, n);
        let m = radii.len();
        let mut outer: Vec<Vec<C>> = Vec::with_capacity(4);
        for (ur, ui, _) in RAYS {
            let u = Complex64::new(ur, ui);
            let mut vals = Vec::with_capacity(m);
            for chunk in radii.chunks(TAIL_CHUNK) {
                let part: Result<Vec<C>> = chunk
                    .par_iter()
                    .map(|&r| scattering_matrix(field, u * r).map(|s| s.rho * s.rho_tilde))
                    .collect();
                let part = part?;
                let negligible = chunk[chunk.len() - 1] >= TAIL_START && part.iter().all(|v| v.norm() < TAIL_FLOOR);
                vals.extend(part);
                if negligible {
                    break;
                }
            }
            vals.resize(m, Complex64::new(0.0, 0.0));
            outer.push(vals);
        }
        let opposite = [1usize, 0, 3, 2];
        let mut nodes = Vec::with_capacity(8 * m);
        for (ray, (ur, ui, eps)) in RAYS.iter().enumerate() {
            let u = Complex64::new(*ur, *ui);
            for (j, (&r, &w)) in radii.iter().zip(&weights).enumerate() {
                nodes.push(RhoNode { s: u * r, w: u * (eps * w), value: outer[ray][j] });
                nodes.push(RhoNode { s: u / r, w: u * (eps * w / (r * r)), value: outer[opposite[ray]][j] });
            }
        }
        Ok(Self { nodes, r_min: 1.0 / r_max, r_max })
    }

    /// Only the nodes on iℝ.
    pub fn imaginary_axis(&self) -> Self {
        Self { nodes: self.nodes.iter().copied().filter(RhoNode::on_imaginary_axis).collect(), r_min: self.r_min, r_max: self.r_max }
    }

    /// Only the nodes on ℝ.
    pub fn real_axis(&self) -> Self {
        Self { nodes: self.nodes.iter().copied().filter(|n| !n.on_imaginary_axis()).collect(), r_min: self.r_min, r_max: self.r_max }
    }

    /// ∫ kernel(s) log(1 − ρρ̃(s)) ds over the stored (optionally iℝ-only) nodes.
    pub fn integrate(&self, kernel: impl Fn(C) -> C, imaginary_only: bool) -> Result<C> {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in &self.nodes {
            if imaginary_only && !n.on_imaginary_axis() {
                continue;
            }
            if n.value == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc += kernel(n.s) * log_one_minus(n.s, n.value)? * n.w;
        }
        Ok(acc)
    }

    /// Distance from z to the nearest node.
    pub fn distance_to(&self, z: C) -> f64 {
        self.nodes.iter().map(|n| (n.s - z).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Principal log(1 − v), rejecting values on the branch cut.
pub fn log_one_minus(s: C, v: C) -> Result<C> {
    let a = ONE - v;
    if a.re <= 0.0 && a.im.abs() <= 1e-12 * a.norm().max(1.0) {
        return Err(Error::LogBranch { s, value: a });
    }
    Ok(a.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(64);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn midpoint_rule_on_rays() {
        let r = RhoProducts::from_fn(|_| Complex64::new(0.5, 0.0), 2.0, 100);
        // ∫_Σ ds cancels: each axis contributes toward/away pairs
        let v = r.integrate(|_| ONE, false).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn branch_failure_detected() {
        assert!(log_one_minus(ONE, Complex64::new(2.0, 0.0)).is_err());
    }
}
