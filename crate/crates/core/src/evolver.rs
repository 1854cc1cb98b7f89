//! Fourier pseudo-spectral evolution of iq_t + q_xx + 4iαq_x + (i/α)(|q|²q)_x = 0
//! with equal constant boundary values, treated as a periodic problem on [−L, L).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSnapshot;
use crate::linalg::{C, I, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EtdRk4,
    IfRk4,
}

/// Damping −σ(x)(q − q₋) switched on over `width` at each edge, σ rising as sin².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    pub width: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub dealias_fraction: f64,
    pub scheme: Scheme,
    /// Stability constant c in dt ≤ c·h².
    pub cfl: f64,
    /// Evolve in the frame x − Vt.
    #[serde(default)]
    pub frame_velocity: f64,
    #[serde(default)]
    pub sponge: Option<Sponge>,
    /// Steps between diagnostic records (0 disables).
    #[serde(default = "one")]
    pub diagnostic_every: usize,
}

fn one() -> usize {
    1
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            n_steps: 0,
            dealias_fraction: 2.0 / 3.0,
            scheme: Scheme::EtdRk4,
            cfl: 0.5,
            frame_velocity: 0.0,
            sponge: None,
            diagnostic_every: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps, ..Self::default() }
    }

    pub fn validate(&self, h: f64) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::Config(format!("dealias_fraction {} outside (0, 1]", self.dealias_fraction)));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::Config(format!("cfl must be positive, got {}", self.cfl)));
        }
        let bound = self.cfl * h * h;
        if self.dt > bound {
            return Err(Error::Config(format!("dt = {} exceeds the stability bound {bound:.3e} = {}·h²", self.dt, self.cfl)));
        }
        if let Some(s) = self.sponge {
            if !(s.width > 0.0 && s.strength >= 0.0) {
                return Err(Error::Config(format!("bad sponge {s:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub t: f64,
    /// ∫(1 − |q|²)dx over one period.
    pub mass: f64,
    pub max_modulus: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionRun {
    pub config: EvolutionConfig,
    pub field: FieldSnapshot,
    pub diagnostics: Vec<Diagnostic>,
    /// Shift of the co-moving grid: node j sits at x_j + offset.
    pub frame_offset: f64,
}

/// Angular wavenumbers of an n-point periodic grid of period p, in FFT order.
pub fn wavenumbers(n: usize, period: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            if n % 2 == 0 && j == n / 2 {
                0.0
            } else {
                2.0 * PI * m / period
            }
        })
        .collect()
}

struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    n: usize,
    scratch: Vec<C>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        let fwd = p.plan_fft_forward(n);
        let inv = p.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self { fwd, inv, n, scratch: vec![ZERO; len] }
    }

    fn forward(&mut self, v: &mut [C]) {
        self.fwd.process_with_scratch(v, &mut self.scratch);
    }

    fn inverse(&mut self, v: &mut [C]) {
        self.inv.process_with_scratch(v, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        v.iter_mut().for_each(|x| *x *= s);
    }

    /// Spectral derivative of order `order` of periodic samples.
    fn derivative(&mut self, v: &[C], kappa: &[f64], order: i32) -> Vec<C> {
        let mut w = v.to_vec();
        self.forward(&mut w);
        for (x, &k) in w.iter_mut().zip(kappa) {
            *x *= (I * k).powi(order);
        }
        self.inverse(&mut w);
        w
    }
}

struct Stepper {
    fft: Spectral,
    kappa: Vec<f64>,
    mask: Vec<f64>,
    sigma: Vec<f64>,
    background: C,
    alpha: f64,
    work: Vec<C>,
}

impl Stepper {
    /// Fourier coefficients of −(1/α)(|q|²q)_x − σ(q − q₋).
    fn nonlinear(&mut self, v: &[C]) -> Vec<C> {
        let mut q = v.to_vec();
        self.fft.inverse(&mut q);
        self.work.clear();
        self.work.extend(q.iter().map(|&u| u * u.norm_sqr()));
        let mut cube = std::mem::take(&mut self.work);
        self.fft.forward(&mut cube);
        let mut out: Vec<C> = cube
            .iter()
            .zip(&self.kappa)
            .zip(&self.mask)
            .map(|((&c, &k), &m)| -I * (k * m / self.alpha) * c)
            .collect();
        self.work = cube;
        if self.sigma.iter().any(|&s| s != 0.0) {
            let mut damp: Vec<C> = q.iter().zip(&self.sigma).map(|(&u, &s)| -(u - self.background) * s).collect();
            self.fft.forward(&mut damp);
            for (o, d) in out.iter_mut().zip(&damp) {
                *o += d;
            }
        }
        out
    }
}

/// Contour-averaged φ-functions for ETDRK4, stable as the symbol tends to 0.
fn etd_coefficients(c: C, dt: f64) -> [C; 4] {
    const M: usize = 32;
    let mut acc = [ZERO; 4];
    for j in 0..M {
        let r = c + C::from_polar(1.0, PI * (j as f64 + 0.5) / M as f64 * 2.0);
        let e = r.exp();
        let r3 = r * r * r;
        acc[0] += ((r / 2.0).exp() - 1.0) / r;
        acc[1] += (-4.0 - r + e * (4.0 - 3.0 * r + r * r)) / r3;
        acc[2] += (2.0 + r + e * (r - 2.0)) / r3;
        acc[3] += (-4.0 - 3.0 * r - r * r + e * (4.0 - r)) / r3;
    }
    acc.map(|a| a * (dt / M as f64))
}

fn diagnostic(q: &[C], h: f64, t: f64) -> Diagnostic {
    Diagnostic {
        t,
        mass: q.iter().map(|v| 1.0 - v.norm_sqr()).sum::<f64>() * h,
        max_modulus: q.iter().map(|v| v.norm()).fold(0.0, f64::max),
    }
}

/// Advance the field by n_steps·dt.
pub fn evolve(field: &FieldSnapshot, config: &EvolutionConfig) -> Result<FieldSnapshot> {
    Ok(evolve_observed(field, config, 0, |_| Ok(()))?.field)
}

/// Advance the field, handing a snapshot to `observer` every `every` steps (0 never)
/// and recording diagnostics.
pub fn evolve_observed(
    field: &FieldSnapshot,
    config: &EvolutionConfig,
    every: usize,
    mut observer: impl FnMut(&FieldSnapshot) -> Result<()>,
) -> Result<EvolutionRun> {
    let p = field.params;
    if (p.q_plus - p.q_minus).norm() > 1e-12 {
        return Err(Error::Topology { q_minus: p.q_minus, q_plus: p.q_plus });
    }
    let grid = field.grid;
    let h = grid.h();
    config.validate(h)?;
    let n = grid.n - 1;
    let period = 2.0 * grid.half_width;
    let kappa = wavenumbers(n, period);
    let cutoff = config.dealias_fraction * PI * n as f64 / period;
    let mask: Vec<f64> = kappa.iter().map(|&k| if k.abs() < cutoff + 1e-9 { 1.0 } else { 0.0 }).collect();
    let sigma: Vec<f64> = (0..n)
        .map(|j| match config.sponge {
            Some(s) => {
                let x = grid.x(j);
                let d = (grid.half_width - x.abs()).max(0.0);
                if d < s.width {
                    s.strength * ((PI / 2.0) * (1.0 - d / s.width)).sin().powi(2)
                } else {
                    0.0
                }
            }
            None => 0.0,
        })
        .collect();
    let dt = config.dt;
    let symbol: Vec<C> = kappa.iter().map(|&k| -I * (k * k + (4.0 * p.alpha - config.frame_velocity) * k)).collect();

    let mut st = Stepper { fft: Spectral::new(n), kappa, mask, sigma, background: p.q_minus, alpha: p.alpha, work: Vec::with_capacity(n) };
    let mut v: Vec<C> = field.q[..n].to_vec();
    st.fft.forward(&mut v);

    let e2: Vec<C> = symbol.iter().map(|&l| (l * dt / 2.0).exp()).collect();
    let e: Vec<C> = e2.iter().map(|x| x * x).collect();
    let etd: Vec<[C; 4]> = match config.scheme {
        Scheme::EtdRk4 => symbol.iter().map(|&l| etd_coefficients(l * dt, dt)).collect(),
        Scheme::IfRk4 => Vec::new(),
    };

    let t0 = field.time_tag;
    let mut diagnostics = Vec::new();
    if config.diagnostic_every > 0 {
        diagnostics.push(diagnostic(&field.q[..n], h, t0));
    }
    let snapshot = |v: &[C], st: &mut Stepper, t: f64| -> Result<FieldSnapshot> {
        let mut q = v.to_vec();
        st.fft.inverse(&mut q);
        q.push(q[0]);
        FieldSnapshot::new(grid, q, p, t)
    };

    for step in 1..=config.n_steps {
        let nv = st.nonlinear(&v);
        match config.scheme {
            Scheme::IfRk4 => {
                let a: Vec<C> = nv.iter().map(|x| x * dt).collect();
                let u: Vec<C> = (0..n).map(|j| e2[j] * (v[j] + a[j] / 2.0)).collect();
                let b: Vec<C> = st.nonlinear(&u).iter().map(|x| x * dt).collect();
                let u: Vec<C> = (0..n).map(|j| e2[j] * v[j] + b[j] / 2.0).collect();
                let c: Vec<C> = st.nonlinear(&u).iter().map(|x| x * dt).collect();
                let u: Vec<C> = (0..n).map(|j| e[j] * v[j] + e2[j] * c[j]).collect();
                let d: Vec<C> = st.nonlinear(&u).iter().map(|x| x * dt).collect();
                for j in 0..n {
                    v[j] = e[j] * v[j] + (e[j] * a[j] + 2.0 * e2[j] * (b[j] + c[j]) + d[j]) / 6.0;
                }
            }
            Scheme::EtdRk4 => {
                let a: Vec<C> = (0..n).map(|j| e2[j] * v[j] + etd[j][0] * nv[j]).collect();
                let na = st.nonlinear(&a);
                let b: Vec<C> = (0..n).map(|j| e2[j] * v[j] + etd[j][0] * na[j]).collect();
                let nb = st.nonlinear(&b);
                let c: Vec<C> = (0..n).map(|j| e2[j] * a[j] + etd[j][0] * (2.0 * nb[j] - nv[j])).collect();
                let nc = st.nonlinear(&c);
                for j in 0..n {
                    let f = &etd[j];
                    v[j] = e[j] * v[j] + nv[j] * f[1] + 2.0 * (na[j] + nb[j]) * f[2] + nc[j] * f[3];
                }
            }
        }
        let t = t0 + step as f64 * dt;
        let record = config.diagnostic_every > 0 && step % config.diagnostic_every == 0;
        let observe = every > 0 && step % every == 0;
        if record || observe || step == config.n_steps {
            let mut q = v.clone();
            st.fft.inverse(&mut q);
            let d = diagnostic(&q, h, t);
            if !(d.max_modulus <= 10.0) {
                return Err(Error::Instability { max_modulus: d.max_modulus, t });
            }
            if record {
                diagnostics.push(d);
            }
            if observe {
                observer(&snapshot(&v, &mut st, t)?)?;
            }
        }
    }
    let t = t0 + config.n_steps as f64 * dt;
    let field = snapshot(&v, &mut st, t)?;
    Ok(EvolutionRun { config: *config, field, diagnostics, frame_offset: config.frame_velocity * (t - t0) })
}

/// Which equation the residual measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    /// iq_t + q_xx + 4iαq_x + (i/α)(|q|²q)_x on the samples as given.
    Transformed,
    /// iu_t + u_xx + 2|u|²u + (i/α)(|u|²u)_x with u = q·e^{−4iα²t + 2iαx}.
    Dual,
    /// iq_t + q_xx + 2|q|²q + (i/α)(|q|²q)_x on the samples as given.
    Original,
}

/// L² norm over one period of the centered-difference residual at the middle snapshot.
pub fn pde_residual(seq: [&FieldSnapshot; 3], dt: f64, form: ResidualForm) -> Result<f64> {
    let grid = seq[0].grid;
    if seq.iter().any(|f| f.grid != grid) {
        return Err(Error::Config("snapshots live on different grids".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let alpha = seq[1].params.alpha;
    let n = grid.n - 1;
    let h = grid.h();
    let kappa = wavenumbers(n, 2.0 * grid.half_width);
    let mut fft = Spectral::new(n);
    let q: Vec<&[C]> = seq.iter().map(|f| &f.q[..n]).collect();
    let qm = q[1];
    let qx = fft.derivative(qm, &kappa, 1);
    let qxx = fft.derivative(qm, &kappa, 2);
    let cube: Vec<C> = qm.iter().map(|&u| u * u.norm_sqr()).collect();
    let cube_x = fft.derivative(&cube, &kappa, 1);
    let t = seq[1].time_tag;
    let r: Vec<C> = (0..n)
        .map(|j| {
            let x = grid.x(j);
            match form {
                ResidualForm::Transformed => {
                    let qt = (q[2][j] - q[0][j]) / (2.0 * dt);
                    I * qt + qxx[j] + I * 4.0 * alpha * qx[j] + I / alpha * cube_x[j]
                }
                ResidualForm::Original => {
                    let qt = (q[2][j] - q[0][j]) / (2.0 * dt);
                    I * qt + qxx[j] + 2.0 * cube[j] + I / alpha * cube_x[j]
                }
                ResidualForm::Dual => {
                    let phase = |tt: f64| (I * (2.0 * alpha * x - 4.0 * alpha * alpha * tt)).exp();
                    let ut = (q[2][j] * phase(t + dt) - q[0][j] * phase(t - dt)) / (2.0 * dt);
                    let e = phase(t);
                    let ia = I * 2.0 * alpha;
                    let uxx = (qxx[j] + 2.0 * ia * qx[j] + ia * ia * qm[j]) * e;
                    let ucube = cube[j] * e;
                    let ucube_x = (cube_x[j] + ia * cube[j]) * e;
                    I * ut + uxx + 2.0 * ucube + I / alpha * ucube_x
                }
            }
        })
        .collect();
    Ok((r.iter().map(|v| v.norm_sqr()).sum::<f64>() * h).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::params::ProblemParams;

    fn plane_wave(alpha: f64, m: i32, grid: Grid) -> (FieldSnapshot, f64, f64) {
        let kappa = 2.0 * PI * m as f64 / (2.0 * grid.half_width);
        let omega = kappa * kappa + 4.0 * alpha * kappa + kappa / alpha;
        let q0 = C::from_polar(1.0, -kappa * grid.half_width);
        let p = ProblemParams::new(alpha, q0, q0).unwrap();
        let f = FieldSnapshot::from_fn(grid, p, |x| C::from_polar(1.0, kappa * x)).unwrap();
        (f, kappa, omega)
    }

    #[test]
    fn constant_is_fixed_point() {
        let grid = Grid::new(10.0, 257).unwrap();
        let p = ProblemParams::new(0.7, C::from_polar(1.0, 0.3), C::from_polar(1.0, 0.3)).unwrap();
        let f = FieldSnapshot::constant(grid, p).unwrap();
        for scheme in [Scheme::EtdRk4, Scheme::IfRk4] {
            let cfg = EvolutionConfig { scheme, ..EvolutionConfig::new(1e-3, 200) };
            let g = evolve(&f, &cfg).unwrap();
            assert!(g.linf_distance(&f) < 1e-12);
        }
    }

    #[test]
    fn plane_wave_dispersion() {
        let grid = Grid::new(PI, 129).unwrap();
        let (f, kappa, omega) = plane_wave(0.8, 2, grid);
        for scheme in [Scheme::EtdRk4, Scheme::IfRk4] {
            let cfg = EvolutionConfig { scheme, ..EvolutionConfig::new(1e-3, 1000) };
            let g = evolve(&f, &cfg).unwrap();
            let err = g.x().iter().zip(&g.q).map(|(&x, &v)| (v - C::from_polar(1.0, kappa * x - omega)).norm()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{scheme:?}: {err}");
        }
    }

    #[test]
    fn step_halving_is_fourth_order() {
        let grid = Grid::new(PI, 65).unwrap();
        let (f, kappa, omega) = plane_wave(0.5, 3, grid);
        let err = |dt: f64| {
            let g = evolve(&f, &EvolutionConfig { cfl: 10.0, ..EvolutionConfig::new(dt, (1.0 / dt).round() as usize) }).unwrap();
            (g.q[10] - C::from_polar(1.0, kappa * g.grid.x(10) - omega)).norm()
        };
        let ratio = err(0.01) / err(0.005);
        assert!(ratio > 13.0 && ratio < 19.0, "{ratio}");
    }

    #[test]
    fn unequal_boundaries_rejected() {
        let f = FieldSnapshot::tanh(Grid::new(10.0, 101).unwrap(), 1.0).unwrap();
        assert!(matches!(evolve(&f, &EvolutionConfig::new(1e-4, 1)), Err(Error::Topology { .. })));
    }

    #[test]
    fn stability_bound_enforced() {
        let f = FieldSnapshot::constant(Grid::new(10.0, 101).unwrap(), ProblemParams::unit(1.0)).unwrap();
        assert!(matches!(evolve(&f, &EvolutionConfig::new(0.1, 1)), Err(Error::Config(_))));
    }

    #[test]
    fn residuals_on_plane_wave() {
        let grid = Grid::new(PI, 65).unwrap();
        let (f, kappa, omega) = plane_wave(0.6, 1, grid);
        let at = |t: f64| {
            let mut g = FieldSnapshot::from_fn(grid, f.params, |x| C::from_polar(1.0, kappa * x - omega * t)).unwrap();
            g.time_tag = t;
            g
        };
        let r = |dt: f64| pde_residual([&at(1.0 - dt), &at(1.0), &at(1.0 + dt)], dt, ResidualForm::Transformed).unwrap();
        let ratio = r(1e-2) / r(5e-3);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
        let c = FieldSnapshot::constant(grid, ProblemParams::unit(0.6)).unwrap();
        assert!(pde_residual([&c, &c, &c], 1e-3, ResidualForm::Transformed).unwrap() < 1e-12);
        let d = pde_residual([&at(1.0 - 1e-3), &at(1.0), &at(1.0 + 1e-3)], 1e-3, ResidualForm::Dual).unwrap();
        assert!(d < 1e-3 * 10.0 * (1.0 + omega * omega));
    }
}
