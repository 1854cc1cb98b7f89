//! Asymptotic field in the soliton region, the decay experiment and the phase-sign charts.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolver::{evolve_observed, Diagnostic, EvolutionConfig, Sponge};
use crate::field::{FieldSnapshot, Grid};
use crate::linalg::{C, I, ONE};
use crate::params::ProblemParams;
use crate::quadrature::RhoProducts;
use crate::soliton::{reconstruct_shifted, SolitonEnsemble};
use crate::spectral_plane::{
    drift, k_lambda, sign_chart, theta_raw, PhaseConvention, PlaneGrid, RegionPartition, SignChart,
};
use crate::spectrum::{find_zeros, DiscreteSpectrum, SearchRegion};
use crate::tfunc::{JumpContour, TFunction};

/// How the phase prefactor of the asymptotic field is composed with q_sol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseComposition {
    /// exp{(i/α)∫_{−∞}^x (1 − |q_sol|²)dy}·T(∞)²·q_sol with q_sol already carrying e^{2iν₋}.
    Literal,
    /// T(∞)²·q_sol.
    Single,
}

/// q_asym(x, t) with the literal composition.
pub fn asymptotic_field(t: f64, grid: &Grid, ens: &SolitonEnsemble, t_inf: C) -> Result<FieldSnapshot> {
    asymptotic_field_with(t, grid, 0.0, ens, t_inf, PhaseComposition::Literal)
}

/// q_asym at the points x_j + offset.
pub fn asymptotic_field_with(
    t: f64,
    grid: &Grid,
    offset: f64,
    ens: &SolitonEnsemble,
    t_inf: C,
    composition: PhaseComposition,
) -> Result<FieldSnapshot> {
    let rec = reconstruct_shifted(t, grid, offset, ens)?;
    let t2 = t_inf * t_inf;
    let q: Vec<C> = rec
        .field
        .q
        .iter()
        .zip(&rec.nu_minus)
        .map(|(&v, &nu)| match composition {
            PhaseComposition::Literal => (2.0 * I * nu).exp() * t2 * v,
            PhaseComposition::Single => t2 * v,
        })
        .collect();
    let edge = ens.params.q_minus * t2 / t2.norm();
    let params = ProblemParams { q_minus: edge, q_plus: edge, ..ens.params };
    FieldSnapshot::new(*grid, q, params, t)
}

/// Stationary ray ξ_n of an eigenvalue, where Im θ(η; ξ) changes sign.
pub fn stationary_ray(eta: C, alpha: f64) -> f64 {
    let kl = k_lambda(eta, alpha);
    -(kl * drift(eta, alpha)).im / kl.im
}

/// ∇/Δ/Λ partition for a cone ξ ∈ window: Λ holds the eigenvalues whose stationary
/// ray lies in the window, the rest are split by the sign of Im θ at the window centre.
pub fn window_partition(spectrum: &DiscreteSpectrum, window: (f64, f64)) -> RegionPartition {
    let mid = 0.5 * (window.0 + window.1);
    let mut part = RegionPartition { epsilon0: 0.0, ..RegionPartition::empty() };
    for (n, e) in spectrum.expanded().iter().enumerate() {
        let im = theta_raw(e.eta, spectrum.alpha, mid, PhaseConvention::Lax).im;
        if im <= 0.0 {
            part.nabla.push(n);
        } else {
            part.delta.push(n);
        }
        let xi_n = stationary_ray(e.eta, spectrum.alpha);
        if xi_n > window.0 && xi_n < window.1 {
            part.lambda_set.push(n);
            part.epsilon0 = part.epsilon0.max(im.abs());
        } else {
            part.varrho0 = part.varrho0.min(im.abs());
        }
    }
    part
}

/// max over η ∉ Λ and ξ in {window ends, centre} of e^{−2t|Im θ(η; ξ)|}, the size of the
/// residue factors that the disk jumps carry away from Λ.
pub fn jump_decay_proxy(spectrum: &DiscreteSpectrum, partition: &RegionPartition, window: (f64, f64), t: f64) -> f64 {
    let xis = [window.0, 0.5 * (window.0 + window.1), window.1];
    let mut worst: f64 = 0.0;
    for (n, e) in spectrum.expanded().iter().enumerate() {
        if partition.lambda_set.contains(&n) {
            continue;
        }
        for xi in xis {
            let im = theta_raw(e.eta, spectrum.alpha, xi, PhaseConvention::Lax).im;
            worst = worst.max((-2.0 * t * im.abs()).exp());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub t_samples: Vec<f64>,
    pub window: (f64, f64),
    /// Samples before this time are excluded from the fit.
    pub warmup: f64,
    pub evolution: EvolutionConfig,
    pub search: SearchRegion,
    pub rho_r_max: f64,
    pub rho_nodes: usize,
    /// Errors below this level count as discretization noise.
    pub noise_floor: f64,
    pub composition: PhaseComposition,
    /// Contour of the δ integral in T.
    #[serde(default)]
    pub jump_contour: JumpContour,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            t_samples: vec![5.0, 7.5, 10.0, 12.5, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            window: (5.0, 7.0),
            warmup: 5.0,
            evolution: EvolutionConfig {
                frame_velocity: 6.0,
                sponge: Some(Sponge { width: 6.0, strength: 5.0 }),
                diagnostic_every: 100,
                ..EvolutionConfig::default()
            },
            search: SearchRegion::standard(2.5),
            rho_r_max: 20.0,
            rho_nodes: 200,
            noise_floor: 1e-7,
            composition: PhaseComposition::Single,
            jump_contour: JumpContour::RealAxis,
        }
    }
}

impl DecayConfig {
    /// Largest t for which the window stays clear of the sponge in the moving frame.
    pub fn max_usable_t(&self, grid: &Grid) -> f64 {
        let v = self.evolution.frame_velocity;
        let margin = self.evolution.sponge.map_or(0.0, |s| s.width);
        let reach = (self.window.0 - v).abs().max((self.window.1 - v).abs());
        (grid.half_width - margin) / reach
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.t_samples.is_empty() || self.t_samples.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("t_samples must be nonempty and strictly increasing".into()));
        }
        if self.t_samples[0] < self.warmup {
            return Err(Error::Config(format!("first sample {} precedes the warm-up {}", self.t_samples[0], self.warmup)));
        }
        if !(self.window.0 < self.window.1) {
            return Err(Error::Config(format!("bad window {:?}", self.window)));
        }
        let t_max = self.max_usable_t(grid);
        if self.t_samples[self.t_samples.len() - 1] > t_max {
            return Err(Error::Design { t_max });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
    /// The same norms for the other phase composition.
    pub linf_other: f64,
    pub l2_other: f64,
    pub jump_proxy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayExperiment {
    pub config: DecayConfig,
    pub t_samples: Vec<f64>,
    pub window: (f64, f64),
    pub errors: Vec<ErrorSample>,
    pub fitted_slope: f64,
    pub fit_r2: f64,
    /// Every error sits below the noise floor, so the slope carries no information.
    pub degenerate: bool,
    pub spectrum: DiscreteSpectrum,
    pub partition: RegionPartition,
    pub t_infinity: C,
    pub diagnostics: Vec<Diagnostic>,
}

impl DecayExperiment {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "error_Linf", "error_L2", "error_Linf_other", "error_L2_other", "jump_proxy"])?;
        for e in &self.errors {
            wr.write_record(
                [e.t, e.linf, e.l2, e.linf_other, e.l2_other, e.jump_proxy].iter().map(|v| format!("{v:e}")),
            )?;
        }
        wr.flush()?;
        Ok(())
    }

    /// No error exceeds `factor` times its predecessor.
    pub fn roughly_monotone(&self, factor: f64) -> bool {
        self.errors.windows(2).all(|w| w[1].linf <= factor * w[0].linf)
    }
}

/// Least-squares line through (ln t, ln e): (slope, R²).
pub fn loglog_fit(t: &[f64], e: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Scatter the initial data, assemble the asymptotic field of the window's Λ, evolve the
/// data directly and measure the distance between the two inside x ∈ (ξ₀t, ξ₁t).
pub fn decay_experiment(initial: &FieldSnapshot, config: &DecayConfig) -> Result<DecayExperiment> {
    let grid = initial.grid;
    config.validate(&grid)?;
    let p = initial.params;
    if (p.q_plus - p.q_minus).norm() > 1e-12 {
        return Err(Error::Topology { q_minus: p.q_minus, q_plus: p.q_plus });
    }
    let spectrum = find_zeros(initial, &config.search)?;
    let rho = RhoProducts::from_field(initial, config.rho_r_max, config.rho_nodes)?;
    let partition = window_partition(&spectrum, config.window);
    let tf = TFunction::new(&partition, &spectrum, &rho).with_contour(config.jump_contour);
    let t_inf = tf.t_infinity()?;
    let ens = SolitonEnsemble::from_partition(&spectrum, &partition, &tf)?;

    let dt = config.evolution.dt;
    let v = config.evolution.frame_velocity;
    let mut snapshots = Vec::with_capacity(config.t_samples.len());
    let mut diagnostics = Vec::new();
    let mut field = initial.clone();
    let mut step = 0usize;
    for &t in &config.t_samples {
        let target = (t / dt).round() as usize;
        let cfg = EvolutionConfig { n_steps: target - step, ..config.evolution };
        let run = evolve_observed(&field, &cfg, 0, |_| Ok(()))?;
        diagnostics.extend(run.diagnostics);
        field = run.field;
        field.time_tag = t;
        step = target;
        snapshots.push(field.clone());
    }

    let other = match config.composition {
        PhaseComposition::Literal => PhaseComposition::Single,
        PhaseComposition::Single => PhaseComposition::Literal,
    };
    let errors: Vec<ErrorSample> = snapshots
        .par_iter()
        .map(|num| {
            let t = num.time_tag;
            let offset = v * t;
            let rec = reconstruct_shifted(t, &grid, offset, &ens)?;
            let t2 = t_inf * t_inf;
            let inside: Vec<usize> =
                (0..grid.n).filter(|&j| {
                    let x = grid.x(j) + offset;
                    x > config.window.0 * t && x < config.window.1 * t
                })
                .collect();
            let norms = |comp: PhaseComposition| {
                let mut linf: f64 = 0.0;
                let mut l2 = 0.0;
                for &j in &inside {
                    let phase = match comp {
                        PhaseComposition::Literal => (2.0 * I * rec.nu_minus[j]).exp(),
                        PhaseComposition::Single => ONE,
                    };
                    let d = (num.q[j] - phase * t2 * rec.field.q[j]).norm();
                    linf = linf.max(d);
                    l2 += d * d;
                }
                (linf, (l2 * grid.h()).sqrt())
            };
            let (linf, l2) = norms(config.composition);
            let (linf_other, l2_other) = norms(other);
            Ok(ErrorSample {
                t,
                linf,
                l2,
                linf_other,
                l2_other,
                jump_proxy: jump_decay_proxy(&spectrum, &partition, config.window, t),
            })
        })
        .collect::<Result<_>>()?;

    let fit: Vec<&ErrorSample> = errors.iter().filter(|e| e.t >= config.warmup).collect();
    let degenerate = errors.iter().all(|e| e.linf < config.noise_floor) || fit.len() < 2;
    let (fitted_slope, fit_r2) = if degenerate {
        (f64::NAN, f64::NAN)
    } else {
        let ts: Vec<f64> = fit.iter().map(|e| e.t).collect();
        let es: Vec<f64> = fit.iter().map(|e| e.linf).collect();
        loglog_fit(&ts, &es)
    };
    Ok(DecayExperiment {
        config: config.clone(),
        t_samples: config.t_samples.clone(),
        window: config.window,
        errors,
        fitted_slope,
        fit_r2,
        degenerate,
        spectrum,
        partition,
        t_infinity: t_inf,
        diagnostics,
    })
}

/// The ray values charted by default.
pub const FIGURE_XI: [f64; 9] = [-5.0, 7.0, 6.99, 5.99, 7.01, 5.01, 8.0, 4.0, 6.5];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureChart {
    pub xi: f64,
    pub chart: SignChart,
    pub first_quadrant_regions: usize,
}

/// Default plane grid: [−3, 3]² with an even node count so that z = 0 is not sampled.
pub fn figure_grid() -> PlaneGrid {
    PlaneGrid { re_min: -3.0, re_max: 3.0, n_re: 240, im_min: -3.0, im_max: 3.0, n_im: 240 }
}

/// Sign charts of Im θ for each ξ with the count of connected sign regions in the first quadrant.
pub fn figure3_suite(xi_values: &[f64], alpha: f64, grid: &PlaneGrid, zero_tol: f64) -> Result<Vec<FigureChart>> {
    xi_values
        .par_iter()
        .map(|&xi| {
            let params = ProblemParams::unit(alpha).with_xi(xi);
            let chart = sign_chart(&params, grid, zero_tol)?;
            let first_quadrant_regions = chart.first_quadrant_regions();
            Ok(FigureChart { xi, chart, first_quadrant_regions })
        })
        .collect()
}

/// The standard perturbed-soliton initial data: the unit-circle soliton at angle `phi`
/// with c = −ζ, times (1 + amplitude·e^{−(x − center)²}).
pub fn perturbed_soliton(grid: &Grid, alpha: f64, phi: f64, amplitude: f64, center: f64) -> Result<FieldSnapshot> {
    let zeta = Complex64::from_polar(1.0, phi);
    let sp = DiscreteSpectrum {
        quartets: vec![],
        circle: vec![crate::spectrum::CircleEigenpair { zeta, c: -zeta }],
        alpha,
        q_minus: ONE,
    };
    let ens = SolitonEnsemble::reflectionless(&sp)?;
    let mut f = crate::soliton::reconstruct_q_sol(0.0, grid, &ens)?;
    for (j, v) in f.q.iter_mut().enumerate() {
        let x = grid.x(j) - center;
        *v *= 1.0 + amplitude * (-x * x).exp();
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::CircleEigenpair;

    fn circle(alpha: f64, phi: f64) -> DiscreteSpectrum {
        let zeta = Complex64::from_polar(1.0, phi);
        DiscreteSpectrum { quartets: vec![], circle: vec![CircleEigenpair { zeta, c: -zeta }], alpha, q_minus: ONE }
    }

    #[test]
    fn empty_ensemble_gives_background() {
        let sp = DiscreteSpectrum::empty(1.0, ONE);
        let ens = SolitonEnsemble::reflectionless(&sp).unwrap();
        let f = asymptotic_field(3.0, &Grid::new(10.0, 101).unwrap(), &ens, ONE).unwrap();
        assert!(f.q.iter().all(|&v| v == ONE));
    }

    #[test]
    fn modulus_is_scaled_by_t_infinity() {
        let ens = SolitonEnsemble::reflectionless(&circle(1.0, 2.2)).unwrap();
        let grid = Grid::new(30.0, 601).unwrap();
        let t_inf = Complex64::from_polar(1.0, 0.7);
        let a = asymptotic_field(0.0, &grid, &ens, t_inf).unwrap();
        let q = crate::soliton::reconstruct_q_sol(0.0, &grid, &ens).unwrap();
        for (u, v) in a.q.iter().zip(&q.q) {
            assert!((u.norm() - v.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_ray_of_circle_soliton() {
        let zeta = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((stationary_ray(zeta, 1.0) - 6.5).abs() < 1e-12);
        let part = window_partition(&circle(1.0, 2.0 * std::f64::consts::PI / 3.0), (5.0, 7.0));
        assert_eq!(part.lambda_set, vec![0, 1]);
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let t = [5.0, 10.0, 20.0, 40.0];
        let e: Vec<f64> = t.iter().map(|v: &f64| 3.0 * v.powf(-0.75)).collect();
        let (s, r2) = loglog_fit(&t, &e);
        assert!((s + 0.75).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn design_error_reports_t_max() {
        let cfg = DecayConfig::default();
        let grid = Grid::new(20.0, 1025).unwrap();
        match cfg.validate(&grid) {
            Err(Error::Design { t_max }) => assert!((t_max - 14.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn real_axis_is_neutral() {
        let row = PlaneGrid { re_min: -3.0, re_max: 3.0, n_re: 240, im_min: 0.0, im_max: 0.0, n_im: 1 };
        for chart in figure3_suite(&FIGURE_XI, 1.0, &row, 1e-12).unwrap() {
            assert!(chart.chart.signs[0].iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn charts_flip_under_inversion() {
        let charts = figure3_suite(&[6.5], 1.0, &figure_grid(), 1e-12).unwrap();
        let g = figure_grid();
        let chart = &charts[0].chart;
        for i in 0..g.n_im {
            for j in 0..g.n_re {
                let z = Complex64::new(g.re(j), g.im(i));
                let w = -z.inv();
                let im = theta_raw(w, 1.0, 6.5, PhaseConvention::Lax).im;
                let s = chart.signs[i][j] as f64;
                if s != 0.0 && im.abs() > 1e-9 {
                    assert_eq!(s, -im.signum());
                }
            }
        }
    }
}
