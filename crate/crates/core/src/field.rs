//! Sampled fields on a uniform grid and their CSV serialization.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Uniform grid on [−L, L] with `n` nodes including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || n < 3 {
            return Err(Error::Config(format!("bad grid: L = {half_width}, n = {n}")));
        }
        Ok(Self { half_width, n })
    }

    /// Grid with spacing as close to `h` as an integer node count allows.
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self> {
        Self::new(half_width, (2.0 * half_width / h).round() as usize + 1)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + self.h() * j as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }
}

/// Field samples q(x_j) with boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub grid: Grid,
    pub q: Vec<Complex64>,
    pub params: ProblemParams,
    pub time_tag: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    alpha: f64,
    q_minus: Complex64,
    q_plus: Complex64,
    half_width: f64,
    h: f64,
    n: usize,
    time_tag: f64,
}

pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-8;

impl FieldSnapshot {
    pub fn new(grid: Grid, q: Vec<Complex64>, params: ProblemParams, time_tag: f64) -> Result<Self> {
        if q.len() != grid.n {
            return Err(Error::Config(format!("{} samples for a grid of {}", q.len(), grid.n)));
        }
        params.validate()?;
        Ok(Self { grid, q, params, time_tag })
    }

    /// Sample a closure on the grid.
    pub fn from_fn(grid: Grid, params: ProblemParams, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let q = grid.points().into_iter().map(f).collect();
        Self::new(grid, q, params, 0.0)
    }

    /// The constant background q ≡ q₋.
    pub fn constant(grid: Grid, params: ProblemParams) -> Result<Self> {
        Self::from_fn(grid, params, |_| params.q_minus)
    }

    /// q(x) = tanh(x) with q± = ±1.
    pub fn tanh(grid: Grid, alpha: f64) -> Result<Self> {
        let params = ProblemParams::new(alpha, Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0))?;
        Self::from_fn(grid, params, |x| Complex64::new(x.tanh(), 0.0))
    }

    pub fn x(&self) -> Vec<f64> {
        self.grid.points()
    }

    /// Edge mismatch max(|q(−L) − q₋|, |q(L) − q₊|).
    pub fn boundary_mismatch(&self) -> f64 {
        let n = self.q.len();
        (self.q[0] - self.params.q_minus).norm().max((self.q[n - 1] - self.params.q_plus).norm())
    }

    pub fn check_relaxed(&self, tol: f64) -> Result<()> {
        let m = self.boundary_mismatch();
        if m > tol {
            return Err(Error::Validation(format!("field not relaxed at the edges: mismatch {m:.3e} > {tol:.1e}")));
        }
        Ok(())
    }

    pub fn max_modulus(&self) -> f64 {
        self.q.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm distance to another snapshot on the same grid.
    pub fn linf_distance(&self, other: &FieldSnapshot) -> f64 {
        self.q.iter().zip(&other.q).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Linear interpolation at an arbitrary x inside the grid.
    pub fn interp(&self, x: f64) -> Complex64 {
        let h = self.grid.h();
        let s = ((x + self.grid.half_width) / h).clamp(0.0, (self.grid.n - 1) as f64);
        let j = (s.floor() as usize).min(self.grid.n - 2);
        let f = s - j as f64;
        self.q[j] * (1.0 - f) + self.q[j + 1] * f
    }

    /// CSV with a leading `# {json header}` line, then `x,re_q,im_q` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_csv_annotated(w, &[])
    }

    /// As [`write_csv`](Self::write_csv) with extra `#` comment lines after the header.
    pub fn write_csv_annotated<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        let header = Header {
            alpha: self.params.alpha,
            q_minus: self.params.q_minus,
            q_plus: self.params.q_plus,
            half_width: self.grid.half_width,
            h: self.grid.h(),
            n: self.grid.n,
            time_tag: self.time_tag,
        };
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        for c in comments {
            writeln!(w, "# {}", c.replace('\n', " "))?;
        }
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["x", "re_q", "im_q"])?;
        for (x, q) in self.x().iter().zip(&self.q) {
            cw.write_record(&[format!("{x:.17e}"), format!("{:.17e}", q.re), format!("{:.17e}", q.im)])?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut br = BufReader::new(r);
        let mut first = String::new();
        br.read_line(&mut first)?;
        let json = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Config("field CSV must start with a '# {json}' header".into()))?;
        let header: Header = serde_json::from_str(json.trim())?;
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(br);
        let mut xs = Vec::new();
        let mut q = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Config("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number in field CSV: {e}")))
            };
            xs.push(get(0)?);
            q.push(Complex64::new(get(1)?, get(2)?));
        }
        let grid = Grid::new(header.half_width, q.len())?;
        if header.n != q.len() {
            return Err(Error::Config(format!("header declares {} rows, found {}", header.n, q.len())));
        }
        let h = grid.h();
        for (j, x) in xs.iter().enumerate() {
            if (x - grid.x(j)).abs() > 1e-9 * (1.0 + grid.half_width) {
                return Err(Error::Config(format!("non-uniform grid at row {j}")));
            }
        }
        if (h - header.h).abs() > 1e-12 * h.max(1.0) {
            return Err(Error::Config(format!("header spacing {} disagrees with grid spacing {h}", header.h)));
        }
        let params = ProblemParams::new(header.alpha, header.q_minus, header.q_plus)?;
        Self::new(grid, q, params, header.time_tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let f = FieldSnapshot::tanh(Grid::new(5.0, 101).unwrap(), 0.5).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = FieldSnapshot::read_csv(&buf[..]).unwrap();
        assert_eq!(g.grid, f.grid);
        assert!(f.linf_distance(&g) < 1e-15);
        assert_eq!(g.params, f.params);
    }

    #[test]
    fn annotated_csv_reads_back() {
        let f = FieldSnapshot::tanh(Grid::new(5.0, 51).unwrap(), 1.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv_annotated(&mut buf, &["config {\"alpha\": 1.0}".to_string()]).unwrap();
        let g = FieldSnapshot::read_csv(&buf[..]).unwrap();
        assert!(f.linf_distance(&g) < 1e-15);
    }

    #[test]
    fn rejects_missing_header() {
        assert!(FieldSnapshot::read_csv("x,re_q,im_q\n0,1,0\n".as_bytes()).is_err());
    }
}
