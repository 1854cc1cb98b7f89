//! Global problem constants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants shared by every stage: the dispersion parameter α,
/// the boundary values q± and, once asymptotics are requested, the ray ξ = x/t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub alpha: f64,
    pub q_minus: Complex64,
    pub q_plus: Complex64,
    #[serde(default)]
    pub xi: Option<f64>,
}

impl ProblemParams {
    pub fn new(alpha: f64, q_minus: Complex64, q_plus: Complex64) -> Result<Self> {
        let p = Self { alpha, q_minus, q_plus, xi: None };
        p.validate()?;
        Ok(p)
    }

    /// Equal unit boundary values `q± = 1`.
    pub fn unit(alpha: f64) -> Self {
        Self { alpha, q_minus: Complex64::new(1.0, 0.0), q_plus: Complex64::new(1.0, 0.0), xi: None }
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = Some(xi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        for (name, q) in [("q_minus", self.q_minus), ("q_plus", self.q_plus)] {
            if (q.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("|{name}| = {} is not 1", q.norm())));
            }
        }
        Ok(())
    }

    pub fn xi(&self) -> Result<f64> {
        self.xi.ok_or_else(|| Error::Config("xi is unset".into()))
    }
}
