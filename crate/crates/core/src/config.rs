//! Flat dotted-key run configuration: defaults, a JSON file, then `key=value`
//! overrides applied in order (last wins).

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Strictly positive number.
    Positive,
    Real,
    /// Nonnegative integer.
    Count,
    Text,
    /// Array of numbers.
    Numbers,
}

const KEYS: &[(&str, Kind, &str)] = &[
    ("alpha", Kind::Positive, "1.0"),
    ("grid.L", Kind::Positive, "20.0"),
    ("grid.h", Kind::Positive, "0.01"),
    ("jost.rtol", Kind::Positive, "1e-11"),
    ("jost.atol", Kind::Positive, "1e-13"),
    ("boundary.tol", Kind::Positive, "1e-8"),
    ("spectrum.r_max", Kind::Positive, "2.5"),
    ("spectrum.zero_tol", Kind::Positive, "1e-10"),
    ("partition.epsilon0", Kind::Real, "0.0"),
    ("rho.r_max", Kind::Positive, "20.0"),
    ("rho.nodes", Kind::Count, "200"),
    ("soliton.t", Kind::Real, "0.0"),
    ("evolve.dt", Kind::Positive, "1e-4"),
    ("evolve.steps", Kind::Count, "1000"),
    ("evolve.scheme", Kind::Text, "\"etd_rk4\""),
    ("evolve.dealias", Kind::Positive, "0.6666666666666666"),
    ("evolve.cfl", Kind::Positive, "0.5"),
    ("evolve.checkpoint_every", Kind::Count, "0"),
    ("decay.L", Kind::Positive, "48.0"),
    ("decay.n", Kind::Count, "4097"),
    ("decay.phi", Kind::Real, "2.0943951023931953"),
    ("decay.amplitude", Kind::Real, "0.01"),
    ("decay.t_samples", Kind::Numbers, "[5, 7.5, 10, 12.5, 15, 20, 25, 30, 35, 40]"),
    ("decay.window", Kind::Numbers, "[5, 7]"),
    ("decay.warmup", Kind::Positive, "5.0"),
    ("decay.frame_velocity", Kind::Real, "6.0"),
    ("decay.sponge_width", Kind::Positive, "6.0"),
    ("decay.sponge_strength", Kind::Real, "5.0"),
    ("decay.composition", Kind::Text, "\"single\""),
    ("decay.jump_contour", Kind::Text, "\"real_axis\""),
    ("sign.zero_tol", Kind::Positive, "1e-12"),
    ("figures.n", Kind::Count, "240"),
    ("figures.extent", Kind::Positive, "3.0"),
    ("seed", Kind::Count, "0"),
];

/// Resolved configuration; every known key holds a value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|(k, _, d)| (k.to_string(), serde_json::from_str(d).expect("default literal")))
            .collect();
        Self { values }
    }
}

fn kind_of(key: &str) -> Result<Kind> {
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .map(|(_, kind, _)| *kind)
        .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))
}

fn check(key: &str, kind: Kind, v: &Value) -> Result<()> {
    let bad = |what: &str| Err(Error::Config(format!("`{key}` must be {what}, got {v}")));
    match kind {
        Kind::Positive => match v.as_f64() {
            Some(x) if x > 0.0 && x.is_finite() => Ok(()),
            _ => bad("a positive number"),
        },
        Kind::Real => match v.as_f64() {
            Some(x) if x.is_finite() => Ok(()),
            _ => bad("a finite number"),
        },
        Kind::Count => match v.as_u64() {
            Some(_) => Ok(()),
            None => bad("a nonnegative integer"),
        },
        Kind::Text => match v {
            Value::String(_) => Ok(()),
            _ => bad("a string"),
        },
        Kind::Numbers => match v {
            Value::Array(a) if a.iter().all(|x| x.as_f64().is_some()) => Ok(()),
            _ => bad("an array of numbers"),
        },
    }
}

impl RunConfig {
    /// Set one key from a JSON value.
    pub fn set(&mut self, key: &str, v: Value) -> Result<()> {
        let kind = kind_of(key)?;
        check(key, kind, &v)?;
        self.values.insert(key.to_string(), v);
        Ok(())
    }

    /// Merge a flat JSON object.
    pub fn merge_json(&mut self, text: &str) -> Result<()> {
        let obj: Map<String, Value> = serde_json::from_str(text)?;
        for (k, v) in obj {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        self.merge_json(&std::fs::read_to_string(path)?)
    }

    /// Apply `key=value`; the value is read as JSON and otherwise as a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let v = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        self.set(k.trim(), v)
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.values[key].as_f64().unwrap_or_else(|| panic!("`{key}` is not numeric"))
    }

    pub fn usize(&self, key: &str) -> usize {
        self.values[key].as_u64().unwrap_or_else(|| panic!("`{key}` is not an integer")) as usize
    }

    pub fn text(&self, key: &str) -> &str {
        self.values[key].as_str().unwrap_or_else(|| panic!("`{key}` is not a string"))
    }

    pub fn numbers(&self, key: &str) -> Vec<f64> {
        self.values[key].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
    }

    /// The full resolved configuration as a JSON object.
    pub fn to_json(&self) -> Value {
        Value::Object(self.values.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}
