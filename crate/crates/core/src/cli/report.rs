//! Versioned JSON report.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;
/// Offending ids listed per check; the full count is kept separately.
pub const MAX_LISTED: usize = 50;

/// A number written with 12 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Num {
    pub fn rounded(self) -> f64 {
        if !self.0.is_finite() {
            return self.0;
        }
        format!("{:.11e}", self.0).parse().unwrap_or(self.0)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.rounded())
        } else {
            s.serialize_none()
        }
    }
}

struct NumVisitor;

impl<'de> Visitor<'de> for NumVisitor {
    type Value = Num;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or null")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
        Ok(Num(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
        Ok(Num(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
        Ok(Num(v as f64))
    }

    fn visit_unit<E: de::Error>(self) -> Result<Num, E> {
        Ok(Num(f64::NAN))
    }

    fn visit_none<E: de::Error>(self) -> Result<Num, E> {
        Ok(Num(f64::NAN))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(NumVisitor)
    }
}

pub(crate) fn num_vec(v: &[f64]) -> Vec<Num> {
    v.iter().map(|&x| Num(x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleInfo {
    pub name: String,
    pub resolution: usize,
    pub samples: usize,
    pub dim: usize,
    pub rank: usize,
    pub h_geom: Num,
}

/// Configuration values that affect results; thread count and output
/// directory are left out so reports compare equal across them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub step: Num,
    pub hessian_step: Num,
    pub tol_structure: Num,
    pub tol_residual: Num,
    pub tol_identity: Num,
    pub tol_fixed: Num,
    pub tol_hull: Option<Num>,
    pub tol_deficiency: Num,
    pub seed: u64,
}

/// One pass/fail verdict with residual statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub module: String,
    pub check: String,
    pub pass: bool,
    pub count: usize,
    pub max_residual: Num,
    pub mean_residual: Num,
    pub tol: Num,
    pub worst_sample: Option<usize>,
    pub offending: Vec<usize>,
    pub offending_count: usize,
    pub skipped: usize,
    pub note: String,
}

impl CheckRecord {
    pub fn new(module: &str, check: &str) -> Self {
        Self {
            module: module.to_string(),
            check: check.to_string(),
            pass: false,
            count: 0,
            max_residual: Num(0.0),
            mean_residual: Num(0.0),
            tol: Num(0.0),
            worst_sample: None,
            offending: Vec::new(),
            offending_count: 0,
            skipped: 0,
            note: String::new(),
        }
    }

    pub fn with_offending(mut self, ids: &[usize]) -> Self {
        self.offending_count = ids.len();
        self.offending = ids.iter().take(MAX_LISTED).cloned().collect();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub size: usize,
    pub dimension: usize,
    pub moment: Vec<Num>,
    pub moment_spread: Num,
    pub first_sample: usize,
}

impl ComponentRecord {
    pub fn of(c: &crate::actions::FixedComponent) -> Self {
        Self {
            size: c.members.len(),
            dimension: c.dimension,
            moment: num_vec(&c.moment_value),
            moment_spread: Num(c.moment_spread),
            first_sample: c.members.first().cloned().unwrap_or(0),
        }
    }
}

/// Critical components of `μ^ξ` for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRecord {
    pub xi: Vec<Num>,
    pub components: Vec<ComponentRecord>,
    pub indices: Vec<usize>,
    pub points: usize,
    pub all_even: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullRecord {
    pub dim: usize,
    pub degenerate: bool,
    pub vertices: Vec<Vec<Num>>,
    pub tol: Num,
    pub deficiency: Num,
    pub raster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: Vec<Num>,
    pub eps: Num,
    pub band: usize,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub timestamp: u64,
    pub command: String,
    pub example: ExampleInfo,
    pub config: ConfigEcho,
    pub checks: Vec<CheckRecord>,
    pub fixed_components: Vec<ComponentRecord>,
    pub critical: Vec<CriticalRecord>,
    pub hull: Option<HullRecord>,
    pub levels: Vec<LevelRecord>,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn failed_checks(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}
