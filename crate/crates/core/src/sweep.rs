//! Parallel per-sample evaluation with order-independent aggregation.

use rayon::prelude::*;

use crate::error::Result;

/// Residual statistics over a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub tol: f64,
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    pub worst: Option<usize>,
    /// Samples whose residual exceeds the tolerance.
    pub offending: Vec<usize>,
    /// Samples where evaluation failed, with the reason.
    pub skipped: Vec<(usize, String)>,
}

impl SweepSummary {
    /// True when something was evaluated and nothing exceeded the tolerance.
    pub fn passes(&self) -> bool {
        self.count > 0 && self.offending.is_empty()
    }

    /// Summary of already computed residuals, indexed by sample id.
    pub fn from_values(ids: &[usize], values: Vec<Result<f64>>, tol: f64) -> Self {
        let mut out = Self {
            tol,
            count: 0,
            max: 0.0,
            mean: 0.0,
            worst: None,
            offending: Vec::new(),
            skipped: Vec::new(),
        };
        let mut sum = 0.0;
        for (&id, v) in ids.iter().zip(values) {
            match v {
                Ok(r) => {
                    out.count += 1;
                    sum += r;
                    if out.worst.is_none() || r > out.max || r.is_nan() {
                        out.max = if r.is_nan() { f64::INFINITY } else { r };
                        out.worst = Some(id);
                    }
                    if r.is_nan() || r > tol {
                        out.offending.push(id);
                    }
                }
                Err(e) => out.skipped.push((id, e.to_string())),
            }
        }
        if out.count > 0 {
            out.mean = sum / out.count as f64;
        }
        out
    }

    /// Combines two summaries over disjoint evaluations.
    pub fn merge(&self, other: &Self) -> Self {
        let count = self.count + other.count;
        let mean = if count == 0 {
            0.0
        } else {
            (self.mean * self.count as f64 + other.mean * other.count as f64) / count as f64
        };
        let (max, worst) =
            if other.worst.is_some() && (self.worst.is_none() || other.max > self.max) {
                (other.max, other.worst)
            } else {
                (self.max, self.worst)
            };
        let mut offending = self.offending.clone();
        offending.extend(&other.offending);
        offending.sort_unstable();
        offending.dedup();
        let mut skipped = self.skipped.clone();
        skipped.extend(other.skipped.iter().cloned());
        skipped.sort_by_key(|s| s.0);
        Self {
            tol: self.tol.max(other.tol),
            count,
            max,
            mean,
            worst,
            offending,
            skipped,
        }
    }
}

/// Evaluates `f` at every id in parallel; results stay in id order.
pub fn par_map<T, F>(ids: &[usize], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    ids.par_iter().map(|&i| f(i)).collect()
}

/// Evaluates a residual at every id and summarizes it against `tol`.
pub fn sweep<F>(ids: &[usize], tol: f64, f: F) -> SweepSummary
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    SweepSummary::from_values(ids, par_map(ids, f), tol)
}
