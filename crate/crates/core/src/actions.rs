//! Torus actions with generalized moment data: the two Hamiltonian
//! conditions, subtorus restriction, effectiveness and fixed points.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fiber::{numerical_rank, real_rank, C64, DEFAULT_RANK_TOL};
use crate::fields::forms::{fd_exterior_derivative, fd_gradient4, fd_jacobian, Form};
use crate::fields::{Atlas, FieldEvaluator, SampledManifold};
use crate::sweep::par_map;

/// Relative threshold for fixed points, against the median generator norm.
pub const FIXED_POINT_TOL: f64 = 1e-6;

/// Relative eigenvalue cutoff for local PCA dimension estimates.
pub const PCA_CUTOFF: f64 = 1e-3;

/// Coordinates whose spread is below this fraction of the largest spread
/// are treated as constant in the PCA estimate.
const CONSTANT_COORDINATE: f64 = 1e-9;

/// A torus `T^m` acting on a manifold, `θ ∈ R^m` taken mod `2π`.
pub trait ActionSpec: Send + Sync {
    fn rank(&self) -> usize;

    /// The fundamental vector field of the `k`-th basis generator.
    fn generator(&self, k: usize, chart: usize, x: &[f64]) -> Result<DVector<f64>>;

    /// `θ · p` on embedding coordinates.
    fn act(&self, theta: &[f64], emb: &[f64]) -> Vec<f64>;
}

/// Moment map `μ` and moment one forms `α^k`, one per basis generator.
pub trait MomentData: Send + Sync {
    fn rank(&self) -> usize;

    fn moment(&self, chart: usize, x: &[f64]) -> Result<DVector<f64>>;

    fn one_form(&self, k: usize, chart: usize, x: &[f64]) -> Result<DVector<f64>>;
}

/// Fields, action and moment data of one example, checked for matching ranks.
#[derive(Clone, Copy)]
pub struct Hamiltonian<'a> {
    pub fields: &'a dyn FieldEvaluator,
    pub action: &'a dyn ActionSpec,
    pub moment: &'a dyn MomentData,
}

impl<'a> Hamiltonian<'a> {
    pub fn new(
        fields: &'a dyn FieldEvaluator,
        action: &'a dyn ActionSpec,
        moment: &'a dyn MomentData,
    ) -> Result<Self> {
        if action.rank() != moment.rank() {
            return Err(Error::DimensionMismatch {
                expected: action.rank(),
                found: moment.rank(),
            });
        }
        Ok(Self {
            fields,
            action,
            moment,
        })
    }

    pub fn rank(&self) -> usize {
        self.action.rank()
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rank(),
                found: xi.len(),
            });
        }
        Ok(())
    }

    /// `ξ_M = Σ ξ_k (e_k)_M`.
    pub fn generator(&self, xi: &[f64], chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        self.check_xi(xi)?;
        let mut v = DVector::zeros(self.fields.dim());
        for (k, &c) in xi.iter().enumerate() {
            if c != 0.0 {
                v += self.action.generator(k, chart, x)? * c;
            }
        }
        Ok(v)
    }

    /// `μ^ξ = ⟨μ, ξ⟩`.
    pub fn moment_component(&self, xi: &[f64], chart: usize, x: &[f64]) -> Result<f64> {
        self.check_xi(xi)?;
        Ok(self
            .moment
            .moment(chart, x)?
            .dot(&DVector::from_column_slice(xi)))
    }

    /// `α^ξ = Σ ξ_k α^k`.
    pub fn one_form(&self, xi: &[f64], chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        self.check_xi(xi)?;
        let mut a = DVector::zeros(self.fields.dim());
        for (k, &c) in xi.iter().enumerate() {
            if c != 0.0 {
                a += self.moment.one_form(k, chart, x)? * c;
            }
        }
        Ok(a)
    }

    /// `dμ^ξ` by fourth-order central differences.
    pub fn moment_differential(
        &self,
        xi: &[f64],
        chart: usize,
        x: &[f64],
        step: f64,
    ) -> Result<DVector<f64>> {
        self.fields.check(chart, x)?;
        fd_gradient4(|y| self.moment_component(xi, chart, y), x, step)
    }

    /// Norm of `ξ_M` in the metric `g`.
    pub fn generator_norm(&self, xi: &[f64], chart: usize, x: &[f64]) -> Result<f64> {
        let v = self.generator(xi, chart, x)?;
        let g = self.fields.metric(chart, x)?;
        Ok(v.dot(&(g * &v)).max(0.0).sqrt())
    }

    /// `max_k |(e_k)_M|_g`.
    pub fn max_generator_norm(&self, chart: usize, x: &[f64]) -> Result<f64> {
        let mut best: f64 = 0.0;
        for k in 0..self.rank() {
            let mut e = vec![0.0; self.rank()];
            e[k] = 1.0;
            best = best.max(self.generator_norm(&e, chart, x)?);
        }
        Ok(best)
    }
}

/// The basis vector `e_k` of `R^m`.
pub fn basis_direction(m: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[k] = 1.0;
    e
}

/// `|J v − i v|` for `v = ξ_M + α^ξ − i dμ^ξ`; zero exactly when `v ∈ L`.
pub fn moment_condition_residual(
    h: &Hamiltonian<'_>,
    chart: usize,
    x: &[f64],
    xi: &[f64],
    step: f64,
) -> Result<f64> {
    let j = h.fields.structure(chart, x)?;
    let v = h.generator(xi, chart, x)?;
    let alpha = h.one_form(xi, chart, x)?;
    let dmu = h.moment_differential(xi, chart, x, step)?;
    let d = v.len();
    if j.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: j.dim(),
        });
    }
    let elem = DVector::from_fn(2 * d, |i, _| {
        if i < d {
            C64::new(v[i], 0.0)
        } else {
            C64::new(alpha[i - d], -dmu[i - d])
        }
    });
    let jc = j.matrix().map(|r| C64::new(r, 0.0));
    Ok((jc * &elem - elem * C64::new(0.0, 1.0)).norm())
}

/// `max |i_{ξ_M} H − dα^ξ|`.
pub fn twist_condition_residual(
    h: &Hamiltonian<'_>,
    chart: usize,
    x: &[f64],
    xi: &[f64],
    step: f64,
) -> Result<f64> {
    let twist = h.fields.twist(chart, x)?;
    let v = h.generator(xi, chart, x)?;
    let lhs = twist.interior(v.as_slice());
    let da = fd_exterior_derivative(
        |y| Ok(Form::from_covector(h.one_form(xi, chart, y)?.as_slice())),
        x,
        step,
    )?;
    Ok((&lhs - &da).max_abs())
}

/// Restriction to the subtorus with integer generator matrix `A` (`m x k`).
pub struct Subtorus {
    action: Arc<dyn ActionSpec>,
    moment: Arc<dyn MomentData>,
    a: DMatrix<f64>,
}

impl ActionSpec for Subtorus {
    fn rank(&self) -> usize {
        self.a.ncols()
    }

    fn generator(&self, k: usize, chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        let mut v: Option<DVector<f64>> = None;
        for i in 0..self.a.nrows() {
            let c = self.a[(i, k)];
            if c != 0.0 {
                let g = self.action.generator(i, chart, x)? * c;
                v = Some(match v {
                    Some(acc) => acc + g,
                    None => g,
                });
            }
        }
        match v {
            Some(v) => Ok(v),
            None => Ok(self.action.generator(0, chart, x)? * 0.0),
        }
    }

    fn act(&self, theta: &[f64], emb: &[f64]) -> Vec<f64> {
        let full = &self.a * DVector::from_column_slice(theta);
        self.action.act(full.as_slice(), emb)
    }
}

impl MomentData for Subtorus {
    fn rank(&self) -> usize {
        self.a.ncols()
    }

    fn moment(&self, chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.a.transpose() * self.moment.moment(chart, x)?)
    }

    fn one_form(&self, k: usize, chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        let mut out: Option<DVector<f64>> = None;
        for i in 0..self.a.nrows() {
            let c = self.a[(i, k)];
            if c != 0.0 {
                let f = self.moment.one_form(i, chart, x)? * c;
                out = Some(match out {
                    Some(acc) => acc + f,
                    None => f,
                });
            }
        }
        match out {
            Some(v) => Ok(v),
            None => Ok(self.moment.one_form(0, chart, x)? * 0.0),
        }
    }
}

/// Action and moment data of the subtorus generated by the columns of `A`:
/// generators `Aξ`, `μ_A = Aᵗμ` and `α_A^ξ = α^{Aξ}`.
pub fn subtorus_restrict(
    action: Arc<dyn ActionSpec>,
    moment: Arc<dyn MomentData>,
    a: &DMatrix<i64>,
) -> Result<(Arc<dyn ActionSpec>, Arc<dyn MomentData>)> {
    if a.nrows() != action.rank() {
        return Err(Error::DimensionMismatch {
            expected: action.rank(),
            found: a.nrows(),
        });
    }
    let af = a.map(|v| v as f64);
    let rank = real_rank(&af, DEFAULT_RANK_TOL);
    if rank < a.ncols() {
        return Err(Error::RankDeficient {
            rank,
            expected: a.ncols(),
        });
    }
    let sub = Arc::new(Subtorus {
        action,
        moment,
        a: af,
    });
    Ok((sub.clone(), sub))
}

/// Numerical rank of the differentials `dμ_1, …, dμ_m` stacked over all
/// samples, from the singular values of their Gram matrix.
pub fn effectiveness_rank(
    moment: &dyn MomentData,
    samples: &SampledManifold,
    step: f64,
) -> Result<usize> {
    let m = moment.rank();
    if samples.len() < m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: samples.len(),
        });
    }
    let ids: Vec<usize> = (0..samples.len()).collect();
    let grads = par_map(&ids, |i| {
        let s = samples.sample(i);
        fd_jacobian(|y| moment.moment(s.chart, y), &s.coords, step).map_err(|e| Error::Evaluation {
            sample: i,
            reason: e.to_string(),
        })
    });
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for g in grads {
        let g = g?;
        gram += &g * g.transpose();
    }
    let svals: Vec<f64> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    Ok(numerical_rank(&svals, DEFAULT_RANK_TOL))
}

/// A connected component of a fixed-point set, as sample ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedComponent {
    pub members: Vec<usize>,
    pub dimension: usize,
    /// Mean moment value over the members.
    pub moment_value: Vec<f64>,
    /// Largest coordinate range of `μ` over the members.
    pub moment_spread: f64,
}

/// Samples where a generator field is negligible, with the threshold used.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSet {
    pub members: Vec<usize>,
    pub threshold: f64,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Samples below `tol` times the median of `norms`.
pub fn below_relative_threshold(norms: &[f64], tol: f64) -> FixedSet {
    let threshold = tol * median(&mut norms.to_vec());
    let members = norms
        .iter()
        .enumerate()
        .filter(|(_, &n)| n < threshold)
        .map(|(i, _)| i)
        .collect();
    FixedSet { members, threshold }
}

/// Fixed points of the whole torus (`xi = None`) or of the closure of the
/// one-parameter subgroup generated by `xi`.
pub fn fixed_set(
    h: &Hamiltonian<'_>,
    samples: &SampledManifold,
    xi: Option<&[f64]>,
    tol: f64,
) -> Result<FixedSet> {
    let ids: Vec<usize> = (0..samples.len()).collect();
    let norms: Result<Vec<f64>> = par_map(&ids, |i| {
        let s = samples.sample(i);
        let n = match xi {
            Some(xi) => h.generator_norm(xi, s.chart, &s.coords),
            None => h.max_generator_norm(s.chart, &s.coords),
        };
        n.map_err(|e| Error::Evaluation {
            sample: i,
            reason: e.to_string(),
        })
    })
    .into_iter()
    .collect();
    Ok(below_relative_threshold(&norms?, tol))
}

/// Local dimension of a sample set at member `i`: the PCA rank of the
/// displacements to members within two graph steps, in the chart of `i`.
pub fn local_dimension(
    atlas: &dyn Atlas,
    samples: &SampledManifold,
    inside: &[bool],
    i: usize,
) -> usize {
    let p = samples.sample(i);
    let mut near: Vec<usize> = Vec::new();
    for &a in samples.neighbors(i) {
        if inside[a] {
            near.push(a);
            for &b in samples.neighbors(a) {
                if inside[b] && b != i {
                    near.push(b);
                }
            }
        }
    }
    near.sort_unstable();
    near.dedup();
    let d = samples.dim();
    let mut pts: Vec<DVector<f64>> = vec![DVector::zeros(d)];
    for q in near {
        if let Some(y) = atlas.to_chart(&samples.sample(q).embedding, p.chart, &p.coords) {
            pts.push(DVector::from_iterator(
                d,
                y.iter().zip(&p.coords).map(|(a, b)| a - b),
            ));
        }
    }
    if pts.len() < 2 {
        return 0;
    }
    let n = pts.len() as f64;
    let mean = pts.iter().fold(DVector::zeros(d), |acc, v| acc + v) / n;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for v in &pts {
        let c = v - &mean;
        cov += &c * c.transpose();
    }
    // Work with correlations so that unequal sample spacing along different
    // directions does not hide a direction; constant coordinates stay zero.
    let std: Vec<f64> = (0..d).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();
    let top = std.iter().cloned().fold(0.0, f64::max);
    let scale: Vec<f64> = std
        .iter()
        .map(|&s| {
            if s > CONSTANT_COORDINATE * top {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect();
    let corr = DMatrix::from_fn(d, d, |a, b| cov[(a, b)] * scale[a] * scale[b]);
    let eig = corr.symmetric_eigen().eigenvalues;
    let max = eig.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    eig.iter().filter(|&&l| l > PCA_CUTOFF * max).count()
}

/// Groups a sample set into graph components, recording each component's
/// PCA dimension (most common local value, larger on ties) and moment values.
pub fn describe_components(
    h: &Hamiltonian<'_>,
    samples: &SampledManifold,
    members: &[usize],
) -> Result<Vec<FixedComponent>> {
    let mut inside = vec![false; samples.len()];
    for &m in members {
        inside[m] = true;
    }
    let mut out = Vec::new();
    for comp in samples.components(members) {
        let dims = par_map(&comp, |i| local_dimension(h.fields, samples, &inside, i));
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for d in dims {
            *counts.entry(d).or_default() += 1;
        }
        let dimension = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
            .map(|(&d, _)| d)
            .unwrap_or(0);

        let m = h.rank();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        let mut sum = vec![0.0; m];
        for &i in &comp {
            let s = samples.sample(i);
            let mu = h
                .moment
                .moment(s.chart, &s.coords)
                .map_err(|e| Error::Evaluation {
                    sample: i,
                    reason: e.to_string(),
                })?;
            for k in 0..m {
                lo[k] = lo[k].min(mu[k]);
                hi[k] = hi[k].max(mu[k]);
                sum[k] += mu[k];
            }
        }
        let spread = (0..m).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let moment_value = sum.iter().map(|s| s / comp.len() as f64).collect();
        out.push(FixedComponent {
            members: comp,
            dimension,
            moment_value,
            moment_spread: spread,
        });
    }
    Ok(out)
}

/// Connected components of the fixed-point set of the whole torus.
pub fn fixed_point_components(
    h: &Hamiltonian<'_>,
    samples: &SampledManifold,
    tol: f64,
) -> Result<Vec<FixedComponent>> {
    let fixed = fixed_set(h, samples, None, tol)?;
    describe_components(h, samples, &fixed.members)
}

/// `max_θ |μ(θ·p) − μ(p)|∞` over the given group elements.
pub fn equivariance_residual(
    h: &Hamiltonian<'_>,
    chart: usize,
    x: &[f64],
    thetas: &[Vec<f64>],
) -> Result<f64> {
    let mu = h.moment.moment(chart, x)?;
    let emb = h.fields.embed(chart, x);
    let mut worst: f64 = 0.0;
    for theta in thetas {
        let moved = h.action.act(theta, &emb);
        let (c, y) = h.fields.locate(&moved);
        let mu2 = h.moment.moment(c, &y)?;
        worst = worst.max((mu2 - &mu).amax());
    }
    Ok(worst)
}

/// Largest deviation of `g`, `J` and `H` from invariance under `θ`, comparing
/// each field at `θ·p` with its pushforward from `p`.
pub fn invariance_residual(
    h: &Hamiltonian<'_>,
    chart: usize,
    x: &[f64],
    theta: &[f64],
    step: f64,
) -> Result<f64> {
    let f = h.fields;
    f.check(chart, x)?;
    let emb = f.embed(chart, x);
    let (c2, y) = f.locate(&h.action.act(theta, &emb));
    let map = |q: &[f64]| -> Result<DVector<f64>> {
        f.check(chart, q)?;
        let moved = h.action.act(theta, &f.embed(chart, q));
        f.to_chart(&moved, c2, &y)
            .map(DVector::from_vec)
            .ok_or(Error::OutOfChart { chart: c2 })
    };
    let dphi = fd_jacobian(map, x, step)?;
    let d = f.dim();
    let dphi_inv = dphi.clone().try_inverse().ok_or(Error::Singular)?;

    let g_res = (dphi.transpose() * f.metric(c2, &y)? * &dphi - f.metric(chart, x)?).amax();

    let mut big = DMatrix::zeros(2 * d, 2 * d);
    big.view_mut((0, 0), (d, d)).copy_from(&dphi);
    big.view_mut((d, d), (d, d))
        .copy_from(&dphi_inv.transpose());
    let mut big_inv = DMatrix::zeros(2 * d, 2 * d);
    big_inv.view_mut((0, 0), (d, d)).copy_from(&dphi_inv);
    big_inv
        .view_mut((d, d), (d, d))
        .copy_from(&dphi.transpose());
    let pushed = &big * f.structure(chart, x)?.matrix() * &big_inv;
    let j_res = (pushed - f.structure(c2, &y)?.matrix()).amax();

    let h_res = (&f.twist(c2, &y)?.pullback(&dphi) - &f.twist(chart, x)?).max_abs();
    Ok(g_res.max(j_res).max(h_res))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&mut []), 0.0);
    }

    #[test]
    fn relative_threshold_selects_small_norms() {
        let set = below_relative_threshold(&[0.0, 1.0, 1.0, 1e-9, 2.0], 1e-6);
        assert_eq!(set.members, vec![0, 3]);
        assert_eq!(set.threshold, 1e-6);
    }

    #[test]
    fn basis_direction_is_unit() {
        assert_eq!(basis_direction(3, 1), vec![0.0, 1.0, 0.0]);
    }
}
