//! Critical sets of moment components: Hessians at fixed points, index
//! parity, and the identities tying `ξ_M` to `dμ^ξ` through `J₊, J₋`.

use nalgebra::{DMatrix, DVector};

use crate::actions::{
    basis_direction, below_relative_threshold, describe_components, fixed_set, FixedComponent,
    Hamiltonian,
};
use crate::error::{Error, Result};
use crate::fiber::{compatible_structure, gualtieri_decompose, spd_inverse, GualtieriData};
use crate::fields::forms::{fd_gradient, fd_jacobian};
use crate::fields::SampledManifold;
use crate::sweep::par_map;

/// Relative cutoff separating signed eigenvalues from nullity.
pub const INDEX_TOL: f64 = 1e-6;

/// Default step for second differences.
pub const HESSIAN_STEP: f64 = 1e-3;

/// Tolerance for the Gualtieri decomposition of a compatible pair.
const DECOMPOSITION_TOL: f64 = 1e-8;

/// A coordinate Hessian with the asymmetry of its raw second differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub matrix: DMatrix<f64>,
    pub raw_asymmetry: f64,
}

/// Central differences of a central-difference gradient, then symmetrized.
pub fn coordinate_hessian<F>(f: F, x: &[f64], step: f64) -> Result<Hessian>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let raw = fd_jacobian(|y| fd_gradient(&f, y, step), x, step)?;
    let raw_asymmetry = (&raw - raw.transpose()).amax();
    Ok(Hessian {
        matrix: (&raw + raw.transpose()) * 0.5,
        raw_asymmetry,
    })
}

/// Hessian of `μ^ξ` at a critical point; rejected when `|ξ_M|_g` exceeds
/// `threshold`, since away from `Crit` the coordinate Hessian is not intrinsic.
pub fn hessian_at_critical(
    h: &Hamiltonian<'_>,
    chart: usize,
    x: &[f64],
    xi: &[f64],
    threshold: f64,
    step: f64,
) -> Result<Hessian> {
    let norm = h.generator_norm(xi, chart, x)?;
    if norm > threshold {
        return Err(Error::NotCritical { norm, threshold });
    }
    h.fields.check(chart, x)?;
    coordinate_hessian(|y| h.moment_component(xi, chart, y), x, step)
}

/// Eigenvalues of a Hessian relative to a metric, with sign counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub coindex: usize,
    pub nullity: usize,
}

/// Spectrum of `g^{-1/2} H g^{-1/2}` (ascending) and its sign counts, with
/// `|λ| ≤ INDEX_TOL · max|λ|` counted as nullity.
pub fn classify(hessian: &DMatrix<f64>, metric: &DMatrix<f64>) -> Result<Signature> {
    let chol = metric
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(f64::NAN))?;
    let l_inv = chol.l().try_inverse().ok_or(Error::Singular)?;
    let m = &l_inv * hessian * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let scale = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = INDEX_TOL * scale;
    let index = eigenvalues.iter().filter(|&&v| v < -cut).count();
    let coindex = eigenvalues.iter().filter(|&&v| v > cut).count();
    Ok(Signature {
        index,
        coindex,
        nullity: eigenvalues.len() - index - coindex,
        eigenvalues,
    })
}

/// Hessian data at one critical sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub sample: usize,
    pub component: usize,
    pub hessian: Hessian,
    pub signature: Signature,
}

/// Critical set of `μ^ξ` (found as the fixed set of `ξ`) with Hessian data.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalReport {
    pub xi: Vec<f64>,
    pub threshold: f64,
    pub components: Vec<FixedComponent>,
    pub points: Vec<CriticalPoint>,
}

impl CriticalReport {
    pub fn all_even(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.signature.index % 2 == 0 && p.signature.coindex % 2 == 0)
    }

    /// Samples whose nullity differs from the PCA dimension of their component.
    pub fn nullity_mismatches(&self) -> Vec<usize> {
        self.points
            .iter()
            .filter(|p| p.signature.nullity != self.components[p.component].dimension)
            .map(|p| p.sample)
            .collect()
    }

    /// The index of each component, taken at its first member.
    pub fn component_indices(&self) -> Vec<usize> {
        self.components
            .iter()
            .enumerate()
            .filter_map(|(c, _)| {
                self.points
                    .iter()
                    .find(|p| p.component == c)
                    .map(|p| p.signature.index)
            })
            .collect()
    }

    /// Samples whose index disagrees with the rest of their component.
    pub fn inconsistent_samples(&self) -> Vec<usize> {
        let idx = self.component_indices();
        self.points
            .iter()
            .filter(|p| p.signature.index != idx[p.component])
            .map(|p| p.sample)
            .collect()
    }
}

/// Finds the critical components of `μ^ξ` and classifies the Hessian at
/// every member.
pub fn critical_report(
    h: &Hamiltonian<'_>,
    samples: &SampledManifold,
    xi: &[f64],
    tol: f64,
    step: f64,
) -> Result<CriticalReport> {
    let fixed = fixed_set(h, samples, Some(xi), tol)?;
    let components = describe_components(h, samples, &fixed.members)?;
    let mut owner = Vec::new();
    for (c, comp) in components.iter().enumerate() {
        owner.extend(comp.members.iter().map(|&m| (m, c)));
    }
    let ids: Vec<usize> = (0..owner.len()).collect();
    let threshold = fixed.threshold;
    let points: Result<Vec<CriticalPoint>> = par_map(&ids, |k| {
        let (sample, component) = owner[k];
        let s = samples.sample(sample);
        let wrap = |e: Error| Error::Evaluation {
            sample,
            reason: e.to_string(),
        };
        let hessian =
            hessian_at_critical(h, s.chart, &s.coords, xi, threshold, step).map_err(wrap)?;
        let metric = h.fields.metric(s.chart, &s.coords).map_err(wrap)?;
        let signature = classify(&hessian.matrix, &metric).map_err(wrap)?;
        Ok(CriticalPoint {
            sample,
            component,
            hessian,
            signature,
        })
    })
    .into_iter()
    .collect();
    Ok(CriticalReport {
        xi: xi.to_vec(),
        threshold,
        components,
        points: points?,
    })
}

/// Comparison of the small-`dμ^ξ` and small-`ξ_M` sample sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CritFixReport {
    pub critical: Vec<usize>,
    pub fixed: Vec<usize>,
    pub only_critical: Vec<usize>,
    pub only_fixed: Vec<usize>,
}

impl CritFixReport {
    pub fn matches(&self) -> bool {
        self.only_critical.is_empty() && self.only_fixed.is_empty()
    }
}

/// Compares `{|dμ^ξ|_{g⁻¹} < tol·median}` with `{|ξ_M|_g < tol·median}`.
pub fn crit_equals_fixed_check(
    h: &Hamiltonian<'_>,
    xi: &[f64],
    samples: &SampledManifold,
    tol: f64,
    step: f64,
) -> Result<CritFixReport> {
    let ids: Vec<usize> = (0..samples.len()).collect();
    let norms: Result<Vec<(f64, f64)>> = par_map(&ids, |i| {
        let s = samples.sample(i);
        let wrap = |e: Error| Error::Evaluation {
            sample: i,
            reason: e.to_string(),
        };
        let dmu = h
            .moment_differential(xi, s.chart, &s.coords, step)
            .map_err(wrap)?;
        let ginv =
            spd_inverse(&h.fields.metric(s.chart, &s.coords).map_err(wrap)?).map_err(wrap)?;
        let dnorm = dmu.dot(&(ginv * &dmu)).max(0.0).sqrt();
        let vnorm = h.generator_norm(xi, s.chart, &s.coords).map_err(wrap)?;
        Ok((dnorm, vnorm))
    })
    .into_iter()
    .collect();
    let norms = norms?;
    let d: Vec<f64> = norms.iter().map(|n| n.0).collect();
    let v: Vec<f64> = norms.iter().map(|n| n.1).collect();
    let critical = below_relative_threshold(&d, tol).members;
    let fixed = below_relative_threshold(&v, tol).members;
    let only_critical = critical
        .iter()
        .filter(|i| fixed.binary_search(i).is_err())
        .cloned()
        .collect();
    let only_fixed = fixed
        .iter()
        .filter(|i| critical.binary_search(i).is_err())
        .cloned()
        .collect();
    Ok(CritFixReport {
        critical,
        fixed,
        only_critical,
        only_fixed,
    })
}

/// Gualtieri data of the pair `(J, J')`, `J'` the compatible structure of
/// `J` for the metric `g` at the point.
pub fn compatible_pair_data(h: &Hamiltonian<'_>, chart: usize, x: &[f64]) -> Result<GualtieriData> {
    let j = h.fields.structure(chart, x)?;
    let g = h.fields.metric(chart, x)?;
    let jp = compatible_structure(&j, &g)?;
    gualtieri_decompose(&j, &jp, DECOMPOSITION_TOL)
}

/// `|ξ_M − ½(ω₊⁻¹ − ω₋⁻¹) dμ^ξ|∞`.
pub fn induced_field_identity_residual(
    h: &Hamiltonian<'_>,
    chart: usize,
    x: &[f64],
    xi: &[f64],
    step: f64,
) -> Result<f64> {
    let v = h.generator(xi, chart, x)?;
    if xi.iter().all(|&c| c == 0.0) {
        return Ok(v.amax());
    }
    let data = compatible_pair_data(h, chart, x)?;
    let wp = data.omega_plus().try_inverse().ok_or(Error::Singular)?;
    let wm = data.omega_minus().try_inverse().ok_or(Error::Singular)?;
    let dmu = h.moment_differential(xi, chart, x, step)?;
    Ok((v - (wp - wm) * dmu * 0.5).amax())
}

/// `|Dξ_M + ½(J₊ − J₋) g⁻¹ ∇²μ^ξ|∞` at a critical point, the linearization
/// `Dξ_M` and the Hessian both by central differences with `step`.
pub fn lxi_identity_residual(
    h: &Hamiltonian<'_>,
    chart: usize,
    x: &[f64],
    xi: &[f64],
    threshold: f64,
    step: f64,
) -> Result<f64> {
    let hess = hessian_at_critical(h, chart, x, xi, threshold, step)?;
    let lin = fd_jacobian(|y| h.generator(xi, chart, y), x, step)?;
    if xi.iter().all(|&c| c == 0.0) {
        return Ok(lin.amax().max(hess.matrix.amax()));
    }
    let data = compatible_pair_data(h, chart, x)?;
    let ginv = spd_inverse(&data.g)?;
    let rhs = (&data.j_plus - &data.j_minus) * ginv * &hess.matrix * 0.5;
    Ok((lin + rhs).amax())
}

/// Outcome of the Morse analysis of `μ_m` on a thickened level of the first
/// `m − 1` components.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub level: Vec<f64>,
    pub eps: f64,
    pub slice_size: usize,
    pub points: Vec<CriticalPoint>,
    /// Critical samples grouped by graph connectivity inside the slice.
    pub components: Vec<Vec<usize>>,
}

impl SliceReport {
    pub fn all_even(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.signature.index % 2 == 0 && p.signature.coindex % 2 == 0)
    }

    /// Distinct indices found, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.points.iter().map(|p| p.signature.index).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Relative singular-value cutoff for the regular-value test on the slice.
const SLICE_RANK_TOL: f64 = 1e-6;

/// Morse analysis of `μ_m` on `Q = {|μ_{1..m−1} − a| ≤ ε}` with `ε` twice the
/// largest per-edge variation of `μ_{1..m−1}`. Critical samples have a
/// projected gradient below `tol` times its median over `Q`; their Hessian is
/// that of the Lagrangian `μ_m − Σ cᵢ μᵢ`, restricted to `ker dμ_{1..m−1}`.
pub fn slice_morse_check(
    h: &Hamiltonian<'_>,
    samples: &SampledManifold,
    level: &[f64],
    tol: f64,
    step: f64,
) -> Result<SliceReport> {
    let m = h.rank();
    if m < 2 {
        return Err(Error::UnsupportedDimension(m));
    }
    let k = m - 1;
    if level.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: level.len(),
        });
    }
    let ids: Vec<usize> = (0..samples.len()).collect();
    let mus: Result<Vec<DVector<f64>>> = par_map(&ids, |i| {
        let s = samples.sample(i);
        h.moment
            .moment(s.chart, &s.coords)
            .map_err(|e| Error::Evaluation {
                sample: i,
                reason: e.to_string(),
            })
    })
    .into_iter()
    .collect();
    let mus = mus?;
    let head = |v: &DVector<f64>| v.rows(0, k).into_owned();
    let eps = 2.0
        * samples
            .edges()
            .map(|(a, b)| (head(&mus[a]) - head(&mus[b])).amax())
            .fold(0.0, f64::max);
    let target = DVector::from_column_slice(level);
    let slice: Vec<usize> = ids
        .iter()
        .cloned()
        .filter(|&i| (head(&mus[i]) - &target).amax() <= eps)
        .collect();

    struct Local {
        lower: DMatrix<f64>,
        coeffs: DVector<f64>,
        projected: f64,
        top_singular: f64,
        rank_singular: f64,
    }
    let locals: Result<Vec<Local>> = par_map(&slice, |i| {
        let s = samples.sample(i);
        let wrap = |e: Error| Error::Evaluation {
            sample: i,
            reason: e.to_string(),
        };
        let rows: Result<Vec<DVector<f64>>> = (0..m)
            .map(|c| {
                let e = basis_direction(m, c);
                h.moment_differential(&e, s.chart, &s.coords, step)
            })
            .collect();
        let rows = rows.map_err(wrap)?;
        let d = rows[0].len();
        let lower = DMatrix::from_fn(k, d, |r, c| rows[r][c]);
        let ginv =
            spd_inverse(&h.fields.metric(s.chart, &s.coords).map_err(wrap)?).map_err(wrap)?;
        let svals = lower.clone().svd(false, false).singular_values;
        let top_singular = svals.max();
        let rank_singular = svals.min();
        let gram = &lower * &ginv * lower.transpose();
        let coeffs = match gram.clone().try_inverse() {
            Some(inv) => inv * &lower * &ginv * &rows[k],
            None => DVector::zeros(k),
        };
        let proj = &rows[k] - lower.transpose() * &coeffs;
        let projected = proj.dot(&(&ginv * &proj)).max(0.0).sqrt();
        Ok(Local {
            lower,
            coeffs,
            projected,
            top_singular,
            rank_singular,
        })
    })
    .into_iter()
    .collect();
    let locals = locals?;

    let mut scale: Vec<f64> = locals.iter().map(|l| l.top_singular).collect();
    scale.sort_by(f64::total_cmp);
    let median_scale = scale.get(scale.len() / 2).cloned().unwrap_or(0.0);
    for (l, &i) in locals.iter().zip(&slice) {
        if l.rank_singular.is_nan() || l.rank_singular <= SLICE_RANK_TOL * median_scale {
            let svals = l.lower.clone().svd(false, false).singular_values;
            let rank = svals
                .iter()
                .filter(|&&s| s > SLICE_RANK_TOL * median_scale)
                .count();
            return Err(Error::NotRegularValue {
                rank,
                expected: k,
                sample: i,
            });
        }
    }

    let projected: Vec<f64> = locals.iter().map(|l| l.projected).collect();
    let crit_local = below_relative_threshold(&projected, tol).members;
    let crit: Vec<usize> = crit_local.iter().map(|&j| slice[j]).collect();
    let components = samples.components(&crit);
    let mut owner = vec![usize::MAX; samples.len()];
    for (c, comp) in components.iter().enumerate() {
        for &s in comp {
            owner[s] = c;
        }
    }
    let points: Result<Vec<CriticalPoint>> = par_map(&crit_local, |j| {
        let i = slice[j];
        let l = &locals[j];
        let s = samples.sample(i);
        let wrap = |e: Error| Error::Evaluation {
            sample: i,
            reason: e.to_string(),
        };
        let lagrangian = |y: &[f64]| -> Result<f64> {
            let mu = h.moment.moment(s.chart, y)?;
            Ok(mu[k] - (0..k).map(|r| l.coeffs[r] * mu[r]).sum::<f64>())
        };
        let hessian = coordinate_hessian(lagrangian, &s.coords, step).map_err(wrap)?;
        let d = s.coords.len();
        let eig = (l.lower.transpose() * &l.lower).symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let kernel = DMatrix::from_fn(d, d - k, |r, c| eig.eigenvectors[(r, order[c])]);
        let metric = h.fields.metric(s.chart, &s.coords).map_err(wrap)?;
        let restricted = kernel.transpose() * &hessian.matrix * &kernel;
        let restricted_metric = kernel.transpose() * metric * &kernel;
        let signature = classify(&restricted, &restricted_metric).map_err(wrap)?;
        Ok(CriticalPoint {
            sample: i,
            component: owner[i],
            hessian,
            signature,
        })
    })
    .into_iter()
    .collect();

    Ok(SliceReport {
        level: level.to_vec(),
        eps,
        slice_size: slice.len(),
        points: points?,
        components,
    })
}
