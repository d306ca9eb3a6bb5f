//! Dense differential forms in chart coordinates and their finite-difference
//! exterior derivative.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

/// Default central-difference step in chart units.
pub const DEFAULT_STEP: f64 = 1e-4;

/// A k-form value at a point, stored as a fully antisymmetric array of
/// `dim^k` components `ω_{i1..ik}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    comps: Vec<f64>,
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            comps: vec![0.0; dim.pow(degree as u32)],
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        Self {
            dim,
            degree: 0,
            comps: vec![value],
        }
    }

    pub fn from_covector(c: &[f64]) -> Self {
        Self {
            dim: c.len(),
            degree: 1,
            comps: c.to_vec(),
        }
    }

    /// 2-form from a component matrix; the antisymmetric part is kept.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let d = m.nrows();
        let mut f = Self::zero(d, 2);
        for i in 0..d {
            for j in 0..d {
                f.comps[i * d + j] = 0.5 * (m[(i, j)] - m[(j, i)]);
            }
        }
        f
    }

    /// The basis form `dx^{i1} ∧ … ∧ dx^{ik}` (indices must be distinct).
    pub fn basis(dim: usize, indices: &[usize]) -> Self {
        let mut f = Self::zero(dim, indices.len());
        f.set_antisymmetric(indices, 1.0);
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    fn index_of(&self, mut off: usize) -> Vec<usize> {
        let mut idx = vec![0; self.degree];
        for slot in idx.iter_mut().rev() {
            *slot = off % self.dim;
            off /= self.dim;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.comps[self.offset(idx)]
    }

    /// Sets `ω_idx = v` together with every permuted component.
    pub fn set_antisymmetric(&mut self, idx: &[usize], v: f64) {
        for p in permutations(idx.len()) {
            let permuted: Vec<usize> = p.iter().map(|&k| idx[k]).collect();
            let off = self.offset(&permuted);
            self.comps[off] = permutation_sign(&p) * v;
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        assert_eq!(self.degree, 1, "to_vector needs a 1-form");
        DVector::from_column_slice(&self.comps)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.degree, 2, "to_matrix needs a 2-form");
        DMatrix::from_row_slice(self.dim, self.dim, &self.comps)
    }

    /// Matrix of `X ↦ i_X ω` for a 2-form.
    pub fn interior_matrix(&self) -> DMatrix<f64> {
        self.to_matrix().transpose()
    }

    /// `i_X ω`, contracting the first slot.
    pub fn interior(&self, x: &[f64]) -> Form {
        assert!(self.degree > 0, "cannot contract a function");
        let mut out = Form::zero(self.dim, self.degree - 1);
        let stride = out.comps.len();
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (k, c) in out.comps.iter_mut().enumerate() {
                *c += xi * self.comps[i * stride + k];
            }
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.dim, other.dim);
        let (k, l) = (self.degree, other.degree);
        let n = k + l;
        let perms = permutations(n);
        let norm = 1.0 / (factorial(k) * factorial(l));
        let mut out = Form::zero(self.dim, n);
        for off in 0..out.comps.len() {
            let idx = out.index_of(off);
            let mut sum = 0.0;
            for p in &perms {
                let a: Vec<usize> = p[..k].iter().map(|&s| idx[s]).collect();
                let b: Vec<usize> = p[k..].iter().map(|&s| idx[s]).collect();
                sum += permutation_sign(p) * self.get(&a) * other.get(&b);
            }
            out.comps[off] = norm * sum;
        }
        out
    }

    /// Pullback along a linear map with Jacobian `jac` (rows: target coords).
    pub fn pullback(&self, jac: &DMatrix<f64>) -> Form {
        let src = jac.ncols();
        let mut out = Form::zero(src, self.degree);
        for off in 0..out.comps.len() {
            let idx = out.index_of(off);
            let mut sum = 0.0;
            for (toff, &c) in self.comps.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let tidx = self.index_of(toff);
                let mut prod = c;
                for (a, i) in tidx.iter().zip(&idx) {
                    prod *= jac[(*a, *i)];
                }
                sum += prod;
            }
            out.comps[off] = sum;
        }
        out
    }

    /// Places a form on a factor into a product of total dimension `dim`,
    /// the factor coordinates starting at `offset`.
    pub fn include(&self, dim: usize, offset: usize) -> Form {
        let mut out = Form::zero(dim, self.degree);
        for (off, &c) in self.comps.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let idx: Vec<usize> = self.index_of(off).iter().map(|i| i + offset).collect();
            let o = out.offset(&idx);
            out.comps[o] = c;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        assert_eq!((self.dim, self.degree), (rhs.dim, rhs.degree));
        Form {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&rhs.comps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self + &(-rhs)
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self * -1.0
    }
}

impl Mul<f64> for &Form {
    type Output = Form;
    fn mul(self, s: f64) -> Form {
        Form {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c * s).collect(),
        }
    }
}

/// Central-difference partial derivatives `∂_j ω` at `x`, one per coordinate.
pub fn fd_partials<F>(form: F, x: &[f64], step: f64) -> Result<Vec<Form>>
where
    F: Fn(&[f64]) -> Result<Form>,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            probe[j] = x[j] + step;
            let plus = form(&probe)?;
            probe[j] = x[j] - step;
            let minus = form(&probe)?;
            probe[j] = x[j];
            Ok(&(&plus - &minus) * (0.5 / step))
        })
        .collect()
}

/// `(dω)_{i0..ik} = Σ_j (−1)^j ∂_{i_j} ω_{i0..î_j..ik}` from partials.
pub fn exterior_derivative_from_partials(partials: &[Form]) -> Form {
    let dim = partials.len();
    let degree = partials[0].degree();
    let mut out = Form::zero(dim, degree + 1);
    for off in 0..out.comps.len() {
        let idx = out.index_of(off);
        let mut sum = 0.0;
        for j in 0..=degree {
            let rest: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, &i)| i)
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * partials[idx[j]].get(&rest);
        }
        out.comps[off] = sum;
    }
    out
}

/// Exterior derivative of a form field by central differences.
pub fn fd_exterior_derivative<F>(form: F, x: &[f64], step: f64) -> Result<Form>
where
    F: Fn(&[f64]) -> Result<Form>,
{
    Ok(exterior_derivative_from_partials(&fd_partials(
        form, x, step,
    )?))
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &[f64], step: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut g = DVector::zeros(x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let plus = f(&probe)?;
        probe[j] = x[j] - step;
        let minus = f(&probe)?;
        probe[j] = x[j];
        g[j] = (plus - minus) / (2.0 * step);
    }
    Ok(g)
}

/// Fourth-order central-difference gradient of a scalar function.
pub fn fd_gradient4<F>(f: F, x: &[f64], step: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut g = DVector::zeros(x.len());
    for j in 0..x.len() {
        let mut at = |t: f64| {
            probe[j] = x[j] + t;
            f(&probe)
        };
        let (p1, m1, p2, m2) = (at(step)?, at(-step)?, at(2.0 * step)?, at(-2.0 * step)?);
        probe[j] = x[j];
        g[j] = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step);
    }
    Ok(g)
}

/// Central-difference Jacobian `J[(i, j)] = ∂_j F^i` of a vector function.
pub fn fd_jacobian<F>(f: F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>>,
{
    let mut probe = x.to_vec();
    let mut cols = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let plus = f(&probe)?;
        probe[j] = x[j] - step;
        let minus = f(&probe)?;
        probe[j] = x[j];
        cols.push((plus - minus) / (2.0 * step));
    }
    Ok(DMatrix::from_columns(&cols))
}
