//! The H-twisted Courant bracket on sections of `T ⊕ T*` and the
//! integrability residual of a structure field.

use nalgebra::{DMatrix, DVector};

use super::forms::Form;
use crate::error::{Error, Result};
use crate::fiber::{EigenspaceBasis, FiberStructure, SplitElement, C64};

/// A section of `T ⊕ T*` over a chart.
pub trait Section {
    fn eval(&self, x: &[f64]) -> Result<SplitElement>;

    /// Analytic derivatives `(∂_i X^j, ∂_i ξ_j)` laid out as `(j, i)`.
    fn jacobian(&self, _x: &[f64]) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }
}

impl<F> Section for F
where
    F: Fn(&[f64]) -> Result<SplitElement>,
{
    fn eval(&self, x: &[f64]) -> Result<SplitElement> {
        self(x)
    }
}

type SectionFn = Box<dyn Fn(&[f64]) -> Result<SplitElement> + Send + Sync>;
type JacobianFn = Box<dyn Fn(&[f64]) -> (DMatrix<f64>, DMatrix<f64>) + Send + Sync>;

/// A section with closed-form derivatives.
pub struct AnalyticSection {
    value: SectionFn,
    jacobian: JacobianFn,
}

impl AnalyticSection {
    pub fn new(value: SectionFn, jacobian: JacobianFn) -> Self {
        Self { value, jacobian }
    }
}

impl Section for AnalyticSection {
    fn eval(&self, x: &[f64]) -> Result<SplitElement> {
        (self.value)(x)
    }

    fn jacobian(&self, x: &[f64]) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((self.jacobian)(x))
    }
}

/// Central-difference derivatives of a section, laid out as in [`Section::jacobian`].
pub fn fd_section_jacobian<S: Section + ?Sized>(
    s: &S,
    x: &[f64],
    step: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = x.len();
    let mut dvec = DMatrix::zeros(d, d);
    let mut dcov = DMatrix::zeros(d, d);
    let mut probe = x.to_vec();
    for i in 0..d {
        probe[i] = x[i] + step;
        let plus = s.eval(&probe)?;
        probe[i] = x[i] - step;
        let minus = s.eval(&probe)?;
        probe[i] = x[i];
        dvec.set_column(i, &((plus.vec - minus.vec) / (2.0 * step)));
        dcov.set_column(i, &((plus.cov - minus.cov) / (2.0 * step)));
    }
    Ok((dvec, dcov))
}

/// Value and first derivatives of a complexified section at a point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub vec: DVector<C64>,
    pub cov: DVector<C64>,
    /// `dvec[(j, i)] = ∂_i X^j`.
    pub dvec: DMatrix<C64>,
    /// `dcov[(j, i)] = ∂_i ξ_j`.
    pub dcov: DMatrix<C64>,
}

fn complexify_v(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

fn complexify_m(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

impl Jet {
    pub fn real(value: &SplitElement, dvec: &DMatrix<f64>, dcov: &DMatrix<f64>) -> Self {
        Self {
            vec: complexify_v(&value.vec),
            cov: complexify_v(&value.cov),
            dvec: complexify_m(dvec),
            dcov: complexify_m(dcov),
        }
    }
}

fn contract_twist(h: &Form, x: &DVector<C64>, y: &DVector<C64>) -> DVector<C64> {
    let d = x.len();
    let mut out = DVector::from_element(d, C64::new(0.0, 0.0));
    for i in 0..d {
        for j in 0..d {
            let xy = x[i] * y[j];
            if xy == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..d {
                out[k] += xy * h.get(&[i, j, k]);
            }
        }
    }
    out
}

/// `[X+ξ, Y+η]_H = [X,Y] + L_X η − L_Y ξ − ½ d(η(X) − ξ(Y)) + i_Y i_X H`
/// evaluated from jets of both sections. Returns (vector, covector) parts.
pub fn bracket_from_jets(a: &Jet, b: &Jet, h: &Form) -> (DVector<C64>, DVector<C64>) {
    let (x, xi, dx, dxi) = (&a.vec, &a.cov, &a.dvec, &a.dcov);
    let (y, eta, dy, deta) = (&b.vec, &b.cov, &b.dvec, &b.dcov);

    let lie = dy * x - dx * y;
    let lx_eta = deta * x + dx.transpose() * eta;
    let ly_xi = dxi * y + dy.transpose() * xi;
    let dpair =
        deta.transpose() * x + dx.transpose() * eta - dxi.transpose() * y - dy.transpose() * xi;
    let twist = contract_twist(h, x, y);
    let cov = lx_eta - ly_xi - dpair * C64::new(0.5, 0.0) + twist;
    (lie, cov)
}

fn real_jet<S: Section + ?Sized>(s: &S, x: &[f64], step: f64) -> Result<Jet> {
    let value = s.eval(x)?;
    let (dvec, dcov) = match s.jacobian(x) {
        Some(j) => j,
        None => fd_section_jacobian(s, x, step)?,
    };
    Ok(Jet::real(&value, &dvec, &dcov))
}

/// The twisted Courant bracket of two real sections at `x`. Derivatives come
/// from [`Section::jacobian`] when provided, else central differences.
pub fn courant_bracket<A, B, H>(a: &A, b: &B, h: H, x: &[f64], step: f64) -> Result<SplitElement>
where
    A: Section + ?Sized,
    B: Section + ?Sized,
    H: Fn(&[f64]) -> Result<Form>,
{
    let ja = real_jet(a, x, step)?;
    let jb = real_jet(b, x, step)?;
    let (v, c) = bracket_from_jets(&ja, &jb, &h(x)?);
    SplitElement::new(v.map(|z| z.re), c.map(|z| z.re))
}

/// Lie bracket of two vector fields by central differences.
pub fn fd_lie_bracket<F, G>(xf: F, yf: G, x: &[f64], step: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>>,
    G: Fn(&[f64]) -> Result<DVector<f64>>,
{
    let dx = super::forms::fd_jacobian(&xf, x, step)?;
    let dy = super::forms::fd_jacobian(&yf, x, step)?;
    Ok(&dy * xf(x)? - &dx * yf(x)?)
}

/// Minimum singular value the transported frame may reach before the
/// eigenspace is considered discontinuous.
const GAUGE_FLOOR: f64 = 0.5;

/// Largest component along `conj(L)` of the brackets of a local frame of
/// the `+i` eigenspace. The frame at nearby points is `P(q)·u_k`, where `P`
/// is the eigenprojector and `u_k` an orthonormal basis of `L` at `x`; this
/// keeps the frame as close as possible to the one at `x`.
pub fn integrability_residual<J, H>(j: J, h: H, x: &[f64], step: f64) -> Result<f64>
where
    J: Fn(&[f64]) -> Result<FiberStructure>,
    H: Fn(&[f64]) -> Result<Form>,
{
    let d = x.len();
    let j0 = j(x)?;
    if j0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: j0.dim(),
        });
    }
    let basis = EigenspaceBasis::of(&j0)?.basis;

    let mut dframe: Vec<DMatrix<C64>> = vec![DMatrix::zeros(2 * d, d); d];
    let mut probe = x.to_vec();
    for i in 0..d {
        probe[i] = x[i] + step;
        let plus = j(&probe)?.eigen_projector() * &basis;
        probe[i] = x[i] - step;
        let minus = j(&probe)?.eigen_projector() * &basis;
        probe[i] = x[i];
        for frame in [&plus, &minus] {
            let smin = frame.clone().svd(false, false).singular_values.min();
            if smin < GAUGE_FLOOR {
                return Err(Error::GaugeFailure(smin));
            }
        }
        dframe[i] = (plus - minus) / C64::new(2.0 * step, 0.0);
    }

    let jets: Vec<Jet> = (0..d)
        .map(|k| {
            let col = basis.column(k);
            let mut dvec = DMatrix::zeros(d, d);
            let mut dcov = DMatrix::zeros(d, d);
            for (i, df) in dframe.iter().enumerate() {
                let dc = df.column(k);
                dvec.set_column(i, &dc.rows(0, d));
                dcov.set_column(i, &dc.rows(d, d));
            }
            Jet {
                vec: col.rows(0, d).into_owned(),
                cov: col.rows(d, d).into_owned(),
                dvec,
                dcov,
            }
        })
        .collect();

    let h0 = h(x)?;
    let conj = j0.conjugate_projector();
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in a + 1..d {
            let (v, c) = bracket_from_jets(&jets[a], &jets[b], &h0);
            let stacked = DVector::from_fn(2 * d, |i, _| if i < d { v[i] } else { c[i - d] });
            worst = worst.max((&conj * stacked).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::from_symplectic;

    fn no_twist(d: usize) -> impl Fn(&[f64]) -> Result<Form> {
        move |_| Ok(Form::zero(d, 3))
    }

    fn vector_section(f: fn(&[f64]) -> Vec<f64>) -> impl Fn(&[f64]) -> Result<SplitElement> {
        move |x| Ok(SplitElement::vector(DVector::from_vec(f(x))))
    }

    #[test]
    fn constant_sections_bracket_to_zero() {
        let a = |_: &[f64]| {
            SplitElement::new(
                DVector::from_vec(vec![1.0, 2.0]),
                DVector::from_vec(vec![0.5, -1.0]),
            )
        };
        let b = |_: &[f64]| {
            SplitElement::new(
                DVector::from_vec(vec![-3.0, 0.0]),
                DVector::from_vec(vec![2.0, 1.0]),
            )
        };
        let r = courant_bracket(&a, &b, no_twist(2), &[0.2, 0.3], 1e-4).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn pure_vectors_reduce_to_lie_bracket() {
        // [∂x, x∂y] = ∂y.
        let a = vector_section(|_| vec![1.0, 0.0]);
        let b = vector_section(|x| vec![0.0, x[0]]);
        let r = courant_bracket(&a, &b, no_twist(2), &[0.4, -0.1], 1e-4).unwrap();
        assert!((r.vec - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-10);
        assert!(r.cov.amax() < 1e-10);
    }

    #[test]
    fn twist_term_contracts_x_first() {
        let a = vector_section(|_| vec![1.0, 0.0, 0.0]);
        let b = vector_section(|_| vec![0.0, 1.0, 0.0]);
        let h = |_: &[f64]| Ok(Form::basis(3, &[0, 1, 2]));
        let r = courant_bracket(&a, &b, h, &[0.0, 0.0, 0.0], 1e-4).unwrap();
        assert_eq!(r.vec.amax(), 0.0);
        assert_eq!(r.cov, DVector::from_vec(vec![0.0, 0.0, 1.0]));
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let a = |x: &[f64]| {
            SplitElement::new(
                DVector::from_vec(vec![x[1].sin(), x[0] * x[2], 1.0]),
                DVector::from_vec(vec![x[2], x[0].cos(), x[1] * x[1]]),
            )
        };
        let b = |x: &[f64]| {
            SplitElement::new(
                DVector::from_vec(vec![x[0] * x[1], x[2].exp(), -x[0]]),
                DVector::from_vec(vec![1.0, x[1], x[0] * x[2]]),
            )
        };
        let h = |x: &[f64]| Ok(&Form::basis(3, &[0, 1, 2]) * (1.0 + x[0]));
        let p = [0.3, -0.2, 0.5];
        let ab = courant_bracket(&a, &b, h, &p, 1e-4).unwrap();
        let ba = courant_bracket(&b, &a, h, &p, 1e-4).unwrap();
        assert!((ab.vec + ba.vec).amax() < 1e-8);
        assert!((ab.cov + ba.cov).amax() < 1e-8);
    }

    #[test]
    fn vector_bracket_matches_fd_lie_bracket() {
        let xf = |x: &[f64]| Ok(DVector::from_vec(vec![x[1], -x[0] * x[0]]));
        let yf = |x: &[f64]| Ok(DVector::from_vec(vec![x[0].sin(), x[1] * x[0]]));
        let p = [0.7, 0.2];
        let lie = fd_lie_bracket(xf, yf, &p, 1e-4).unwrap();
        let a = |x: &[f64]| Ok(SplitElement::vector(xf(x)?));
        let b = |x: &[f64]| Ok(SplitElement::vector(yf(x)?));
        let r = courant_bracket(&a, &b, no_twist(2), &p, 1e-4).unwrap();
        assert!((r.vec - lie).amax() < 1e-8);
    }

    #[test]
    fn analytic_and_fd_derivatives_converge_quadratically() {
        let value = |x: &[f64]| {
            SplitElement::new(
                DVector::from_vec(vec![x[0].sin() * x[1], x[1].exp()]),
                DVector::from_vec(vec![x[0] * x[0] * x[1], x[0].cos()]),
            )
        };
        let jac = |x: &[f64]| {
            let dvec =
                DMatrix::from_row_slice(2, 2, &[x[0].cos() * x[1], x[0].sin(), 0.0, x[1].exp()]);
            let dcov =
                DMatrix::from_row_slice(2, 2, &[2.0 * x[0] * x[1], x[0] * x[0], -x[0].sin(), 0.0]);
            (dvec, dcov)
        };
        let s = AnalyticSection::new(Box::new(value), Box::new(jac));
        let p = [0.9, 0.4];
        let (av, ac) = s.jacobian(&p).unwrap();
        let err = |h: f64| {
            let (fv, fc) = fd_section_jacobian(&s, &p, h).unwrap();
            (fv - &av).amax().max((fc - &ac).amax())
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn closed_symplectic_structure_is_integrable() {
        // ω = (1 + x²) dx∧dy is closed in two dimensions.
        let j = |x: &[f64]| {
            let c = 1.0 + x[0] * x[0];
            from_symplectic(&DMatrix::from_row_slice(2, 2, &[0.0, -c, c, 0.0]))
        };
        let r = integrability_residual(j, no_twist(2), &[0.3, 0.1], 1e-4).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn non_closed_symplectic_structure_is_not_integrable() {
        // ω = dx1∧dy1 + (1 + x1) dx2∧dy2 in coordinates (x1, y1, x2, y2).
        let j = |x: &[f64]| {
            let mut w = Form::basis(4, &[0, 1]);
            w = &w + &(&Form::basis(4, &[2, 3]) * (1.0 + x[0]));
            from_symplectic(&w.interior_matrix())
        };
        let r = integrability_residual(j, no_twist(4), &[0.1, 0.2, -0.1, 0.3], 1e-4).unwrap();
        assert!(r > 1e-2, "{r}");
    }
}
