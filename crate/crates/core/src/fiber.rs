//! Linear algebra of generalized complex structures on one fiber `V ⊕ V*`.
//!
//! Elements of the doubled space are stacked with the tangent block first,
//! so a structure is a `2d x 2d` real matrix. Bilinear data on `V` (2-forms,
//! metrics) enter as matrices of maps `V -> V*`: a 2-form `β` acts as
//! `X ↦ i_X β`, whose matrix is the transpose of the component matrix
//! `β_ij = β(e_i, e_j)`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance used when validating inputs to the constructors.
pub const INPUT_TOL: f64 = 1e-8;

/// Default relative singular-value cutoff for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Eigenvalues of `AA*` below this are treated as degenerate input.
const SQRT_EIGEN_FLOOR: f64 = 1e-14;

/// An element `X + ξ` of `V ⊕ V*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitElement {
    pub vec: DVector<f64>,
    pub cov: DVector<f64>,
}

impl SplitElement {
    pub fn new(vec: DVector<f64>, cov: DVector<f64>) -> Result<Self> {
        if vec.len() != cov.len() {
            return Err(Error::DimensionMismatch {
                expected: vec.len(),
                found: cov.len(),
            });
        }
        Ok(Self { vec, cov })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            vec: DVector::zeros(d),
            cov: DVector::zeros(d),
        }
    }

    pub fn vector(vec: DVector<f64>) -> Self {
        let d = vec.len();
        Self {
            vec,
            cov: DVector::zeros(d),
        }
    }

    pub fn covector(cov: DVector<f64>) -> Self {
        let d = cov.len();
        Self {
            vec: DVector::zeros(d),
            cov,
        }
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn stacked(&self) -> DVector<f64> {
        let d = self.dim();
        DVector::from_fn(
            2 * d,
            |i, _| if i < d { self.vec[i] } else { self.cov[i - d] },
        )
    }

    pub fn from_stacked(v: &DVector<f64>) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::OddSide {
                rows: v.len(),
                cols: 1,
            });
        }
        let d = v.len() / 2;
        Ok(Self {
            vec: v.rows(0, d).into_owned(),
            cov: v.rows(d, d).into_owned(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.vec.amax().max(self.cov.amax())
    }
}

/// The natural pairing `⟨X+ξ, Y+η⟩ = ½(η(X) + ξ(Y))`.
pub fn pairing(a: &SplitElement, b: &SplitElement) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(0.5 * (b.cov.dot(&a.vec) + a.cov.dot(&b.vec)))
}

/// Matrix `Q = ½[[0, I], [I, 0]]` of the pairing in the stacked basis.
pub fn pairing_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        if i + d == j || j + d == i {
            0.5
        } else {
            0.0
        }
    })
}

/// The shear `e^B = [[I, 0], [B, I]]`.
pub fn shear(b: &DMatrix<f64>) -> DMatrix<f64> {
    let d = b.nrows();
    let mut m = DMatrix::identity(2 * d, 2 * d);
    m.view_mut((d, 0), (d, d)).copy_from(b);
    m
}

fn block_matrix(
    tl: &DMatrix<f64>,
    tr: &DMatrix<f64>,
    bl: &DMatrix<f64>,
    br: &DMatrix<f64>,
) -> DMatrix<f64> {
    let d = tl.nrows();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(tl);
    m.view_mut((0, d), (d, d)).copy_from(tr);
    m.view_mut((d, 0), (d, d)).copy_from(bl);
    m.view_mut((d, d), (d, d)).copy_from(br);
    m
}

pub(crate) fn antisymmetry_residual(m: &DMatrix<f64>) -> f64 {
    (m + m.transpose()).amax()
}

pub(crate) fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank(singular_values: &[f64], rel_tol: f64) -> usize {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    singular_values
        .iter()
        .filter(|&&s| s > rel_tol * max)
        .count()
}

pub fn real_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    numerical_rank(sv.as_slice(), rel_tol)
}

pub fn complex_rank(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    numerical_rank(sv.as_slice(), rel_tol)
}

/// Minimum eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_part(m).symmetric_eigenvalues().min()
}

pub fn spd_inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let asym = (g - g.transpose()).amax();
    let scale = g.amax().max(1.0);
    if asym > INPUT_TOL * scale {
        return Err(Error::NotPositiveDefinite(f64::NAN));
    }
    let min = min_symmetric_eigenvalue(g);
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NotPositiveDefinite(min));
    }
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite(min))
}

/// A candidate generalized (almost) complex structure on `V ⊕ V*`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberStructure {
    matrix: DMatrix<f64>,
}

impl FiberStructure {
    /// Wraps a matrix without checking the axioms; only the shape is validated.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(Error::OddSide { rows: r, cols: c });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Dimension `d` of the underlying vector space.
    pub fn dim(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn apply(&self, x: &SplitElement) -> SplitElement {
        SplitElement::from_stacked(&(&self.matrix * x.stacked())).expect("even length")
    }

    /// Projector `½(I − iJ)` onto the `+i` eigenspace (valid when `J² = −I`).
    pub fn eigen_projector(&self) -> DMatrix<C64> {
        let n = self.matrix.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            let re = if i == j { 0.5 } else { 0.0 };
            C64::new(re, -0.5 * self.matrix[(i, j)])
        })
    }

    /// Projector `½(I + iJ)` onto the conjugate eigenspace.
    pub fn conjugate_projector(&self) -> DMatrix<C64> {
        self.eigen_projector().map(|z| z.conj())
    }
}

/// Outcome of the axiom check, residuals in max-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureCheck {
    pub valid: bool,
    pub square_residual: f64,
    pub pairing_residual: f64,
}

pub fn structure_residuals(j: &FiberStructure) -> (f64, f64) {
    let m = j.matrix();
    let n = m.nrows();
    let q = pairing_matrix(j.dim());
    let square = (m * m + DMatrix::<f64>::identity(n, n)).amax();
    let pairing = (m.transpose() * &q * m - q).amax();
    (square, pairing)
}

/// Checks `J² = −I` and `JᵗQJ = Q` within `tol`.
pub fn is_generalized_structure(j: &FiberStructure, tol: f64) -> StructureCheck {
    let (square, pairing) = structure_residuals(j);
    StructureCheck {
        valid: square <= tol && pairing <= tol,
        square_residual: square,
        pairing_residual: pairing,
    }
}

fn require_structure(j: &FiberStructure) -> Result<()> {
    let (square, pairing) = structure_residuals(j);
    let scale = j.matrix().amax().max(1.0);
    if square > INPUT_TOL * scale * scale || pairing > INPUT_TOL * scale * scale {
        return Err(Error::NotGeneralizedStructure { square, pairing });
    }
    Ok(())
}

/// Columns spanning the `+i` eigenspace `L` of a structure.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenspaceBasis {
    pub basis: DMatrix<C64>,
}

impl EigenspaceBasis {
    /// Orthonormal basis of `L`, read off the leading left singular vectors of
    /// the eigenprojector.
    pub fn of(j: &FiberStructure) -> Result<Self> {
        require_structure(j)?;
        let d = j.dim();
        let p = j.eigen_projector();
        let svd = p.clone().svd(true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let cols: Vec<_> = order[..d]
            .iter()
            .map(|&k| u.column(k).into_owned())
            .collect();
        // Re-project onto the range and re-orthonormalize.
        let refined = &p * DMatrix::from_columns(&cols);
        Ok(Self {
            basis: refined.qr().q(),
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `max |J·L − i·L|`.
    pub fn eigen_residual(&self, j: &FiberStructure) -> f64 {
        let jc = j.matrix().map(|x| C64::new(x, 0.0));
        let lhs = jc * &self.basis;
        let rhs = &self.basis * C64::new(0.0, 1.0);
        (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |⟨u, v⟩|` over columns, using the complex-bilinear pairing.
    pub fn isotropy_residual(&self) -> f64 {
        let q = pairing_matrix(self.dim()).map(|x| C64::new(x, 0.0));
        let gram = self.basis.transpose() * q * &self.basis;
        gram.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rank of `[L | conj(L)]`; equals `2d` exactly when `L ∩ conj(L) = 0`.
    pub fn transversality_rank(&self, rel_tol: f64) -> usize {
        let d = self.dim();
        let mut stacked = DMatrix::zeros(2 * d, 2 * d);
        stacked.view_mut((0, 0), (2 * d, d)).copy_from(&self.basis);
        stacked
            .view_mut((0, d), (2 * d, d))
            .copy_from(&self.basis.map(|z| z.conj()));
        complex_rank(&stacked, rel_tol)
    }

    /// Tangent block of the basis (the projection `π(L)`).
    pub fn tangent_projection(&self) -> DMatrix<C64> {
        let d = self.dim();
        self.basis.rows(0, d).into_owned()
    }
}

/// `J_J = [[J, 0], [0, −Jᵗ]]` for an almost complex matrix `J`.
pub fn from_complex_structure(jsmall: &DMatrix<f64>) -> Result<FiberStructure> {
    let (r, c) = jsmall.shape();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: c,
        });
    }
    let residual = (jsmall * jsmall + DMatrix::<f64>::identity(r, r)).amax();
    let scale = jsmall.amax().max(1.0);
    if residual > INPUT_TOL * scale * scale {
        return Err(Error::NotAlmostComplex(residual));
    }
    let zero = DMatrix::zeros(r, r);
    FiberStructure::new(block_matrix(jsmall, &zero, &zero, &(-jsmall.transpose())))
}

/// `J_ω = [[0, −ω⁻¹], [ω, 0]]` with `ω` the matrix of `X ↦ i_X ω`.
pub fn from_symplectic(w: &DMatrix<f64>) -> Result<FiberStructure> {
    let (r, c) = w.shape();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: c,
        });
    }
    let asym = antisymmetry_residual(w);
    if asym > INPUT_TOL * w.amax().max(1.0) {
        return Err(Error::NotAntisymmetric(asym));
    }
    let inv = w.clone().try_inverse().ok_or(Error::Singular)?;
    if !inv.iter().all(|x| x.is_finite()) || real_rank(w, 1e-12) < r {
        return Err(Error::Singular);
    }
    let zero = DMatrix::zeros(r, r);
    FiberStructure::new(block_matrix(&zero, &(-inv), w, &zero))
}

/// `e^B J e^{−B}`.
pub fn b_shift(j: &FiberStructure, b: &DMatrix<f64>) -> Result<FiberStructure> {
    let d = j.dim();
    if b.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.nrows(),
        });
    }
    let asym = antisymmetry_residual(b);
    if asym > INPUT_TOL * b.amax().max(1.0) {
        return Err(Error::NotAntisymmetric(asym));
    }
    let m = shear(b) * j.matrix() * shear(&(-b));
    FiberStructure::new(m)
}

/// Codimension of `π(L)`: `d` minus the rank of the tangent block of `L`.
pub fn type_of(j: &FiberStructure, tol: f64) -> Result<usize> {
    let basis = EigenspaceBasis::of(j)?;
    Ok(j.dim() - complex_rank(&basis.tangent_projection(), tol))
}

/// `[[0, g⁻¹], [g, 0]]`.
pub fn split_metric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ginv = spd_inverse(g)?;
    let d = g.nrows();
    let zero = DMatrix::zeros(d, d);
    Ok(block_matrix(&zero, &ginv, g, &zero))
}

/// Matrix of the bilinear form `(x, y) ↦ ⟨Gx, y⟩` of an endomorphism `G`.
pub fn metric_form(g: &DMatrix<f64>) -> DMatrix<f64> {
    g.transpose() * pairing_matrix(g.nrows() / 2)
}

/// Generalized almost complex structure compatible with `j`, built as the
/// orthogonal polar factor `(√(AA*))⁻¹A` of `A = G̃J`, where `G̃` is the split
/// metric of `g` and `A*` is the `G̃`-adjoint.
pub fn compatible_structure(j: &FiberStructure, g: &DMatrix<f64>) -> Result<FiberStructure> {
    require_structure(j)?;
    let d = j.dim();
    if g.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: g.nrows(),
        });
    }
    let gt = split_metric(g)?;
    let a = &gt * j.matrix();

    // Conjugate by the square root of the metric form so that the G̃-adjoint
    // becomes the plain transpose.
    let form = metric_form(&gt);
    let eig = symmetric_part(&form).symmetric_eigen();
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite(eig.eigenvalues.min()));
    }
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let root_inv = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let at = &root * &a * &root_inv;

    let k = symmetric_part(&(&at * at.transpose()));
    let keig = k.symmetric_eigen();
    let floor = keig.eigenvalues.min();
    if floor.is_nan() || floor < SQRT_EIGEN_FLOOR {
        return Err(Error::NotPositiveDefinite(floor));
    }
    let k_inv_sqrt = &keig.eigenvectors
        * DMatrix::from_diagonal(&keig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * keig.eigenvectors.transpose();
    let polar = k_inv_sqrt * at;
    FiberStructure::new(root_inv * polar * root)
}

/// The data `(g, b, J₊, J₋)` describing a generalized Kähler pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GualtieriData {
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub j_plus: DMatrix<f64>,
    pub j_minus: DMatrix<f64>,
}

impl GualtieriData {
    /// `ω₊ = gJ₊` as a map `V -> V*`.
    pub fn omega_plus(&self) -> DMatrix<f64> {
        &self.g * &self.j_plus
    }

    pub fn omega_minus(&self) -> DMatrix<f64> {
        &self.g * &self.j_minus
    }

    /// Rebuilds `(J₁, J₂)` from the block formula; `sign = +1` gives `J₁`.
    fn assemble(&self, sign: f64) -> Result<DMatrix<f64>> {
        let wp = self.omega_plus();
        let wm = self.omega_minus();
        let wp_inv = wp.clone().try_inverse().ok_or(Error::Singular)?;
        let wm_inv = wm.clone().try_inverse().ok_or(Error::Singular)?;
        let tl = &self.j_plus + &self.j_minus * sign;
        let tr = -(&wp_inv - &wm_inv * sign);
        let bl = &wp - &wm * sign;
        let br = -(self.j_plus.transpose() + self.j_minus.transpose() * sign);
        let core = block_matrix(&tl, &tr, &bl, &br) * 0.5;
        Ok(shear(&self.b) * core * shear(&(-&self.b)))
    }

    pub fn reconstruct(&self) -> Result<(FiberStructure, FiberStructure)> {
        Ok((
            FiberStructure::new(self.assemble(1.0)?)?,
            FiberStructure::new(self.assemble(-1.0)?)?,
        ))
    }
}

/// Extracts `(g, b, J₊, J₋)` from a commuting pair with positive `−J₁J₂`.
/// `J₁` takes the upper signs of the block formula.
pub fn gualtieri_decompose(
    j1: &FiberStructure,
    j2: &FiberStructure,
    tol: f64,
) -> Result<GualtieriData> {
    let d = j1.dim();
    if j2.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: j2.dim(),
        });
    }
    let (m1, m2) = (j1.matrix(), j2.matrix());
    let comm = (m1 * m2 - m2 * m1).amax();
    if comm > tol {
        return Err(Error::NotCommuting(comm));
    }
    let big_g = -(m1 * m2);
    let min = min_symmetric_eigenvalue(&metric_form(&big_g));
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NotPositiveDefinite(min));
    }

    // G = e^b [[0, g⁻¹], [g, 0]] e^{−b}: the top-right block is g⁻¹ and the
    // top-left block is −g⁻¹b.
    let ginv = symmetric_part(&big_g.view((0, d), (d, d)).into_owned());
    let g = symmetric_part(&spd_inverse(&ginv)?);
    let b = -(&g * big_g.view((0, 0), (d, d)));
    let b = (&b - b.transpose()) * 0.5;

    let unshift = |m: &DMatrix<f64>| shear(&(-&b)) * m * shear(&b);
    let k1 = unshift(m1);
    let k2 = unshift(m2);
    let tl1 = k1.view((0, 0), (d, d)).into_owned();
    let tl2 = k2.view((0, 0), (d, d)).into_owned();
    let data = GualtieriData {
        g,
        b,
        j_plus: &tl1 + &tl2,
        j_minus: &tl1 - &tl2,
    };

    let (r1, r2) = data.reconstruct()?;
    let err = (r1.matrix() - m1).amax().max((r2.matrix() - m2).amax());
    if err > tol {
        return Err(Error::DecompositionMismatch(err));
    }
    Ok(data)
}

/// Bilinear form of `G = −J₁J₂`, used to test positivity of a pair.
pub fn induced_metric(j1: &FiberStructure, j2: &FiberStructure) -> DMatrix<f64> {
    metric_form(&-(j1.matrix() * j2.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    /// Rotation by π/2: `J ∂x = ∂y`.
    fn standard_j() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    /// `i_X ω` for `ω = dx∧dy`: `∂x ↦ dy`, `∂y ↦ −dx`.
    fn standard_omega_map() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    #[test]
    fn pairing_examples() {
        let x = SplitElement::vector(e(2, 0));
        let f = SplitElement::covector(e(2, 0));
        assert_eq!(pairing(&x, &f).unwrap(), 0.5);
        let xf = SplitElement::new(e(2, 0), e(2, 0)).unwrap();
        assert_eq!(pairing(&xf, &xf).unwrap(), 1.0);
        let y = SplitElement::vector(e(2, 1));
        assert_eq!(pairing(&x, &y).unwrap(), 0.0);
        assert!(pairing(&x, &SplitElement::zero(3)).is_err());
    }

    #[test]
    fn pairing_matrix_reproduces_pairing() {
        let a = SplitElement::new(
            DVector::from_vec(vec![1.0, -2.0]),
            DVector::from_vec(vec![0.5, 3.0]),
        )
        .unwrap();
        let b = SplitElement::new(
            DVector::from_vec(vec![0.3, 0.7]),
            DVector::from_vec(vec![-1.0, 2.0]),
        )
        .unwrap();
        let q = pairing_matrix(2);
        let via_matrix = a.stacked().dot(&(q * b.stacked()));
        assert!((via_matrix - pairing(&a, &b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn structure_check_examples() {
        let jw = from_symplectic(&standard_omega_map()).unwrap();
        assert!(is_generalized_structure(&jw, 1e-12).valid);
        let jj = from_complex_structure(&standard_j()).unwrap();
        assert!(is_generalized_structure(&jj, 1e-12).valid);
        let id = FiberStructure::new(DMatrix::identity(4, 4)).unwrap();
        let check = is_generalized_structure(&id, 1e-12);
        assert!(!check.valid);
        assert_eq!(check.square_residual, 2.0);
        assert!(FiberStructure::new(DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn complex_structure_block_form_and_type() {
        let jj = from_complex_structure(&standard_j()).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0., -1., 0., 0., 1., 0., 0., 0., 0., 0., 0., -1., 0., 0., 1., 0.,
            ],
        );
        assert_eq!(jj.matrix(), &expected);
        assert_eq!(type_of(&jj, DEFAULT_RANK_TOL).unwrap(), 1);
        assert!(from_complex_structure(&DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn complex_structure_eigenspace_is_t10_plus_t01() {
        // T_{1,0} = span(∂x − i∂y); T^{0,1} = span(dx − i dy). Both lie in L, so projecting them out of L
        // leaves nothing.
        let jj = from_complex_structure(&standard_j()).unwrap();
        let l = EigenspaceBasis::of(&jj).unwrap();
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let t10 = DVector::from_vec(vec![one, -i, zero, zero]);
        let t01 = DVector::from_vec(vec![zero, zero, one, -i]);
        for v in [t10, t01] {
            let jc = jj.matrix().map(|x| C64::new(x, 0.0));
            assert!((&jc * &v - &v * i).norm() < 1e-14);
            let coeff = l.basis.adjoint() * &v;
            assert!((&l.basis * coeff - &v).norm() < 1e-12);
        }
    }

    #[test]
    fn symplectic_block_form() {
        // Direct substitution of ω = dx∧dy, whose map matrix is [[0,-1],[1,0]]
        // and whose inverse is [[0,1],[-1,0]].
        let jw = from_symplectic(&standard_omega_map()).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0., 0., 0., -1., 0., 0., 1., 0., 0., -1., 0., 0., 1., 0., 0., 0.,
            ],
        );
        assert_eq!(jw.matrix(), &expected);
        assert_eq!(type_of(&jw, DEFAULT_RANK_TOL).unwrap(), 0);
    }

    #[test]
    fn symplectic_eigenspace_is_graph_of_minus_i_omega() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let jw = from_symplectic(&w).unwrap();
        let l = EigenspaceBasis::of(&jw).unwrap();
        let wc = w.map(|x| C64::new(x, 0.0));
        for k in 0..2 {
            let col = l.basis.column(k);
            let x = col.rows(0, 2).into_owned();
            let cov = col.rows(2, 2).into_owned();
            let expected = -(&wc * &x) * C64::new(0.0, 1.0);
            assert!((cov - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn symplectic_rejects_bad_input() {
        assert!(matches!(
            from_symplectic(&DMatrix::identity(2, 2)),
            Err(Error::NotAntisymmetric(_))
        ));
        assert!(matches!(
            from_symplectic(&DMatrix::zeros(2, 2)),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn b_shift_examples() {
        let jw = from_symplectic(&standard_omega_map()).unwrap();
        let zero = DMatrix::zeros(2, 2);
        assert_eq!(b_shift(&jw, &zero).unwrap(), jw);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, -0.7, 0.0]);
        let shifted = b_shift(&jw, &b).unwrap();
        assert!(is_generalized_structure(&shifted, 1e-12).valid);
        assert_eq!(type_of(&shifted, DEFAULT_RANK_TOL).unwrap(), 0);

        let jj = from_complex_structure(&standard_j()).unwrap();
        assert_eq!(
            type_of(&b_shift(&jj, &b).unwrap(), DEFAULT_RANK_TOL).unwrap(),
            1
        );

        // Shift law: e^B maps each column X + f of L to X + f + i_X B.
        let l = EigenspaceBasis::of(&jw).unwrap();
        let jsc = shifted.matrix().map(|x| C64::new(x, 0.0));
        let bc = b.map(|x| C64::new(x, 0.0));
        for k in 0..2 {
            let col = l.basis.column(k).into_owned();
            let x = col.rows(0, 2).into_owned();
            let mut moved = col.clone();
            let f = col.rows(2, 2).into_owned() + &bc * &x;
            moved.rows_mut(2, 2).copy_from(&f);
            assert!((&jsc * &moved - &moved * C64::new(0.0, 1.0)).norm() < 1e-12);
        }
        assert!(b_shift(&jw, &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn compatible_structure_of_flat_symplectic_is_flat_complex() {
        // By hand: A = G̃J_ω = diag(w, w) is already orthogonal, so J' = A.
        let jw = from_symplectic(&standard_omega_map()).unwrap();
        let jp = compatible_structure(&jw, &DMatrix::identity(2, 2)).unwrap();
        let jj = from_complex_structure(&standard_j()).unwrap();
        assert!((jp.matrix() - jj.matrix()).amax() < 1e-14);
        let g = -(jw.matrix() * jp.matrix());
        assert!((&g * &g - DMatrix::<f64>::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn compatible_structure_rejects_indefinite_metric() {
        let jw = from_symplectic(&standard_omega_map()).unwrap();
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            compatible_structure(&jw, &g),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn flat_kahler_decomposition() {
        let jj = from_complex_structure(&standard_j()).unwrap();
        let jw = from_symplectic(&standard_omega_map()).unwrap();
        let data = gualtieri_decompose(&jj, &jw, 1e-12).unwrap();
        assert!((data.g.clone() - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!(data.b.amax() < 1e-14);
        assert!((&data.j_plus - standard_j()).amax() < 1e-14);
        assert!((&data.j_minus - standard_j()).amax() < 1e-14);
    }

    #[test]
    fn decomposition_rejects_non_commuting_pair() {
        // In two dimensions only ±J commute with J; a sheared conjugate does not.
        let jj = from_complex_structure(&standard_j()).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let sheared = &a * standard_j() * a.clone().try_inverse().unwrap();
        let other = from_complex_structure(&sheared).unwrap();
        assert!(matches!(
            gualtieri_decompose(&jj, &other, 1e-9),
            Err(Error::NotCommuting(_))
        ));
    }

    #[test]
    fn decomposition_rejects_indefinite_product() {
        let jj = from_complex_structure(&standard_j()).unwrap();
        let jw = from_symplectic(&standard_omega_map()).unwrap();
        let neg = FiberStructure::new(-jw.matrix()).unwrap();
        assert!(matches!(
            gualtieri_decompose(&jj, &neg, 1e-9),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn eigenspace_invariants_hold_for_examples() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, -0.3, 0.0]);
        let cases = [
            from_symplectic(&standard_omega_map()).unwrap(),
            from_complex_structure(&standard_j()).unwrap(),
            b_shift(&from_complex_structure(&standard_j()).unwrap(), &b).unwrap(),
        ];
        for j in &cases {
            let l = EigenspaceBasis::of(j).unwrap();
            assert!(l.eigen_residual(j) < 1e-12);
            assert!(l.isotropy_residual() < 1e-12);
            assert_eq!(l.transversality_rank(1e-10), 4);
        }
    }

    #[test]
    fn type_of_rejects_invalid_structure() {
        let id = FiberStructure::new(DMatrix::identity(4, 4)).unwrap();
        assert!(type_of(&id, DEFAULT_RANK_TOL).is_err());
    }
}
