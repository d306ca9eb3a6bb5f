//! Random fiber data and synthetic clouds shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;

use gcconvex::fiber::{
    b_shift, compatible_structure, from_complex_structure, from_symplectic, FiberStructure,
};

/// Standard symplectic matrix `[[0, -I], [I, 0]]` of size `d`.
pub fn standard_symplectic(d: usize) -> DMatrix<f64> {
    let n = d / 2;
    DMatrix::from_fn(d, d, |i, j| {
        if i >= n && j == i - n {
            1.0
        } else if i < n && j == i + n {
            -1.0
        } else {
            0.0
        }
    })
}

/// Identity plus a perturbation of spectral norm at most one half, so the
/// condition number stays below three.
pub fn random_invertible<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let c = 0.5 / d as f64;
    DMatrix::identity(d, d) + DMatrix::from_fn(d, d, |_, _| rng.gen_range(-c..c))
}

pub fn random_antisymmetric<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &a - a.transpose()
}

pub fn random_spd<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.5
}

/// `Pᵗ ω₀ P`: antisymmetric and invertible.
pub fn random_symplectic<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let p = random_invertible(rng, d);
    p.transpose() * standard_symplectic(d) * p
}

/// `P J₀ P⁻¹` with `J₀` the standard complex structure.
pub fn random_complex<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let p = random_invertible(rng, d);
    let pinv = p.clone().try_inverse().expect("invertible");
    p * standard_symplectic(d) * pinv
}

/// Every structure the fiber module constructs, from fresh random data.
pub struct RandomFiber {
    pub d: usize,
    pub symplectic: FiberStructure,
    pub complex: FiberStructure,
    pub shifted: FiberStructure,
    pub compatible: FiberStructure,
    pub metric: DMatrix<f64>,
}

pub fn random_fiber<R: Rng>(rng: &mut R, d: usize) -> RandomFiber {
    let symplectic = from_symplectic(&random_symplectic(rng, d)).expect("symplectic");
    let complex = from_complex_structure(&random_complex(rng, d)).expect("complex");
    let shifted = b_shift(&symplectic, &random_antisymmetric(rng, d)).expect("shift");
    let metric = random_spd(rng, d);
    let compatible = compatible_structure(&shifted, &metric).expect("compatible");
    RandomFiber {
        d,
        symplectic,
        complex,
        shifted,
        compatible,
        metric,
    }
}

/// Largest of `‖J² + I‖∞` and `‖JᵗQJ − Q‖∞`, computed without the library.
pub fn axiom_residual(j: &DMatrix<f64>) -> f64 {
    let n = j.nrows();
    let d = n / 2;
    let q = DMatrix::from_fn(n, n, |a, b| {
        if (a < d && b == a + d) || (a >= d && b + d == a) {
            0.5
        } else {
            0.0
        }
    });
    let square = (j * j + DMatrix::identity(n, n)).amax();
    let pairing = (j.transpose() * &q * j - q).amax();
    square.max(pairing)
}

/// Points of the annulus `r_in ≤ r ≤ 1` on a polar grid.
pub fn annulus_cloud(r_in: f64, radial: usize, angular: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..=radial {
        let r = r_in + (1.0 - r_in) * i as f64 / radial as f64;
        for k in 0..angular {
            let t = std::f64::consts::TAU * k as f64 / angular as f64;
            pts.push(vec![r * t.cos(), r * t.sin()]);
        }
    }
    pts
}
