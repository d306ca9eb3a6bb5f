//! Built-in examples with full field, action and moment data.

pub mod model;
pub mod sphere;
pub mod torus;

use std::sync::Arc;

use nalgebra::DVector;

use crate::actions::{ActionSpec, Hamiltonian, MomentData};
use crate::error::{Error, Result};
use crate::fields::forms::Form;
use crate::fields::{FieldEvaluator, SampledManifold};
use model::{BoxModel, FormField, ProductModel};
use sphere::Sphere;
use torus::FlatTorus;

pub const DEFAULT_RESOLUTION: usize = 64;
pub const MIN_RESOLUTION: usize = 16;

/// Sign `s` in `H = s·db` that makes the b-transformed structure of the
/// twisted example integrable; the opposite sign leaves a residual of order one.
pub const TWIST_SIGN: f64 = -1.0;

/// Points per side of the torus factor in `twisted_sphere_torus`.
const TORUS_FACTOR_POINTS: usize = 8;
/// Largest ring size of sphere factors inside products.
const PRODUCT_RING_POINTS: usize = 4;
/// Weight of `z²` in the perturbed moment of `broken_moment_control`.
const MOMENT_PERTURBATION: f64 = 0.1;

/// Name and one-line description of a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub instantiates: &'static str,
}

pub const ENTRIES: [CatalogEntry; 6] = [
    CatalogEntry {
        name: "sphere_rotation",
        description: "S^2 with its area form, rotation about the z-axis, moment z",
        instantiates: "symplectic structure J_omega; usual moment map",
    },
    CatalogEntry {
        name: "product_spheres_T2",
        description: "S^2 x S^2 with the product form, T^2 rotating each factor, moment (z1, z2)",
        instantiates: "symplectic structure J_omega; usual moment map of a torus",
    },
    CatalogEntry {
        name: "sphere_bshift",
        description: "sphere_rotation B-shifted by B = z*omega, moment one form z dz",
        instantiates: "B-field shift; shifted moment one form alpha + i_xi B",
    },
    CatalogEntry {
        name: "twisted_sphere_torus",
        description:
            "S^2 x T^2 b-shifted by b = z dt1^dt2, twist H = db, rotation of S^2, moment z",
        instantiates: "H-twisted structure from a non-closed b-transform",
    },
    CatalogEntry {
        name: "nonintegrable_control",
        description: "4-dim box with omega = dx1^dy1 + (1+x1) dx2^dy2, not closed",
        instantiates: "non-integrable almost structure (detector control)",
    },
    CatalogEntry {
        name: "broken_moment_control",
        description: "sphere_rotation with moment z + 0.1 z^2",
        instantiates: "invalid moment data (verifier control)",
    },
];

pub fn list() -> &'static [CatalogEntry] {
    &ENTRIES
}

/// Results the checks should reproduce for an example.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    /// Both Hamiltonian conditions hold.
    pub hamiltonian: bool,
    pub integrable: bool,
    /// Moment images of the fixed components.
    pub fixed_images: Vec<Vec<f64>>,
    /// Dimension of every fixed component.
    pub fixed_dimension: usize,
    /// Morse indices at the critical components of the generic direction.
    pub generic_indices: Vec<usize>,
}

/// A fully wired catalog example at a given resolution.
pub struct Example {
    pub entry: CatalogEntry,
    pub resolution: usize,
    pub fields: Arc<dyn FieldEvaluator>,
    pub action: Option<Arc<dyn ActionSpec>>,
    pub moment: Option<Arc<dyn MomentData>>,
    pub samples: SampledManifold,
    pub expected: Expected,
}

impl Example {
    pub fn name(&self) -> &'static str {
        self.entry.name
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian<'_>> {
        match (&self.action, &self.moment) {
            (Some(a), Some(m)) => Hamiltonian::new(self.fields.as_ref(), a.as_ref(), m.as_ref()),
            _ => Err(Error::NoAction(self.entry.name.to_string())),
        }
    }

    pub fn rank(&self) -> usize {
        self.action.as_ref().map_or(0, |a| a.rank())
    }

    /// A direction generating a dense subgroup of the torus.
    pub fn generic_direction(&self) -> Vec<f64> {
        generic_direction(self.rank())
    }
}

/// `(1, 1/√2, 1/√3, …)`: rationally independent components.
pub fn generic_direction(m: usize) -> Vec<f64> {
    (0..m).map(|k| 1.0 / ((k + 1) as f64).sqrt()).collect()
}

pub fn load(name: &str) -> Result<Example> {
    load_with_resolution(name, DEFAULT_RESOLUTION)
}

/// Catalog entry with exactly this name.
pub fn find(name: &str) -> Result<CatalogEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .copied()
        .ok_or_else(|| Error::UnknownExample(name.to_string()))
}

fn standalone_sphere(n: usize) -> Sphere {
    Sphere::new(2 * n + 1, 4 * n)
}

fn factor_sphere(n: usize) -> Sphere {
    Sphere::new(n + 1, PRODUCT_RING_POINTS)
}

fn hamiltonian_example(
    entry: CatalogEntry,
    resolution: usize,
    model: ProductModel,
    expected: Expected,
) -> Result<Example> {
    let samples = model.sample()?;
    let model = Arc::new(model);
    Ok(Example {
        entry,
        resolution,
        fields: model.clone(),
        action: Some(model.clone()),
        moment: Some(model),
        samples,
        expected,
    })
}

fn sphere_expected() -> Expected {
    Expected {
        hamiltonian: true,
        integrable: true,
        fixed_images: vec![vec![-1.0], vec![1.0]],
        fixed_dimension: 0,
        generic_indices: vec![0, 2],
    }
}

/// Loads an example; `resolution` below the minimum is rejected.
pub fn load_with_resolution(name: &str, resolution: usize) -> Result<Example> {
    let entry = find(name)?;
    if resolution < MIN_RESOLUTION {
        return Err(Error::DimensionMismatch {
            expected: MIN_RESOLUTION,
            found: resolution,
        });
    }
    let n = resolution;
    match name {
        "sphere_rotation" => {
            let model = ProductModel::new(vec![Box::new(standalone_sphere(n))])
                .with_generators(vec![(0, 0)]);
            hamiltonian_example(entry, n, model, sphere_expected())
        }
        "product_spheres_T2" => {
            let model =
                ProductModel::new(vec![Box::new(factor_sphere(n)), Box::new(factor_sphere(n))])
                    .with_generators(vec![(0, 0), (1, 0)]);
            let corners = [-1.0, 1.0]
                .iter()
                .flat_map(|&a| [-1.0, 1.0].iter().map(move |&b| vec![a, b]))
                .collect();
            let expected = Expected {
                hamiltonian: true,
                integrable: true,
                fixed_images: corners,
                fixed_dimension: 0,
                generic_indices: vec![0, 2, 2, 4],
            };
            hamiltonian_example(entry, n, model, expected)
        }
        "sphere_bshift" => {
            let b: FormField = Arc::new(|p| &p.symplectic() * p.factor_moment(0, 0));
            let shift = b.clone();
            let model = ProductModel::new(vec![Box::new(standalone_sphere(n))])
                .with_generators(vec![(0, 0)])
                .with_b_field(b)
                .with_one_forms(Arc::new(move |p, k| {
                    let alpha = shift(p).interior(p.generator(k).as_slice());
                    DVector::from_column_slice(alpha.components())
                }));
            hamiltonian_example(entry, n, model, sphere_expected())
        }
        "twisted_sphere_torus" => {
            let model = ProductModel::new(vec![
                Box::new(factor_sphere(n)),
                Box::new(FlatTorus::new(TORUS_FACTOR_POINTS)),
            ])
            .with_generators(vec![(0, 0)])
            .with_b_field(Arc::new(|p| {
                &Form::basis(4, &[2, 3]) * p.factor_moment(0, 0)
            }))
            .with_twist(Arc::new(|p| {
                let dz = Form::from_covector(p.factor_moment_differential(0, 0).as_slice());
                &dz.wedge(&Form::basis(4, &[2, 3])) * TWIST_SIGN
            }));
            let expected = Expected {
                hamiltonian: true,
                integrable: true,
                fixed_images: vec![vec![-1.0], vec![1.0]],
                fixed_dimension: 2,
                generic_indices: vec![0, 2],
            };
            hamiltonian_example(entry, n, model, expected)
        }
        "broken_moment_control" => {
            let model = ProductModel::new(vec![Box::new(standalone_sphere(n))])
                .with_generators(vec![(0, 0)])
                .with_moment_warp(Arc::new(|z| z + MOMENT_PERTURBATION * z * z));
            let expected = Expected {
                hamiltonian: false,
                fixed_images: vec![
                    vec![-1.0 + MOMENT_PERTURBATION],
                    vec![1.0 + MOMENT_PERTURBATION],
                ],
                ..sphere_expected()
            };
            hamiltonian_example(entry, n, model, expected)
        }
        "nonintegrable_control" => {
            let model = BoxModel::new((n / 8).max(4));
            let samples = model.sample()?;
            Ok(Example {
                entry,
                resolution: n,
                fields: Arc::new(model),
                action: None,
                moment: None,
                samples,
                expected: Expected {
                    hamiltonian: false,
                    integrable: false,
                    fixed_images: Vec::new(),
                    fixed_dimension: 0,
                    generic_indices: Vec::new(),
                },
            })
        }
        _ => Err(Error::UnknownExample(name.to_string())),
    }
}
