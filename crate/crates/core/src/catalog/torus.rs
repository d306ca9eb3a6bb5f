//! The flat torus `R²/(2πZ)²` in angle coordinates `(t₁, t₂)`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use super::model::Factor;
use crate::error::Result;
use crate::fields::forms::Form;
use crate::fields::{ChartInfo, Sample, SampledManifold};

/// A flat torus sampled on an `n x n` grid; it carries no action.
#[derive(Debug, Clone, Copy)]
pub struct FlatTorus {
    pub points: usize,
}

impl FlatTorus {
    pub fn new(points: usize) -> Self {
        Self {
            points: points.max(3),
        }
    }
}

fn nearest_angle(theta: f64, near: f64) -> f64 {
    theta + TAU * ((near - theta) / TAU).round()
}

impl Factor for FlatTorus {
    fn dim(&self) -> usize {
        2
    }

    fn embed_dim(&self) -> usize {
        4
    }

    fn charts(&self) -> Vec<ChartInfo> {
        vec![ChartInfo {
            name: "angles".into(),
            periods: vec![Some(TAU), Some(TAU)],
        }]
    }

    fn in_domain(&self, chart: usize, x: &[f64]) -> bool {
        chart == 0 && x.iter().all(|v| v.is_finite())
    }

    fn embed(&self, _chart: usize, x: &[f64]) -> Vec<f64> {
        vec![x[0].cos(), x[0].sin(), x[1].cos(), x[1].sin()]
    }

    fn to_chart(&self, emb: &[f64], chart: usize, near: &[f64]) -> Option<Vec<f64>> {
        (chart == 0).then(|| {
            vec![
                nearest_angle(emb[1].atan2(emb[0]), near[0]),
                nearest_angle(emb[3].atan2(emb[2]), near[1]),
            ]
        })
    }

    fn locate(&self, emb: &[f64]) -> (usize, Vec<f64>) {
        (
            0,
            vec![
                emb[1].atan2(emb[0]).rem_euclid(TAU),
                emb[3].atan2(emb[2]).rem_euclid(TAU),
            ],
        )
    }

    fn metric(&self, _chart: usize, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }

    fn symplectic(&self, _chart: usize, _x: &[f64]) -> Form {
        Form::basis(2, &[0, 1])
    }

    fn generator_count(&self) -> usize {
        0
    }

    fn generator(&self, _k: usize, _chart: usize, _x: &[f64]) -> DVector<f64> {
        DVector::zeros(2)
    }

    fn moment(&self, _k: usize, _chart: usize, _x: &[f64]) -> f64 {
        0.0
    }

    fn rotate(&self, _k: usize, _angle: f64, emb: &[f64]) -> Vec<f64> {
        emb.to_vec()
    }

    fn sample(&self) -> Result<SampledManifold> {
        let n = self.points;
        let id = |i: usize, j: usize| i * n + j;
        let mut samples = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let x = vec![TAU * i as f64 / n as f64, TAU * j as f64 / n as f64];
                let embedding = self.embed(0, &x);
                samples.push(Sample {
                    chart: 0,
                    coords: x,
                    embedding,
                });
            }
        }
        let mut edges = Vec::new();
        let mut seams = Vec::new();
        for i in 0..n {
            for j in 0..n {
                edges.push((id(i, j), id((i + 1) % n, j)));
                edges.push((id(i, j), id(i, (j + 1) % n)));
            }
            seams.push((id(n - 1, i), id(0, i)));
            seams.push((id(i, n - 1), id(i, 0)));
        }
        SampledManifold::new(2, samples, &edges, seams)
    }
}
