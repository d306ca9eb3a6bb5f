//! The round 2-sphere: an equatorial band chart `(θ, z)` and two polar caps
//! in orthographic coordinates `(x, y)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use super::model::Factor;
use crate::error::Result;
use crate::fields::forms::Form;
use crate::fields::{ChartInfo, Sample, SampledManifold};

pub const BAND: usize = 0;
pub const NORTH: usize = 1;
pub const SOUTH: usize = 2;

/// Samples with `|z|` at most this go to the band chart.
const Z_CAP: f64 = 0.8;
/// The band chart is used for `|z|` below this.
const BAND_LIMIT: f64 = 0.995;
/// The caps are used for `x² + y²` below this.
const CAP_LIMIT: f64 = 0.99;
/// Weight of the cosine term in the ring heights; concentrates rings near
/// the poles, where the caps need them.
const RING_BLEND: f64 = 0.3;

/// The unit sphere with the rotation about the z-axis and height `μ = z`.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub rings: usize,
    pub ring_points: usize,
}

fn nearest_angle(theta: f64, near: f64) -> f64 {
    theta + TAU * ((near - theta) / TAU).round()
}

fn ring_height(i: usize, rings: usize) -> f64 {
    let u = i as f64 / (rings - 1) as f64;
    (1.0 - RING_BLEND) * (2.0 * u - 1.0) - RING_BLEND * (PI * u).cos()
}

fn cap_height(chart: usize, x: &[f64]) -> f64 {
    let r = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).sqrt();
    if chart == NORTH {
        r
    } else {
        -r
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl Sphere {
    pub fn new(rings: usize, ring_points: usize) -> Self {
        Self {
            rings: rings.max(3),
            ring_points: ring_points.max(3),
        }
    }

    /// Height `z` at a chart point.
    pub fn height(chart: usize, x: &[f64]) -> f64 {
        match chart {
            BAND => x[1],
            _ => cap_height(chart, x),
        }
    }

    /// Analytic differential of the height.
    pub fn height_differential(chart: usize, x: &[f64]) -> DVector<f64> {
        match chart {
            BAND => DVector::from_vec(vec![0.0, 1.0]),
            _ => {
                let z = cap_height(chart, x);
                DVector::from_vec(vec![-x[0] / z, -x[1] / z])
            }
        }
    }
}

impl Factor for Sphere {
    fn dim(&self) -> usize {
        2
    }

    fn embed_dim(&self) -> usize {
        3
    }

    fn charts(&self) -> Vec<ChartInfo> {
        vec![
            ChartInfo {
                name: "band".into(),
                periods: vec![Some(TAU), None],
            },
            ChartInfo {
                name: "north".into(),
                periods: vec![None, None],
            },
            ChartInfo {
                name: "south".into(),
                periods: vec![None, None],
            },
        ]
    }

    fn in_domain(&self, chart: usize, x: &[f64]) -> bool {
        match chart {
            BAND => x[1].abs() < BAND_LIMIT && x[0].is_finite(),
            NORTH | SOUTH => x[0] * x[0] + x[1] * x[1] < CAP_LIMIT,
            _ => false,
        }
    }

    fn embed(&self, chart: usize, x: &[f64]) -> Vec<f64> {
        match chart {
            BAND => {
                let rho = (1.0 - x[1] * x[1]).max(0.0).sqrt();
                vec![rho * x[0].cos(), rho * x[0].sin(), x[1]]
            }
            _ => vec![x[0], x[1], cap_height(chart, x)],
        }
    }

    fn to_chart(&self, emb: &[f64], chart: usize, near: &[f64]) -> Option<Vec<f64>> {
        let (px, py, z) = (emb[0], emb[1], emb[2]);
        let y = match chart {
            BAND => vec![nearest_angle(py.atan2(px), near[0]), z],
            NORTH if z > 0.0 => vec![px, py],
            SOUTH if z < 0.0 => vec![px, py],
            _ => return None,
        };
        self.in_domain(chart, &y).then_some(y)
    }

    fn locate(&self, emb: &[f64]) -> (usize, Vec<f64>) {
        let z = emb[2].clamp(-1.0, 1.0);
        if z.abs() <= Z_CAP {
            (BAND, vec![emb[1].atan2(emb[0]).rem_euclid(TAU), z])
        } else if z > 0.0 {
            (NORTH, vec![emb[0], emb[1]])
        } else {
            (SOUTH, vec![emb[0], emb[1]])
        }
    }

    fn metric(&self, chart: usize, x: &[f64]) -> DMatrix<f64> {
        match chart {
            BAND => {
                let s = 1.0 - x[1] * x[1];
                DMatrix::from_diagonal(&DVector::from_vec(vec![s, 1.0 / s]))
            }
            _ => {
                let z2 = 1.0 - x[0] * x[0] - x[1] * x[1];
                let v = DVector::from_vec(vec![x[0], x[1]]);
                DMatrix::identity(2, 2) + &v * v.transpose() / z2
            }
        }
    }

    /// The area form, oriented so that `i_ξ ω = dz` for the rotation field.
    fn symplectic(&self, chart: usize, x: &[f64]) -> Form {
        match chart {
            BAND => Form::basis(2, &[0, 1]),
            _ => &Form::basis(2, &[0, 1]) * (1.0 / cap_height(chart, x)),
        }
    }

    fn generator_count(&self) -> usize {
        1
    }

    fn generator(&self, _k: usize, chart: usize, x: &[f64]) -> DVector<f64> {
        match chart {
            BAND => DVector::from_vec(vec![1.0, 0.0]),
            _ => DVector::from_vec(vec![-x[1], x[0]]),
        }
    }

    fn moment(&self, _k: usize, chart: usize, x: &[f64]) -> f64 {
        Self::height(chart, x)
    }

    fn rotate(&self, _k: usize, angle: f64, emb: &[f64]) -> Vec<f64> {
        let (s, c) = angle.sin_cos();
        vec![c * emb[0] - s * emb[1], s * emb[0] + c * emb[1], emb[2]]
    }

    /// Latitude rings from pole to pole, each pole a single sample. A ring
    /// at radius `ρ` carries `max(3, round(ring_points·ρ))` points, staggered
    /// by half a step on alternate rings. Consecutive rings are joined by
    /// nearest-angle edges in both directions.
    fn sample(&self) -> Result<SampledManifold> {
        let rings = self.rings;
        let mut samples = Vec::new();
        let mut ring_ids: Vec<Vec<usize>> = Vec::with_capacity(rings);
        let mut ring_angles: Vec<Vec<f64>> = Vec::with_capacity(rings);
        let mut edges = Vec::new();
        let mut seams = Vec::new();
        for i in 0..rings {
            let z = if i == 0 {
                -1.0
            } else if i == rings - 1 {
                1.0
            } else {
                ring_height(i, rings)
            };
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let count = if i == 0 || i == rings - 1 {
                1
            } else {
                ((self.ring_points as f64 * rho).round() as usize).max(3)
            };
            let shift = if i % 2 == 1 { 0.5 } else { 0.0 };
            let mut ids = Vec::with_capacity(count);
            let mut angles = Vec::with_capacity(count);
            for j in 0..count {
                let theta = if count == 1 {
                    0.0
                } else {
                    TAU * (j as f64 + shift) / count as f64
                };
                let emb = vec![rho * theta.cos(), rho * theta.sin(), z];
                let (chart, coords) = if z.abs() <= Z_CAP {
                    (BAND, vec![theta, z])
                } else if z > 0.0 {
                    (NORTH, vec![emb[0], emb[1]])
                } else {
                    (SOUTH, vec![emb[0], emb[1]])
                };
                ids.push(samples.len());
                angles.push(theta);
                samples.push(Sample {
                    chart,
                    coords,
                    embedding: emb,
                });
            }
            if count > 1 {
                for j in 0..count {
                    edges.push((ids[j], ids[(j + 1) % count]));
                }
                if z.abs() <= Z_CAP {
                    seams.push((ids[count - 1], ids[0]));
                }
            }
            ring_ids.push(ids);
            ring_angles.push(angles);
        }
        for i in 0..rings - 1 {
            for (lower, upper) in [(i, i + 1), (i + 1, i)] {
                for (a, &ta) in ring_angles[lower].iter().enumerate() {
                    let b = ring_angles[upper]
                        .iter()
                        .enumerate()
                        .min_by(|x, y| {
                            circular_distance(*x.1, ta).total_cmp(&circular_distance(*y.1, ta))
                        })
                        .map(|(b, _)| b)
                        .expect("rings are non-empty");
                    edges.push((ring_ids[lower][a], ring_ids[upper][b]));
                }
            }
            for (p, q) in [(0, 1), (rings - 1, rings - 2)] {
                if i == p.min(q) {
                    for &b in &ring_ids[q] {
                        edges.push((ring_ids[p][0], b));
                    }
                }
            }
        }
        SampledManifold::new(2, samples, &edges, seams)
    }
}
