//! Moment images: convex hulls, convexity deficiency, hull versus fixed
//! images, and connectedness of levels.

pub mod hull;

use std::io;

use crate::actions::{FixedComponent, MomentData};
use crate::error::{Error, Result};
use crate::fields::SampledManifold;
use crate::sweep::par_map;
pub use hull::{hull_of_points, Facet, Polytope};

/// Largest raster side chosen by [`matched_resolution`].
pub const MAX_RASTER: usize = 100;
/// Smallest raster side chosen by [`matched_resolution`].
pub const MIN_RASTER: usize = 8;
/// Interior levels per axis for connectivity checks.
pub const LEVELS_PER_AXIS: usize = 5;

/// Moment values of every sample, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCloud {
    pub m: usize,
    pub points: Vec<Vec<f64>>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl MomentCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.first().ok_or(Error::EmptyCloud)?.len();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for (i, p) in points.iter().enumerate() {
            if p.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation {
                    sample: i,
                    reason: "non-finite moment value".into(),
                });
            }
            for k in 0..m {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Ok(Self { m, points, lo, hi })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `id, mu0, mu1, …` rows.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend((0..self.m).map(|k| format!("mu{k}")));
        w.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.iter().map(|v| format!("{v:.12e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the moment map at every sample.
pub fn sample_moment_image(md: &dyn MomentData, samples: &SampledManifold) -> Result<MomentCloud> {
    let ids: Vec<usize> = (0..samples.len()).collect();
    let points: Result<Vec<Vec<f64>>> = par_map(&ids, |i| {
        let s = samples.sample(i);
        md.moment(s.chart, &s.coords)
            .map(|v| v.iter().cloned().collect())
            .map_err(|e| Error::Evaluation {
                sample: i,
                reason: e.to_string(),
            })
    })
    .into_iter()
    .collect();
    MomentCloud::new(points?)
}

pub fn convex_hull(cloud: &MomentCloud) -> Result<Polytope> {
    hull_of_points(&cloud.points, cloud.m)
}

/// Largest sup-norm change of `μ` along an edge of the neighbor graph.
pub fn max_edge_variation(cloud: &MomentCloud, samples: &SampledManifold) -> f64 {
    samples
        .edges()
        .map(|(i, j)| {
            cloud.points[i]
                .iter()
                .zip(&cloud.points[j])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Default level band: twice the largest per-edge variation of `μ`.
pub fn default_eps(cloud: &MomentCloud, samples: &SampledManifold) -> f64 {
    2.0 * max_edge_variation(cloud, samples)
}

/// Hull tolerance: the sampling scale measured in moment units, i.e. twice
/// the largest change of `μ` across one edge.
pub fn hull_tolerance(cloud: &MomentCloud, samples: &SampledManifold) -> f64 {
    2.0 * max_edge_variation(cloud, samples)
}

/// Raster side whose cells are wider than any gap the sampling can leave,
/// clamped to `[MIN_RASTER, MAX_RASTER]`.
pub fn matched_resolution(cloud: &MomentCloud, samples: &SampledManifold) -> usize {
    let gap = max_edge_variation(cloud, samples);
    let extent = cloud
        .lo
        .iter()
        .zip(&cloud.hi)
        .map(|(l, h)| h - l)
        .fold(f64::INFINITY, f64::min);
    if gap <= 0.0 || extent <= 0.0 {
        return MIN_RASTER;
    }
    ((extent / (1.25 * gap)).floor() as usize).clamp(MIN_RASTER, MAX_RASTER)
}

fn raster_deficiency(
    points: &[Vec<f64>],
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    inside: impl Fn(&[f64]) -> bool,
) -> f64 {
    let m = lo.len();
    let width: Vec<f64> = (0..m)
        .map(|k| (hi[k] - lo[k]) / resolution as f64)
        .collect();
    if width.iter().any(|w| *w <= 0.0) {
        return 0.0;
    }
    let cells = resolution.pow(m as u32);
    let index = |p: &[f64]| {
        (0..m).fold(0, |acc, k| {
            let c = ((p[k] - lo[k]) / width[k])
                .floor()
                .clamp(0.0, (resolution - 1) as f64) as usize;
            acc * resolution + c
        })
    };
    let mut hit = vec![false; cells];
    for p in points {
        hit[index(p)] = true;
    }
    let mut interior = 0usize;
    let mut empty = 0usize;
    let mut center = vec![0.0; m];
    for (cell, &filled) in hit.iter().enumerate() {
        let mut rest = cell;
        for k in (0..m).rev() {
            center[k] = lo[k] + ((rest % resolution) as f64 + 0.5) * width[k];
            rest /= resolution;
        }
        if inside(&center) {
            interior += 1;
            if !filled {
                empty += 1;
            }
        }
    }
    if interior == 0 {
        0.0
    } else {
        empty as f64 / interior as f64
    }
}

/// Fraction of raster cells with centers inside the hull that contain no
/// cloud point. Degenerate clouds are rasterized inside their affine hull.
pub fn convexity_deficiency(cloud: &MomentCloud, resolution: usize) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.m == 0 || cloud.m > 2 {
        return Err(Error::UnsupportedDimension(cloud.m));
    }
    let resolution = resolution.max(1);
    let hull = convex_hull(cloud)?;
    match hull.dim {
        0 => Ok(0.0),
        d if d == cloud.m => {
            let lo: Vec<f64> = (0..cloud.m)
                .map(|k| {
                    hull.vertices
                        .iter()
                        .map(|v| v[k])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            let hi: Vec<f64> = (0..cloud.m)
                .map(|k| {
                    hull.vertices
                        .iter()
                        .map(|v| v[k])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            Ok(raster_deficiency(
                &cloud.points,
                &lo,
                &hi,
                resolution,
                |c| hull.depth(c) >= 0.0,
            ))
        }
        _ => {
            let local: Vec<Vec<f64>> = cloud
                .points
                .iter()
                .map(|p| hull.local_coordinates(p))
                .collect();
            let lo = vec![local.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min)];
            let hi = vec![local.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max)];
            Ok(raster_deficiency(&local, &lo, &hi, resolution, |_| true))
        }
    }
}

/// Comparison of a hull with the images of the fixed components.
#[derive(Debug, Clone, PartialEq)]
pub struct HullMatch {
    pub tol: f64,
    /// Fixed images `a_i`.
    pub images: Vec<Vec<f64>>,
    /// Distance from each hull vertex to the nearest `a_i`.
    pub vertex_errors: Vec<f64>,
    /// Largest distance from a cloud point to `conv{a_i}`.
    pub containment_error: f64,
}

impl HullMatch {
    pub fn max_vertex_error(&self) -> f64 {
        self.vertex_errors.iter().cloned().fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        !self.images.is_empty()
            && self.max_vertex_error() <= self.tol
            && self.containment_error <= self.tol
    }
}

/// Checks that every hull vertex is near some fixed image and that the
/// hull of the fixed images contains the cloud, both within `tol`.
pub fn hull_matches_fixed_images(
    polytope: &Polytope,
    cloud: &MomentCloud,
    components: &[FixedComponent],
    tol: f64,
) -> Result<HullMatch> {
    let images: Vec<Vec<f64>> = components.iter().map(|c| c.moment_value.clone()).collect();
    if images.is_empty() {
        return Ok(HullMatch {
            tol,
            images,
            vertex_errors: Vec::new(),
            containment_error: f64::INFINITY,
        });
    }
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let vertex_errors = polytope
        .vertices
        .iter()
        .map(|v| {
            images
                .iter()
                .map(|a| dist(v, a))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let fixed_hull = hull_of_points(&images, cloud.m)?;
    let containment_error = cloud
        .points
        .iter()
        .map(|p| fixed_hull.distance(p))
        .fold(0.0, f64::max);
    Ok(HullMatch {
        tol,
        images,
        vertex_errors,
        containment_error,
    })
}

/// Components of the band `{p : ‖μ(p) − a‖∞ ≤ eps}` in the neighbor graph.
pub fn level_components(
    cloud: &MomentCloud,
    samples: &SampledManifold,
    a: &[f64],
    eps: f64,
) -> Vec<Vec<usize>> {
    let members: Vec<usize> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.iter().zip(a).all(|(v, t)| (v - t).abs() <= eps))
        .map(|(i, _)| i)
        .collect();
    samples.components(&members)
}

/// Number of connected components of the level band at `a`; zero when empty.
pub fn level_connectivity(
    cloud: &MomentCloud,
    samples: &SampledManifold,
    a: &[f64],
    eps: f64,
) -> usize {
    level_components(cloud, samples, a, eps).len()
}

/// A `per_axis^m` grid of values strictly inside the hull, spaced evenly
/// inside its bounding box.
pub fn interior_levels(polytope: &Polytope, per_axis: usize) -> Vec<Vec<f64>> {
    let m = polytope.ambient;
    let lo: Vec<f64> = (0..m)
        .map(|k| {
            polytope
                .vertices
                .iter()
                .map(|v| v[k])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let hi: Vec<f64> = (0..m)
        .map(|k| {
            polytope
                .vertices
                .iter()
                .map(|v| v[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut levels = vec![Vec::new()];
    for k in 0..m {
        let ticks: Vec<f64> = (1..=per_axis)
            .map(|i| lo[k] + (hi[k] - lo[k]) * i as f64 / (per_axis + 1) as f64)
            .collect();
        levels = levels
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                ticks.iter().map(move |&t| {
                    let mut p = prefix.clone();
                    p.push(t);
                    p
                })
            })
            .collect();
    }
    levels
        .into_iter()
        .filter(|p| polytope.is_degenerate() || polytope.depth(p) > 0.0)
        .collect()
}

/// Writes hull vertices as `id, x0, x1, …` rows.
pub fn write_hull_csv<W: io::Write>(polytope: &Polytope, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["vertex".to_string()];
    header.extend((0..polytope.ambient).map(|k| format!("mu{k}")));
    w.write_record(&header)?;
    for (i, v) in polytope.vertices.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(v.iter().map(|x| format!("{x:.12e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
