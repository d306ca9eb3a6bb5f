//! Convex hulls of point clouds in dimensions 1 to 3, with degenerate
//! clouds reduced to their affine hull.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for the affine rank of a cloud.
const AFFINE_RANK_TOL: f64 = 1e-10;
/// Relative tolerance for orientation tests.
const ORIENTATION_TOL: f64 = 1e-12;
/// Relative tolerance for merging coplanar triangles into one facet.
const COPLANAR_TOL: f64 = 1e-9;

/// A supporting half-space `normal · x ≤ offset` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    /// Indices of the vertices on the facet.
    pub vertices: Vec<usize>,
}

/// Convex hull of a cloud in `R^m`, `m ≤ 3`.
///
/// When the cloud spans a lower-dimensional affine subspace the hull is
/// computed there and flagged by `dim < ambient`; facets then live in the
/// subspace coordinates given by `origin + basis · y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub ambient: usize,
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
    origin: DVector<f64>,
    basis: DMatrix<f64>,
    local: Vec<DVector<f64>>,
    triangles: Vec<[Vec<f64>; 3]>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = dot(&ab, &ab);
    let t = if len2 > 0.0 {
        (dot(&ap, &ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let closest: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    norm(&sub(p, &closest))
}

/// Distance from `p` to the triangle `abc` in `R³`.
fn triangle_distance(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let n = cross(&ab, &ac);
    let nn = dot(&n, &n);
    if nn > 0.0 {
        let ap = sub(p, a);
        let dist = dot(&ap, &n) / nn;
        let q: Vec<f64> = p.iter().zip(&n).map(|(x, m)| x - dist * m).collect();
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|(u, v)| dot(&cross(&sub(v, u), &sub(&q, u)), &n) >= 0.0);
        if inside {
            return dist.abs() * nn.sqrt();
        }
    }
    segment_distance(p, a, b)
        .min(segment_distance(p, b, c))
        .min(segment_distance(p, c, a))
}

/// Andrew's monotone chain; returns hull vertex indices counter-clockwise,
/// without collinear points.
fn monotone_chain(pts: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        pts[a][0]
            .total_cmp(&pts[b][0])
            .then(pts[a][1].total_cmp(&pts[b][1]))
    });
    order.dedup_by(|a, b| pts[*a] == pts[*b]);
    if order.len() < 3 {
        return order;
    }
    let scale = pts
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let eps = ORIENTATION_TOL * scale * scale;
    let turn = |o: usize, a: usize, b: usize| {
        (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1])
            - (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for &i in &order {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= eps {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= eps
        {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

/// Incremental 3D hull of points in general enough position to span `R³`.
/// Returns triangles with outward orientation.
fn incremental_3d(pts: &[Vec<f64>]) -> Vec<[usize; 3]> {
    let scale = pts
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let eps = ORIENTATION_TOL * scale;

    // Initial tetrahedron from extreme points.
    let a = (0..pts.len())
        .min_by(|&i, &j| pts[i][0].total_cmp(&pts[j][0]))
        .expect("non-empty");
    let b = (0..pts.len())
        .max_by(|&i, &j| norm(&sub(&pts[i], &pts[a])).total_cmp(&norm(&sub(&pts[j], &pts[a]))))
        .expect("non-empty");
    let ab = sub(&pts[b], &pts[a]);
    let c = (0..pts.len())
        .max_by(|&i, &j| {
            let ci = norm(&cross(&ab, &sub(&pts[i], &pts[a])));
            let cj = norm(&cross(&ab, &sub(&pts[j], &pts[a])));
            ci.total_cmp(&cj)
        })
        .expect("non-empty");
    let n0 = cross(&ab, &sub(&pts[c], &pts[a]));
    let d = (0..pts.len())
        .max_by(|&i, &j| {
            dot(&n0, &sub(&pts[i], &pts[a]))
                .abs()
                .total_cmp(&dot(&n0, &sub(&pts[j], &pts[a])).abs())
        })
        .expect("non-empty");

    let plane = |f: &[usize; 3]| {
        let n = cross(&sub(&pts[f[1]], &pts[f[0]]), &sub(&pts[f[2]], &pts[f[0]]));
        let len = norm(&n);
        let n: Vec<f64> = n.iter().map(|v| v / len).collect();
        let off = dot(&n, &pts[f[0]]);
        (n, off)
    };
    let centroid: Vec<f64> = (0..3)
        .map(|k| (pts[a][k] + pts[b][k] + pts[c][k] + pts[d][k]) / 4.0)
        .collect();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for f in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let (n, off) = plane(&f);
        faces.push(if dot(&n, &centroid) > off {
            [f[0], f[2], f[1]]
        } else {
            f
        });
    }

    for (p, q) in pts.iter().enumerate() {
        if [a, b, c, d].contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| {
                let (n, off) = plane(f);
                dot(&n, q) - off > eps
            })
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut horizon = Vec::new();
        for (f, face) in faces.iter().enumerate() {
            if !visible[f] {
                continue;
            }
            for e in 0..3 {
                let (u, v) = (face[e], face[(e + 1) % 3]);
                let shared = faces.iter().enumerate().any(|(g, other)| {
                    g != f && visible[g] && (0..3).any(|k| other[k] == v && other[(k + 1) % 3] == u)
                });
                if !shared {
                    horizon.push((u, v));
                }
            }
        }
        let mut kept: Vec<[usize; 3]> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| *f)
            .collect();
        kept.extend(horizon.into_iter().map(|(u, v)| [u, v, p]));
        faces = kept;
    }
    faces
}

/// Outward normal, offset and vertex ids of a facet in local coordinates.
type Plane = (Vec<f64>, f64, Vec<usize>);

/// Orthonormal basis of the affine hull of the cloud and its origin.
fn affine_frame(points: &[Vec<f64>], m: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = points.len() as f64;
    let origin = DVector::from_fn(m, |k, _| points.iter().map(|p| p[k]).sum::<f64>() / n);
    let mut cov = DMatrix::<f64>::zeros(m, m);
    for p in points {
        let c = DVector::from_column_slice(p) - &origin;
        cov += &c * c.transpose();
    }
    let eig = cov.symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut cols: Vec<(f64, DVector<f64>)> = (0..m)
        .filter(|&k| max > 0.0 && eig.eigenvalues[k] > AFFINE_RANK_TOL * AFFINE_RANK_TOL * max)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
        .collect();
    if cols.len() == m {
        return (DVector::zeros(m), DMatrix::identity(m, m));
    }
    cols.sort_by(|x, y| y.0.total_cmp(&x.0));
    let vecs: Vec<DVector<f64>> = cols.into_iter().map(|c| c.1).collect();
    let basis = if vecs.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&vecs)
    };
    (origin, basis)
}

/// Convex hull of a point set in `R^m`, `1 ≤ m ≤ 3`. Vertices are returned
/// in lexicographic order so the result does not depend on input order.
pub fn hull_of_points(points: &[Vec<f64>], m: usize) -> Result<Polytope> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if m == 0 || m > 3 {
        return Err(Error::UnsupportedDimension(m));
    }
    let (origin, basis) = affine_frame(points, m);
    let k = basis.ncols();
    let local: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let y = basis.transpose() * (DVector::from_column_slice(p) - &origin);
            y.iter().cloned().collect()
        })
        .collect();

    let mut triangles = Vec::new();
    let (vertex_ids, planes): (Vec<usize>, Vec<Plane>) = match k {
        0 => (vec![0], Vec::new()),
        1 => {
            let lo = (0..local.len())
                .min_by(|&a, &b| local[a][0].total_cmp(&local[b][0]))
                .expect("non-empty");
            let hi = (0..local.len())
                .max_by(|&a, &b| local[a][0].total_cmp(&local[b][0]))
                .expect("non-empty");
            (
                vec![lo, hi],
                vec![
                    (vec![-1.0], -local[lo][0], vec![lo]),
                    (vec![1.0], local[hi][0], vec![hi]),
                ],
            )
        }
        2 => {
            let ring = monotone_chain(&local);
            let planes = (0..ring.len())
                .map(|i| {
                    let (a, b) = (&local[ring[i]], &local[ring[(i + 1) % ring.len()]]);
                    let n = vec![b[1] - a[1], a[0] - b[0]];
                    let len = norm(&n);
                    let n: Vec<f64> = n.iter().map(|v| v / len).collect();
                    let off = dot(&n, a);
                    (n, off, vec![ring[i], ring[(i + 1) % ring.len()]])
                })
                .collect();
            (ring, planes)
        }
        _ => {
            let tris = incremental_3d(&local);
            let scale = local
                .iter()
                .flat_map(|p| p.iter())
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1e-300);
            let eps = COPLANAR_TOL * scale;
            let mut planes: Vec<(Vec<f64>, f64, Vec<usize>)> = Vec::new();
            for t in &tris {
                let (a, b, c) = (&local[t[0]], &local[t[1]], &local[t[2]]);
                let n = cross(&sub(b, a), &sub(c, a));
                let len = norm(&n);
                let n: Vec<f64> = n.iter().map(|v| v / len).collect();
                let off = dot(&n, a);
                if !planes
                    .iter()
                    .any(|(m, o, _)| dot(m, &n) > 1.0 - COPLANAR_TOL && (o - off).abs() <= eps)
                {
                    planes.push((n, off, Vec::new()));
                }
            }
            let mut ids: Vec<usize> = tris.iter().flat_map(|t| t.iter().cloned()).collect();
            ids.sort_unstable();
            ids.dedup();
            // A point is a vertex when three independent facet planes meet there.
            let extreme: Vec<usize> = ids
                .into_iter()
                .filter(|&i| {
                    let normals: Vec<&Vec<f64>> = planes
                        .iter()
                        .filter(|(n, o, _)| (dot(n, &local[i]) - o).abs() <= eps)
                        .map(|(n, _, _)| n)
                        .collect();
                    normals.iter().enumerate().any(|(x, u)| {
                        normals[x + 1..].iter().enumerate().any(|(y, v)| {
                            normals[x + y + 2..]
                                .iter()
                                .any(|w| dot(&cross(u, v), w).abs() > COPLANAR_TOL.sqrt())
                        })
                    })
                })
                .collect();
            for (n, o, members) in planes.iter_mut() {
                members.extend(
                    extreme
                        .iter()
                        .filter(|&&i| (dot(n, &local[i]) - *o).abs() <= eps),
                );
            }
            triangles = tris
                .iter()
                .map(|t| {
                    [
                        local[t[0]].clone(),
                        local[t[1]].clone(),
                        local[t[2]].clone(),
                    ]
                })
                .collect();
            (extreme, planes)
        }
    };

    // Renumber vertices in lexicographic order of their coordinates.
    let mut order = vertex_ids;
    order.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .fold(std::cmp::Ordering::Equal, |acc, (x, y)| {
                acc.then(x.total_cmp(y))
            })
    });
    order.dedup_by(|a, b| points[*a] == points[*b]);
    let position = |id: usize| {
        order
            .iter()
            .position(|o| points[*o] == points[id])
            .expect("vertex present")
    };

    let facets = planes
        .into_iter()
        .map(|(normal, offset, members)| {
            let mut vertices: Vec<usize> = members.iter().map(|&v| position(v)).collect();
            if k == 3 {
                vertices.sort_unstable();
                vertices.dedup();
            }
            Facet {
                normal,
                offset,
                vertices,
            }
        })
        .collect();

    Ok(Polytope {
        ambient: m,
        dim: k,
        vertices: order.iter().map(|&i| points[i].clone()).collect(),
        facets,
        local: order
            .iter()
            .map(|&i| DVector::from_column_slice(&local[i]))
            .collect(),
        triangles,
        origin,
        basis,
    })
}

impl Polytope {
    pub fn is_degenerate(&self) -> bool {
        self.dim < self.ambient
    }

    fn to_local(&self, p: &[f64]) -> (Vec<f64>, f64) {
        let d = DVector::from_column_slice(p) - &self.origin;
        let y = self.basis.transpose() * &d;
        let perp = (&d - &self.basis * &y).norm();
        (y.iter().cloned().collect(), perp)
    }

    /// Coordinates of `p` projected onto the affine hull.
    pub fn local_coordinates(&self, p: &[f64]) -> Vec<f64> {
        self.to_local(p).0
    }

    /// Signed depth inside the hull, within its affine hull: the smallest
    /// slack over facets (negative outside).
    pub fn depth(&self, p: &[f64]) -> f64 {
        let (y, _) = self.to_local(p);
        if self.dim == 0 {
            return 0.0;
        }
        self.facets
            .iter()
            .map(|f| f.offset - dot(&f.normal, &y))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance from `p` to the hull; zero inside.
    pub fn distance(&self, p: &[f64]) -> f64 {
        let (y, perp) = self.to_local(p);
        let inside = match self.dim {
            0 => 0.0,
            _ if self.depth(p) >= 0.0 => 0.0,
            1 => {
                let lo = self.local[0][0].min(self.local[self.local.len() - 1][0]);
                let hi = self.local[0][0].max(self.local[self.local.len() - 1][0]);
                (lo - y[0]).max(y[0] - hi).max(0.0)
            }
            2 => self
                .facets
                .iter()
                .map(|f| {
                    segment_distance(
                        &y,
                        self.local[f.vertices[0]].as_slice(),
                        self.local[f.vertices[1]].as_slice(),
                    )
                })
                .fold(f64::INFINITY, f64::min),
            _ => self
                .triangles
                .iter()
                .map(|[a, b, c]| triangle_distance(&y, a, b, c))
                .fold(f64::INFINITY, f64::min),
        };
        let inside = if self.dim == 0 { norm(&y) } else { inside };
        (inside * inside + perp * perp).sqrt()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.distance(p) <= tol
    }
}
