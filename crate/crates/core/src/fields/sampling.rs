use std::io;

use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};

/// One sample point: its chart, chart coordinates and embedding coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub chart: usize,
    pub coords: Vec<f64>,
    pub embedding: Vec<f64>,
}

/// Quasi-uniform samples of a compact manifold with a neighbor graph.
///
/// Seam pairs are graph edges that cross the cut of a periodic chart
/// coordinate; their endpoints sit on opposite sides of the cut.
#[derive(Debug, Clone)]
pub struct SampledManifold {
    dim: usize,
    samples: Vec<Sample>,
    neighbors: Vec<Vec<usize>>,
    seams: Vec<(usize, usize)>,
    h_geom: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl SampledManifold {
    pub fn new(
        dim: usize,
        samples: Vec<Sample>,
        edges: &[(usize, usize)],
        seams: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if !dim.is_multiple_of(2) {
            return Err(Error::OddDimension(dim));
        }
        Self::new_unchecked(dim, samples, edges, seams)
    }

    /// Builds a sample set of any dimension; used for odd-dimensional factors
    /// of products and for slices.
    pub(crate) fn new_unchecked(
        dim: usize,
        samples: Vec<Sample>,
        edges: &[(usize, usize)],
        seams: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = samples.len();
        for s in &samples {
            if s.coords.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.coords.len(),
                });
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                continue;
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let mut h_geom: f64 = 0.0;
        for (i, list) in neighbors.iter().enumerate() {
            for &j in list {
                h_geom = h_geom.max(distance(&samples[i].embedding, &samples[j].embedding));
            }
        }
        Ok(Self {
            dim,
            samples,
            neighbors,
            seams,
            h_geom,
        })
    }

    /// Cartesian product; `chart_of(c1, c2)` numbers the product charts.
    pub fn product<F>(a: &Self, b: &Self, chart_of: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> usize,
    {
        let nb = b.len();
        let index = |i: usize, j: usize| i * nb + j;
        let mut samples = Vec::with_capacity(a.len() * nb);
        for sa in &a.samples {
            for sb in &b.samples {
                let mut coords = sa.coords.clone();
                coords.extend_from_slice(&sb.coords);
                let mut embedding = sa.embedding.clone();
                embedding.extend_from_slice(&sb.embedding);
                samples.push(Sample {
                    chart: chart_of(sa.chart, sb.chart),
                    coords,
                    embedding,
                });
            }
        }
        let mut edges = Vec::new();
        for i in 0..a.len() {
            for j in 0..nb {
                for &k in &a.neighbors[i] {
                    if k > i {
                        edges.push((index(i, j), index(k, j)));
                    }
                }
                for &k in &b.neighbors[j] {
                    if k > j {
                        edges.push((index(i, j), index(i, k)));
                    }
                }
            }
        }
        let mut seams = Vec::new();
        for &(p, q) in &a.seams {
            seams.extend((0..nb).map(|j| (index(p, j), index(q, j))));
        }
        for &(p, q) in &b.seams {
            seams.extend((0..a.len()).map(|i| (index(i, p), index(i, q))));
        }
        Self::new(a.dim + b.dim, samples, &edges, seams)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn seams(&self) -> &[(usize, usize)] {
        &self.seams
    }

    /// Largest embedding distance between graph neighbors.
    pub fn h_geom(&self) -> f64 {
        self.h_geom
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn min_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Connected components of the subgraph induced on `members`, each sorted,
    /// ordered by smallest member.
    pub fn components(&self, members: &[usize]) -> Vec<Vec<usize>> {
        let mut inside = vec![false; self.len()];
        for &m in members {
            inside[m] = true;
        }
        let mut uf = UnionFind::<usize>::new(self.len());
        for &m in members {
            for &k in &self.neighbors[m] {
                if inside[k] {
                    uf.union(m, k);
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for m in sorted {
            groups.entry(uf.find(m)).or_default().push(m);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|c| c[0]);
        out
    }

    pub fn is_connected(&self) -> bool {
        let all: Vec<usize> = (0..self.len()).collect();
        self.components(&all).len() == 1
    }

    /// Writes `id, chart, c0.., e0.., neighbors` rows, neighbors space-separated.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let emb_dim = self.samples.first().map_or(0, |s| s.embedding.len());
        let mut header = vec!["id".to_string(), "chart".to_string()];
        header.extend((0..self.dim).map(|k| format!("c{k}")));
        header.extend((0..emb_dim).map(|k| format!("e{k}")));
        header.push("neighbors".to_string());
        w.write_record(&header)?;
        for (i, s) in self.samples.iter().enumerate() {
            let mut row = vec![i.to_string(), s.chart.to_string()];
            row.extend(s.coords.iter().map(|v| format!("{v:.12e}")));
            row.extend(s.embedding.iter().map(|v| format!("{v:.12e}")));
            let nb: Vec<String> = self.neighbors[i].iter().map(usize::to_string).collect();
            row.push(nb.join(" "));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
