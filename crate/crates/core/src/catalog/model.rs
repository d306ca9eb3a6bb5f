//! Products of surface factors carrying symplectic structures, optional
//! B-fields and twists, and torus actions rotating individual factors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::actions::{ActionSpec, MomentData};
use crate::error::{Error, Result};
use crate::fiber::FiberStructure;
use crate::fields::forms::{fd_gradient, Form};
use crate::fields::{
    symplectic_structure, Atlas, ChartInfo, FieldEvaluator, Sample, SampledManifold,
};

/// A compact surface with charts, a Kähler-type metric and symplectic form,
/// and circle actions given by rotations of its embedding.
pub trait Factor: Send + Sync {
    fn dim(&self) -> usize;
    fn embed_dim(&self) -> usize;
    fn charts(&self) -> Vec<ChartInfo>;
    fn in_domain(&self, chart: usize, x: &[f64]) -> bool;
    fn embed(&self, chart: usize, x: &[f64]) -> Vec<f64>;
    fn to_chart(&self, emb: &[f64], chart: usize, near: &[f64]) -> Option<Vec<f64>>;
    fn locate(&self, emb: &[f64]) -> (usize, Vec<f64>);
    fn metric(&self, chart: usize, x: &[f64]) -> DMatrix<f64>;
    fn symplectic(&self, chart: usize, x: &[f64]) -> Form;
    fn generator_count(&self) -> usize;
    fn generator(&self, k: usize, chart: usize, x: &[f64]) -> DVector<f64>;
    fn moment(&self, k: usize, chart: usize, x: &[f64]) -> f64;
    /// Time-`angle` flow of the `k`-th generator on embedding coordinates.
    fn rotate(&self, k: usize, angle: f64, emb: &[f64]) -> Vec<f64>;
    fn sample(&self) -> Result<SampledManifold>;

    fn moment_differential(&self, k: usize, chart: usize, x: &[f64]) -> DVector<f64> {
        fd_gradient(|y| Ok(self.moment(k, chart, y)), x, 1e-6).expect("infallible")
    }
}

/// A point of a product model, with access to its factor coordinates.
pub struct Point<'a> {
    model: &'a ProductModel,
    pub chart: usize,
    pub x: &'a [f64],
}

impl Point<'_> {
    pub fn factor_chart(&self, f: usize) -> usize {
        self.model.split_chart(self.chart)[f]
    }

    pub fn factor_coords(&self, f: usize) -> &[f64] {
        let o = self.model.offsets[f];
        &self.x[o..o + self.model.factors[f].dim()]
    }

    /// The `k`-th moment function of factor `f`.
    pub fn factor_moment(&self, f: usize, k: usize) -> f64 {
        self.model.factors[f].moment(k, self.factor_chart(f), self.factor_coords(f))
    }

    /// Its differential as a covector on the product.
    pub fn factor_moment_differential(&self, f: usize, k: usize) -> DVector<f64> {
        let local = self.model.factors[f].moment_differential(
            k,
            self.factor_chart(f),
            self.factor_coords(f),
        );
        let mut out = DVector::zeros(self.model.dim);
        out.rows_mut(self.model.offsets[f], local.len())
            .copy_from(&local);
        out
    }

    pub fn symplectic(&self) -> Form {
        self.model.symplectic_form(self.chart, self.x)
    }

    pub fn generator(&self, k: usize) -> DVector<f64> {
        self.model.generator_field(k, self.chart, self.x)
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }
}

pub type FormField = Arc<dyn Fn(&Point<'_>) -> Form + Send + Sync>;
pub type OneFormField = Arc<dyn Fn(&Point<'_>, usize) -> DVector<f64> + Send + Sync>;
pub type Warp = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A product of factors with the product symplectic form and metric.
pub struct ProductModel {
    factors: Vec<Box<dyn Factor>>,
    offsets: Vec<usize>,
    emb_offsets: Vec<usize>,
    chart_counts: Vec<usize>,
    dim: usize,
    generators: Vec<(usize, usize)>,
    b_field: Option<FormField>,
    twist: Option<FormField>,
    one_forms: Option<OneFormField>,
    warp: Option<Warp>,
}

impl ProductModel {
    pub fn new(factors: Vec<Box<dyn Factor>>) -> Self {
        let mut offsets = Vec::new();
        let mut emb_offsets = Vec::new();
        let (mut d, mut e) = (0, 0);
        for f in &factors {
            offsets.push(d);
            emb_offsets.push(e);
            d += f.dim();
            e += f.embed_dim();
        }
        let chart_counts = factors.iter().map(|f| f.charts().len()).collect();
        Self {
            factors,
            offsets,
            emb_offsets,
            chart_counts,
            dim: d,
            generators: Vec::new(),
            b_field: None,
            twist: None,
            one_forms: None,
            warp: None,
        }
    }

    /// Torus generators as `(factor, generator of that factor)`.
    pub fn with_generators(mut self, gens: Vec<(usize, usize)>) -> Self {
        self.generators = gens;
        self
    }

    pub fn with_b_field(mut self, b: FormField) -> Self {
        self.b_field = Some(b);
        self
    }

    pub fn with_twist(mut self, h: FormField) -> Self {
        self.twist = Some(h);
        self
    }

    pub fn with_one_forms(mut self, a: OneFormField) -> Self {
        self.one_forms = Some(a);
        self
    }

    /// Composes every moment component with `warp`.
    pub fn with_moment_warp(mut self, warp: Warp) -> Self {
        self.warp = Some(warp);
        self
    }

    fn split_chart(&self, mut chart: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for f in (0..self.factors.len()).rev() {
            out[f] = chart % self.chart_counts[f];
            chart /= self.chart_counts[f];
        }
        out
    }

    fn join_chart(&self, charts: &[usize]) -> usize {
        charts
            .iter()
            .zip(&self.chart_counts)
            .fold(0, |acc, (c, n)| acc * n + c)
    }

    fn slice<'b>(&self, f: usize, x: &'b [f64]) -> &'b [f64] {
        &x[self.offsets[f]..self.offsets[f] + self.factors[f].dim()]
    }

    fn emb_slice<'b>(&self, f: usize, e: &'b [f64]) -> &'b [f64] {
        &e[self.emb_offsets[f]..self.emb_offsets[f] + self.factors[f].embed_dim()]
    }

    fn point<'a>(&'a self, chart: usize, x: &'a [f64]) -> Point<'a> {
        Point {
            model: self,
            chart,
            x,
        }
    }

    fn symplectic_form(&self, chart: usize, x: &[f64]) -> Form {
        let charts = self.split_chart(chart);
        let mut w = Form::zero(self.dim, 2);
        for (f, factor) in self.factors.iter().enumerate() {
            w = &w
                + &factor
                    .symplectic(charts[f], self.slice(f, x))
                    .include(self.dim, self.offsets[f]);
        }
        w
    }

    fn generator_field(&self, k: usize, chart: usize, x: &[f64]) -> DVector<f64> {
        let (f, g) = self.generators[k];
        let c = self.split_chart(chart)[f];
        let local = self.factors[f].generator(g, c, self.slice(f, x));
        let mut out = DVector::zeros(self.dim);
        out.rows_mut(self.offsets[f], local.len()).copy_from(&local);
        out
    }

    pub fn sample(&self) -> Result<SampledManifold> {
        let mut acc = self.factors[0].sample()?;
        for f in 1..self.factors.len() {
            let next = self.factors[f].sample()?;
            let n = self.chart_counts[f];
            acc = SampledManifold::product(&acc, &next, |a, b| a * n + b)?;
        }
        Ok(acc)
    }
}

impl Atlas for ProductModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn charts(&self) -> Vec<ChartInfo> {
        let per: Vec<Vec<ChartInfo>> = self.factors.iter().map(|f| f.charts()).collect();
        let total: usize = self.chart_counts.iter().product();
        (0..total)
            .map(|c| {
                let parts = self.split_chart(c);
                let mut name = Vec::new();
                let mut periods = Vec::new();
                for (f, &p) in parts.iter().enumerate() {
                    name.push(per[f][p].name.clone());
                    periods.extend(per[f][p].periods.iter().cloned());
                }
                ChartInfo {
                    name: name.join("x"),
                    periods,
                }
            })
            .collect()
    }

    fn in_domain(&self, chart: usize, x: &[f64]) -> bool {
        let total: usize = self.chart_counts.iter().product();
        if chart >= total || x.len() != self.dim {
            return false;
        }
        let charts = self.split_chart(chart);
        self.factors
            .iter()
            .enumerate()
            .all(|(f, factor)| factor.in_domain(charts[f], self.slice(f, x)))
    }

    fn embed(&self, chart: usize, x: &[f64]) -> Vec<f64> {
        let charts = self.split_chart(chart);
        let mut out = Vec::new();
        for (f, factor) in self.factors.iter().enumerate() {
            out.extend(factor.embed(charts[f], self.slice(f, x)));
        }
        out
    }

    fn to_chart(&self, emb: &[f64], chart: usize, near: &[f64]) -> Option<Vec<f64>> {
        let charts = self.split_chart(chart);
        let mut out = Vec::with_capacity(self.dim);
        for (f, factor) in self.factors.iter().enumerate() {
            out.extend(factor.to_chart(self.emb_slice(f, emb), charts[f], self.slice(f, near))?);
        }
        Some(out)
    }

    fn locate(&self, emb: &[f64]) -> (usize, Vec<f64>) {
        let mut charts = Vec::new();
        let mut coords = Vec::with_capacity(self.dim);
        for (f, factor) in self.factors.iter().enumerate() {
            let (c, y) = factor.locate(self.emb_slice(f, emb));
            charts.push(c);
            coords.extend(y);
        }
        (self.join_chart(&charts), coords)
    }
}

impl FieldEvaluator for ProductModel {
    fn metric(&self, chart: usize, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(chart, x)?;
        let charts = self.split_chart(chart);
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for (f, factor) in self.factors.iter().enumerate() {
            let local = factor.metric(charts[f], self.slice(f, x));
            let o = self.offsets[f];
            g.view_mut((o, o), local.shape()).copy_from(&local);
        }
        Ok(g)
    }

    fn structure(&self, chart: usize, x: &[f64]) -> Result<FiberStructure> {
        let w = self
            .symplectic(chart, x)?
            .expect("product models are symplectic");
        let b = self.b_field(chart, x)?;
        symplectic_structure(&w, b.as_ref())
    }

    fn twist(&self, chart: usize, x: &[f64]) -> Result<Form> {
        self.check(chart, x)?;
        Ok(match &self.twist {
            Some(h) => h(&self.point(chart, x)),
            None => Form::zero(self.dim, 3),
        })
    }

    fn symplectic(&self, chart: usize, x: &[f64]) -> Result<Option<Form>> {
        self.check(chart, x)?;
        Ok(Some(self.symplectic_form(chart, x)))
    }

    fn b_field(&self, chart: usize, x: &[f64]) -> Result<Option<Form>> {
        self.check(chart, x)?;
        Ok(self.b_field.as_ref().map(|b| b(&self.point(chart, x))))
    }
}

impl ActionSpec for ProductModel {
    fn rank(&self) -> usize {
        self.generators.len()
    }

    fn generator(&self, k: usize, chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        self.check(chart, x)?;
        if k >= self.generators.len() {
            return Err(Error::DimensionMismatch {
                expected: self.generators.len(),
                found: k,
            });
        }
        Ok(self.generator_field(k, chart, x))
    }

    fn act(&self, theta: &[f64], emb: &[f64]) -> Vec<f64> {
        let mut out = emb.to_vec();
        for (k, &(f, g)) in self.generators.iter().enumerate() {
            let o = self.emb_offsets[f];
            let n = self.factors[f].embed_dim();
            let moved = self.factors[f].rotate(g, theta[k], &out[o..o + n]);
            out[o..o + n].copy_from_slice(&moved);
        }
        out
    }
}

impl MomentData for ProductModel {
    fn rank(&self) -> usize {
        self.generators.len()
    }

    fn moment(&self, chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        self.check(chart, x)?;
        let charts = self.split_chart(chart);
        Ok(DVector::from_iterator(
            self.generators.len(),
            self.generators.iter().map(|&(f, g)| {
                let v = self.factors[f].moment(g, charts[f], self.slice(f, x));
                match &self.warp {
                    Some(w) => w(v),
                    None => v,
                }
            }),
        ))
    }

    fn one_form(&self, k: usize, chart: usize, x: &[f64]) -> Result<DVector<f64>> {
        self.check(chart, x)?;
        Ok(match &self.one_forms {
            Some(a) => a(&self.point(chart, x), k),
            None => DVector::zeros(self.dim),
        })
    }
}

/// Half-width of the box model's sample grid.
const BOX_HALF_WIDTH: f64 = 0.5;

/// A 4-dimensional box `(x₁, y₁, x₂, y₂)` with a non-closed nondegenerate
/// 2-form `dx₁∧dy₁ + (1 + x₁) dx₂∧dy₂` and the flat metric.
#[derive(Debug, Clone, Copy)]
pub struct BoxModel {
    pub points: usize,
}

impl BoxModel {
    pub fn new(points: usize) -> Self {
        Self {
            points: points.max(2),
        }
    }

    pub fn omega(x: &[f64]) -> Form {
        &Form::basis(4, &[0, 1]) + &(&Form::basis(4, &[2, 3]) * (1.0 + x[0]))
    }

    pub fn sample(&self) -> Result<SampledManifold> {
        let n = self.points;
        let coord = |i: usize| -BOX_HALF_WIDTH + 2.0 * BOX_HALF_WIDTH * i as f64 / (n - 1) as f64;
        let id = |idx: [usize; 4]| ((idx[0] * n + idx[1]) * n + idx[2]) * n + idx[3];
        let mut samples = Vec::with_capacity(n.pow(4));
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let idx = [a, b, c, d];
                        let x: Vec<f64> = idx.iter().map(|&i| coord(i)).collect();
                        samples.push(Sample {
                            chart: 0,
                            coords: x.clone(),
                            embedding: x,
                        });
                        for axis in 0..4 {
                            if idx[axis] + 1 < n {
                                let mut next = idx;
                                next[axis] += 1;
                                edges.push((id(idx), id(next)));
                            }
                        }
                    }
                }
            }
        }
        SampledManifold::new(4, samples, &edges, Vec::new())
    }
}

impl Atlas for BoxModel {
    fn dim(&self) -> usize {
        4
    }

    fn charts(&self) -> Vec<ChartInfo> {
        vec![ChartInfo {
            name: "box".into(),
            periods: vec![None; 4],
        }]
    }

    fn in_domain(&self, chart: usize, x: &[f64]) -> bool {
        chart == 0 && x.len() == 4 && x.iter().all(|v| v.abs() < 2.0 * BOX_HALF_WIDTH)
    }

    fn embed(&self, _chart: usize, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn to_chart(&self, emb: &[f64], chart: usize, _near: &[f64]) -> Option<Vec<f64>> {
        self.in_domain(chart, emb).then(|| emb.to_vec())
    }

    fn locate(&self, emb: &[f64]) -> (usize, Vec<f64>) {
        (0, emb.to_vec())
    }
}

impl FieldEvaluator for BoxModel {
    fn metric(&self, chart: usize, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(chart, x)?;
        Ok(DMatrix::identity(4, 4))
    }

    fn structure(&self, chart: usize, x: &[f64]) -> Result<FiberStructure> {
        self.check(chart, x)?;
        symplectic_structure(&Self::omega(x), None)
    }

    fn symplectic(&self, chart: usize, x: &[f64]) -> Result<Option<Form>> {
        self.check(chart, x)?;
        Ok(Some(Self::omega(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::super::sphere::{Sphere, BAND, NORTH, SOUTH};
    use super::super::torus::FlatTorus;
    use super::*;

    fn spheres() -> ProductModel {
        ProductModel::new(vec![
            Box::new(Sphere::new(9, 8)),
            Box::new(Sphere::new(9, 8)),
        ])
        .with_generators(vec![(0, 0), (1, 0)])
    }

    #[test]
    fn chart_numbering_round_trips() {
        let m = spheres();
        for c in 0..9 {
            assert_eq!(m.join_chart(&m.split_chart(c)), c);
        }
        assert_eq!(m.split_chart(5), vec![NORTH, SOUTH]);
        assert_eq!(m.charts()[5].name, "northxsouth");
        assert_eq!(m.charts()[0].periods.len(), 4);
    }

    #[test]
    fn product_sampling_uses_product_charts() {
        let m = spheres();
        let s = m.sample().unwrap();
        for smp in s.samples().iter().step_by(37) {
            assert!(m.in_domain(smp.chart, &smp.coords));
            let e = m.embed(smp.chart, &smp.coords);
            for (a, b) in e.iter().zip(&smp.embedding) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn action_moves_only_its_factor() {
        let m = ProductModel::new(vec![
            Box::new(Sphere::new(9, 8)),
            Box::new(FlatTorus::new(4)),
        ])
        .with_generators(vec![(0, 0)]);
        let x = [0.4, 0.2, 1.0, 2.0];
        let e = m.embed(BAND, &x);
        let moved = m.act(&[0.7], &e);
        let (c, y) = m.locate(&moved);
        assert_eq!(m.split_chart(c)[0], BAND);
        assert!((y[0] - 1.1).abs() < 1e-12 && (y[1] - 0.2).abs() < 1e-12);
        assert!((y[2] - 1.0).abs() < 1e-12 && (y[3] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn box_form_is_not_closed() {
        use crate::fields::forms::fd_exterior_derivative;
        let dw = fd_exterior_derivative(|y| Ok(BoxModel::omega(y)), &[0.1, 0.0, 0.2, 0.0], 1e-4)
            .unwrap();
        assert!((dw.get(&[0, 2, 3]) - 1.0).abs() < 1e-8);
        let s = BoxModel::new(3).sample().unwrap();
        assert_eq!(s.len(), 81);
        assert!(s.is_connected());
    }
}
