//! Runs the selected checks on a loaded example and collects the report.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::report::{
    num_vec, CheckRecord, ComponentRecord, ConfigEcho, CriticalRecord, ExampleInfo, HullRecord,
    LevelRecord, Num, Report, SCHEMA_VERSION,
};
use crate::actions::{
    basis_direction, effectiveness_rank, equivariance_residual, fixed_point_components,
    invariance_residual, moment_condition_residual, twist_condition_residual, FixedComponent,
    Hamiltonian,
};
use crate::catalog::Example;
use crate::convexity::{
    convex_hull, convexity_deficiency, default_eps, hull_matches_fixed_images, hull_tolerance,
    interior_levels, level_components, matched_resolution, sample_moment_image, MomentCloud,
    Polytope, LEVELS_PER_AXIS,
};
use crate::error::{Error, Result};
use crate::fiber::structure_residuals;
use crate::fields::{integrability_at, SampledManifold};
use crate::morse::{
    crit_equals_fixed_check, critical_report, induced_field_identity_residual,
    lxi_identity_residual, slice_morse_check, CriticalReport,
};
use crate::sweep::{sweep, SweepSummary};

/// Group elements drawn per run for the invariance checks.
const GROUP_ELEMENTS: usize = 3;

/// One row of `critical.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalRow {
    pub direction: usize,
    pub sample: usize,
    pub component: usize,
    pub chart: usize,
    pub moment: Vec<f64>,
    pub index: usize,
    pub coindex: usize,
    pub nullity: usize,
}

/// Data written next to the report.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub cloud: Option<MomentCloud>,
    pub hull: Option<Polytope>,
    pub critical: Vec<CriticalRow>,
}

fn from_sweep(module: &str, check: &str, s: &SweepSummary) -> CheckRecord {
    let mut r = CheckRecord::new(module, check).with_offending(&s.offending);
    r.pass = s.passes() && s.skipped.is_empty();
    r.count = s.count;
    r.max_residual = Num(s.max);
    r.mean_residual = Num(s.mean);
    r.tol = Num(s.tol);
    r.worst_sample = s.worst;
    r.skipped = s.skipped.len();
    if let Some((id, reason)) = s.skipped.first() {
        r.note = format!("evaluation failed at sample {id}: {reason}");
    }
    r
}

fn verdict(
    module: &str,
    check: &str,
    pass: bool,
    value: f64,
    tol: f64,
    note: String,
) -> CheckRecord {
    let mut r = CheckRecord::new(module, check).with_note(note);
    r.pass = pass;
    r.count = 1;
    r.max_residual = Num(value);
    r.mean_residual = Num(value);
    r.tol = Num(tol);
    r
}

fn failure(module: &str, check: &str, e: &Error) -> CheckRecord {
    let mut r = CheckRecord::new(module, check).with_note(e.to_string());
    if let Error::Evaluation { sample, .. } = e {
        r.worst_sample = Some(*sample);
    }
    r
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    ex: &'a Example,
    ids: Vec<usize>,
    checks: Vec<CheckRecord>,
    fixed: Option<Vec<FixedComponent>>,
    cloud: Option<MomentCloud>,
    hull: Option<Polytope>,
}

impl<'a> Runner<'a> {
    fn push(&mut self, r: CheckRecord) {
        self.checks.push(r);
    }

    fn structure(&mut self) {
        let f = self.ex.fields.as_ref();
        let samples: &'a SampledManifold = &self.ex.samples;
        let axioms = sweep(&self.ids, self.cfg.tol_structure, |i| {
            let s = samples.sample(i);
            let (square, pairing) = structure_residuals(&f.structure(s.chart, &s.coords)?);
            Ok(square.max(pairing))
        });
        self.push(from_sweep("structure", "fiber_axioms", &axioms));
        let step = self.cfg.step;
        let integ = sweep(&self.ids, self.cfg.tol_residual, |i| {
            let s = samples.sample(i);
            integrability_at(f, s.chart, &s.coords, step)
        });
        let note = format!(
            "catalog expects integrable = {}",
            self.ex.expected.integrable
        );
        let mut r = from_sweep("structure", "integrability", &integ);
        if r.note.is_empty() {
            r.note = note;
        }
        self.push(r);
    }

    fn fixed(&mut self, h: &Hamiltonian<'_>) -> Result<Vec<FixedComponent>> {
        if self.fixed.is_none() {
            self.fixed = Some(fixed_point_components(
                h,
                &self.ex.samples,
                self.cfg.tol_fixed,
            )?);
        }
        Ok(self.fixed.clone().unwrap_or_default())
    }

    fn hamiltonian(&mut self, h: &Hamiltonian<'_>) {
        let samples: &'a SampledManifold = &self.ex.samples;
        let (m, step) = (h.rank(), self.cfg.step);
        let dirs: Vec<Vec<f64>> = (0..m).map(|k| basis_direction(m, k)).collect();
        let moment = sweep(&self.ids, self.cfg.tol_residual, |i| {
            let s = samples.sample(i);
            dirs.iter().try_fold(0.0f64, |acc, e| {
                Ok(acc.max(moment_condition_residual(h, s.chart, &s.coords, e, step)?))
            })
        });
        self.push(from_sweep("hamiltonian", "moment_condition", &moment));
        let twist = sweep(&self.ids, self.cfg.tol_residual, |i| {
            let s = samples.sample(i);
            dirs.iter().try_fold(0.0f64, |acc, e| {
                Ok(acc.max(twist_condition_residual(h, s.chart, &s.coords, e, step)?))
            })
        });
        self.push(from_sweep("hamiltonian", "twist_condition", &twist));

        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let thetas: Vec<Vec<f64>> = (0..GROUP_ELEMENTS)
            .map(|_| (0..m).map(|_| rng.gen_range(0.0..TAU)).collect())
            .collect();
        let inv_step = step / 10.0;
        let inv = sweep(&self.ids, self.cfg.tol_residual, |i| {
            let s = samples.sample(i);
            thetas.iter().try_fold(0.0f64, |acc, t| {
                Ok(acc.max(invariance_residual(h, s.chart, &s.coords, t, inv_step)?))
            })
        });
        self.push(from_sweep("hamiltonian", "invariance", &inv));
        let eqv = sweep(&self.ids, self.cfg.tol_residual, |i| {
            let s = samples.sample(i);
            equivariance_residual(h, s.chart, &s.coords, &thetas)
        });
        self.push(from_sweep("hamiltonian", "equivariance", &eqv));

        match effectiveness_rank(h.moment, samples, step) {
            Ok(rank) => self.push(verdict(
                "hamiltonian",
                "effectiveness",
                rank == m,
                rank as f64,
                m as f64,
                format!("rank of dμ is {rank}, torus rank {m}"),
            )),
            Err(e) => self.push(failure("hamiltonian", "effectiveness", &e)),
        }

        match self.fixed(h) {
            Ok(comps) => {
                let dims: Vec<usize> = comps.iter().map(|c| c.dimension).collect();
                let odd: Vec<usize> = comps
                    .iter()
                    .filter(|c| c.dimension % 2 == 1)
                    .filter_map(|c| c.members.first().cloned())
                    .collect();
                let mut r = verdict(
                    "hamiltonian",
                    "fixed_components_even",
                    !comps.is_empty() && odd.is_empty(),
                    comps.len() as f64,
                    0.0,
                    format!(
                        "{} components, dimensions {dims:?}; catalog expects {} of dimension {}",
                        comps.len(),
                        self.ex.expected.fixed_images.len(),
                        self.ex.expected.fixed_dimension
                    ),
                )
                .with_offending(&odd);
                r.count = comps.len();
                self.push(r);
            }
            Err(e) => self.push(failure("hamiltonian", "fixed_components_even", &e)),
        }
    }

    fn critical(&mut self, h: &Hamiltonian<'_>, xi: &[f64]) -> Result<CriticalReport> {
        critical_report(
            h,
            &self.ex.samples,
            xi,
            self.cfg.tol_fixed,
            self.cfg.hessian_step,
        )
    }

    fn morse(&mut self, h: &Hamiltonian<'_>, artifacts: &mut Artifacts) -> Vec<CriticalRecord> {
        let samples: &'a SampledManifold = &self.ex.samples;
        let m = h.rank();
        let generic = self.ex.generic_direction();
        let mut dirs = vec![generic.clone()];
        dirs.extend(
            (0..m)
                .map(|k| basis_direction(m, k))
                .filter(|e| *e != generic),
        );
        let mut records = Vec::new();
        let mut odd = Vec::new();
        let mut mismatched = Vec::new();
        let mut inconsistent = Vec::new();
        let mut points = 0;
        let mut generic_report = None;
        for (d, xi) in dirs.iter().enumerate() {
            match self.critical(h, xi) {
                Ok(rep) => {
                    points += rep.points.len();
                    odd.extend(
                        rep.points
                            .iter()
                            .filter(|p| p.signature.index % 2 == 1 || p.signature.coindex % 2 == 1)
                            .map(|p| p.sample),
                    );
                    mismatched.extend(rep.nullity_mismatches());
                    inconsistent.extend(rep.inconsistent_samples());
                    for p in &rep.points {
                        let s = samples.sample(p.sample);
                        let moment = h
                            .moment
                            .moment(s.chart, &s.coords)
                            .map(|v| v.iter().cloned().collect());
                        artifacts.critical.push(CriticalRow {
                            direction: d,
                            sample: p.sample,
                            component: p.component,
                            chart: s.chart,
                            moment: moment.unwrap_or_default(),
                            index: p.signature.index,
                            coindex: p.signature.coindex,
                            nullity: p.signature.nullity,
                        });
                    }
                    records.push(CriticalRecord {
                        xi: num_vec(xi),
                        components: rep.components.iter().map(ComponentRecord::of).collect(),
                        indices: rep.component_indices(),
                        points: rep.points.len(),
                        all_even: rep.all_even(),
                    });
                    if d == 0 {
                        generic_report = Some(rep);
                    }
                }
                Err(e) => self.push(failure("morse", "critical_set", &e)),
            }
        }
        odd.sort_unstable();
        odd.dedup();
        mismatched.sort_unstable();
        mismatched.dedup();
        let mut r = verdict(
            "morse",
            "even_index_coindex",
            points > 0 && odd.is_empty(),
            odd.len() as f64,
            0.0,
            format!("{points} critical samples over {} directions", dirs.len()),
        )
        .with_offending(&odd);
        r.count = points;
        self.push(r);
        let mut r = verdict(
            "morse",
            "nullity_equals_dimension",
            points > 0 && mismatched.is_empty(),
            mismatched.len() as f64,
            0.0,
            format!(
                "{} samples with index differing from their component",
                inconsistent.len()
            ),
        )
        .with_offending(&mismatched);
        r.count = points;
        self.push(r);

        if let Some(rep) = &generic_report {
            let mut found = rep.component_indices();
            found.sort_unstable();
            let mut expected = self.ex.expected.generic_indices.clone();
            expected.sort_unstable();
            self.push(verdict(
                "morse",
                "index_oracle",
                found == expected,
                found.len() as f64,
                expected.len() as f64,
                format!("indices {found:?}, catalog expects {expected:?}"),
            ));
            let threshold = rep.threshold;
            let crit_ids: Vec<usize> = rep.points.iter().map(|p| p.sample).collect();
            let (xi, hstep) = (&generic, self.cfg.hessian_step);
            let lxi = sweep(&crit_ids, self.cfg.tol_identity, |i| {
                let s = samples.sample(i);
                lxi_identity_residual(h, s.chart, &s.coords, xi, threshold, hstep)
            });
            self.push(from_sweep("morse", "lxi_identity", &lxi));
        }

        match crit_equals_fixed_check(h, &generic, samples, self.cfg.tol_fixed, self.cfg.step) {
            Ok(cf) => {
                let mut diff = cf.only_critical.clone();
                diff.extend(&cf.only_fixed);
                diff.sort_unstable();
                let mut r = verdict(
                    "morse",
                    "crit_equals_fix",
                    cf.matches() && !cf.fixed.is_empty(),
                    diff.len() as f64,
                    0.0,
                    format!("{} critical, {} fixed", cf.critical.len(), cf.fixed.len()),
                )
                .with_offending(&diff);
                r.count = samples.len();
                self.push(r);
            }
            Err(e) => self.push(failure("morse", "crit_equals_fix", &e)),
        }

        let step = self.cfg.step;
        let induced = sweep(&self.ids, self.cfg.tol_identity, |i| {
            let s = samples.sample(i);
            induced_field_identity_residual(h, s.chart, &s.coords, &generic, step)
        });
        self.push(from_sweep("morse", "induced_field_identity", &induced));

        if m >= 2 {
            let level: Vec<f64> = match self.cloud(h) {
                Ok(c) => {
                    c.lo.iter()
                        .zip(&c.hi)
                        .take(m - 1)
                        .map(|(l, u)| 0.5 * (l + u))
                        .collect()
                }
                Err(e) => {
                    self.push(failure("morse", "slice_parity", &e));
                    return records;
                }
            };
            match slice_morse_check(
                h,
                samples,
                &level,
                self.cfg.tol_fixed,
                self.cfg.hessian_step,
            ) {
                Ok(sr) => {
                    let odd: Vec<usize> = sr
                        .points
                        .iter()
                        .filter(|p| p.signature.index % 2 == 1 || p.signature.coindex % 2 == 1)
                        .map(|p| p.sample)
                        .collect();
                    let mut r = verdict(
                        "morse",
                        "slice_parity",
                        !sr.points.is_empty() && odd.is_empty(),
                        odd.len() as f64,
                        0.0,
                        format!(
                            "level {level:?}: {} slice samples, {} critical components, indices {:?}",
                            sr.slice_size,
                            sr.components.len(),
                            sr.indices()
                        ),
                    )
                    .with_offending(&odd);
                    r.count = sr.points.len();
                    self.push(r);
                }
                Err(e) => self.push(failure("morse", "slice_parity", &e)),
            }
        }
        records
    }

    fn cloud(&mut self, h: &Hamiltonian<'_>) -> Result<MomentCloud> {
        if self.cloud.is_none() {
            self.cloud = Some(sample_moment_image(h.moment, &self.ex.samples)?);
        }
        Ok(self.cloud.clone().expect("cloud computed"))
    }

    fn hull(&mut self, h: &Hamiltonian<'_>) -> Result<(MomentCloud, Polytope)> {
        let cloud = self.cloud(h)?;
        if self.hull.is_none() {
            self.hull = Some(convex_hull(&cloud)?);
        }
        Ok((cloud, self.hull.clone().expect("hull computed")))
    }

    fn convexity(&mut self, h: &Hamiltonian<'_>) -> Option<HullRecord> {
        let (cloud, hull) = match self.hull(h) {
            Ok(x) => x,
            Err(e) => {
                self.push(failure("convexity", "hull", &e));
                return None;
            }
        };
        let samples: &'a SampledManifold = &self.ex.samples;
        let raster = matched_resolution(&cloud, samples);
        let deficiency = match convexity_deficiency(&cloud, raster) {
            Ok(d) => {
                self.push(verdict(
                    "convexity",
                    "deficiency",
                    d < self.cfg.tol_deficiency,
                    d,
                    self.cfg.tol_deficiency,
                    format!("raster {raster} per axis"),
                ));
                d
            }
            Err(e) => {
                self.push(failure("convexity", "deficiency", &e));
                f64::NAN
            }
        };
        let tol = self
            .cfg
            .tol_hull
            .unwrap_or_else(|| hull_tolerance(&cloud, samples));
        match self
            .fixed(h)
            .and_then(|comps| hull_matches_fixed_images(&hull, &cloud, &comps, tol))
        {
            Ok(hm) => {
                let err = hm.max_vertex_error().max(hm.containment_error);
                self.push(verdict(
                    "convexity",
                    "hull_fixed_images",
                    hm.passes(),
                    err,
                    tol,
                    format!(
                        "{} vertices, {} fixed images, containment error {:.3e}",
                        hull.vertices.len(),
                        hm.images.len(),
                        hm.containment_error
                    ),
                ));
            }
            Err(e) => self.push(failure("convexity", "hull_fixed_images", &e)),
        }
        let ex: &'a Example = self.ex;
        let expected = &ex.expected.fixed_images;
        let dist = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let nearest = |p: &[f64], set: &[Vec<f64>]| {
            set.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)
        };
        let err = hull
            .vertices
            .iter()
            .map(|v| nearest(v, expected))
            .chain(expected.iter().map(|a| nearest(a, &hull.vertices)))
            .fold(0.0, f64::max);
        self.push(verdict(
            "convexity",
            "hull_oracle",
            err <= tol,
            err,
            tol,
            format!("catalog images {expected:?}"),
        ));
        Some(HullRecord {
            dim: hull.dim,
            degenerate: hull.is_degenerate(),
            vertices: hull.vertices.iter().map(|v| num_vec(v)).collect(),
            tol: Num(tol),
            deficiency: Num(deficiency),
            raster,
        })
    }

    fn levels(&mut self, h: &Hamiltonian<'_>) -> Vec<LevelRecord> {
        let (cloud, hull) = match self.hull(h) {
            Ok(x) => x,
            Err(e) => {
                self.push(failure("levels", "level_connectivity", &e));
                return Vec::new();
            }
        };
        let samples: &'a SampledManifold = &self.ex.samples;
        let eps = default_eps(&cloud, samples);
        let records: Vec<LevelRecord> = interior_levels(&hull, LEVELS_PER_AXIS)
            .into_iter()
            .map(|a| {
                let comps = level_components(&cloud, samples, &a, eps);
                LevelRecord {
                    level: num_vec(&a),
                    eps: Num(eps),
                    band: comps.iter().map(Vec::len).sum(),
                    components: comps.len(),
                }
            })
            .collect();
        let bad: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.components != 1)
            .map(|(i, _)| i)
            .collect();
        let worst = records.iter().map(|r| r.components).max().unwrap_or(0);
        let mut r = verdict(
            "levels",
            "level_connectivity",
            !records.is_empty() && bad.is_empty(),
            worst as f64,
            1.0,
            format!(
                "{} interior levels, band eps {eps:.3e}; offending lists level ids",
                records.len()
            ),
        )
        .with_offending(&bad);
        r.count = records.len();
        self.push(r);
        records
    }
}

/// Runs the checks selected in `cfg` and assembles the report.
pub fn execute(cfg: &RunConfig, ex: &Example, timestamp: u64) -> (Report, Artifacts) {
    let mut runner = Runner {
        cfg,
        ex,
        ids: (0..ex.samples.len()).collect(),
        checks: Vec::new(),
        fixed: None,
        cloud: None,
        hull: None,
    };
    let mut artifacts = Artifacts::default();
    let mut critical = Vec::new();
    let mut hull_record = None;
    let mut levels = Vec::new();
    if cfg.checks.structure() {
        runner.structure();
    }
    match ex.hamiltonian() {
        Ok(h) => {
            if cfg.checks.hamiltonian() {
                runner.hamiltonian(&h);
            }
            if cfg.checks.morse() {
                critical = runner.morse(&h, &mut artifacts);
            }
            if cfg.checks.convexity() {
                hull_record = runner.convexity(&h);
            }
            if cfg.checks.levels() {
                levels = runner.levels(&h);
            }
            if runner.fixed.is_none() && (cfg.checks.convexity() || cfg.checks.hamiltonian()) {
                let _ = runner.fixed(&h);
            }
        }
        Err(e) => {
            if cfg.checks.needs_action() {
                runner.push(failure("hamiltonian", "action", &e));
            }
        }
    }
    artifacts.cloud = runner.cloud.take();
    artifacts.hull = runner.hull.take();
    let fixed_components = runner
        .fixed
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(ComponentRecord::of)
        .collect();
    let pass = !runner.checks.is_empty() && runner.checks.iter().all(|c| c.pass);
    let report = Report {
        schema: SCHEMA_VERSION,
        timestamp,
        command: cfg.checks.name().to_string(),
        example: ExampleInfo {
            name: ex.name().to_string(),
            resolution: ex.resolution,
            samples: ex.samples.len(),
            dim: ex.samples.dim(),
            rank: ex.rank(),
            h_geom: Num(ex.samples.h_geom()),
        },
        config: ConfigEcho {
            step: Num(cfg.step),
            hessian_step: Num(cfg.hessian_step),
            tol_structure: Num(cfg.tol_structure),
            tol_residual: Num(cfg.tol_residual),
            tol_identity: Num(cfg.tol_identity),
            tol_fixed: Num(cfg.tol_fixed),
            tol_hull: cfg.tol_hull.map(Num),
            tol_deficiency: Num(cfg.tol_deficiency),
            seed: cfg.seed,
        },
        checks: runner.checks,
        fixed_components,
        critical,
        hull: hull_record,
        levels,
        pass,
    };
    (report, artifacts)
}
