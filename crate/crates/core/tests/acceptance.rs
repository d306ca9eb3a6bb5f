//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{annulus_cloud, axiom_residual, random_fiber, RandomFiber};
use gcconvex::actions::{
    basis_direction, fixed_point_components, moment_condition_residual, twist_condition_residual,
    FIXED_POINT_TOL,
};
use gcconvex::catalog::{load, load_with_resolution, Example};
use gcconvex::cli::report::Report;
use gcconvex::cli::{parse_args, resolve_config, run_config, split_command};
use gcconvex::convexity::{
    convex_hull, convexity_deficiency, default_eps, hull_matches_fixed_images, hull_tolerance,
    interior_levels, level_connectivity, matched_resolution, sample_moment_image, MomentCloud,
    LEVELS_PER_AXIS,
};
use gcconvex::fiber::{gualtieri_decompose, induced_metric, min_symmetric_eigenvalue};
use gcconvex::fields::integrability_at;
use gcconvex::morse::{
    critical_report, induced_field_identity_residual, lxi_identity_residual, HESSIAN_STEP,
};
use gcconvex::sweep::{sweep, SweepSummary};

const SEED: u64 = 20_240_901;
const FIBERS: usize = 1000;
const PAIRS: usize = 200;
const STEP: f64 = 1e-4;
const HAMILTONIAN: [&str; 4] = [
    "sphere_rotation",
    "product_spheres_T2",
    "sphere_bshift",
    "twisted_sphere_torus",
];
const WITH_ACTION: [&str; 5] = [
    "sphere_rotation",
    "product_spheres_T2",
    "sphere_bshift",
    "twisted_sphere_torus",
    "broken_moment_control",
];

type Verdict = Result<String, String>;

fn fibers(count: usize) -> Vec<RandomFiber> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count)
        .map(|t| random_fiber(&mut rng, [2, 4, 6][t % 3]))
        .collect()
}

fn all_ids(ex: &Example) -> Vec<usize> {
    (0..ex.samples.len()).collect()
}

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn summary(label: &str, s: &SweepSummary) -> String {
    format!(
        "{label} max {:.2e} over {} ({} skipped)",
        s.max,
        s.count,
        s.skipped.len()
    )
}

fn structure_axioms() -> Verdict {
    let (mut square, mut pairing): (f64, f64) = (0.0, 0.0);
    for f in fibers(FIBERS) {
        for j in [&f.symplectic, &f.complex, &f.shifted, &f.compatible] {
            let m = j.matrix();
            let n = m.nrows();
            square = square.max((m * m + DMatrix::identity(n, n)).amax());
            pairing = pairing.max(axiom_residual(m));
        }
    }
    ensure(
        square < 1e-10 && pairing < 1e-10,
        format!("{FIBERS} fibers, |J^2+I| {square:.2e}, axioms {pairing:.2e}"),
    )
}

fn polar_compatibility() -> Verdict {
    let (mut commute, mut min_eig) = (0.0f64, f64::INFINITY);
    for f in fibers(FIBERS) {
        let (j, jp) = (f.shifted.matrix(), f.compatible.matrix());
        commute = commute.max((j * jp - jp * j).amax());
        min_eig = min_eig.min(min_symmetric_eigenvalue(&induced_metric(
            &f.shifted,
            &f.compatible,
        )));
    }
    ensure(
        commute < 1e-10 && min_eig > 0.0,
        format!("commutator {commute:.2e}, min metric eigenvalue {min_eig:.3e}"),
    )
}

fn gualtieri_round_trip() -> Verdict {
    let mut worst: f64 = 0.0;
    for f in fibers(PAIRS) {
        let data =
            gualtieri_decompose(&f.shifted, &f.compatible, 1e-8).map_err(|e| e.to_string())?;
        let (j1, j2) = data.reconstruct().map_err(|e| e.to_string())?;
        worst = worst
            .max((j1.matrix() - f.shifted.matrix()).amax())
            .max((j2.matrix() - f.compatible.matrix()).amax());
    }
    ensure(
        worst < 1e-9,
        format!("{PAIRS} pairs, reconstruction {worst:.2e}"),
    )
}

fn integrability_sweep(ex: &Example, tol: f64) -> SweepSummary {
    let f = ex.fields.as_ref();
    sweep(&all_ids(ex), tol, |i| {
        let s = ex.samples.sample(i);
        integrability_at(f, s.chart, &s.coords, STEP)
    })
}

fn integrability_detector() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for e in gcconvex::catalog::list() {
        let ex = load(e.name).map_err(|e| e.to_string())?;
        let s = integrability_sweep(&ex, 1e-6);
        if ex.expected.integrable {
            ok &= s.passes() && s.skipped.is_empty();
        } else {
            ok &= s.max > 1e-2;
        }
        lines.push(summary(e.name, &s));
    }
    ensure(ok, lines.join("; "))
}

fn hamiltonian_conditions() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in WITH_ACTION {
        let ex = load(name).map_err(|e| e.to_string())?;
        let h = ex.hamiltonian().map_err(|e| e.to_string())?;
        let ids = all_ids(&ex);
        let mut moment = SweepSummary::from_values(&[], Vec::new(), 1e-6);
        let mut twist = moment.clone();
        for k in 0..h.rank() {
            let xi = basis_direction(h.rank(), k);
            moment = moment.merge(&sweep(&ids, 1e-6, |i| {
                let s = ex.samples.sample(i);
                moment_condition_residual(&h, s.chart, &s.coords, &xi, STEP)
            }));
            twist = twist.merge(&sweep(&ids, 1e-6, |i| {
                let s = ex.samples.sample(i);
                twist_condition_residual(&h, s.chart, &s.coords, &xi, STEP)
            }));
        }
        if ex.expected.hamiltonian {
            ok &= moment.passes()
                && twist.passes()
                && moment.skipped.is_empty()
                && twist.skipped.is_empty();
        } else {
            ok &= moment.max.max(twist.max) > 1e-3;
        }
        lines.push(format!(
            "{name} moment {:.2e} twist {:.2e}",
            moment.max, twist.max
        ));
    }
    ensure(ok, lines.join("; "))
}

fn directions(ex: &Example) -> Vec<Vec<f64>> {
    let m = ex.rank();
    let mut v = vec![ex.generic_direction()];
    v.extend((0..m).map(|k| basis_direction(m, k)));
    v
}

fn bott_morse_parity() -> Verdict {
    let mut ok = true;
    let mut points = 0;
    let mut lines = Vec::new();
    for name in WITH_ACTION {
        let ex = load(name).map_err(|e| e.to_string())?;
        let h = ex.hamiltonian().map_err(|e| e.to_string())?;
        for (d, xi) in directions(&ex).iter().enumerate() {
            let rep = critical_report(&h, &ex.samples, xi, FIXED_POINT_TOL, HESSIAN_STEP)
                .map_err(|e| e.to_string())?;
            points += rep.points.len();
            ok &= !rep.points.is_empty() && rep.all_even() && rep.nullity_mismatches().is_empty();
            if d == 0 {
                let mut idx = rep.component_indices();
                idx.sort_unstable();
                let expected = match name {
                    "product_spheres_T2" => vec![0, 2, 2, 4],
                    _ => vec![0, 2],
                };
                ok &= idx == expected;
                lines.push(format!("{name} {idx:?}"));
            }
        }
    }
    ensure(
        ok,
        format!(
            "{points} critical samples; generic indices {}",
            lines.join(", ")
        ),
    )
}

fn structural_identities() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for name in HAMILTONIAN {
        let ex = load(name).map_err(|e| e.to_string())?;
        let h = ex.hamiltonian().map_err(|e| e.to_string())?;
        let (mut induced_max, mut lxi_max): (f64, f64) = (0.0, 0.0);
        for xi in directions(&ex) {
            let induced = sweep(&all_ids(&ex), 1e-5, |i| {
                let s = ex.samples.sample(i);
                induced_field_identity_residual(&h, s.chart, &s.coords, &xi, STEP)
            });
            let rep = critical_report(&h, &ex.samples, &xi, FIXED_POINT_TOL, HESSIAN_STEP)
                .map_err(|e| e.to_string())?;
            let crit: Vec<usize> = rep.points.iter().map(|p| p.sample).collect();
            let lxi = sweep(&crit, 1e-5, |i| {
                let s = ex.samples.sample(i);
                lxi_identity_residual(&h, s.chart, &s.coords, &xi, rep.threshold, HESSIAN_STEP)
            });
            ok &= induced.passes()
                && induced.skipped.is_empty()
                && lxi.passes()
                && lxi.skipped.is_empty();
            induced_max = induced_max.max(induced.max);
            lxi_max = lxi_max.max(lxi.max);
        }
        lines.push(format!(
            "{name} induced {induced_max:.2e} lxi {lxi_max:.2e}"
        ));
    }
    ensure(ok, lines.join("; "))
}

fn level_counts(name: &str, resolution: usize) -> Result<Vec<usize>, String> {
    let ex = load_with_resolution(name, resolution).map_err(|e| e.to_string())?;
    let md = ex.moment.as_ref().ok_or("no moment")?;
    let cloud = sample_moment_image(md.as_ref(), &ex.samples).map_err(|e| e.to_string())?;
    let hull = convex_hull(&cloud).map_err(|e| e.to_string())?;
    let eps = default_eps(&cloud, &ex.samples);
    Ok(interior_levels(&hull, LEVELS_PER_AXIS)
        .iter()
        .map(|a| level_connectivity(&cloud, &ex.samples, a, eps))
        .collect())
}

fn connected_levels() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for name in HAMILTONIAN {
        let per_res: Vec<Vec<usize>> = [64, 128, 256]
            .iter()
            .map(|&r| level_counts(name, r))
            .collect::<Result<_, _>>()?;
        let grid = if name == "product_spheres_T2" { 25 } else { 5 };
        for counts in &per_res {
            ok &= counts.len() == grid && counts.iter().all(|&c| c == 1);
        }
        let worst = per_res.iter().flatten().cloned().max().unwrap_or(0);
        lines.push(format!("{name} {grid} levels x3, max components {worst}"));
    }
    ensure(ok, lines.join("; "))
}

fn deficiency() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for name in HAMILTONIAN {
        let ex = load(name).map_err(|e| e.to_string())?;
        let md = ex.moment.as_ref().ok_or("no moment")?;
        let cloud = sample_moment_image(md.as_ref(), &ex.samples).map_err(|e| e.to_string())?;
        let d = convexity_deficiency(&cloud, matched_resolution(&cloud, &ex.samples))
            .map_err(|e| e.to_string())?;
        ok &= d < 0.02;
        lines.push(format!("{name} {d:.4}"));
    }
    let annulus = MomentCloud::new(annulus_cloud(0.5, 40, 400)).map_err(|e| e.to_string())?;
    let d = convexity_deficiency(&annulus, 100).map_err(|e| e.to_string())?;
    ok &= d > 0.2;
    lines.push(format!("annulus {d:.4}"));
    ensure(ok, lines.join("; "))
}

fn hull_vertices() -> Verdict {
    let corners = vec![
        vec![-1.0, -1.0],
        vec![-1.0, 1.0],
        vec![1.0, -1.0],
        vec![1.0, 1.0],
    ];
    let cases = [
        ("sphere_rotation", vec![vec![-1.0], vec![1.0]]),
        ("product_spheres_T2", corners),
        ("twisted_sphere_torus", vec![vec![-1.0], vec![1.0]]),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, mut expected) in cases {
        let ex = load(name).map_err(|e| e.to_string())?;
        let h = ex.hamiltonian().map_err(|e| e.to_string())?;
        let cloud = sample_moment_image(h.moment, &ex.samples).map_err(|e| e.to_string())?;
        let hull = convex_hull(&cloud).map_err(|e| e.to_string())?;
        let comps =
            fixed_point_components(&h, &ex.samples, FIXED_POINT_TOL).map_err(|e| e.to_string())?;
        let tol = hull_tolerance(&cloud, &ex.samples);
        let matched =
            hull_matches_fixed_images(&hull, &cloud, &comps, tol).map_err(|e| e.to_string())?;
        let mut vertices = hull.vertices.clone();
        vertices.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let oracle = vertices.len() == expected.len()
            && vertices
                .iter()
                .zip(&expected)
                .all(|(v, e)| v.iter().zip(e).all(|(a, b)| (a - b).abs() <= tol));
        ok &= matched.passes() && oracle && tol <= 2.0 * ex.samples.h_geom();
        lines.push(format!(
            "{name} {} vertices, error {:.2e} tol {tol:.2e}",
            vertices.len(),
            matched.max_vertex_error()
        ));
    }
    ensure(ok, lines.join("; "))
}

fn report_without_timestamp(dir: &Path) -> Result<String, String> {
    let text = fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
    let mut r = Report::from_json_str(&text).map_err(|e| e.to_string())?;
    r.timestamp = 0;
    Ok(r.to_json())
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [("first", "1"), ("second", "1"), ("parallel", "4")];
    for (dir, jobs) in runs {
        let out = tmp.path().join(dir);
        let argv = [
            "gcconvex",
            "all",
            "product_spheres_T2",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ];
        let cli = parse_args(argv).map_err(|e| e.to_string())?;
        let (checks, args) = split_command(&cli.command).ok_or("no checks")?;
        let cfg = resolve_config(checks, args).map_err(|e| e.to_string())?;
        let report = run_config(&cfg).map_err(|e| e.to_string())?;
        if !report.pass {
            return Err(format!(
                "run {dir} failed {} checks",
                report.failed_checks().len()
            ));
        }
    }
    let base = tmp.path().join("first");
    let reference = report_without_timestamp(&base)?;
    let mut ok = true;
    for (dir, _) in &runs[1..] {
        let other = tmp.path().join(dir);
        ok &= report_without_timestamp(&other)? == reference;
        for f in ["moment_cloud.csv", "hull.csv", "critical.csv", "levels.csv"] {
            ok &= fs::read(base.join(f)).ok() == fs::read(other.join(f)).ok();
        }
    }
    ensure(
        ok,
        "all product_spheres_T2: jobs 1 twice and jobs 4 give identical reports and CSVs".into(),
    )
}

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    check: fn() -> Verdict,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion {
            id: 1,
            title: "structure axioms",
            budget: secs(5),
            check: structure_axioms,
        },
        Criterion {
            id: 2,
            title: "polar-decomposition compatibility",
            budget: secs(5),
            check: polar_compatibility,
        },
        Criterion {
            id: 3,
            title: "Gualtieri round trip",
            budget: secs(5),
            check: gualtieri_round_trip,
        },
        Criterion {
            id: 4,
            title: "integrability detector",
            budget: secs(60),
            check: integrability_detector,
        },
        Criterion {
            id: 5,
            title: "Hamiltonian conditions",
            budget: secs(60),
            check: hamiltonian_conditions,
        },
        Criterion {
            id: 6,
            title: "Bott-Morse parity",
            budget: secs(60),
            check: bott_morse_parity,
        },
        Criterion {
            id: 7,
            title: "structural identities",
            budget: secs(60),
            check: structural_identities,
        },
        Criterion {
            id: 8,
            title: "connected interior levels",
            budget: secs(300),
            check: connected_levels,
        },
        Criterion {
            id: 9,
            title: "convexity deficiency",
            budget: secs(60),
            check: deficiency,
        },
        Criterion {
            id: 10,
            title: "hull vertices are fixed images",
            budget: secs(60),
            check: hull_vertices,
        },
        Criterion {
            id: 11,
            title: "determinism",
            budget: None,
            check: determinism,
        },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let verdict = (c.check)();
        let elapsed = start.elapsed();
        let in_time = c.budget.is_none_or(|b| elapsed <= b);
        let pass = verdict.is_ok() && in_time;
        let budget = c
            .budget
            .map_or(String::new(), |b| format!(" of {} s", b.as_secs()));
        let detail = match verdict {
            Ok(d) | Err(d) => d,
        };
        println!(
            "{} criterion {:>2} {}: {} [{:.2} s{}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            detail,
            elapsed.as_secs_f64(),
            budget
        );
        if !pass {
            failures += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
