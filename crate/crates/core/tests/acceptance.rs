//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use common::{brute_force_1d, close, l1_quadrature, quantized_levels, sawtooth_l1};
use sdrelax::approx::{
    build_determining_sequence, build_multilevel_sequence, l1_between, verify_hsd_convergence, Integrability,
    LimitOrder, MultiLevelDeformation, StructuredDeformation, Tolerances,
};
use sdrelax::cell::{
    blowup_bulk, blowup_surface, refine_ladder, solve_bulk_cell, solve_dirichlet, solve_surface_cell, BlowupSetup,
    BoundaryDatum, Budget, CellProblemSpec, Domain, InnerEnergy, SolvePath, SolveResult,
};
use sdrelax::cli::{self, Overrides, RunConfig};
use sdrelax::density::{
    catalog, recession_estimate, validate_bulk, validate_surface, Hypothesis, ValidationReport,
};
use sdrelax::multilevel::{estimate_both, EstimatorOptions};
use sdrelax::sbv::MatrixField;
use sdrelax::{CubeGrid, DiscreteSBVField, Mat};
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const GRID: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

fn bulk_spec(a: f64, b: f64, n: usize) -> CellProblemSpec {
    CellProblemSpec::bulk(catalog::quadratic(), catalog::norm_jump(), Mat::scalar(a), Mat::scalar(b), n).unwrap()
}

fn sandwich_ok(r: &SolveResult) -> bool {
    r.diagnostics.sandwich.as_ref().is_some_and(|s| s.holds(r.value))
}

/// Every solve of criteria 1 to 4, for the sandwich audit.
#[derive(Default)]
struct Audit {
    solves: usize,
    violations: Vec<String>,
}

impl Audit {
    fn record(&mut self, label: &str, r: &SolveResult) {
        self.solves += 1;
        if !sandwich_ok(r) {
            self.violations.push(format!("{label}: {} vs {:?}", r.value, r.diagnostics.sandwich));
        }
    }
}

fn criterion_1(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let levels = quantized_levels();
    let mut worst_exact = 0.0f64;
    let mut worst_brute = 0.0f64;
    for &a in &GRID {
        for &b in &GRID {
            let r = solve_bulk_cell(&bulk_spec(a, b, 8)).unwrap();
            audit.record(&format!("H({a},{b})"), &r);
            let truth = b * b + (a - b).abs();
            let brute = brute_force_1d(|g| g * g, 1.0, a, Some(b), 8, &levels);
            worst_exact = worst_exact.max((r.value - truth).abs());
            worst_brute = worst_brute.max((r.value - brute).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst_exact <= 1e-9 && worst_brute <= 1e-9 && secs < 10.0,
        format!("max |H - (B^2+|A-B|)| = {worst_exact:.1e}, max |H - brute force| = {worst_brute:.1e}, {secs:.2} s"),
    )
}

fn criterion_2(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let levels = quantized_levels();
    let mut worst_exact = 0.0f64;
    let mut worst_general = 0.0f64;
    let mut paths_ok = true;
    let mut paths_2d = Vec::new();
    for lambda in [0.5, 1.0, 3.0] {
        let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
        let s1 = CellProblemSpec::surface(w.clone(), psi.clone(), 2.0, &[lambda], &[0.0], &[1.0], 8).unwrap();
        let r1 = solve_surface_cell(&s1).unwrap();
        audit.record(&format!("h({lambda}) 1D"), &r1);
        let brute = brute_force_1d(|g| g * g, 1.0, lambda, Some(0.0), 8, &levels);
        worst_exact = worst_exact.max((r1.value - lambda).abs()).max((brute - lambda).abs());
        let s2 = CellProblemSpec::surface(w, psi, 2.0, &[lambda], &[0.0], &[1.0, 0.0], 16).unwrap();
        let r2 = solve_surface_cell(&s2).unwrap();
        audit.record(&format!("h({lambda}) 2D"), &r2);
        paths_ok &= r1.diagnostics.path == SolvePath::Exact;
        paths_2d.push(format!("{:?}", r2.diagnostics.path).to_lowercase());
        worst_general = worst_general.max((r2.value - lambda).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst_exact <= 1e-6 && worst_general <= 1e-3 && paths_ok && secs < 30.0,
        format!("exact path err {worst_exact:.1e}, 2D n=16 err {worst_general:.1e} via {paths_2d:?}, {secs:.2} s"),
    )
}

fn criterion_3(audit: &mut Audit) -> Outcome {
    let (w, psi) = (catalog::bulk("linear").unwrap(), catalog::surface("scaled-jump").unwrap());
    let spec = CellProblemSpec::surface(w.clone(), psi, 1.0, &[1.0], &[0.0], &[1.0], 8).unwrap();
    let delta = spec.delta1();
    let r = solve_surface_cell(&spec).unwrap();
    audit.record("h_1(1)", &r);
    let brute = brute_force_1d(f64::abs, 2.0, 1.0, Some(0.0), 8, &quantized_levels());
    let ladder = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];
    let mut rec_err = 0.0f64;
    for xi in [1.0, -2.0, 0.5, 3.7] {
        let e = recession_estimate(&w, &[0.0], &Mat::scalar(xi), &ladder).unwrap();
        let ladder_value = e.ratios.last().unwrap().1 * xi.abs();
        rec_err = rec_err.max((e.value - xi.abs()).abs()).max((ladder_value - xi.abs()).abs());
    }
    let err = (r.value - 2.0).abs().max((brute - 2.0).abs());
    outcome(
        err <= 1e-6 && delta && rec_err <= 1e-6,
        format!("h_1 = {:.9}, delta_1 active = {delta}, recession err {rec_err:.1e}", r.value),
    )
}

fn setup(eps: Vec<f64>) -> BlowupSetup {
    BlowupSetup {
        w: catalog::quadratic(),
        psi: catalog::norm_jump(),
        energy: InnerEnergy::Plain,
        domain: Domain {
            center: vec![0.0],
            side: 4.0,
        },
        eps,
        n: 8,
        budget: Budget::default(),
        seed: 0,
    }
}

fn pairwise_spread(r: &[f64]) -> f64 {
    let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

fn criterion_4(audit: &mut Audit) -> Outcome {
    let s = setup(vec![1.0, 0.5, 0.25]);
    let bulk = blowup_bulk(&s, &[0.0], &[0.0], &Mat::scalar(1.0), &[Mat::scalar(1.0)]).unwrap();
    let bulk_jump = blowup_bulk(&s, &[0.0], &[0.0], &Mat::scalar(2.0), &[Mat::scalar(0.5)]).unwrap();
    let surf = blowup_surface(&s, &[0.0], &[1.0], &[0.0], &[1.0]).unwrap();
    for (k, r) in bulk.results.iter().chain(&bulk_jump.results).chain(&surf.results).enumerate() {
        audit.record(&format!("blowup #{k}"), r);
    }
    let h = solve_surface_cell(
        &CellProblemSpec::surface(catalog::quadratic(), catalog::norm_jump(), 2.0, &[1.0], &[0.0], &[1.0], 8).unwrap(),
    )
    .unwrap();
    let spread = pairwise_spread(&bulk.ratios)
        .max(pairwise_spread(&bulk_jump.ratios))
        .max(pairwise_spread(&surf.ratios));
    let eq = surf.ratios.iter().map(|r| (r - h.value).abs()).fold(0.0, f64::max);
    outcome(
        spread <= 1e-6 && eq <= 1e-6,
        format!(
            "bulk ratios {:?}, surface ratios {:?}, spread {spread:.1e}, |surface - h_p| {eq:.1e}",
            bulk.ratios, surf.ratios
        ),
    )
}

fn dirichlet_value(datum: BoundaryDatum, means: Vec<Mat>, grid: CubeGrid) -> f64 {
    let spec = CellProblemSpec::dirichlet(catalog::quadratic(), catalog::norm_jump(), datum, means, grid);
    solve_dirichlet(&spec).unwrap().value
}

fn criterion_5() -> Outcome {
    let line = CubeGrid::new(1, 1, 8, vec![0.0], 1.0).unwrap();
    let mut worst = 0.0f64;
    for (m, b) in [(1.0, 0.0), (2.0, 1.0), (-1.5, 0.5)] {
        let base = dirichlet_value(
            BoundaryDatum::Affine {
                a: vec![0.0],
                m: Mat::scalar(m),
                x0: vec![0.0],
            },
            vec![Mat::scalar(b)],
            line.clone(),
        );
        for shift in [0.37, -5.0, 12.25] {
            let v = dirichlet_value(
                BoundaryDatum::Affine {
                    a: vec![shift],
                    m: Mat::scalar(m),
                    x0: vec![0.0],
                },
                vec![Mat::scalar(b)],
                line.clone(),
            );
            worst = worst.max((v - base).abs());
        }
    }
    for (lambda, theta) in [(1.0, 0.0), (0.5, -1.0), (3.0, 2.0)] {
        let jump = |l: f64, t: f64| {
            dirichlet_value(BoundaryDatum::jump(vec![l], vec![t], vec![1.0]), vec![Mat::scalar(0.0)], line.clone())
        };
        let base = jump(lambda, theta);
        for c in [0.25, -3.0, 7.5] {
            worst = worst.max((jump(lambda + c, theta + c) - base).abs());
        }
    }
    let square = CubeGrid::new(2, 1, 4, vec![0.0, 0.0], 1.0).unwrap();
    let plane = |a: f64| {
        dirichlet_value(
            BoundaryDatum::Affine {
                a: vec![a],
                m: Mat::from_rows(&[vec![1.0, 0.5]]),
                x0: vec![0.0, 0.0],
            },
            vec![Mat::from_rows(&[vec![0.25, 0.0]])],
            square.clone(),
        )
    };
    let base2 = plane(0.0);
    for a in [0.37, -2.0] {
        worst = worst.max((plane(a) - base2).abs());
    }
    outcome(worst <= 1e-10, format!("max value change under shifts {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let line = CubeGrid::unit(1, 1, 1).unwrap();
    let g = DiscreteSBVField::affine(line.clone(), &[0.5], &Mat::scalar(1.0), &[0.5]).unwrap();
    let sd = StructuredDeformation::new(g.clone(), MatrixField::constant(line.clone(), &Mat::scalar(0.0)).unwrap(), 2.0)
        .unwrap();
    let mut err = 0.0f64;
    let mut quad_err = 0.0f64;
    let mut zero_grad = true;
    let mut measured = Vec::new();
    for n in [4usize, 8, 16] {
        let u = build_determining_sequence(&sd, n).unwrap();
        zero_grad &= u.gradients().iter().all(|v| *v == 0.0);
        let d = l1_between(&u, &g).unwrap();
        let quad = l1_quadrature(&u, |x| x, 10_000);
        err = err.max((d - sawtooth_l1(n)).abs());
        quad_err = quad_err.max((quad - d).abs());
        measured.push(d);
    }
    let ml = MultiLevelDeformation::constant(line, &[0.5], &Mat::scalar(1.0), &Mat::scalar(0.0), &Mat::scalar(2.0), 2.0)
        .unwrap();
    let fam = |a: usize, b: usize| build_multilevel_sequence(&ml, a, b);
    let tol = Tolerances::default();
    let ok = verify_hsd_convergence(&fam, &ml, &[2, 4, 8], LimitOrder::InnerFirst, &tol).unwrap();
    let swapped = verify_hsd_convergence(&fam, &ml, &[2, 4, 8], LimitOrder::OuterFirst, &tol).unwrap();
    let ii_fails = !swapped.clause("ii").unwrap().pass;
    outcome(
        zero_grad && err <= 1e-12 && quad_err <= 1e-6 && ok.passed && ii_fails,
        format!(
            "L1 {measured:?} (quadrature diff {quad_err:.1e}), grad == 0: {zero_grad}, clauses (i,ii,iii) pass: {}, swapped clause ii fails: {ii_fails}",
            ok.passed
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut bad = Vec::new();
    for &a in &GRID {
        for &b in &GRID {
            let h = refine_ladder(&bulk_spec(a, b, 2), &[2, 4, 8, 16]).unwrap();
            let ok = h.history.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
            if !ok {
                bad.push(format!("({a},{b}): {:?}", h.history));
            }
        }
    }
    outcome(bad.is_empty(), format!("25 ladders, {} non-monotone {bad:?}", bad.len()))
}

fn criterion_9() -> Outcome {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let opts = EstimatorOptions::default();
    let unit = |n| CubeGrid::unit(1, 1, n).unwrap();
    let affine = MultiLevelDeformation::constant(unit(1), &[0.75], &Mat::scalar(1.5), &Mat::scalar(1.5), &Mat::scalar(1.5), 2.0)
        .unwrap();
    let staircase =
        MultiLevelDeformation::constant(unit(1), &[0.5], &Mat::scalar(1.0), &Mat::scalar(0.0), &Mat::scalar(0.0), 2.0)
            .unwrap();
    let z = MatrixField::constant(unit(2), &Mat::scalar(0.0)).unwrap();
    let jump = MultiLevelDeformation::new(
        DiscreteSBVField::new(unit(2), vec![0.0, 0.7], vec![0.0, 0.0]).unwrap(),
        z.clone(),
        z,
        2.0,
        Integrability::Hsd,
    )
    .unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, ml) in [("affine", &affine), ("(x,0,0)", &staircase), ("one jump", &jump)] {
        let (d, i, c) = estimate_both(ml, &w, &psi, &opts, 5e-2).unwrap();
        pass &= c.pass;
        if name == "affine" {
            pass &= close(d.value, 2.25, 1e-9) && close(i.value, 2.25, 1e-9);
        }
        lines.push(format!(
            "{name}: direct [{:.4}, {:.4}] iterated [{:.4}, {:.4}] gap {:.1e}",
            d.lower, d.upper, i.lower, i.upper, c.gap
        ));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_10() -> Outcome {
    let mut deviations = Vec::new();
    for name in catalog::core_names() {
        let report: ValidationReport = match catalog::bulk(name) {
            Some(w) => validate_bulk(&w, 7, 10_000),
            None => validate_surface(&catalog::surface(name).unwrap(), 7, 10_000),
        };
        for (h, want) in catalog::documented_verdicts(name).unwrap() {
            let scored = matches!(
                h,
                Hypothesis::W1
                    | Hypothesis::W4
                    | Hypothesis::W5
                    | Hypothesis::Psi1
                    | Hypothesis::Psi2Lower
                    | Hypothesis::Psi2Upper
                    | Hypothesis::Psi3
                    | Hypothesis::Psi4
                    | Hypothesis::Psi5
            );
            let got = report.kind(h);
            if scored && got != Some(want) {
                deviations.push(format!("{name}/{h}: got {got:?}, documented {want:?}"));
            }
        }
    }
    outcome(deviations.is_empty(), format!("6 densities, {} deviations {deviations:?}", deviations.len()))
}

const CONFIGS: &[&str] = &[
    r#"{"command":"relax-bulk","bulk":"quadratic","surface":"norm-jump","params":{"A":1,"B":0,"n":8,"ladder":[2,4,8,16]},"seed":1}"#,
    r#"{"command":"relax-surface","bulk":"quadratic","surface":"norm-jump","params":{"lambda":[1],"nu":[1,0],"n":8},"seed":2}"#,
    r#"{"command":"relax-surface","bulk":"linear","surface":"scaled-jump","params":{"lambda":[1],"p":1,"n":8}}"#,
    r#"{"command":"blowup","bulk":"quadratic","surface":"norm-jump","params":{"mode":"surface","lambda":[1],"nu":[1],"eps":[1,0.5,0.25]}}"#,
    r#"{"command":"approx","params":{"A":1,"G1":0,"G2":2,"ladder":[2,4,8]}}"#,
    r#"{"command":"validate","params":{"names":["quadratic","p-power","perturbed-linear","norm-jump","anisotropic","scaled-jump"],"samples":2000},"seed":5}"#,
    r#"{"command":"multilevel","bulk":"quadratic","surface":"norm-jump","params":{"A":1,"G1":0,"G2":0}}"#,
];

fn criterion_11() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for (k, text) in CONFIGS.iter().enumerate() {
        let cfg = RunConfig::from_json(text).unwrap();
        let mut csv = Vec::new();
        for run in 0..2 {
            let ov = Overrides {
                out: Some(root.path().join(format!("c{k}-r{run}"))),
                workers: Some(1 + run),
                ..Overrides::default()
            };
            let out = cli::run(&cfg, &ov).unwrap();
            let file = out.files.iter().find(|f| f.extension().is_some_and(|e| e == "csv")).unwrap();
            csv.push(std::fs::read(file).unwrap());
        }
        if csv[0] != csv[1] || csv[0].is_empty() {
            differing.push(k);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} configs rerun (1 and 2 workers), differing: {differing:?}", CONFIGS.len()),
    )
}

fn main() {
    let mut audit = Audit::default();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    results.push((1, criterion_1(&mut audit)));
    results.push((2, criterion_2(&mut audit)));
    results.push((3, criterion_3(&mut audit)));
    results.push((4, criterion_4(&mut audit)));
    results.push((5, criterion_5()));
    results.push((6, criterion_6()));
    results.push((
        7,
        outcome(
            audit.violations.is_empty() && audit.solves > 0,
            format!("{} solves, {} violations {:?}", audit.solves, audit.violations.len(), audit.violations),
        ),
    ));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));
    results.push((10, criterion_10()));
    results.push((11, criterion_11()));
    results.sort_by_key(|r| r.0);
    for (k, o) in &results {
        println!("criterion {k:>2}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
