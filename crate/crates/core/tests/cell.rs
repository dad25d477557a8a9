mod common;

use common::{brute_force_1d, quantized_levels};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdrelax::cell::{
    blowup_bulk, blowup_surface, refine_ladder, solve_bulk_cell, solve_dirichlet, solve_surface_cell, BlowupSetup,
    BoundaryDatum, Budget, CellError, CellProblemSpec, Domain, InnerEnergy, SolvePath,
};
use sdrelax::density::catalog;
use sdrelax::{CubeGrid, DiscreteSBVField, Mat};

fn quad() -> (sdrelax::BulkDensity, sdrelax::SurfaceDensity) {
    (catalog::quadratic(), catalog::norm_jump())
}

fn h(a: f64, b: f64) -> sdrelax::cell::SolveResult {
    let (w, psi) = quad();
    solve_bulk_cell(&CellProblemSpec::bulk(w, psi, Mat::scalar(a), Mat::scalar(b), 8).unwrap()).unwrap()
}

#[test]
fn bulk_cell_examples() {
    let levels = quantized_levels();
    for (a, b, want) in [(1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (2.0, 1.0, 2.0)] {
        let r = h(a, b);
        let brute = brute_force_1d(|g| g * g, 1.0, a, Some(b), 8, &levels);
        assert!((r.value - want).abs() < 1e-12, "H({a},{b}) = {}", r.value);
        assert_eq!(brute, want);
        assert!(r.diagnostics.certified);
        assert!((r.diagnostics.recomputed - r.value).abs() < 1e-10);
        assert!(r.diagnostics.constraint_residual < 1e-10);
        let mean: f64 = r.minimizer.gradients().iter().sum::<f64>() / 8.0;
        assert!((mean - b).abs() < 1e-12);
    }
}

#[test]
fn surface_cell_examples() {
    let (w, psi) = quad();
    let s = |l: f64, t: f64| CellProblemSpec::surface(w.clone(), psi.clone(), 2.0, &[l], &[t], &[1.0], 8).unwrap();
    let r = solve_surface_cell(&s(3.0, 0.0)).unwrap();
    assert!((r.value - 3.0).abs() < 1e-12);
    assert_eq!(brute_force_1d(|g| g * g, 1.0, 3.0, Some(0.0), 8, &quantized_levels()), 3.0);
    assert!(r.minimizer.gradients().iter().all(|g| *g == 0.0));
    let z = solve_surface_cell(&s(0.7, 0.7)).unwrap();
    assert_eq!(z.value, 0.0);
    assert_eq!(z.diagnostics.path, SolvePath::Trivial);

    let lin = catalog::bulk("linear").unwrap();
    let two = catalog::surface("scaled-jump").unwrap();
    let spec = CellProblemSpec::surface(lin, two, 1.0, &[1.0], &[0.0], &[1.0], 8).unwrap();
    assert!(spec.delta1());
    let r = solve_surface_cell(&spec).unwrap();
    assert!((r.value - 2.0).abs() < 1e-9);
    assert_eq!(brute_force_1d(f64::abs, 2.0, 1.0, Some(0.0), 8, &quantized_levels()), 2.0);
}

#[test]
fn general_path_on_the_square() {
    let (w, psi) = quad();
    let spec = CellProblemSpec::bulk(w, psi, Mat::from_rows(&[vec![1.0, 0.0]]), Mat::from_rows(&[vec![0.5, 0.0]]), 4)
        .unwrap();
    let r = solve_bulk_cell(&spec).unwrap();
    assert_eq!(r.diagnostics.path, SolvePath::General);
    let s = r.diagnostics.sandwich.clone().unwrap();
    assert!(s.holds(r.value));
    // B² + |A − B| is attained by a staircase in x₁, and Jensen plus the net
    // jump give it as a lower bound.
    assert!(r.value >= 0.75 - 1e-9 && r.value <= 0.75 + 1e-3, "{}", r.value);
    assert!((r.diagnostics.recomputed - r.value).abs() < 1e-10);
    assert!(r.diagnostics.constraint_residual < 1e-10);
}

#[test]
fn dirichlet_examples() {
    let (w, psi) = quad();
    for a in [0.5, 1.0, -2.0] {
        let grid = CubeGrid::new(1, 1, 8, vec![0.3], 0.5).unwrap();
        let datum = BoundaryDatum::Affine {
            a: vec![0.0],
            m: Mat::scalar(a),
            x0: vec![0.3],
        };
        let r = solve_dirichlet(&CellProblemSpec::dirichlet(w.clone(), psi.clone(), datum, vec![Mat::scalar(a)], grid))
            .unwrap();
        assert!((r.value - a * a * 0.5).abs() < 1e-12);
    }
    let jump = |eps: f64| {
        let grid = CubeGrid::new(1, 1, 8, vec![0.0], eps).unwrap();
        let datum = BoundaryDatum::jump(vec![1.5], vec![0.0], vec![1.0]);
        solve_dirichlet(&CellProblemSpec::dirichlet(w.clone(), psi.clone(), datum, vec![Mat::scalar(0.0)], grid))
            .unwrap()
            .value
    };
    let h = solve_surface_cell(&CellProblemSpec::surface(w.clone(), psi.clone(), 2.0, &[1.5], &[0.0], &[1.0], 8).unwrap())
        .unwrap()
        .value;
    // ε^{N−1} = 1 in one dimension
    assert!((jump(1.0) - h).abs() < 1e-12 && (jump(0.5) - h).abs() < 1e-12);
}

#[test]
fn dirichlet_never_exceeds_the_datum_energy() {
    let (w, psi) = quad();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (dim, n) in [(1usize, 8usize), (1, 8), (1, 4), (2, 4), (2, 4)] {
        let grid = CubeGrid::unit(dim, 1, n).unwrap();
        let cells = grid.cells();
        let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let grads: Vec<f64> = (0..cells * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = DiscreteSBVField::new(grid.clone(), values, grads).unwrap();
        let mean = g.gradient_field().mean();
        let energy = g.energy(&w, &psi).unwrap();
        let spec = CellProblemSpec::dirichlet(w.clone(), psi.clone(), BoundaryDatum::Field(g), vec![mean], grid)
            .with_budget(Budget {
                iterations: 300,
                restarts: 1,
            });
        let r = solve_dirichlet(&spec).unwrap();
        assert!(r.value <= energy + 1e-9, "N={dim}: m = {} > {energy}", r.value);
    }
}

fn setup() -> BlowupSetup {
    let (w, psi) = quad();
    BlowupSetup {
        w,
        psi,
        energy: InnerEnergy::Plain,
        domain: Domain {
            center: vec![0.0],
            side: 20.0,
        },
        eps: vec![1.0, 0.5, 0.25],
        n: 8,
        budget: Budget::default(),
        seed: 0,
    }
}

#[test]
fn blowup_examples() {
    let s = setup();
    let r = blowup_bulk(&s, &[0.0], &[0.0], &Mat::scalar(1.0), &[Mat::scalar(1.0)]).unwrap();
    assert!(r.ratios.iter().all(|v| (v - 1.0).abs() < 1e-12));
    let shifted = blowup_bulk(&s, &[0.0], &[5.0], &Mat::scalar(1.0), &[Mat::scalar(1.0)]).unwrap();
    assert_eq!(r.ratios, shifted.ratios);
    let xi = blowup_bulk(&s, &[2.0], &[0.0], &Mat::scalar(1.7), &[Mat::scalar(1.7)]).unwrap();
    assert!(xi.ratios.iter().all(|v| (v - 1.7 * 1.7).abs() < 1e-12));

    let sr = blowup_surface(&s, &[0.0], &[1.0], &[0.0], &[1.0]).unwrap();
    assert!(sr.ratios.iter().all(|v| (v - 1.0).abs() < 1e-12));
    let zero = blowup_surface(&s, &[0.0], &[0.4], &[0.4], &[1.0]).unwrap();
    assert!(zero.ratios.iter().all(|v| *v == 0.0));
    let moved = blowup_surface(&s, &[0.0], &[3.0], &[2.0], &[1.0]).unwrap();
    assert_eq!(sr.ratios, moved.ratios);

    let out = blowup_bulk(&s, &[9.8], &[0.0], &Mat::scalar(1.0), &[Mat::scalar(1.0)]).unwrap_err();
    assert!(matches!(out, CellError::CubeExitsDomain { .. }));
    let short = BlowupSetup {
        eps: vec![1.0, 0.5],
        ..setup()
    };
    assert!(matches!(
        blowup_bulk(&short, &[0.0], &[0.0], &Mat::scalar(1.0), &[Mat::scalar(1.0)]).unwrap_err(),
        CellError::LadderTooShort(2)
    ));
}

#[test]
fn refinement_examples() {
    let (w, psi) = quad();
    let spec = CellProblemSpec::bulk(w.clone(), psi.clone(), Mat::scalar(1.0), Mat::scalar(0.0), 2).unwrap();
    let r = refine_ladder(&spec, &[2, 4, 8]).unwrap();
    assert!(r.monotone);
    assert!((r.history.last().unwrap().1 - 1.0).abs() < 1e-6);
    let aff = CellProblemSpec::bulk(w, psi, Mat::scalar(1.3), Mat::scalar(1.3), 2).unwrap();
    let r = refine_ladder(&aff, &[2, 4, 8]).unwrap();
    assert!(r.history.iter().all(|(_, v)| (v - 1.69).abs() < 1e-12));
    assert!(r.last_decrement.abs() < 1e-12);
    assert!(matches!(refine_ladder(&spec, &[2, 3]).unwrap_err(), CellError::NonNested(_)));
}

#[test]
fn solves_are_deterministic() {
    let (w, psi) = quad();
    let spec = CellProblemSpec::surface(w, psi, 2.0, &[1.0], &[0.0], &[1.0, 0.0], 4).unwrap().with_seed(9);
    let a = solve_surface_cell(&spec).unwrap();
    let b = solve_surface_cell(&spec).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.minimizer, b.minimizer);
}
