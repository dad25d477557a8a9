use sdrelax::approx::{Integrability, MultiLevelDeformation};
use sdrelax::cell::{solve_bulk_cell, solve_surface_cell, CellProblemSpec};
use sdrelax::density::catalog;
use sdrelax::multilevel::{compare, estimate_both, relax_direct, relax_iterated, EstimatorOptions, MultilevelError};
use sdrelax::sbv::MatrixField;
use sdrelax::{CubeGrid, DiscreteSBVField, Mat};

fn unit(n: usize) -> CubeGrid {
    CubeGrid::unit(1, 1, n).unwrap()
}

fn affine(a: f64, g1: f64, g2: f64) -> MultiLevelDeformation {
    MultiLevelDeformation::constant(unit(1), &[0.5 * a], &Mat::scalar(a), &Mat::scalar(g1), &Mat::scalar(g2), 2.0).unwrap()
}

fn contains(lo: f64, hi: f64, v: f64) -> bool {
    lo <= v + 1e-9 && v <= hi + 1e-9
}

#[test]
fn affine_catalog_is_exact() {
    let psi = catalog::norm_jump();
    for (name, a) in [("quadratic", 0.8), ("quadratic", -1.2), ("p-power", 0.6)] {
        let w = catalog::bulk(name).unwrap();
        let want = w.eval_bulk(&[0.5], &Mat::scalar(a)).unwrap();
        let (d, i, c) = estimate_both(&affine(a, a, a), &w, &psi, &EstimatorOptions::default(), 5e-2).unwrap();
        assert!((d.value - want).abs() < 1e-9, "{name} {a}: {d:?}");
        assert!((i.value - want).abs() < 1e-9, "{name} {a}: {i:?}");
        assert!(d.lower <= d.value && d.value <= d.upper);
        assert!(i.lower <= i.value && i.value <= i.upper);
        assert!(c.pass);
    }
}

#[test]
fn staircase_case_brackets_the_cell_value() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let oracle = solve_bulk_cell(&CellProblemSpec::bulk(w.clone(), psi.clone(), Mat::scalar(1.0), Mat::scalar(0.0), 8).unwrap())
        .unwrap()
        .value;
    let ml = affine(1.0, 0.0, 0.0);
    let d = relax_direct(&ml, &w, &psi, &EstimatorOptions::default()).unwrap();
    assert!(d.upper <= 1.0 + 1e-9);
    assert!(contains(d.lower, d.upper, oracle));
    let i = relax_iterated(&ml, &w, &psi, &EstimatorOptions::default()).unwrap();
    assert!(contains(i.lower, i.upper, oracle));
    assert!(compare(&d, &i, 5e-2).unwrap().pass);
    assert!(d.growth.holds(d.upper) && i.growth.holds(i.upper));
}

#[test]
fn zero_deformation_costs_nothing() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let (d, i, _) = estimate_both(&affine(0.0, 0.0, 0.0), &w, &psi, &EstimatorOptions::default(), 5e-2).unwrap();
    assert_eq!(d.value, 0.0);
    assert!(i.value.abs() < 1e-12);
}

#[test]
fn one_jump_matches_the_surface_density() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let jump = 1.3;
    let hp = solve_surface_cell(&CellProblemSpec::surface(w.clone(), psi.clone(), 2.0, &[jump], &[0.0], &[1.0], 8).unwrap())
        .unwrap()
        .value;
    let g = DiscreteSBVField::new(unit(2), vec![0.2, 0.2 + jump], vec![0.0, 0.0]).unwrap();
    let z = MatrixField::constant(unit(2), &Mat::scalar(0.0)).unwrap();
    let ml = MultiLevelDeformation::new(g, z.clone(), z, 2.0, Integrability::Hsd).unwrap();
    let (d, i, c) = estimate_both(&ml, &w, &psi, &EstimatorOptions::default(), 5e-2).unwrap();
    assert!((d.value - hp).abs() < 5e-2 && (i.value - hp).abs() < 5e-2, "{} {} {hp}", d.value, i.value);
    assert!(c.pass);
}

#[test]
fn estimates_do_not_depend_on_the_worker_count() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let ml = affine(1.0, 0.5, 0.0);
    let one = EstimatorOptions::default();
    let four = EstimatorOptions {
        workers: 4,
        ..EstimatorOptions::default()
    };
    assert_eq!(relax_iterated(&ml, &w, &psi, &one).unwrap(), relax_iterated(&ml, &w, &psi, &four).unwrap());
    assert_eq!(relax_direct(&ml, &w, &psi, &one).unwrap(), relax_direct(&ml, &w, &psi, &four).unwrap());
}

#[test]
fn iterated_estimator_rejects_the_square() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let sq = CubeGrid::unit(2, 1, 1).unwrap();
    let a = Mat::from_rows(&[vec![1.0, 0.0]]);
    let ml = MultiLevelDeformation::constant(sq, &[0.5], &a, &a, &a, 2.0).unwrap();
    assert!(matches!(
        relax_iterated(&ml, &w, &psi, &EstimatorOptions::default()).unwrap_err(),
        MultilevelError::Unsupported(_)
    ));
    assert!(relax_direct(&ml, &w, &psi, &EstimatorOptions::default()).is_ok());
}

#[test]
fn compare_examples() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let ml = affine(1.0, 1.0, 1.0);
    let a = relax_direct(&ml, &w, &psi, &EstimatorOptions::default()).unwrap();
    assert!(compare(&a, &a, 0.0).unwrap().pass);
    let (mut x, mut y) = (a.clone(), a.clone());
    (x.lower, x.upper, y.lower, y.upper) = (1.0, 1.02, 1.01, 1.05);
    assert!(compare(&x, &y, 0.0).unwrap().pass);
    (y.lower, y.upper) = (1.5, 1.6);
    let c = compare(&x, &y, 5e-2).unwrap();
    assert!(!c.pass && (c.gap - 0.48).abs() < 1e-12);
    let other = relax_direct(&affine(2.0, 2.0, 2.0), &w, &psi, &EstimatorOptions::default()).unwrap();
    assert!(matches!(compare(&a, &other, 1.0).unwrap_err(), MultilevelError::Mismatch(..)));
}
