mod common;

use common::{l1_quadrature, midpoint, sawtooth_l1};
use proptest::prelude::*;
use sdrelax::density::catalog;
use sdrelax::sbv::{
    discrete_alberti, l1_distance, moment_family, moment_pairing, piecewise_constant_approx, BlockRule, MatrixField,
    TestFunction,
};
use sdrelax::{CubeGrid, DiscreteSBVField, Mat};

fn centered(n: usize) -> CubeGrid {
    CubeGrid::new(1, 1, n, vec![0.0], 1.0).unwrap()
}

fn unit(n: usize) -> CubeGrid {
    CubeGrid::unit(1, 1, n).unwrap()
}

fn staircase(k: usize) -> DiscreteSBVField {
    DiscreteSBVField::from_fn(unit(k), |x| vec![(x[0] * k as f64).floor() / k as f64], |_| Mat::scalar(0.0)).unwrap()
}

#[test]
fn make_field_examples() {
    let g = centered(2);
    let affine = DiscreteSBVField::make_field(g.clone(), &[(vec![-0.25], Mat::scalar(1.0)), (vec![0.25], Mat::scalar(1.0))])
        .unwrap();
    assert!(affine.jumps().is_empty());
    let step = DiscreteSBVField::make_field(g.clone(), &[(vec![0.0], Mat::scalar(0.0)), (vec![1.0], Mat::scalar(0.0))])
        .unwrap();
    let j = step.jumps();
    assert_eq!(j.len(), 1);
    assert_eq!(j[0].jump, vec![1.0]);
    assert!(DiscreteSBVField::make_field(g.clone(), &[(vec![0.0], Mat::scalar(0.0))]).is_err());
    assert!(DiscreteSBVField::make_field(g, &[(vec![f64::NAN], Mat::scalar(0.0)), (vec![0.0], Mat::scalar(0.0))]).is_err());
}

#[test]
fn jumps_of_a_staircase_and_a_midline() {
    let s = staircase(4);
    let j = s.jumps();
    assert_eq!(j.len(), 3);
    assert!(j.iter().all(|f| (f.jump[0] - 0.25).abs() < 1e-15 && f.normal == vec![1.0]));

    let n = 4;
    let sq = CubeGrid::unit(2, 2, n).unwrap();
    let u = DiscreteSBVField::from_fn(sq, |x| if x[0] < 0.5 { vec![0.0, 0.0] } else { vec![1.0, 0.0] }, |_| Mat::zeros(2, 2))
        .unwrap();
    let j = u.jumps();
    assert_eq!(j.len(), n);
    assert!(j.iter().all(|f| f.jump == vec![1.0, 0.0] && f.normal == vec![1.0, 0.0]));
    assert!((j.iter().map(|f| f.area).sum::<f64>() - 1.0).abs() < 1e-15);
}

#[test]
fn energy_examples() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let id = DiscreteSBVField::affine(centered(4), &[0.0], &Mat::scalar(1.0), &[0.0]).unwrap();
    assert!((id.energy(&w, &psi).unwrap() - 1.0).abs() < 1e-15);
    assert!((staircase(4).energy(&w, &psi).unwrap() - 0.75).abs() < 1e-15);

    let sq = CubeGrid::unit(2, 2, 4).unwrap();
    let u = DiscreteSBVField::from_fn(sq, |x| if x[0] < 0.5 { vec![0.0, 0.0] } else { vec![1.0, 0.0] }, |_| Mat::zeros(2, 2))
        .unwrap();
    assert!((u.energy(&w, &psi).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn energy_is_additive_over_boxes() {
    let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
    let u = DiscreteSBVField::from_fn(unit(8), |x| vec![(7.0 * x[0]).sin()], |x| Mat::scalar(x[0])).unwrap();
    let left = u.energy_on_box(&w, &psi, &[(0, 3)]).unwrap();
    let right = u.energy_on_box(&w, &psi, &[(3, 8)]).unwrap();
    let cut = psi.eval_surface(&[0.375], &u.jumps().iter().find(|f| f.minus == 2).unwrap().jump, &[1.0]).unwrap();
    assert!((left + right + cut - u.energy(&w, &psi).unwrap()).abs() < 1e-12);
}

#[test]
fn piecewise_constant_examples() {
    let h = DiscreteSBVField::affine(unit(16), &[-0.5], &Mat::scalar(-1.0), &[0.5]).unwrap();
    let a4 = piecewise_constant_approx(&h, 4, BlockRule::Average).unwrap();
    let want = [-0.125, -0.375, -0.625, -0.875];
    for (k, v) in a4.values().iter().enumerate() {
        assert!((v - want[k / 4]).abs() < 1e-15, "{:?}", a4.values());
    }
    assert!(a4.gradients().iter().all(|g| *g == 0.0));
    for m in [4usize, 8, 16] {
        let a = piecewise_constant_approx(&h, m, BlockRule::Average).unwrap();
        let exact = l1_distance(&a.refine_to(16).unwrap(), &h).unwrap();
        let quad = l1_quadrature(&a, |x| -x, 10_000);
        let oracle = 1.0 / (4.0 * m as f64);
        assert!((exact - oracle).abs() < 1e-12, "{m}: {exact}");
        assert!((quad - oracle).abs() < 1e-6, "{m}: {quad}");
        assert!(exact <= 1.0 / m as f64);
    }
    let c = DiscreteSBVField::affine(unit(4), &[2.0], &Mat::scalar(0.0), &[0.5]).unwrap();
    assert_eq!(piecewise_constant_approx(&c, 2, BlockRule::Average).unwrap().values(), &[2.0; 4]);
    assert!(piecewise_constant_approx(&c, 3, BlockRule::Average).is_err());
}

#[test]
fn alberti_examples() {
    let zero = discrete_alberti(&MatrixField::constant(unit(4), &Mat::scalar(0.0)).unwrap());
    assert!(zero.field.jumps().is_empty() && zero.field.values().iter().all(|v| *v == 0.0));
    let one = discrete_alberti(&MatrixField::constant(unit(4), &Mat::scalar(1.0)).unwrap());
    let j = one.field.jumps();
    assert_eq!(j.len(), 3);
    assert!(j.iter().all(|f| (f.jump[0] + 0.25).abs() < 1e-15));
    assert!((one.singular_variation - 0.75).abs() < 1e-15);
    assert!(one.singular_variation <= one.jump_constant * one.target_l1 + 1e-15);

    let a = Mat::from_rows(&[vec![1.0, 2.0]]);
    let sq = CubeGrid::unit(2, 1, 2).unwrap();
    let r = discrete_alberti(&MatrixField::constant(sq, &a).unwrap());
    let h = 0.5;
    for f in r.field.jumps() {
        // zero center values: the jump is the gradient times the center spacing
        let want = -a.get(0, f.axis) * h;
        assert!((f.jump[0] - want).abs() < 1e-15);
    }
    assert_eq!(r.field.jumps().len(), 4);
    assert!(r.field.gradients().chunks(2).all(|g| g == [1.0, 2.0]));
}

#[test]
fn l1_examples() {
    let s = staircase(4);
    assert_eq!(l1_distance(&s, &s).unwrap(), 0.0);
    let id = DiscreteSBVField::affine(unit(4), &[0.5], &Mat::scalar(1.0), &[0.5]).unwrap();
    let d = l1_distance(&id, &s).unwrap();
    assert!((d - sawtooth_l1(4)).abs() < 1e-15);
    assert!((midpoint(|x| (x - (4.0 * x).floor() / 4.0).abs(), 10_000) - d).abs() < 1e-6);
    let sq = CubeGrid::unit(2, 1, 3).unwrap();
    let z = DiscreteSBVField::affine(sq.clone(), &[0.0], &Mat::zeros(1, 2), &[0.5, 0.5]).unwrap();
    let o = DiscreteSBVField::affine(sq, &[1.0], &Mat::zeros(1, 2), &[0.5, 0.5]).unwrap();
    assert!((l1_distance(&z, &o).unwrap() - 1.0).abs() < 1e-15);
    assert!(l1_distance(&s, &staircase(8)).is_err());
}

#[test]
fn moments_of_a_linear_field() {
    let f = MatrixField::from_fn(unit(8), |x| Mat::scalar(x[0])).unwrap();
    let fam = moment_family(1);
    assert!(fam.len() >= 3 + 7);
    let m = |e: u32| moment_pairing(&f, &TestFunction::Monomial { exponents: vec![e] }).unwrap().get(0, 0);
    // cell centers sampled exactly by the midpoint rule on affine x ↦ x
    assert!((m(0) - 0.5).abs() < 1e-15);
    assert!((m(1) - midpoint(|x| ((8.0 * x).floor() + 0.5) / 8.0 * x, 100_000)).abs() < 1e-8);
}

proptest! {
    #[test]
    fn gauss_identity_holds_on_random_fields(vals in prop::collection::vec(-3.0f64..3.0, 8), grads in prop::collection::vec(-3.0f64..3.0, 8)) {
        let u = DiscreteSBVField::new(unit(8), vals, grads).unwrap();
        let (lhs, rhs) = u.gauss_identity(&[(1, 6)]);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn refinement_keeps_the_field(vals in prop::collection::vec(-3.0f64..3.0, 4), grads in prop::collection::vec(-3.0f64..3.0, 4)) {
        let u = DiscreteSBVField::new(unit(4), vals, grads).unwrap();
        let r = u.refine_to(12).unwrap();
        prop_assert!(l1_distance(&u.refine_to(12).unwrap(), &r).unwrap() == 0.0);
        for x in [0.01, 0.3, 0.49, 0.77, 0.99] {
            prop_assert!((u.eval(&[x])[0] - r.eval(&[x])[0]).abs() < 1e-12);
        }
    }
}
