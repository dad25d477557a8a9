mod common;

use common::{l1_quadrature, sawtooth_l1};
use sdrelax::approx::{
    build_determining_sequence, build_multilevel_member, build_multilevel_sequence, l1_between, sequence_decay,
    verify_hsd_convergence, ApproxError, Integrability, LimitOrder, MultiLevelDeformation, StructuredDeformation,
    Tolerances,
};
use sdrelax::sbv::MatrixField;
use sdrelax::{CubeGrid, DiscreteSBVField, Mat};

fn unit(n: usize) -> CubeGrid {
    CubeGrid::unit(1, 1, n).unwrap()
}

fn identity_map() -> DiscreteSBVField {
    DiscreteSBVField::affine(unit(1), &[0.5], &Mat::scalar(1.0), &[0.5]).unwrap()
}

fn sd(g: f64) -> StructuredDeformation {
    StructuredDeformation::new(identity_map(), MatrixField::constant(unit(1), &Mat::scalar(g)).unwrap(), 2.0).unwrap()
}

fn ml(g1: f64, g2: f64) -> MultiLevelDeformation {
    MultiLevelDeformation::constant(unit(1), &[0.5], &Mat::scalar(1.0), &Mat::scalar(g1), &Mat::scalar(g2), 2.0).unwrap()
}

#[test]
fn identity_with_zero_g_gives_the_floor_staircase() {
    let u = build_determining_sequence(&sd(0.0), 4).unwrap();
    assert!(u.gradients().iter().all(|g| *g == 0.0));
    for (k, v) in u.values().iter().enumerate() {
        assert_eq!(*v, k as f64 / 4.0);
    }
    let d = l1_between(&u, &identity_map()).unwrap();
    assert!((d - sawtooth_l1(4)).abs() < 1e-15);
    assert!((l1_quadrature(&u, |x| x, 10_000) - d).abs() < 1e-9);
}

#[test]
fn matching_gradient_reproduces_g() {
    let s = sd(1.0);
    for n in [1, 3, 8] {
        let u = build_determining_sequence(&s, n).unwrap();
        assert!(l1_between(&u, &s.g).unwrap() < 1e-15);
    }
}

#[test]
fn slope_two_halves_under_doubling() {
    let s = sd(2.0);
    let ns = [4, 8, 16, 32];
    for &n in &ns {
        let u = build_determining_sequence(&s, n).unwrap();
        assert!(u.gradients().iter().all(|g| *g == 2.0));
    }
    let decay = sequence_decay(&s, &ns).unwrap();
    for w in decay.distances.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() <= 0.2, "{:?}", decay.distances);
    }
    assert!((decay.rate.unwrap() - 1.0).abs() < 0.1);
}

#[test]
fn multilevel_member_examples() {
    let m = build_multilevel_member(&ml(0.0, 2.0), 4, 4).unwrap();
    assert!(m.u.gradients().iter().all(|g| *g == 2.0));
    assert!(m.g_n1.gradients().iter().all(|g| *g == 0.0));
    assert!(!m.u.jumps().is_empty());
    let mut prev = f64::INFINITY;
    for n1 in [2, 4, 8, 16] {
        let g_n1 = build_multilevel_member(&ml(0.0, 2.0), n1, 64).unwrap().g_n1;
        let d = l1_between(&g_n1, &identity_map()).unwrap();
        assert!(d < prev);
        prev = d;
    }
    for (n1, n2) in [(2, 3), (4, 8)] {
        let u = build_multilevel_sequence(&ml(1.0, 1.0), n1, n2).unwrap();
        assert!(l1_between(&u, &identity_map()).unwrap() < 1e-15);
    }
    let two_level = build_determining_sequence(&sd(0.5), 4).unwrap();
    let degenerate = build_multilevel_sequence(&ml(0.5, 0.5), 4, 8).unwrap();
    assert!(l1_between(&two_level, &degenerate).unwrap() < 1e-14);
}

#[test]
fn convergence_examples() {
    let tol = Tolerances::default();
    let target = ml(0.0, 2.0);
    let fam = |a: usize, b: usize| build_multilevel_sequence(&target, a, b);
    let ok = verify_hsd_convergence(&fam, &target, &[2, 4, 8, 16], LimitOrder::InnerFirst, &tol).unwrap();
    assert!(ok.passed, "{:?}", ok.verdicts);
    let rate = ok.clause("i").unwrap().rate.unwrap();
    assert!((rate - 1.0).abs() < 0.1, "{rate}");
    let swapped = verify_hsd_convergence(&fam, &target, &[2, 4, 8, 16], LimitOrder::OuterFirst, &tol).unwrap();
    assert!(!swapped.clause("ii").unwrap().pass);

    let same = ml(1.0, 1.0);
    let constant = |_: usize, _: usize| Ok(same.g.clone());
    assert!(verify_hsd_convergence(&constant, &same, &[2, 4, 8], LimitOrder::InnerFirst, &tol).unwrap().passed);

    let wobble = |a: usize, _: usize| Ok(same.g.shifted(&[(a as f64).sin()]));
    let r = verify_hsd_convergence(&wobble, &same, &[2, 4, 8], LimitOrder::InnerFirst, &tol).unwrap();
    assert!(!r.clause("i").unwrap().pass);

    assert_eq!(
        verify_hsd_convergence(&constant, &same, &[2, 4], LimitOrder::InnerFirst, &tol).unwrap_err(),
        ApproxError::LadderTooShort(2)
    );
}

#[test]
fn sd_mode_reports_the_gradient_bound() {
    let mut target = ml(0.0, 2.0);
    target.mode = Integrability::Sd;
    let fam = |a: usize, b: usize| build_multilevel_sequence(&target, a, b);
    let r = verify_hsd_convergence(&fam, &target, &[2, 4, 8], LimitOrder::InnerFirst, &Tolerances::default()).unwrap();
    assert_eq!(r.sup_gradient_lp, Some(2.0));
}
