//! Discrete SBV calculus on cube grids.
//!
//! Fields are affine on each cell; the jump set lives on the facet skeleton
//! and jumps are evaluated at facet midpoints. Facet normals always point in
//! the positive coordinate direction.

mod field;
mod grid;
mod ops;

pub use field::{DiscreteSBVField, FacetJump, MatrixField, JUMP_EPS};
pub use grid::{BoundaryFacet, CubeGrid, InteriorFacet, Side};
pub use ops::{
    abs_affine_integral, common_refinement, discrete_alberti, gcd, l1_distance, lcm,
    moment_family, moment_pairing, piecewise_constant_approx, AlbertiResult, BlockRule,
    TestFunction,
};

use crate::density::DensityError;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SbvError {
    #[error("expected {expected} {what}, got {got}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entries")]
    NonFinite,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("incompatible refinement: {0}")]
    Incompatible(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported test function {0}")]
    UnsupportedTest(String),
    #[error("invalid field JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Density(#[from] DensityError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::catalog;
    use crate::linalg::Mat;

    fn line(n: usize) -> CubeGrid {
        CubeGrid::unit(1, 1, n).unwrap()
    }

    #[test]
    fn affine_field_has_no_jumps() {
        let g = CubeGrid::new(1, 1, 2, vec![0.0], 1.0).unwrap();
        let f = DiscreteSBVField::make_field(
            g,
            &[(vec![-0.25], Mat::scalar(1.0)), (vec![0.25], Mat::scalar(1.0))],
        )
        .unwrap();
        assert!(f.jumps().is_empty());
    }

    #[test]
    fn staircase_jumps_and_energy() {
        let f = DiscreteSBVField::from_fn(line(4), |x| vec![(4.0 * x[0]).floor() / 4.0], |_| {
            Mat::scalar(0.0)
        })
        .unwrap();
        let j = f.jumps();
        assert_eq!(j.len(), 3);
        assert!(j.iter().all(|j| (j.jump[0] - 0.25).abs() < 1e-15));
        let e = f.energy(&catalog::quadratic(), &catalog::norm_jump()).unwrap();
        assert!((e - 0.75).abs() < 1e-15);
    }

    #[test]
    fn count_mismatch_is_an_error() {
        assert!(matches!(
            DiscreteSBVField::make_field(line(2), &[(vec![0.0], Mat::scalar(0.0))]),
            Err(SbvError::CountMismatch { .. })
        ));
    }

    #[test]
    fn block_average_of_ramp() {
        let h = DiscreteSBVField::affine(line(1), &[-0.5], &Mat::scalar(-1.0), &[0.5]).unwrap();
        let s = piecewise_constant_approx(&h, 4, BlockRule::Average).unwrap();
        assert_eq!(s.values(), &[-0.125, -0.375, -0.625, -0.875]);
        let err = l1_distance(&h.refine(4), &s).unwrap();
        assert!((err - 1.0 / 16.0).abs() < 1e-15);
        assert!(piecewise_constant_approx(&h.refine(4), 3, BlockRule::Average).is_err());
    }

    #[test]
    fn alberti_slope_one() {
        let t = MatrixField::constant(line(4), &Mat::scalar(1.0)).unwrap();
        let a = discrete_alberti(&t);
        let j = a.field.jumps();
        assert_eq!(j.len(), 3);
        assert!(j.iter().all(|j| (j.jump[0] + 0.25).abs() < 1e-15));
        assert!((a.singular_variation - 0.75).abs() < 1e-15);
        assert!(a.singular_variation <= a.jump_constant * a.target_l1 + 1e-15);
        assert!(a.field_l1 <= a.l1_constant * a.target_l1 + 1e-15);
    }

    #[test]
    fn l1_of_two_dimensional_plane() {
        // |x + y| over the unit square centred at 0 equals 2/3.
        let g = CubeGrid::new(2, 1, 1, vec![0.0, 0.0], 1.0).unwrap();
        let f = DiscreteSBVField::affine(g.clone(), &[0.0], &Mat::from_rows(&[vec![1.0, 1.0]]), &[0.0, 0.0])
            .unwrap();
        let z = DiscreteSBVField::zeros(g);
        assert!((l1_distance(&f, &z).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn moments_of_constant_and_odd_fields() {
        let g = CubeGrid::new(2, 2, 4, vec![0.0, 0.0], 1.0).unwrap();
        let b = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let one = TestFunction::Monomial { exponents: vec![0, 0] };
        let m = moment_pairing(&MatrixField::constant(g.clone(), &b).unwrap(), &one).unwrap();
        assert!(m.max_abs_diff(&b) < 1e-15);
        let odd = MatrixField::from_fn(g, |x| Mat::identity(2).scale(x[0])).unwrap();
        assert!(moment_pairing(&odd, &one).unwrap().norm() < 1e-15);
        assert!(moment_pairing(&odd, &TestFunction::Monomial { exponents: vec![3, 0] }).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = DiscreteSBVField::affine(line(3), &[1.0], &Mat::scalar(2.0), &[0.5]).unwrap();
        let back = DiscreteSBVField::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
        assert!(f.to_json().starts_with("{\"N\":1,\"d\":1,\"n\":3,"));
    }
}
