//! Determining sequences for structured deformations and their checks.
//!
//! For `(g, G)` the sequence is `u_n = g + h − h_n` where `h` carries the
//! gradient `G − ∇g` with all mismatch in jumps and `h_n` is its
//! floor-type staircase at `n` blocks per side. Stored gradients are copied
//! from the target, so `∇u_n = G` holds bitwise.

mod convergence;

pub use convergence::{
    verify_hsd_convergence, ClauseVerdict, ConvergenceReport, LimitOrder, Tolerances,
};

use crate::sbv::{
    discrete_alberti, l1_distance, lcm, piecewise_constant_approx, BlockRule, CubeGrid,
    DiscreteSBVField, MatrixField, SbvError,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ApproxError {
    #[error("index ladder needs at least 3 entries, got {0}")]
    LadderTooShort(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sbv(#[from] SbvError),
}

/// `(g, G)` with `G ∈ L^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredDeformation {
    pub g: DiscreteSBVField,
    pub big_g: MatrixField,
    pub p: f64,
}

impl StructuredDeformation {
    pub fn new(g: DiscreteSBVField, big_g: MatrixField, p: f64) -> Result<Self, ApproxError> {
        if g.grid() != &big_g.grid {
            return Err(ApproxError::Invalid("g and G must share a grid".into()));
        }
        if !(p >= 1.0) {
            return Err(ApproxError::Invalid(format!("p = {p} < 1")));
        }
        Ok(StructuredDeformation { g, big_g, p })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrability {
    /// `G₁, G₂ ∈ L^p`.
    #[default]
    Hsd,
    /// `G₁ ∈ L¹`, `G₂ ∈ L^p`.
    Sd,
}

/// `(g, G₁, G₂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiLevelDeformation {
    pub g: DiscreteSBVField,
    pub g1: MatrixField,
    pub g2: MatrixField,
    pub p: f64,
    pub mode: Integrability,
}

impl MultiLevelDeformation {
    pub fn new(
        g: DiscreteSBVField,
        g1: MatrixField,
        g2: MatrixField,
        p: f64,
        mode: Integrability,
    ) -> Result<Self, ApproxError> {
        if g.grid() != &g1.grid || g.grid() != &g2.grid {
            return Err(ApproxError::Invalid("g, G₁ and G₂ must share a grid".into()));
        }
        if !(p >= 1.0) {
            return Err(ApproxError::Invalid(format!("p = {p} < 1")));
        }
        Ok(MultiLevelDeformation { g, g1, g2, p, mode })
    }

    /// Affine `g = a + A(x − c)` with constant `G₁`, `G₂` on `grid`.
    pub fn constant(
        grid: CubeGrid,
        a: &[f64],
        m: &crate::Mat,
        g1: &crate::Mat,
        g2: &crate::Mat,
        p: f64,
    ) -> Result<Self, ApproxError> {
        let c = grid.center.clone();
        let g = DiscreteSBVField::affine(grid.clone(), a, m, &c)?;
        let g1 = MatrixField::constant(grid.clone(), g1)?;
        let g2 = MatrixField::constant(grid, g2)?;
        MultiLevelDeformation::new(g, g1, g2, p, Integrability::Hsd)
    }
}

/// Field with the values of `values` and the gradients of `grads`, both
/// brought to `n` cells per side.
fn assemble(values: &DiscreteSBVField, grads: &MatrixField, n: usize) -> Result<DiscreteSBVField, ApproxError> {
    let v = values.refine_to(n)?;
    let g = grads.refine_to(n)?;
    Ok(DiscreteSBVField::new(v.grid().clone(), v.values().to_vec(), g.as_slice().to_vec())?)
}

/// `ū − u` for `u` carrying the gradient `target` and `ū` its staircase at
/// `m` blocks, on `n` cells per side (`n` a multiple of both grids).
fn staircase_defect(target: &MatrixField, m: usize, n: usize, rule: BlockRule) -> Result<DiscreteSBVField, ApproxError> {
    let u = discrete_alberti(target).field.refine_to(n)?;
    let ubar = piecewise_constant_approx(&u, m, rule)?;
    Ok(ubar.sub(&u)?)
}

/// `u_n = g + h − h_n`.
pub fn build_determining_sequence(sd: &StructuredDeformation, n: usize) -> Result<DiscreteSBVField, ApproxError> {
    if n == 0 {
        return Err(ApproxError::Invalid("n must be at least 1".into()));
    }
    let fine = lcm(sd.g.grid().n, n);
    let defect = sd.big_g.sub(&sd.g.gradient_field())?;
    // h − h_n = −(h_n − h)
    let s = staircase_defect(&defect, n, fine, BlockRule::LowerCorner)?;
    let values = sd.g.refine_to(fine)?.sub(&s)?;
    assemble(&values, &sd.big_g, fine)
}

/// The pair `(u_{n₁,n₂}, g_{n₁})` of the three-level construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultilevelMember {
    pub u: DiscreteSBVField,
    /// `g + ū_{n₁} − u₁`, the inner limit, with `∇g_{n₁} = G₁`.
    pub g_n1: DiscreteSBVField,
}

/// `g + (ū_{n₁} − u₁) + (ū_{n₂} − u₂)` with `∇u₁ = ∇g − G₁`, `∇u₂ = G₁ − G₂`.
pub fn build_multilevel_member(ml: &MultiLevelDeformation, n1: usize, n2: usize) -> Result<MultilevelMember, ApproxError> {
    build_multilevel_member_with(ml, n1, n2, BlockRule::LowerCorner)
}

/// As [`build_multilevel_member`] with the staircases taken by `rule`.
pub fn build_multilevel_member_with(
    ml: &MultiLevelDeformation,
    n1: usize,
    n2: usize,
    rule: BlockRule,
) -> Result<MultilevelMember, ApproxError> {
    if n1 == 0 || n2 == 0 {
        return Err(ApproxError::Invalid("n₁ and n₂ must be at least 1".into()));
    }
    let ng = ml.g.grid().n;
    let fine = lcm(lcm(ng, n1), n2);
    let d1 = ml.g.gradient_field().sub(&ml.g1)?;
    let d2 = ml.g1.sub(&ml.g2)?;
    let s1 = staircase_defect(&d1, n1, fine, rule)?;
    let s2 = staircase_defect(&d2, n2, fine, rule)?;
    let gf = ml.g.refine_to(fine)?;
    let inner = gf.add(&s1)?;
    let u = inner.add(&s2)?;
    let fine1 = lcm(ng, n1);
    let g_n1 = ml.g.refine_to(fine1)?.add(&staircase_defect(&d1, n1, fine1, rule)?)?;
    Ok(MultilevelMember {
        u: assemble(&u, &ml.g2, fine)?,
        g_n1: assemble(&g_n1, &ml.g1, fine1)?,
    })
}

pub fn build_multilevel_sequence(ml: &MultiLevelDeformation, n1: usize, n2: usize) -> Result<DiscreteSBVField, ApproxError> {
    Ok(build_multilevel_member(ml, n1, n2)?.u)
}

/// `∫|f1 − f2|` on the common refinement of the two grids.
pub fn l1_between(f1: &DiscreteSBVField, f2: &DiscreteSBVField) -> Result<f64, ApproxError> {
    let (a, b) = crate::sbv::common_refinement(f1, f2)?;
    Ok(l1_distance(&a, &b)?)
}

/// `‖u_n − g‖_{L¹}` along a ladder with the fitted rate
/// `log₂(e_k / e_{k+1}) / log₂(n_{k+1} / n_k)` of the last step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceDecay {
    pub ns: Vec<usize>,
    pub distances: Vec<f64>,
    pub rate: Option<f64>,
}

pub fn sequence_decay(sd: &StructuredDeformation, ns: &[usize]) -> Result<SequenceDecay, ApproxError> {
    let distances = ns
        .iter()
        .map(|&n| l1_between(&build_determining_sequence(sd, n)?, &sd.g))
        .collect::<Result<Vec<_>, _>>()?;
    let rate = fitted_rate(ns, &distances);
    Ok(SequenceDecay {
        ns: ns.to_vec(),
        distances,
        rate,
    })
}

pub(crate) fn fitted_rate(ns: &[usize], e: &[f64]) -> Option<f64> {
    let k = e.len();
    if k < 2 || e[k - 1] <= 0.0 || e[k - 2] <= 0.0 {
        return None;
    }
    Some((e[k - 2] / e[k - 1]).ln() / (ns[k - 1] as f64 / ns[k - 2] as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat;

    fn line() -> CubeGrid {
        CubeGrid::unit(1, 1, 1).unwrap()
    }

    #[test]
    fn staircase_of_the_identity() {
        let g = DiscreteSBVField::affine(line(), &[0.5], &Mat::scalar(1.0), &[0.5]).unwrap();
        let sd = StructuredDeformation::new(g, MatrixField::constant(line(), &Mat::scalar(0.0)).unwrap(), 2.0).unwrap();
        for (n, want) in [(4, 0.125), (8, 0.0625), (16, 0.03125)] {
            let u = build_determining_sequence(&sd, n).unwrap();
            assert!(u.gradients().iter().all(|v| *v == 0.0));
            assert!((l1_between(&u, &sd.g).unwrap() - want).abs() < 1e-12);
        }
        let u4 = build_determining_sequence(&sd, 4).unwrap();
        assert_eq!(u4.values(), &[0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn multilevel_gradients_are_exact() {
        let ml = MultiLevelDeformation::constant(line(), &[0.5], &Mat::scalar(1.0), &Mat::scalar(0.0), &Mat::scalar(2.0), 2.0)
            .unwrap();
        let m = build_multilevel_member(&ml, 4, 4).unwrap();
        assert!(m.u.gradients().iter().all(|v| *v == 2.0));
        assert!(m.g_n1.gradients().iter().all(|v| *v == 0.0));
    }
}
