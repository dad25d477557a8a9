use super::CellError;
use crate::linalg::{self, Mat};
use crate::sbv::{CubeGrid, DiscreteSBVField};

/// Boundary behaviour imposed on the collar around the cube.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryDatum {
    /// `x ↦ a + A (x − x0)`.
    Affine { a: Vec<f64>, m: Mat, x0: Vec<f64> },
    /// `λ` where `(x − x0)·ν ≥ 0`, `θ` elsewhere.
    Jump {
        lambda: Vec<f64>,
        theta: Vec<f64>,
        nu: Vec<f64>,
        x0: Vec<f64>,
    },
    /// A field on a grid covering the cube; the collar takes the trace of
    /// the cell of this field containing the adjacent inner cell.
    Field(DiscreteSBVField),
}

impl BoundaryDatum {
    pub fn affine(m: Mat) -> Self {
        let (d, n) = m.shape();
        BoundaryDatum::Affine {
            a: vec![0.0; d],
            m,
            x0: vec![0.0; n],
        }
    }

    pub fn jump(lambda: Vec<f64>, theta: Vec<f64>, nu: Vec<f64>) -> Self {
        let n = nu.len();
        BoundaryDatum::Jump {
            lambda,
            theta,
            nu,
            x0: vec![0.0; n],
        }
    }

    pub fn codim(&self) -> usize {
        match self {
            BoundaryDatum::Affine { m, .. } => m.rows(),
            BoundaryDatum::Jump { lambda, .. } => lambda.len(),
            BoundaryDatum::Field(f) => f.grid().d,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BoundaryDatum::Affine { m, .. } => m.cols(),
            BoundaryDatum::Jump { nu, .. } => nu.len(),
            BoundaryDatum::Field(f) => f.grid().dim,
        }
    }

    pub fn check(&self) -> Result<(), CellError> {
        match self {
            BoundaryDatum::Affine { a, m, x0 } => {
                if a.len() != m.rows() || x0.len() != m.cols() {
                    return Err(CellError::InvalidSpec("affine datum shapes disagree".into()));
                }
                if !m.is_finite() || !a.iter().chain(x0).all(|v| v.is_finite()) {
                    return Err(CellError::InvalidSpec("affine datum not finite".into()));
                }
            }
            BoundaryDatum::Jump {
                lambda,
                theta,
                nu,
                x0,
            } => {
                if lambda.len() != theta.len() || nu.len() != x0.len() {
                    return Err(CellError::InvalidSpec("jump datum shapes disagree".into()));
                }
                if (linalg::norm(nu) - 1.0).abs() > 1e-12 {
                    return Err(CellError::InvalidSpec("jump normal must be a unit vector".into()));
                }
                if !lambda.iter().chain(theta).chain(x0).all(|v| v.is_finite()) {
                    return Err(CellError::InvalidSpec("jump datum not finite".into()));
                }
            }
            BoundaryDatum::Field(_) => {}
        }
        Ok(())
    }

    /// Value at `x`; `inner` is a point of the cube next to `x` that decides
    /// which cell of a field datum supplies the trace.
    pub fn trace(&self, x: &[f64], inner: &[f64]) -> Vec<f64> {
        match self {
            BoundaryDatum::Affine { a, m, x0 } => linalg::add(a, &m.mul_vec(&linalg::sub(x, x0))),
            BoundaryDatum::Jump {
                lambda,
                theta,
                nu,
                x0,
            } => {
                if linalg::dot(&linalg::sub(x, x0), nu) >= 0.0 {
                    lambda.clone()
                } else {
                    theta.clone()
                }
            }
            BoundaryDatum::Field(f) => f.trace(f.grid().locate(inner), x),
        }
    }

    /// Gradient of the datum on the cell around `inner`.
    pub fn gradient(&self, inner: &[f64]) -> Mat {
        match self {
            BoundaryDatum::Affine { m, .. } => m.clone(),
            BoundaryDatum::Jump { lambda, nu, .. } => Mat::zeros(lambda.len(), nu.len()),
            BoundaryDatum::Field(f) => f.gradient(f.grid().locate(inner)),
        }
    }

    /// Adds a constant to the datum (the translation of the first variable).
    pub fn shifted(&self, c: &[f64]) -> Self {
        match self {
            BoundaryDatum::Affine { a, m, x0 } => BoundaryDatum::Affine {
                a: linalg::add(a, c),
                m: m.clone(),
                x0: x0.clone(),
            },
            BoundaryDatum::Jump {
                lambda,
                theta,
                nu,
                x0,
            } => BoundaryDatum::Jump {
                lambda: linalg::add(lambda, c),
                theta: linalg::add(theta, c),
                nu: nu.clone(),
                x0: x0.clone(),
            },
            BoundaryDatum::Field(f) => BoundaryDatum::Field(f.shifted(c)),
        }
    }

    /// A field datum must cover the cube with cells no smaller than the
    /// cube's cells, aligned to them.
    pub fn check_alignment(&self, grid: &CubeGrid) -> Result<(), CellError> {
        let BoundaryDatum::Field(f) = self else {
            return Ok(());
        };
        let g = f.grid();
        if g.dim != grid.dim || g.d != grid.d {
            return Err(CellError::NotGridAligned("dimension mismatch".into()));
        }
        if g.nu != grid.nu {
            return Err(CellError::NotGridAligned("rotated cubes need an affine or jump datum".into()));
        }
        let (hg, h) = (g.h(), grid.h());
        let ratio = hg / h;
        let tol = 1e-9;
        if (ratio - ratio.round()).abs() > tol || ratio.round() < 1.0 {
            return Err(CellError::NotGridAligned(format!(
                "cube cell size {h} does not divide datum cell size {hg}"
            )));
        }
        let glo = g.lower_corner();
        for (a, lo) in grid.lower_corner().iter().enumerate() {
            let off = (lo - glo[a]) / h;
            if (off - off.round()).abs() > tol {
                return Err(CellError::NotGridAligned("cube is not aligned with the datum grid".into()));
            }
            let hi = lo + grid.side;
            if *lo < glo[a] - tol * h || hi > glo[a] + g.side + tol * h {
                return Err(CellError::NotGridAligned("cube leaves the datum grid".into()));
            }
        }
        Ok(())
    }
}
