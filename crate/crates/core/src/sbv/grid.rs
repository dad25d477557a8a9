use super::SbvError;
use crate::linalg::norm;
use serde::{Deserialize, Serialize};

/// Uniform grid of `n^N` cubic cells on the cube of the given center and
/// side. Cells are numbered row-major with axis 0 slowest:
/// `k = i_0·n + i_1` in two dimensions.
///
/// `nu` records the orientation of the cube `Q_ν` the grid stands for; the
/// grid itself is always axis-aligned in its own frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeGrid {
    #[serde(rename = "N")]
    pub dim: usize,
    pub d: usize,
    pub n: usize,
    pub center: Vec<f64>,
    pub side: f64,
    pub nu: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

/// Facet between two neighbouring cells; the normal is `+e_axis`, pointing
/// from `minus` to `plus`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorFacet {
    pub axis: usize,
    pub minus: usize,
    pub plus: usize,
    pub midpoint: Vec<f64>,
}

/// Facet on the boundary of the cube, belonging to `cell`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFacet {
    pub axis: usize,
    pub cell: usize,
    pub side: Side,
    pub midpoint: Vec<f64>,
}

impl CubeGrid {
    pub fn new(dim: usize, d: usize, n: usize, center: Vec<f64>, side: f64) -> Result<Self, SbvError> {
        let mut nu = vec![0.0; dim];
        if dim > 0 {
            nu[0] = 1.0;
        }
        CubeGrid {
            dim,
            d,
            n,
            center,
            side,
            nu,
        }
        .checked()
    }

    /// Unit cube `(0, 1)^N`.
    pub fn unit(dim: usize, d: usize, n: usize) -> Result<Self, SbvError> {
        CubeGrid::new(dim, d, n, vec![0.5; dim], 1.0)
    }

    pub fn with_normal(mut self, nu: Vec<f64>) -> Result<Self, SbvError> {
        self.nu = nu;
        self.checked()
    }

    pub fn checked(self) -> Result<Self, SbvError> {
        if !(1..=2).contains(&self.dim) {
            return Err(SbvError::Dimension(format!("N = {} not in {{1, 2}}", self.dim)));
        }
        if self.d == 0 || self.n == 0 {
            return Err(SbvError::Dimension("d and n must be at least 1".into()));
        }
        if self.center.len() != self.dim || self.nu.len() != self.dim {
            return Err(SbvError::Dimension("center and nu must have N entries".into()));
        }
        if !(self.side > 0.0 && self.side.is_finite()) || !self.center.iter().all(|c| c.is_finite()) {
            return Err(SbvError::NonFinite);
        }
        if (norm(&self.nu) - 1.0).abs() > 1e-12 {
            return Err(SbvError::Dimension("nu must be a unit vector".into()));
        }
        Ok(self)
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Cell side length.
    pub fn h(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// `H^{N−1}` measure of one facet; `1` when `N = 1`.
    pub fn facet_area(&self) -> f64 {
        self.h().powi(self.dim as i32 - 1)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.side / 2.0).collect()
    }

    pub fn multi_index(&self, k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        let mut r = k;
        for a in (0..self.dim).rev() {
            idx[a] = r % self.n;
            r /= self.n;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Offset in the linear index when stepping by one along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn cell_center(&self, k: usize) -> Vec<f64> {
        let h = self.h();
        let lo = self.lower_corner();
        self.multi_index(k)
            .iter()
            .zip(lo)
            .map(|(&i, l)| l + (i as f64 + 0.5) * h)
            .collect()
    }

    /// Index of the cell containing `x` (points on shared faces go to the
    /// upper cell; points outside are clamped).
    pub fn locate(&self, x: &[f64]) -> usize {
        let h = self.h();
        let lo = self.lower_corner();
        let idx: Vec<usize> = x
            .iter()
            .zip(lo)
            .map(|(xi, l)| (((xi - l) / h).floor().max(0.0) as usize).min(self.n - 1))
            .collect();
        self.linear_index(&idx)
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(&self.center)
            .all(|(xi, c)| (xi - c).abs() <= self.side / 2.0 + slack)
    }

    /// Interior facets, axis by axis, each axis in cell order of `minus`.
    pub fn interior_facets(&self) -> Vec<InteriorFacet> {
        let h = self.h();
        let mut out = Vec::new();
        for axis in 0..self.dim {
            let s = self.stride(axis);
            for k in 0..self.cells() {
                if self.multi_index(k)[axis] + 1 < self.n {
                    let mut m = self.cell_center(k);
                    m[axis] += h / 2.0;
                    out.push(InteriorFacet {
                        axis,
                        minus: k,
                        plus: k + s,
                        midpoint: m,
                    });
                }
            }
        }
        out
    }

    /// Boundary facets, axis by axis, low side before high side, then in
    /// cell order.
    pub fn boundary_facets(&self) -> Vec<BoundaryFacet> {
        let h = self.h();
        let mut out = Vec::new();
        for axis in 0..self.dim {
            for side in [Side::Low, Side::High] {
                for k in 0..self.cells() {
                    let i = self.multi_index(k)[axis];
                    let on = match side {
                        Side::Low => i == 0,
                        Side::High => i + 1 == self.n,
                    };
                    if on {
                        let mut m = self.cell_center(k);
                        m[axis] += match side {
                            Side::Low => -h / 2.0,
                            Side::High => h / 2.0,
                        };
                        out.push(BoundaryFacet {
                            axis,
                            cell: k,
                            side,
                            midpoint: m,
                        });
                    }
                }
            }
        }
        out
    }

    /// Same cube, `k` times finer.
    pub fn refined(&self, k: usize) -> CubeGrid {
        CubeGrid {
            n: self.n * k,
            ..self.clone()
        }
    }

    pub fn with_n(&self, n: usize) -> CubeGrid {
        CubeGrid { n, ..self.clone() }
    }

    /// Same geometry (dimension, cube and codomain), possibly different `n`.
    pub fn same_cube(&self, other: &CubeGrid) -> bool {
        self.dim == other.dim
            && self.d == other.d
            && self.side == other.side
            && self.center == other.center
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facet_counts_and_measure() {
        let g = CubeGrid::unit(2, 1, 4).unwrap();
        assert_eq!(g.interior_facets().len(), 2 * 4 * 3);
        assert_eq!(g.boundary_facets().len(), 16);
        let skeleton: f64 = g.interior_facets().len() as f64 * g.facet_area();
        assert!((skeleton - 6.0).abs() < 1e-15);
        assert_eq!(g.cell_center(5), vec![0.375, 0.375]);
        assert_eq!(g.locate(&[0.4, 0.9]), 7);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(CubeGrid::unit(3, 1, 2).is_err());
        assert!(CubeGrid::unit(1, 1, 0).is_err());
        assert!(CubeGrid::unit(2, 1, 2).unwrap().with_normal(vec![1.0, 1.0]).is_err());
    }
}
