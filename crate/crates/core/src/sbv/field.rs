use super::grid::{CubeGrid, Side};
use super::SbvError;
use crate::density::{BulkDensity, SurfaceDensity};
use crate::linalg::{norm, Mat};
use serde::{Deserialize, Serialize};

/// Relative size below which a facet trace difference counts as no jump.
pub const JUMP_EPS: f64 = 1e-12;

/// Piecewise-affine field: on cell `c`, `u(x) = v_c + G_c (x − x_c)` with
/// `x_c` the cell center.
///
/// Values are stored cell after cell (`d` entries each) and gradients cell
/// after cell as row-major `d × N` blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldJson", into = "FieldJson")]
pub struct DiscreteSBVField {
    grid: CubeGrid,
    values: Vec<f64>,
    gradients: Vec<f64>,
}

/// Wire format: the grid header followed by the two flat arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct FieldJson {
    #[serde(rename = "N")]
    dim: usize,
    d: usize,
    n: usize,
    center: Vec<f64>,
    side: f64,
    nu: Vec<f64>,
    values: Vec<f64>,
    gradients: Vec<f64>,
}

impl TryFrom<FieldJson> for DiscreteSBVField {
    type Error = SbvError;

    fn try_from(j: FieldJson) -> Result<Self, SbvError> {
        let grid = CubeGrid {
            dim: j.dim,
            d: j.d,
            n: j.n,
            center: j.center,
            side: j.side,
            nu: j.nu,
        }
        .checked()?;
        DiscreteSBVField::new(grid, j.values, j.gradients)
    }
}

impl From<DiscreteSBVField> for FieldJson {
    fn from(f: DiscreteSBVField) -> Self {
        FieldJson {
            dim: f.grid.dim,
            d: f.grid.d,
            n: f.grid.n,
            center: f.grid.center,
            side: f.grid.side,
            nu: f.grid.nu,
            values: f.values,
            gradients: f.gradients,
        }
    }
}

/// Jump across an interior facet, `[u] = u⁺ − u⁻` at the facet midpoint with
/// normal `+e_axis`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FacetJump {
    /// Position in [`CubeGrid::interior_facets`].
    pub facet: usize,
    pub axis: usize,
    pub minus: usize,
    pub plus: usize,
    pub normal: Vec<f64>,
    pub jump: Vec<f64>,
    pub area: f64,
    pub midpoint: Vec<f64>,
}

impl DiscreteSBVField {
    pub fn new(grid: CubeGrid, values: Vec<f64>, gradients: Vec<f64>) -> Result<Self, SbvError> {
        let cells = grid.cells();
        if values.len() != cells * grid.d {
            return Err(SbvError::CountMismatch {
                what: "values",
                expected: cells * grid.d,
                got: values.len(),
            });
        }
        if gradients.len() != cells * grid.d * grid.dim {
            return Err(SbvError::CountMismatch {
                what: "gradients",
                expected: cells * grid.d * grid.dim,
                got: gradients.len(),
            });
        }
        if !values.iter().chain(&gradients).all(|v| v.is_finite()) {
            return Err(SbvError::NonFinite);
        }
        Ok(DiscreteSBVField {
            grid,
            values,
            gradients,
        })
    }

    /// One `(value at center, gradient)` pair per cell.
    pub fn make_field(grid: CubeGrid, data: &[(Vec<f64>, Mat)]) -> Result<Self, SbvError> {
        if data.len() != grid.cells() {
            return Err(SbvError::CountMismatch {
                what: "cells",
                expected: grid.cells(),
                got: data.len(),
            });
        }
        let mut values = Vec::with_capacity(grid.cells() * grid.d);
        let mut gradients = Vec::with_capacity(grid.cells() * grid.d * grid.dim);
        for (v, g) in data {
            if v.len() != grid.d || g.shape() != (grid.d, grid.dim) {
                return Err(SbvError::Dimension(format!(
                    "cell data must be a value in R^{} and a {}x{} gradient",
                    grid.d, grid.d, grid.dim
                )));
            }
            values.extend_from_slice(v);
            gradients.extend_from_slice(g.as_slice());
        }
        DiscreteSBVField::new(grid, values, gradients)
    }

    pub fn zeros(grid: CubeGrid) -> Self {
        let c = grid.cells();
        let (d, n) = (grid.d, grid.dim);
        DiscreteSBVField {
            grid,
            values: vec![0.0; c * d],
            gradients: vec![0.0; c * d * n],
        }
    }

    /// Samples `u` at cell centers with gradient `du` per cell.
    pub fn from_fn(
        grid: CubeGrid,
        u: impl Fn(&[f64]) -> Vec<f64>,
        du: impl Fn(&[f64]) -> Mat,
    ) -> Result<Self, SbvError> {
        let data: Vec<(Vec<f64>, Mat)> = (0..grid.cells())
            .map(|k| {
                let x = grid.cell_center(k);
                (u(&x), du(&x))
            })
            .collect();
        DiscreteSBVField::make_field(grid, &data)
    }

    /// Globally affine `x ↦ a + A (x − x0)`.
    pub fn affine(grid: CubeGrid, a: &[f64], m: &Mat, x0: &[f64]) -> Result<Self, SbvError> {
        DiscreteSBVField::from_fn(
            grid,
            |x| {
                let dx = crate::linalg::sub(x, x0);
                crate::linalg::add(a, &m.mul_vec(&dx))
            },
            |_| m.clone(),
        )
    }

    pub fn grid(&self) -> &CubeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradients(&self) -> &[f64] {
        &self.gradients
    }

    pub fn value(&self, k: usize) -> &[f64] {
        let d = self.grid.d;
        &self.values[k * d..(k + 1) * d]
    }

    pub fn gradient_slice(&self, k: usize) -> &[f64] {
        let s = self.grid.d * self.grid.dim;
        &self.gradients[k * s..(k + 1) * s]
    }

    pub fn gradient(&self, k: usize) -> Mat {
        Mat::from_vec(self.grid.d, self.grid.dim, self.gradient_slice(k).to_vec())
    }

    /// Affine extension of cell `k` evaluated at `x`.
    pub fn trace(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let (d, n) = (self.grid.d, self.grid.dim);
        let c = self.grid.cell_center(k);
        let g = self.gradient_slice(k);
        let v = self.value(k);
        (0..d)
            .map(|i| v[i] + (0..n).map(|j| g[i * n + j] * (x[j] - c[j])).sum::<f64>())
            .collect()
    }

    /// Value at `x`, taken from the cell containing it.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.trace(self.grid.locate(x), x)
    }

    /// Nonzero jumps across interior facets.
    pub fn jumps(&self) -> Vec<FacetJump> {
        let area = self.grid.facet_area();
        self.grid
            .interior_facets()
            .into_iter()
            .enumerate()
            .filter_map(|(i, f)| {
                let up = self.trace(f.plus, &f.midpoint);
                let um = self.trace(f.minus, &f.midpoint);
                let jump: Vec<f64> = up.iter().zip(&um).map(|(a, b)| a - b).collect();
                let scale = 1.0 + norm(&up) + norm(&um);
                if norm(&jump) <= JUMP_EPS * scale {
                    return None;
                }
                let mut normal = vec![0.0; self.grid.dim];
                normal[f.axis] = 1.0;
                Some(FacetJump {
                    facet: i,
                    axis: f.axis,
                    minus: f.minus,
                    plus: f.plus,
                    normal,
                    jump,
                    area,
                    midpoint: f.midpoint,
                })
            })
            .collect()
    }

    /// `|D^s u|(Q)`: sum of `|[u]|·area` over the jumps.
    pub fn jump_variation(&self) -> f64 {
        self.jumps().iter().map(|j| norm(&j.jump) * j.area).sum()
    }

    /// `Σ_c |∇u_c|·vol + |D^s u|`.
    pub fn total_variation(&self) -> f64 {
        let vol = self.grid.cell_volume();
        (0..self.grid.cells())
            .map(|k| norm(self.gradient_slice(k)) * vol)
            .sum::<f64>()
            + self.jump_variation()
    }

    /// `Σ_c W(x_c, ∇u_c)·vol + Σ_jumps ψ(x_f, [u], ν)·area`.
    pub fn energy(&self, w: &BulkDensity, psi: &SurfaceDensity) -> Result<f64, SbvError> {
        let all = vec![(0, self.grid.n); self.grid.dim];
        self.energy_on_box(w, psi, &all)
    }

    /// Energy of the cells in the index box `lo ≤ i < hi` (per axis) and of
    /// the jumps on facets between two such cells.
    pub fn energy_on_box(
        &self,
        w: &BulkDensity,
        psi: &SurfaceDensity,
        range: &[(usize, usize)],
    ) -> Result<f64, SbvError> {
        let inside = |k: usize| {
            self.grid
                .multi_index(k)
                .iter()
                .zip(range)
                .all(|(&i, &(lo, hi))| lo <= i && i < hi)
        };
        let vol = self.grid.cell_volume();
        let mut bulk = 0.0;
        for k in (0..self.grid.cells()).filter(|&k| inside(k)) {
            bulk += w.eval_bulk(&self.grid.cell_center(k), &self.gradient(k))? * vol;
        }
        let mut surf = 0.0;
        for j in self.jumps() {
            if inside(j.minus) && inside(j.plus) {
                surf += psi.eval_surface(&j.midpoint, &j.jump, &j.normal)? * j.area;
            }
        }
        Ok(bulk + surf)
    }

    /// Both sides of the discrete Gauss identity on the index box `range`:
    /// `Σ ∇u_c·vol + Σ [u]⊗e_a·area` and `Σ_{∂box} u⊗n_out·area`, the latter
    /// from the inner traces at boundary facet midpoints.
    pub fn gauss_identity(&self, range: &[(usize, usize)]) -> (Mat, Mat) {
        let g = &self.grid;
        let (d, n) = (g.d, g.dim);
        let inside = |k: usize| {
            g.multi_index(k)
                .iter()
                .zip(range)
                .all(|(&i, &(lo, hi))| lo <= i && i < hi)
        };
        let vol = g.cell_volume();
        let area = g.facet_area();
        let h = g.h();
        let mut lhs = Mat::zeros(d, n);
        for k in (0..g.cells()).filter(|&k| inside(k)) {
            lhs.add_assign_scaled(&self.gradient(k), vol);
        }
        for f in g.interior_facets() {
            if inside(f.minus) && inside(f.plus) {
                let up = self.trace(f.plus, &f.midpoint);
                let um = self.trace(f.minus, &f.midpoint);
                for i in 0..d {
                    let v = lhs.get(i, f.axis) + (up[i] - um[i]) * area;
                    lhs.set(i, f.axis, v);
                }
            }
        }
        let mut rhs = Mat::zeros(d, n);
        for k in (0..g.cells()).filter(|&k| inside(k)) {
            let idx = g.multi_index(k);
            let c = g.cell_center(k);
            for (axis, &(lo, hi)) in range.iter().enumerate() {
                for (side, on) in [(Side::Low, idx[axis] == lo), (Side::High, idx[axis] + 1 == hi)] {
                    if !on {
                        continue;
                    }
                    let mut m = c.clone();
                    let sign = if side == Side::Low { -1.0 } else { 1.0 };
                    m[axis] += sign * h / 2.0;
                    let u = self.trace(k, &m);
                    for i in 0..d {
                        let v = rhs.get(i, axis) + sign * u[i] * area;
                        rhs.set(i, axis, v);
                    }
                }
            }
        }
        (lhs, rhs)
    }

    /// Exact representation on the `k`-times finer grid.
    pub fn refine(&self, k: usize) -> DiscreteSBVField {
        if k == 1 {
            return self.clone();
        }
        let fine = self.grid.refined(k);
        let mut values = Vec::with_capacity(fine.cells() * fine.d);
        let mut gradients = Vec::with_capacity(fine.cells() * fine.d * fine.dim);
        for c in 0..fine.cells() {
            let x = fine.cell_center(c);
            let parent = self.grid.locate(&x);
            values.extend(self.trace(parent, &x));
            gradients.extend_from_slice(self.gradient_slice(parent));
        }
        DiscreteSBVField {
            grid: fine,
            values,
            gradients,
        }
    }

    /// Refines to `n` cells per side; `n` must be a multiple of the current `n`.
    pub fn refine_to(&self, n: usize) -> Result<DiscreteSBVField, SbvError> {
        if n % self.grid.n != 0 {
            return Err(SbvError::Incompatible(format!(
                "cannot refine n = {} to n = {n}",
                self.grid.n
            )));
        }
        Ok(self.refine(n / self.grid.n))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, SbvError> {
        if self.grid != other.grid {
            return Err(SbvError::GridMismatch);
        }
        Ok(DiscreteSBVField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
            gradients: self
                .gradients
                .iter()
                .zip(&other.gradients)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, SbvError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SbvError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Adds a constant vector to every cell value.
    pub fn shifted(&self, a: &[f64]) -> Self {
        let mut out = self.clone();
        let d = self.grid.d;
        for (i, v) in out.values.iter_mut().enumerate() {
            *v += a[i % d];
        }
        out
    }

    pub fn gradient_field(&self) -> MatrixField {
        MatrixField {
            grid: self.grid.clone(),
            data: self.gradients.clone(),
        }
    }

    pub fn with_grid_normal(mut self, nu: Vec<f64>) -> Result<Self, SbvError> {
        self.grid = self.grid.with_normal(nu)?;
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fields serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, SbvError> {
        serde_json::from_str(s).map_err(|e| SbvError::Json(e.to_string()))
    }
}

/// Per-cell constant `d × N` matrices on a grid, e.g. the `G` of a
/// structured deformation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixField {
    pub grid: CubeGrid,
    data: Vec<f64>,
}

impl MatrixField {
    pub fn new(grid: CubeGrid, data: Vec<f64>) -> Result<Self, SbvError> {
        let want = grid.cells() * grid.d * grid.dim;
        if data.len() != want {
            return Err(SbvError::CountMismatch {
                what: "matrix entries",
                expected: want,
                got: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(SbvError::NonFinite);
        }
        Ok(MatrixField { grid, data })
    }

    pub fn constant(grid: CubeGrid, m: &Mat) -> Result<Self, SbvError> {
        if m.shape() != (grid.d, grid.dim) {
            return Err(SbvError::Dimension(format!(
                "expected a {}x{} matrix",
                grid.d, grid.dim
            )));
        }
        let data = m.as_slice().repeat(grid.cells());
        MatrixField::new(grid, data)
    }

    pub fn from_fn(grid: CubeGrid, f: impl Fn(&[f64]) -> Mat) -> Result<Self, SbvError> {
        let mut data = Vec::with_capacity(grid.cells() * grid.d * grid.dim);
        for k in 0..grid.cells() {
            let m = f(&grid.cell_center(k));
            if m.shape() != (grid.d, grid.dim) {
                return Err(SbvError::Dimension("matrix shape mismatch".into()));
            }
            data.extend_from_slice(m.as_slice());
        }
        MatrixField::new(grid, data)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, k: usize) -> Mat {
        let s = self.grid.d * self.grid.dim;
        Mat::from_vec(self.grid.d, self.grid.dim, self.data[k * s..(k + 1) * s].to_vec())
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let s = self.grid.d * self.grid.dim;
        &self.data[k * s..(k + 1) * s]
    }

    /// Same piecewise-constant function on the `k`-times finer grid.
    pub fn refine(&self, k: usize) -> MatrixField {
        let fine = self.grid.refined(k);
        let mut data = Vec::with_capacity(fine.cells() * fine.d * fine.dim);
        for c in 0..fine.cells() {
            data.extend_from_slice(self.slice(self.grid.locate(&fine.cell_center(c))));
        }
        MatrixField { grid: fine, data }
    }

    pub fn refine_to(&self, n: usize) -> Result<MatrixField, SbvError> {
        if n % self.grid.n != 0 {
            return Err(SbvError::Incompatible(format!(
                "cannot refine n = {} to n = {n}",
                self.grid.n
            )));
        }
        Ok(self.refine(n / self.grid.n))
    }

    pub fn sub(&self, other: &MatrixField) -> Result<MatrixField, SbvError> {
        if self.grid != other.grid {
            return Err(SbvError::GridMismatch);
        }
        Ok(MatrixField {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `Σ_c |M_c|^p · vol`.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let vol = self.grid.cell_volume();
        (0..self.grid.cells())
            .map(|k| norm(self.slice(k)).powf(p) * vol)
            .sum()
    }

    /// Volume average.
    pub fn mean(&self) -> Mat {
        let mut m = Mat::zeros(self.grid.d, self.grid.dim);
        let c = self.grid.cells();
        for k in 0..c {
            m.add_assign_scaled(&self.get(k), 1.0 / c as f64);
        }
        m
    }
}
