//! The discretised objective in the solver frame.

use super::{
    growth, BoundaryDatum, CellError, CellKind, CellProblemSpec, CoupledDensity, Diagnostics,
    InnerEnergy, SolvePath, SolveResult,
};
use crate::density::{recession_estimate, BulkDensity, SurfaceDensity};
use crate::linalg::{self, Mat, Rotation};
use crate::sbv::{BoundaryFacet, CubeGrid, DiscreteSBVField, InteriorFacet, MatrixField, Side};
use std::sync::Arc;

#[derive(Clone, Debug)]
pub(crate) enum BulkTerm {
    None,
    Plain(BulkDensity),
    Coupled(CoupledDensity),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Grad {
    Zero,
    Free,
    Mean(Mat),
}

/// Outcome of one of the solver paths, before verification.
pub(crate) struct Raw {
    pub x: Vec<f64>,
    pub value: f64,
    pub path: SolvePath,
    pub iterations: usize,
    pub restarts_used: usize,
    pub certified: bool,
    pub gap: f64,
    pub converged: bool,
}

pub(crate) struct Discrete {
    pub kind: CellKind,
    pub grid: CubeGrid,
    pub dim: usize,
    pub d: usize,
    pub cells: usize,
    pub vol: f64,
    pub area: f64,
    pub bulk: BulkTerm,
    /// Density whose recession function is the bulk term, for the gap.
    pub recession_of: Option<BulkDensity>,
    pub recession_ladder: Vec<f64>,
    pub psi: SurfaceDensity,
    pub grad: Grad,
    pub aux_targets: Vec<Mat>,
    pub centers: Vec<Vec<f64>>,
    pub interior: Vec<InteriorFacet>,
    pub boundary: Vec<BoundaryFacet>,
    pub bvals: Vec<Vec<f64>>,
    pub flux: Mat,
    /// Datum extension: per-cell datum gradients in the solver frame.
    pub ext_grads: Vec<Mat>,
    pub start: Vec<f64>,
    pub x_dependent: bool,
    pub collar: usize,
    /// Original densities, for the growth constants.
    pub w_orig: BulkDensity,
    pub psi_orig: SurfaceDensity,
    pub is_trivial_datum: bool,
}

type XMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

fn recession_density(w: &BulkDensity, ladder: &[f64]) -> BulkDensity {
    let src = w.clone();
    let ladder = ladder.to_vec();
    let closed = w.has_recession_closed_form();
    let f = move |x: &[f64], a: &Mat| -> f64 {
        if closed {
            return src.recession_raw(x, a).unwrap_or(f64::NAN);
        }
        if a.norm() == 0.0 {
            return 0.0;
        }
        recession_estimate(&src, x, a, &ladder)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    };
    let mut r = BulkDensity::new(format!("{}^inf", w.name), f, 1.0, 2.0 * w.lipschitz, w.coercivity)
        .with_convex(w.convex);
    r.x_dependent = w.x_dependent;
    r
}

impl Discrete {
    pub fn build(spec: &CellProblemSpec) -> Result<Discrete, CellError> {
        let rot = Rotation::to_first_axis(&spec.grid.nu)
            .ok_or_else(|| CellError::InvalidSpec("unsupported cube orientation".into()))?;
        let rotated = !rot.is_identity();
        if rotated && matches!(spec.datum, BoundaryDatum::Field(_)) {
            return Err(CellError::InvalidSpec(
                "field data are only supported on axis-aligned cubes".into(),
            ));
        }
        let r = rot.matrix().clone();
        let rt = r.transpose();
        let freeze = matches!(spec.kind, CellKind::Bulk | CellKind::Surface);
        let (mut w, mut psi) = if freeze {
            (spec.w.frozen(&spec.x0), spec.psi.frozen(&spec.x0))
        } else {
            (spec.w.clone(), spec.psi.clone())
        };
        let x_of: XMap = {
            let rot = rot.clone();
            Arc::new(move |y: &[f64]| rot.apply_inverse(y))
        };
        if rotated {
            w = w.conjugated(x_of.clone(), r.clone());
            psi = psi.conjugated(x_of.clone(), r.clone());
        }
        let mut grid = spec.grid.clone();
        if rotated {
            grid.center = rot.apply(&spec.grid.center);
        }
        let to_frame = |m: &Mat| if rotated { m.matmul(&rt) } else { m.clone() };

        let (dim, d) = (grid.dim, grid.d);
        let p = spec.p;
        let mut recession_of = None;
        let (bulk, grad, aux_targets) = match (&spec.kind, &spec.energy) {
            (CellKind::Bulk, _) => (BulkTerm::Plain(w.clone()), Grad::Mean(to_frame(&spec.means[0])), vec![]),
            (CellKind::Surface, _) if p > 1.0 => (BulkTerm::None, Grad::Zero, vec![]),
            (CellKind::Surface, _) => {
                recession_of = Some(w.clone());
                (
                    BulkTerm::Plain(recession_density(&w, &spec.recession_ladder)),
                    Grad::Mean(Mat::zeros(d, dim)),
                    vec![],
                )
            }
            (CellKind::DirichletGeneral, InnerEnergy::Plain) => {
                let g = match spec.means.first() {
                    Some(b) => Grad::Mean(to_frame(b)),
                    None => Grad::Free,
                };
                (BulkTerm::Plain(w.clone()), g, vec![])
            }
            (CellKind::DirichletGeneral, InnerEnergy::Coupled(c)) => {
                let c = if rotated {
                    let inner = c.clone();
                    let rr = r.clone();
                    CoupledDensity::new(
                        c.name.clone(),
                        c.aux,
                        Arc::new(move |a: &Mat, us: &[Mat]| {
                            let us: Vec<Mat> = us.iter().map(|u| u.matmul(&rr)).collect();
                            inner.eval(&a.matmul(&rr), &us)
                        }),
                    )
                    .with_convex(c.convex)
                } else {
                    c.clone()
                };
                let (g, rest) = if spec.means.len() == c.aux + 1 {
                    (Grad::Mean(to_frame(&spec.means[0])), &spec.means[1..])
                } else {
                    (Grad::Free, &spec.means[..])
                };
                (BulkTerm::Coupled(c), g, rest.iter().map(to_frame).collect())
            }
        };

        let cells = grid.cells();
        let centers: Vec<Vec<f64>> = (0..cells).map(|k| grid.cell_center(k)).collect();
        let interior = grid.interior_facets();
        let boundary = grid.boundary_facets();
        let area = grid.facet_area();
        let bvals: Vec<Vec<f64>> = boundary
            .iter()
            .map(|f| spec.datum.trace(&x_of(&f.midpoint), &x_of(&centers[f.cell])))
            .collect();
        let mut flux = Mat::zeros(d, dim);
        for (f, v) in boundary.iter().zip(&bvals) {
            let s = match f.side {
                Side::Low => -area,
                Side::High => area,
            };
            for i in 0..d {
                flux.set(i, f.axis, flux.get(i, f.axis) + s * v[i]);
            }
        }
        let ext_vals: Vec<Vec<f64>> = centers
            .iter()
            .map(|c| {
                let x = x_of(c);
                spec.datum.trace(&x, &x)
            })
            .collect();
        let ext_grads: Vec<Mat> = centers
            .iter()
            .map(|c| to_frame(&spec.datum.gradient(&x_of(c))))
            .collect();
        let is_trivial_datum = match &spec.datum {
            BoundaryDatum::Jump { lambda, theta, .. } => lambda == theta,
            _ => false,
        };
        let x_dependent = match &bulk {
            BulkTerm::Plain(w) => w.x_dependent,
            _ => false,
        } || psi.x_dependent;

        let mut disc = Discrete {
            kind: spec.kind,
            vol: grid.cell_volume(),
            area,
            dim,
            d,
            cells,
            grid,
            bulk,
            recession_of,
            recession_ladder: spec.recession_ladder.clone(),
            psi,
            grad,
            aux_targets,
            centers,
            interior,
            boundary,
            bvals,
            flux,
            ext_grads,
            start: Vec::new(),
            x_dependent,
            collar: spec.collar,
            w_orig: spec.w.clone(),
            psi_orig: spec.psi.clone(),
            is_trivial_datum,
        };

        let mut x = vec![0.0; disc.len()];
        for (k, v) in ext_vals.iter().enumerate() {
            x[k * d..(k + 1) * d].copy_from_slice(v);
        }
        let m = d * dim;
        if disc.has_grads() {
            let off = disc.grad_offset();
            for (k, g) in disc.ext_grads.iter().enumerate() {
                x[off + k * m..off + (k + 1) * m].copy_from_slice(g.as_slice());
            }
        }
        for j in 0..disc.aux_targets.len() {
            let off = disc.aux_offset(j);
            for k in 0..cells {
                let src = match spec.aux_start.get(j) {
                    Some(f) => to_frame(&f.get(k)),
                    None => disc.aux_targets[j].clone(),
                };
                x[off + k * m..off + (k + 1) * m].copy_from_slice(src.as_slice());
            }
        }
        disc.enforce_means(&mut x);
        disc.start = x;
        Ok(disc)
    }

    pub fn has_grads(&self) -> bool {
        self.grad != Grad::Zero
    }

    fn block(&self) -> usize {
        self.cells * self.d * self.dim
    }

    pub fn grad_offset(&self) -> usize {
        self.cells * self.d
    }

    pub fn aux_offset(&self, j: usize) -> usize {
        self.grad_offset() + if self.has_grads() { self.block() } else { 0 } + j * self.block()
    }

    pub fn len(&self) -> usize {
        self.aux_offset(self.aux_targets.len())
    }

    /// Matrix blocks with a mean constraint: `(offset, target)`.
    fn constrained_blocks(&self) -> Vec<(usize, Mat)> {
        let mut out = Vec::new();
        if let Grad::Mean(b) = &self.grad {
            out.push((self.grad_offset(), b.clone()));
        }
        for (j, t) in self.aux_targets.iter().enumerate() {
            out.push((self.aux_offset(j), t.clone()));
        }
        out
    }

    /// Shifts the constrained blocks so their means hit the targets exactly.
    pub fn enforce_means(&self, x: &mut [f64]) {
        let m = self.d * self.dim;
        for (off, b) in self.constrained_blocks() {
            for e in 0..m {
                let mean: f64 = (0..self.cells).map(|k| x[off + k * m + e]).sum::<f64>() / self.cells as f64;
                let shift = b.as_slice()[e] - mean;
                for k in 0..self.cells {
                    x[off + k * m + e] += shift;
                }
            }
        }
    }

    /// Removes the mean of each constrained block from a direction.
    pub fn project(&self, v: &mut [f64]) {
        let m = self.d * self.dim;
        for (off, _) in self.constrained_blocks() {
            for e in 0..m {
                let mean: f64 = (0..self.cells).map(|k| v[off + k * m + e]).sum::<f64>() / self.cells as f64;
                for k in 0..self.cells {
                    v[off + k * m + e] -= mean;
                }
            }
        }
    }

    pub fn constraint_residual(&self, x: &[f64]) -> f64 {
        let m = self.d * self.dim;
        let mut worst: f64 = 0.0;
        for (off, b) in self.constrained_blocks() {
            for e in 0..m {
                let mean: f64 = (0..self.cells).map(|k| x[off + k * m + e]).sum::<f64>() / self.cells as f64;
                worst = worst.max((mean - b.as_slice()[e]).abs());
            }
        }
        worst
    }

    pub fn value<'a>(&self, x: &'a [f64], k: usize) -> &'a [f64] {
        &x[k * self.d..(k + 1) * self.d]
    }

    pub fn grad_slice<'a>(&self, x: &'a [f64], k: usize) -> Option<&'a [f64]> {
        if !self.has_grads() {
            return None;
        }
        let m = self.d * self.dim;
        let off = self.grad_offset() + k * m;
        Some(&x[off..off + m])
    }

    pub fn trace(&self, x: &[f64], k: usize, pt: &[f64]) -> Vec<f64> {
        let v = self.value(x, k);
        match self.grad_slice(x, k) {
            None => v.to_vec(),
            Some(g) => {
                let c = &self.centers[k];
                (0..self.d)
                    .map(|i| v[i] + (0..self.dim).map(|j| g[i * self.dim + j] * (pt[j] - c[j])).sum::<f64>())
                    .collect()
            }
        }
    }

    fn aux_mats(&self, x: &[f64], k: usize) -> Vec<Mat> {
        let m = self.d * self.dim;
        (0..self.aux_targets.len())
            .map(|j| {
                let off = self.aux_offset(j) + k * m;
                Mat::from_vec(self.d, self.dim, x[off..off + m].to_vec())
            })
            .collect()
    }

    fn cell_grad(&self, x: &[f64], k: usize) -> Mat {
        match self.grad_slice(x, k) {
            Some(g) => Mat::from_vec(self.d, self.dim, g.to_vec()),
            None => Mat::zeros(self.d, self.dim),
        }
    }

    /// Bulk density of cell `k` (per unit volume).
    pub fn bulk_density(&self, k: usize, g: &Mat, aux: &[Mat]) -> f64 {
        match &self.bulk {
            BulkTerm::None => 0.0,
            BulkTerm::Plain(w) => w.raw(&self.centers[k], g),
            BulkTerm::Coupled(c) => c.eval(g, aux),
        }
    }

    /// `ψ_μ(λ) = ψ(λ/|λ|)(√(|λ|² + μ²) − μ)`; `ψ` itself when `μ = 0`.
    pub fn psi_mu(&self, pt: &[f64], lambda: &[f64], axis: usize, mu: f64) -> f64 {
        let mut nu = vec![0.0; self.dim];
        nu[axis] = 1.0;
        let v = self.psi.raw(pt, lambda, &nu);
        if mu == 0.0 {
            return v;
        }
        let r = linalg::norm(lambda);
        if r == 0.0 {
            return 0.0;
        }
        v / r * ((r * r + mu * mu).sqrt() - mu)
    }

    fn boundary_jump(&self, x: &[f64], i: usize) -> Vec<f64> {
        let f = &self.boundary[i];
        let inner = self.trace(x, f.cell, &f.midpoint);
        match f.side {
            Side::Low => linalg::sub(&inner, &self.bvals[i]),
            Side::High => linalg::sub(&self.bvals[i], &inner),
        }
    }

    pub fn energy(&self, x: &[f64], mu: f64) -> f64 {
        let mut e = 0.0;
        if !matches!(self.bulk, BulkTerm::None) {
            for k in 0..self.cells {
                e += self.vol * self.bulk_density(k, &self.cell_grad(x, k), &self.aux_mats(x, k));
            }
        }
        for f in &self.interior {
            let j = linalg::sub(&self.trace(x, f.plus, &f.midpoint), &self.trace(x, f.minus, &f.midpoint));
            e += self.area * self.psi_mu(&f.midpoint, &j, f.axis, mu);
        }
        for (i, f) in self.boundary.iter().enumerate() {
            e += self.area * self.psi_mu(&f.midpoint, &self.boundary_jump(x, i), f.axis, mu);
        }
        e
    }

    /// Facets touching cell `k`: interior facet indices and boundary facet indices.
    pub fn cell_facets(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut out = vec![(Vec::new(), Vec::new()); self.cells];
        for (i, f) in self.interior.iter().enumerate() {
            out[f.minus].0.push(i);
            out[f.plus].0.push(i);
        }
        for (i, f) in self.boundary.iter().enumerate() {
            out[f.cell].1.push(i);
        }
        out
    }

    /// Surface energy on the given facets only (exact `ψ`).
    pub fn local_surface(&self, x: &[f64], interior: &[usize], boundary: &[usize]) -> f64 {
        let mut e = 0.0;
        for &i in interior {
            let f = &self.interior[i];
            let j = linalg::sub(&self.trace(x, f.plus, &f.midpoint), &self.trace(x, f.minus, &f.midpoint));
            e += self.area * self.psi_mu(&f.midpoint, &j, f.axis, 0.0);
        }
        for &i in boundary {
            e += self.area * self.psi_mu(&self.boundary[i].midpoint, &self.boundary_jump(x, i), self.boundary[i].axis, 0.0);
        }
        e
    }

    /// Energy and its gradient; partial derivatives by central differences
    /// on each cell and facet term.
    pub fn energy_grad(&self, x: &[f64], mu: f64, out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|v| *v = 0.0);
        let m = self.d * self.dim;
        let naux = self.aux_targets.len();
        let mut e = 0.0;
        if !matches!(self.bulk, BulkTerm::None) {
            for k in 0..self.cells {
                let mut g = self.cell_grad(x, k);
                let mut aux = self.aux_mats(x, k);
                e += self.vol * self.bulk_density(k, &g, &aux);
                if self.has_grads() {
                    let off = self.grad_offset() + k * m;
                    for q in 0..m {
                        let v0 = g.as_slice()[q];
                        let s = 1e-6 * v0.abs().max(1.0);
                        g.as_mut_slice()[q] = v0 + s;
                        let up = self.bulk_density(k, &g, &aux);
                        g.as_mut_slice()[q] = v0 - s;
                        let dn = self.bulk_density(k, &g, &aux);
                        g.as_mut_slice()[q] = v0;
                        out[off + q] += self.vol * (up - dn) / (2.0 * s);
                    }
                }
                for j in 0..naux {
                    let off = self.aux_offset(j) + k * m;
                    for q in 0..m {
                        let v0 = aux[j].as_slice()[q];
                        let s = 1e-6 * v0.abs().max(1.0);
                        aux[j].as_mut_slice()[q] = v0 + s;
                        let up = self.bulk_density(k, &g, &aux);
                        aux[j].as_mut_slice()[q] = v0 - s;
                        let dn = self.bulk_density(k, &g, &aux);
                        aux[j].as_mut_slice()[q] = v0;
                        out[off + q] += self.vol * (up - dn) / (2.0 * s);
                    }
                }
            }
        }
        let add_facet = |out: &mut [f64], pt: &[f64], axis: usize, lambda: &[f64], sides: &[(usize, f64)]| -> f64 {
            let val = self.psi_mu(pt, lambda, axis, mu);
            let r = linalg::norm(lambda);
            let mut s = 1e-7 * (1.0 + r);
            if mu > 0.0 {
                s = s.min(1e-3 * mu);
            }
            let mut l = lambda.to_vec();
            let mut gl = vec![0.0; self.d];
            for i in 0..self.d {
                let l0 = l[i];
                l[i] = l0 + s;
                let up = self.psi_mu(pt, &l, axis, mu);
                l[i] = l0 - s;
                let dn = self.psi_mu(pt, &l, axis, mu);
                l[i] = l0;
                gl[i] = self.area * (up - dn) / (2.0 * s);
            }
            for &(k, sign) in sides {
                for i in 0..self.d {
                    out[k * self.d + i] += sign * gl[i];
                }
                if self.has_grads() {
                    let off = self.grad_offset() + k * m;
                    let c = &self.centers[k];
                    for i in 0..self.d {
                        for j in 0..self.dim {
                            out[off + i * self.dim + j] += sign * gl[i] * (pt[j] - c[j]);
                        }
                    }
                }
            }
            self.area * val
        };
        for f in &self.interior {
            let j = linalg::sub(&self.trace(x, f.plus, &f.midpoint), &self.trace(x, f.minus, &f.midpoint));
            e += add_facet(out, &f.midpoint, f.axis, &j, &[(f.plus, 1.0), (f.minus, -1.0)]);
        }
        for (i, f) in self.boundary.iter().enumerate() {
            let j = self.boundary_jump(x, i);
            let sign = match f.side {
                Side::Low => 1.0,
                Side::High => -1.0,
            };
            e += add_facet(out, &f.midpoint, f.axis, &j, &[(f.cell, sign)]);
        }
        e
    }

    pub fn field(&self, x: &[f64]) -> Result<DiscreteSBVField, CellError> {
        let values = x[..self.grad_offset()].to_vec();
        let gradients = if self.has_grads() {
            x[self.grad_offset()..self.grad_offset() + self.block()].to_vec()
        } else {
            vec![0.0; self.block()]
        };
        Ok(DiscreteSBVField::new(self.grid.clone(), values, gradients)?)
    }

    pub fn aux_fields(&self, x: &[f64]) -> Result<Vec<MatrixField>, CellError> {
        (0..self.aux_targets.len())
            .map(|j| {
                let off = self.aux_offset(j);
                Ok(MatrixField::new(self.grid.clone(), x[off..off + self.block()].to_vec())?)
            })
            .collect()
    }

    /// Energy of a field with the datum on the collar, computed from the
    /// field's own jump list.
    pub fn energy_of_field(&self, u: &DiscreteSBVField, aux: &[MatrixField]) -> f64 {
        let mut e = 0.0;
        if !matches!(self.bulk, BulkTerm::None) {
            for k in 0..self.cells {
                let a: Vec<Mat> = aux.iter().map(|f| f.get(k)).collect();
                e += self.vol * self.bulk_density(k, &u.gradient(k), &a);
            }
        }
        for j in u.jumps() {
            e += j.area * self.psi.raw(&j.midpoint, &j.jump, &j.normal);
        }
        for (f, b) in self.boundary.iter().zip(&self.bvals) {
            let inner = u.trace(f.cell, &f.midpoint);
            let jump = match f.side {
                Side::Low => linalg::sub(&inner, b),
                Side::High => linalg::sub(b, &inner),
            };
            let mut nu = vec![0.0; self.dim];
            nu[f.axis] = 1.0;
            e += self.area * self.psi.raw(&f.midpoint, &jump, &nu);
        }
        e
    }

    /// Short-circuit for `λ = θ` and for `A = B` with convex `W`.
    pub fn trivial(&self) -> Option<Raw> {
        let take = match self.kind {
            CellKind::Surface => self.is_trivial_datum,
            CellKind::Bulk => match (&self.bulk, &self.grad) {
                (BulkTerm::Plain(w), Grad::Mean(b)) => {
                    w.convex && !w.x_dependent && self.ext_grads.iter().all(|a| a == b)
                }
                _ => false,
            },
            CellKind::DirichletGeneral => false,
        };
        if !take {
            return None;
        }
        let x = self.start.clone();
        let value = self.energy(&x, 0.0);
        Some(Raw {
            x,
            value,
            path: SolvePath::Trivial,
            iterations: 0,
            restarts_used: 0,
            certified: true,
            gap: 0.0,
            converged: true,
        })
    }

    /// Flat variables of a previous minimizer on a coarser nested grid.
    pub fn flatten_refined(&self, prev: &SolveResult) -> Result<Vec<f64>, CellError> {
        let u = prev.minimizer.refine_to(self.grid.n)?;
        if u.grid().center != self.grid.center || u.grid().side != self.grid.side {
            return Err(CellError::InvalidSpec("ladder entries must share the cube".into()));
        }
        let mut x = vec![0.0; self.len()];
        x[..self.grad_offset()].copy_from_slice(u.values());
        if self.has_grads() {
            let off = self.grad_offset();
            x[off..off + self.block()].copy_from_slice(u.gradients());
        }
        for (j, f) in prev.aux.iter().enumerate() {
            let f = f.refine_to(self.grid.n)?;
            let off = self.aux_offset(j);
            x[off..off + self.block()].copy_from_slice(f.as_slice());
        }
        self.enforce_means(&mut x);
        Ok(x)
    }

    /// Recession-ladder error at the gradients of `u`.
    fn recession_gap(&self, u: &DiscreteSBVField) -> f64 {
        let Some(w) = &self.recession_of else {
            return 0.0;
        };
        (0..self.cells)
            .map(|k| {
                let g = u.gradient(k);
                if g.norm() == 0.0 {
                    return 0.0;
                }
                recession_estimate(w, &self.centers[k], &g, &self.recession_ladder)
                    .map(|e| e.error())
                    .unwrap_or(f64::INFINITY)
                    * self.vol
            })
            .sum()
    }

    pub fn finish(&self, raw: Raw) -> Result<SolveResult, CellError> {
        let minimizer = self.field(&raw.x)?;
        let aux = self.aux_fields(&raw.x)?;
        let recomputed = self.energy_of_field(&minimizer, &aux);
        let mut residual = self.constraint_residual(&raw.x);
        if !self.has_grads() {
            residual = residual.max(minimizer.gradients().iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        let gap = raw.gap + self.recession_gap(&minimizer);
        let sandwich = growth::sandwich(self, raw.value);
        Ok(SolveResult {
            value: raw.value,
            minimizer,
            aux,
            diagnostics: Diagnostics {
                path: raw.path,
                iterations: raw.iterations,
                restarts_used: raw.restarts_used,
                certified: raw.certified,
                gap,
                converged: raw.converged,
                recomputed,
                constraint_residual: residual,
                collar: self.collar,
                sandwich,
            },
            history: vec![(self.grid.n, raw.value)],
        })
    }
}
