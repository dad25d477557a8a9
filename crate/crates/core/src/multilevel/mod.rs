//! Two estimators of the three-level relaxed energy and their comparison.
//!
//! Both return brackets, never point claims.
//!
//! * Direct: the upper end is the boundary-matched energy of explicit
//!   double-indexed families (the three-level staircase construction at tail
//!   indices). The lower end is weak lower semicontinuity:
//!   `∫W(x, G₂) + c_ψ|Dg − G₂ dx|(O)` when `W` is convex in `A`, otherwise
//!   `c_W‖G₂‖_p^p − |O|/c_W + c_ψ|Dg − G₂ dx|(O)`.
//! * Iterated: `H_p` and `h_p` are tabulated from cell solves on a lattice,
//!   then the tabulated energy is relaxed again cell by cell through coupled
//!   Dirichlet problems whose gradient mean is `G₁` and whose auxiliary mean
//!   is `G₂`. Interpolation error measured next to the queried points widens
//!   the bracket. One-dimensional data and `x`-independent densities only.

mod table;

pub use table::{Table1, Table2};

use crate::approx::{build_multilevel_member_with, ApproxError, MultiLevelDeformation};
use crate::cell::{
    midpoint_convex, solve_bulk_cell, solve_dirichlet, solve_surface_cell, BoundaryDatum, CellError,
    CellProblemSpec, CoupledDensity, InnerEnergy, Sandwich,
};
use crate::density::validate::{validate_surface, Hypothesis, VerdictKind};
use crate::linalg::{norm, Mat};
use crate::sbv::{lcm, BlockRule, CubeGrid, DiscreteSBVField, SbvError, Side};
use crate::{BulkDensity, DensityError, SurfaceDensity};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MultilevelError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported by the iterated estimator: {0}")]
    Unsupported(String),
    #[error("estimates belong to different problems ({0} vs {1})")]
    Mismatch(String, String),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Sbv(#[from] SbvError),
    #[error(transparent)]
    Density(#[from] DensityError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Iterated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorOptions {
    /// Outer indices `n₁` of the tail evaluated by the direct estimator.
    pub ladder: Vec<usize>,
    /// `n₂ = inner_factor · n₁`.
    pub inner_factor: usize,
    /// Candidate families for the direct estimator (1 or 2).
    pub families: usize,
    pub lattice_spacing: f64,
    /// The lattice covers at least `[−radius, radius]`.
    pub lattice_radius: f64,
    /// Cells per side of the cell solves.
    pub stage_n: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            ladder: vec![4, 8, 16],
            inner_factor: 4,
            families: 2,
            lattice_spacing: 0.25,
            lattice_radius: 10.5,
            stage_n: 4,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub family: String,
    pub n1: usize,
    pub n2: usize,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeInfo {
    pub spacing: f64,
    pub nodes: usize,
    pub first_stage_solves: usize,
    /// Largest `|table − H_p|` next to the queried points.
    pub bulk_error: f64,
    /// Largest `|table − h_p|` next to the queried jumps.
    pub surface_error: f64,
    /// `h_p = c|λ|` detected on the table.
    pub surface_constant: Option<f64>,
    /// Verdicts of the surface hypotheses on the tabulated `h_p`.
    pub surface_checks: Vec<(String, VerdictKind)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelaxationEstimate {
    pub method: Method,
    /// Hash of the deformation and the densities.
    pub problem: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Family members (direct) or second-stage solves (iterated).
    pub budget_used: usize,
    pub seed: u64,
    /// Every second-stage solve (iterated) certified by the exact path.
    pub certified: bool,
    pub candidates: Vec<Candidate>,
    pub lattice: Option<LatticeInfo>,
    /// Growth bounds computed from `(c_W, C_W, c_ψ, C_ψ)`.
    pub growth: Sandwich,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub pass: bool,
    /// Distance between the brackets, 0 when they intersect.
    pub gap: f64,
    pub tol: f64,
    pub first: (f64, f64),
    pub second: (f64, f64),
}

/// Identity of the problem an estimate belongs to.
pub fn problem_id(ml: &MultiLevelDeformation, w: &BulkDensity, psi: &SurfaceDensity) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(ml).unwrap_or_default());
    for s in [&w.name, &psi.name] {
        h.update([0u8]);
        h.update(s.as_bytes());
    }
    for s in [&w.formula, &psi.formula] {
        h.update([0u8]);
        h.update(s.as_deref().unwrap_or("").as_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// Intersection of the two brackets, each inflated by `tol / 2`.
pub fn compare(e1: &RelaxationEstimate, e2: &RelaxationEstimate, tol: f64) -> Result<Comparison, MultilevelError> {
    if e1.problem != e2.problem {
        return Err(MultilevelError::Mismatch(e1.problem.clone(), e2.problem.clone()));
    }
    let gap = (e1.lower.max(e2.lower) - e1.upper.min(e2.upper)).max(0.0);
    Ok(Comparison {
        pass: gap <= tol,
        gap,
        tol,
        first: (e1.lower, e1.upper),
        second: (e2.lower, e2.upper),
    })
}

/// `∫|G|^p`, `|Dg − G dx|(O)` and friends on the grid of `g`.
struct Data<'a> {
    ml: &'a MultiLevelDeformation,
    vol: f64,
    cell: f64,
    centers: Vec<Vec<f64>>,
}

impl<'a> Data<'a> {
    fn new(ml: &'a MultiLevelDeformation) -> Self {
        let g = ml.g.grid();
        Data {
            ml,
            vol: g.volume(),
            cell: g.cell_volume(),
            centers: (0..g.cells()).map(|k| g.cell_center(k)).collect(),
        }
    }

    /// `|Dg − G₂ dx|(O)`.
    fn defect_variation(&self) -> f64 {
        let g = &self.ml.g;
        let bulk: f64 = (0..self.centers.len())
            .map(|k| g.gradient(k).sub(&self.ml.g2.get(k)).norm() * self.cell)
            .sum();
        bulk + g.jump_variation()
    }

    /// `c_W‖G₂‖_p^p − |O|/c_W + c_ψ|Dg − G₂|`.
    fn coercive_lower(&self, w: &BulkDensity, psi: &SurfaceDensity) -> f64 {
        w.coercivity * self.ml.g2.lp_norm_pow(w.p) - self.vol / w.coercivity + psi.lower * self.defect_variation()
    }

    fn lsc_lower(&self, w: &BulkDensity, psi: &SurfaceDensity) -> (f64, bool) {
        let (d, dim) = self.ml.g2.get(0).shape();
        let convex = w.convex
            && self.centers.iter().take(4).all(|x| {
                let f = |v: &[f64]| w.raw(x, &Mat::from_vec(d, dim, v.to_vec()));
                midpoint_convex(&f, d * dim)
            });
        if !convex {
            return (self.coercive_lower(w, psi), false);
        }
        let bulk: f64 = self
            .centers
            .iter()
            .enumerate()
            .map(|(k, x)| w.raw(x, &self.ml.g2.get(k)) * self.cell)
            .sum();
        (bulk + psi.lower * self.defect_variation(), true)
    }

    /// `(H4)*`-type bounds: the lower end from coercivity, the upper end
    /// `C(|O| + ‖G₁‖₁ + ‖G₂‖_p^p + |Dg|)` with
    /// `C = max(K, K₂) + 2(1 + 2N)C_ψ` and `W ≤ K + K₂|A|^p`.
    fn growth(&self, w: &BulkDensity, psi: &SurfaceDensity) -> Sandwich {
        let (d, dim) = self.ml.g2.get(0).shape();
        let p = w.p;
        let a0 = w.reference_or_zero(d, dim);
        let a = a0.norm();
        let w_a0 = self.centers.iter().map(|x| w.raw(x, &a0)).fold(0.0f64, f64::max);
        let cw = w.lipschitz;
        let k1 = w_a0 + cw * (1.0 + a + a.powf(p - 1.0) + a.powf(p));
        let k2 = cw * (2.0 + a + a.powf(p - 1.0));
        let constant = k1.max(k2) + 2.0 * (1.0 + 2.0 * dim as f64) * psi.upper;
        let mass = self.vol + self.ml.g1.lp_norm_pow(1.0) + self.ml.g2.lp_norm_pow(p) + self.ml.g.total_variation();
        Sandwich {
            lower: self.coercive_lower(w, psi),
            upper: constant * mass,
            constant,
        }
    }
}

/// `E(u)` on `O` plus the cost of the mismatch with `g` on `∂O`.
pub fn collar_energy(
    u: &DiscreteSBVField,
    g: &DiscreteSBVField,
    w: &BulkDensity,
    psi: &SurfaceDensity,
) -> Result<f64, MultilevelError> {
    let n = lcm(u.grid().n, g.grid().n);
    let (u, g) = (u.refine_to(n)?, g.refine_to(n)?);
    let mut e = u.energy(w, psi)?;
    let grid = u.grid();
    let area = grid.facet_area();
    for f in grid.boundary_facets() {
        let ut = u.trace(f.cell, &f.midpoint);
        let gt = g.trace(f.cell, &f.midpoint);
        let jump: Vec<f64> = match f.side {
            Side::Low => ut.iter().zip(&gt).map(|(a, b)| a - b).collect(),
            Side::High => gt.iter().zip(&ut).map(|(a, b)| a - b).collect(),
        };
        if norm(&jump) == 0.0 {
            continue;
        }
        let mut nu = vec![0.0; grid.dim];
        nu[f.axis] = 1.0;
        e += area * psi.eval_surface(&f.midpoint, &jump, &nu)?;
    }
    Ok(e)
}

pub fn relax_direct(
    ml: &MultiLevelDeformation,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    opts: &EstimatorOptions,
) -> Result<RelaxationEstimate, MultilevelError> {
    if opts.families == 0 || opts.ladder.is_empty() || opts.inner_factor == 0 {
        return Err(MultilevelError::Invalid("budget must allow at least one family member".into()));
    }
    let rules = [("staircase-corner", BlockRule::LowerCorner), ("staircase-average", BlockRule::Average)];
    let mut candidates = Vec::new();
    for (name, rule) in rules.iter().take(opts.families) {
        for &n1 in &opts.ladder {
            let n2 = n1 * opts.inner_factor;
            let m = build_multilevel_member_with(ml, n1, n2, *rule)?;
            candidates.push(Candidate {
                family: name.to_string(),
                n1,
                n2,
                energy: collar_energy(&m.u, &ml.g, w, psi)?,
            });
        }
    }
    let upper = candidates.iter().map(|c| c.energy).fold(f64::INFINITY, f64::min);
    let data = Data::new(ml);
    let (lower, convex) = data.lsc_lower(w, psi);
    let mut notes = vec![if convex {
        "lower end from convexity of W and lower semicontinuity of the jump variation".to_string()
    } else {
        "lower end from coercivity of W".to_string()
    }];
    if opts.families > rules.len() {
        notes.push(format!("only {} families available", rules.len()));
    }
    let growth = data.growth(w, psi);
    if !growth.holds(upper) {
        notes.push("growth sandwich violated".into());
    }
    Ok(RelaxationEstimate {
        method: Method::Direct,
        problem: problem_id(ml, w, psi),
        value: upper,
        lower: lower.min(upper),
        upper,
        budget_used: candidates.len(),
        seed: opts.seed,
        certified: lower >= upper - 1e-9 * (1.0 + upper.abs()),
        candidates,
        lattice: None,
        growth,
        notes,
    })
}

/// Runs `f` on every item with `workers` threads; results keep input order.
pub(crate) fn par_map<T: Sync, R: Send, E: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> Result<R, E> + Sync,
) -> Result<Vec<R>, E> {
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let parts: Vec<Result<Vec<R>, E>> = std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Result<Vec<R>, E>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn key(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| (x + 0.0).to_bits()).collect()
}

pub fn relax_iterated(
    ml: &MultiLevelDeformation,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    opts: &EstimatorOptions,
) -> Result<RelaxationEstimate, MultilevelError> {
    let grid = ml.g.grid().clone();
    if grid.dim != 1 || grid.d != 1 {
        return Err(MultilevelError::Unsupported("only N = d = 1".into()));
    }
    if w.x_dependent || psi.x_dependent {
        return Err(MultilevelError::Unsupported("densities must not depend on x".into()));
    }
    if !(opts.lattice_spacing > 0.0) || opts.stage_n == 0 {
        return Err(MultilevelError::Invalid("lattice spacing and stage grid must be positive".into()));
    }
    let data = Data::new(ml);
    let cells = grid.cells();
    let bulk_queries: Vec<[f64; 3]> = (0..cells)
        .map(|k| [ml.g.gradient(k).get(0, 0), ml.g1.get(k).get(0, 0), ml.g2.get(k).get(0, 0)])
        .collect();
    let jumps: Vec<(f64, f64)> = ml
        .g
        .jumps()
        .into_iter()
        .filter(|j| j.jump[0] != 0.0)
        .map(|j| (j.jump[0], j.area))
        .collect();

    let mut points: Vec<f64> = bulk_queries.iter().flatten().copied().collect();
    points.extend(jumps.iter().map(|j| j.0));
    points.push(0.0);
    let nodes = table::lattice(&points, opts.lattice_spacing, opts.lattice_radius);
    let nn = nodes.len();
    let s = opts.stage_n;

    let h_bulk = |a: f64, b: f64| -> Result<f64, MultilevelError> {
        let spec = CellProblemSpec::bulk(w.clone(), psi.clone(), Mat::scalar(a), Mat::scalar(b), s)?.with_seed(opts.seed);
        Ok(solve_bulk_cell(&spec)?.value)
    };
    let h_surf = |l: f64| -> Result<f64, MultilevelError> {
        let spec = CellProblemSpec::surface(w.clone(), psi.clone(), w.p, &[l], &[0.0], &[1.0], s)?.with_seed(opts.seed);
        Ok(solve_surface_cell(&spec)?.value)
    };
    let pairs: Vec<(f64, f64)> = nodes.iter().flat_map(|&a| nodes.iter().map(move |&b| (a, b))).collect();
    let hv = par_map(&pairs, opts.workers, |&(a, b)| h_bulk(a, b))?;
    let sv = par_map(&nodes, opts.workers, |&l| h_surf(l))?;
    let h_table = Arc::new(Table2::new(nodes.clone(), hv));
    let s_table = Table1::new(nodes.clone(), sv);
    let surface_constant = s_table.homogeneous(1e-10);

    let psi2 = match surface_constant {
        Some(c) => {
            let mut d = SurfaceDensity::norm_jump(c);
            d.name = format!("h_p table ({c}|lambda|)");
            d
        }
        None => {
            let t = s_table.clone();
            let lo = nodes
                .iter()
                .zip(&t.values)
                .filter(|(x, _)| **x != 0.0)
                .map(|(x, v)| v / x.abs())
                .fold(f64::INFINITY, f64::min);
            let hi = nodes
                .iter()
                .zip(&t.values)
                .filter(|(x, _)| **x != 0.0)
                .map(|(x, v)| v / x.abs())
                .fold(0.0f64, f64::max);
            SurfaceDensity::from_fn("h_p table", Arc::new(move |_x, l, _n| t.eval(l[0])), lo, hi, false)
        }
    };
    let surface_checks = {
        let r = validate_surface(&psi2, opts.seed, 1000);
        [Hypothesis::Psi2Lower, Hypothesis::Psi2Upper]
            .into_iter()
            .filter_map(|h| r.kind(h).map(|k| (h.label().to_string(), k)))
            .collect::<Vec<_>>()
    };
    let coupled = {
        let t = h_table.clone();
        CoupledDensity::new("H_p table", 1, Arc::new(move |a: &Mat, us: &[Mat]| t.eval(a.get(0, 0), us[0].get(0, 0))))
            .with_convex(w.convex)
    };
    let unit = CubeGrid::new(1, 1, s, vec![0.0], 1.0)?;
    let second = |datum: BoundaryDatum, b1: f64, b2: f64| -> Result<(f64, bool, f64), MultilevelError> {
        let mut spec = CellProblemSpec::dirichlet(w.clone(), psi2.clone(), datum, vec![Mat::scalar(b1), Mat::scalar(b2)], unit.clone())
            .with_energy(InnerEnergy::Coupled(coupled.clone()))
            .with_seed(opts.seed);
        spec.p = 1.0;
        let r = solve_dirichlet(&spec)?;
        let certified = r.diagnostics.certified;
        Ok((r.value, certified, if certified { 0.0 } else { r.diagnostics.gap }))
    };

    let mut unique: BTreeMap<Vec<u64>, [f64; 3]> = BTreeMap::new();
    for q in &bulk_queries {
        unique.entry(key(q)).or_insert(*q);
    }
    let uq: Vec<[f64; 3]> = unique.values().copied().collect();
    let bulk_vals = par_map(&uq, opts.workers, |q| second(BoundaryDatum::affine(Mat::scalar(q[0])), q[1], q[2]))?;
    let bulk_of: BTreeMap<Vec<u64>, (f64, bool, f64)> = uq.iter().map(|q| key(q)).zip(bulk_vals).collect();
    let surf_vals = par_map(&jumps, opts.workers, |&(l, _)| {
        second(BoundaryDatum::jump(vec![l], vec![0.0], vec![1.0]), 0.0, 0.0)
    })?;

    let mut value = 0.0;
    let mut gap = 0.0;
    let mut certified = true;
    for q in &bulk_queries {
        let (v, c, g) = bulk_of[&key(q)];
        value += data.cell * v;
        gap += data.cell * g;
        certified &= c;
    }
    let mut jump_area = 0.0;
    for ((_, area), (v, c, g)) in jumps.iter().zip(&surf_vals) {
        value += area * v;
        gap += area * g;
        certified &= *c;
        jump_area += area;
    }

    // Interpolation error half a spacing away from every queried point.
    let hs = opts.lattice_spacing / 2.0;
    let mut probes: Vec<(f64, f64)> = Vec::new();
    for q in uq.iter().map(|q| (q[1], q[2])).chain(std::iter::once((0.0, 0.0))) {
        for (da, db) in [(hs, hs), (hs, -hs), (-hs, hs), (-hs, -hs)] {
            probes.push((q.0 + da, q.1 + db));
        }
    }
    let truth = par_map(&probes, opts.workers, |&(a, b)| h_bulk(a, b))?;
    let bulk_error = probes
        .iter()
        .zip(&truth)
        .map(|(&(a, b), t)| (h_table.eval(a, b) - t).abs())
        .fold(0.0f64, f64::max);
    let surface_error = if surface_constant.is_some() {
        0.0
    } else {
        let lp: Vec<f64> = jumps.iter().flat_map(|j| [j.0 - hs, j.0 + hs]).collect();
        let tv = par_map(&lp, opts.workers, |&l| h_surf(l))?;
        lp.iter().zip(&tv).map(|(l, t)| (s_table.eval(*l) - t).abs()).fold(0.0f64, f64::max)
    };
    let widen = bulk_error * (data.vol + jump_area) + surface_error * jump_area;

    let mut notes = Vec::new();
    if !certified {
        notes.push("some second-stage solves left the exact path".into());
    }
    if surface_checks.iter().any(|(_, k)| *k == VerdictKind::Fail) {
        notes.push("tabulated h_p fails a growth check".into());
    }
    let growth = data.growth(w, psi);
    if !growth.holds(value) {
        notes.push("growth sandwich violated".into());
    }
    let solves = uq.len() + jumps.len();
    Ok(RelaxationEstimate {
        method: Method::Iterated,
        problem: problem_id(ml, w, psi),
        value,
        lower: value - widen - gap,
        upper: value + widen,
        budget_used: solves,
        seed: opts.seed,
        certified,
        candidates: Vec::new(),
        lattice: Some(LatticeInfo {
            spacing: opts.lattice_spacing,
            nodes: nn,
            first_stage_solves: nn * nn + nn,
            bulk_error,
            surface_error,
            surface_constant,
            surface_checks,
        }),
        growth,
        notes,
    })
}

/// Both estimates with their comparison.
pub fn estimate_both(
    ml: &MultiLevelDeformation,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    opts: &EstimatorOptions,
    tol: f64,
) -> Result<(RelaxationEstimate, RelaxationEstimate, Comparison), MultilevelError> {
    let d = relax_direct(ml, w, psi, opts)?;
    let i = relax_iterated(ml, w, psi, opts)?;
    let c = compare(&d, &i, tol)?;
    Ok((d, i, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::Integrability;
    use crate::density::catalog;
    use crate::sbv::MatrixField;

    fn line(n: usize) -> CubeGrid {
        CubeGrid::unit(1, 1, n).unwrap()
    }

    fn affine(a: f64, g1: f64, g2: f64) -> MultiLevelDeformation {
        MultiLevelDeformation::constant(line(1), &[0.5 * a], &Mat::scalar(a), &Mat::scalar(g1), &Mat::scalar(g2), 2.0).unwrap()
    }

    #[test]
    fn affine_case_is_exact_for_both() {
        let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
        let ml = affine(1.5, 1.5, 1.5);
        let o = EstimatorOptions::default();
        let (d, i, c) = estimate_both(&ml, &w, &psi, &o, 5e-2).unwrap();
        assert!((d.value - 2.25).abs() < 1e-9, "{d:?}");
        assert!((i.value - 2.25).abs() < 1e-9, "{i:?}");
        assert!(c.pass);
    }

    #[test]
    fn staircase_case_brackets_one() {
        let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
        let ml = affine(1.0, 0.0, 0.0);
        let o = EstimatorOptions::default();
        let (d, i, c) = estimate_both(&ml, &w, &psi, &o, 5e-2).unwrap();
        assert!(d.lower <= 1.0 + 1e-9 && 1.0 <= d.upper + 1e-9, "{d:?}");
        assert!(i.lower <= 1.0 + 1e-9 && 1.0 <= i.upper + 1e-9, "{i:?}");
        assert!(c.pass);
    }

    #[test]
    fn single_jump_costs_its_size() {
        let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
        let g = DiscreteSBVField::new(line(2), vec![0.0, 0.7], vec![0.0, 0.0]).unwrap();
        let z = MatrixField::constant(line(2), &Mat::scalar(0.0)).unwrap();
        let ml = MultiLevelDeformation::new(g, z.clone(), z, 2.0, Integrability::Hsd).unwrap();
        let (d, i, c) = estimate_both(&ml, &w, &psi, &EstimatorOptions::default(), 5e-2).unwrap();
        assert!((d.value - 0.7).abs() < 1e-9);
        assert!((i.value - 0.7).abs() < 1e-9);
        assert!(c.pass);
    }

    #[test]
    fn compare_reports_gaps() {
        let (w, psi) = (catalog::quadratic(), catalog::norm_jump());
        let ml = affine(1.0, 1.0, 1.0);
        let mut a = relax_direct(&ml, &w, &psi, &EstimatorOptions::default()).unwrap();
        let mut b = a.clone();
        (a.lower, a.upper, b.lower, b.upper) = (1.0, 1.02, 1.01, 1.05);
        assert!(compare(&a, &b, 0.0).unwrap().pass);
        (b.lower, b.upper) = (1.2, 1.3);
        let c = compare(&a, &b, 5e-2).unwrap();
        assert!(!c.pass && (c.gap - 0.18).abs() < 1e-12);
        b.problem = "other".into();
        assert!(compare(&a, &b, 0.0).is_err());
    }
}
