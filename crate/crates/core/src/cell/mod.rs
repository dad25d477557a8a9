//! Cell problems, Dirichlet-type functionals and blow-up ladders.
//!
//! Every problem is a minimisation over discrete SBV fields on a cube grid
//! `O`. The boundary datum lives on a collar of cells outside `O`; jumps
//! between the collar and the boundary cells of `O` count as facet jumps.
//! Rotated cubes `Q_ν` are solved in the frame `y = R x` with `Rν = e₁`,
//! which keeps the grid axis-aligned; minimizers are returned in that frame.
//!
//! Two solver paths exist. The exact path covers `N = 1`, convex bulk terms
//! and `ψ = c|λ|`, where Jensen and subadditivity collapse the problem to a
//! scalar convex program. The general path is a projected multi-start
//! L-BFGS on a smoothed surface term followed by jump-placement moves.

pub mod datum;
mod exact;
mod general;
mod growth;
mod problem;

pub use datum::BoundaryDatum;
pub(crate) use exact::midpoint_convex;
pub use growth::Sandwich;

use crate::density::{BulkDensity, DensityError, SurfaceDensity};
use crate::linalg::Mat;
use crate::sbv::{CubeGrid, DiscreteSBVField, MatrixField, SbvError};
use problem::Discrete;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CellError {
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("O is not grid-aligned: {0}")]
    NotGridAligned(String),
    #[error("ladder {0:?} is not nested")]
    NonNested(Vec<usize>),
    #[error("ladder needs at least 3 entries, got {0}")]
    LadderTooShort(usize),
    #[error("cube of side {eps} around {x0:?} leaves the domain")]
    CubeExitsDomain { x0: Vec<f64>, eps: f64 },
    #[error("could not build a feasible starting field: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Sbv(#[from] SbvError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Bulk,
    Surface,
    DirichletGeneral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// L-BFGS iterations per start, spread over the smoothing stages.
    pub iterations: usize,
    /// Starts in addition to the datum extension.
    pub restarts: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            iterations: 600,
            restarts: 2,
        }
    }
}

pub type CoupledFn = Arc<dyn Fn(&Mat, &[Mat]) -> f64 + Send + Sync>;

/// Bulk density of a relaxed energy, `D(∇u, U₁, …, U_k)`, with the `U_i`
/// auxiliary matrix fields.
#[derive(Clone)]
pub struct CoupledDensity {
    pub name: String,
    pub aux: usize,
    pub convex: bool,
    eval: CoupledFn,
}

impl std::fmt::Debug for CoupledDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoupledDensity")
            .field("name", &self.name)
            .field("aux", &self.aux)
            .field("convex", &self.convex)
            .finish_non_exhaustive()
    }
}

impl CoupledDensity {
    pub fn new(name: impl Into<String>, aux: usize, f: CoupledFn) -> Self {
        CoupledDensity {
            name: name.into(),
            aux,
            convex: false,
            eval: f,
        }
    }

    pub fn with_convex(mut self, convex: bool) -> Self {
        self.convex = convex;
        self
    }

    pub fn eval(&self, a: &Mat, us: &[Mat]) -> f64 {
        (self.eval)(a, us)
    }
}

/// What is minimised inside `O`.
#[derive(Clone, Debug)]
pub enum InnerEnergy {
    /// `∫W(x, ∇u) + ∫ψ(x, [u], ν_u)`, with the mean constraint (if any) on `∇u`.
    Plain,
    /// `∫D(∇u, U) + ∫ψ`, mean constraints on the `U_i`. With one mean more
    /// than auxiliary fields the first one constrains `∇u`, otherwise `∇u`
    /// is free.
    Coupled(CoupledDensity),
}

/// One constrained minimisation.
#[derive(Clone, Debug)]
pub struct CellProblemSpec {
    pub kind: CellKind,
    pub w: BulkDensity,
    pub psi: SurfaceDensity,
    pub p: f64,
    pub datum: BoundaryDatum,
    /// `B` for bulk cells; targets for `∇u` (plain) or the `U_i` (coupled).
    pub means: Vec<Mat>,
    /// Cube `O` and its discretisation; `grid.nu` orients `Q_ν`.
    pub grid: CubeGrid,
    /// Point at which cell problems freeze the densities.
    pub x0: Vec<f64>,
    pub collar: usize,
    pub energy: InnerEnergy,
    /// Starting values for the auxiliary fields; targets are their means.
    pub aux_start: Vec<MatrixField>,
    pub budget: Budget,
    pub seed: u64,
    pub tol: f64,
    /// Ladder for `W^∞` when no closed form is declared.
    pub recession_ladder: Vec<f64>,
}

impl CellProblemSpec {
    /// `H_p(x0, A, B)` on the unit cube centred at the origin.
    pub fn bulk(
        w: BulkDensity,
        psi: SurfaceDensity,
        a: Mat,
        b: Mat,
        n: usize,
    ) -> Result<Self, CellError> {
        let (d, dim) = a.shape();
        let grid = CubeGrid::new(dim, d, n, vec![0.0; dim], 1.0)?;
        let p = w.p;
        Ok(Self::base(CellKind::Bulk, w, psi, p, BoundaryDatum::affine(a), vec![b], grid))
    }

    /// `h_p(x0, λ − θ, ν)` on `Q_ν` centred at the origin.
    pub fn surface(
        w: BulkDensity,
        psi: SurfaceDensity,
        p: f64,
        lambda: &[f64],
        theta: &[f64],
        nu: &[f64],
        n: usize,
    ) -> Result<Self, CellError> {
        let dim = nu.len();
        let d = lambda.len();
        if theta.len() != d {
            return Err(CellError::InvalidSpec("λ and θ differ in length".into()));
        }
        let grid = CubeGrid::new(dim, d, n, vec![0.0; dim], 1.0)?.with_normal(nu.to_vec())?;
        let diff: Vec<f64> = lambda.iter().zip(theta).map(|(l, t)| l - t).collect();
        let datum = BoundaryDatum::jump(diff, vec![0.0; d], nu.to_vec());
        Ok(Self::base(CellKind::Surface, w, psi, p, datum, Vec::new(), grid))
    }

    /// `m(datum, means; O)` with `O` the cube of `grid`.
    pub fn dirichlet(
        w: BulkDensity,
        psi: SurfaceDensity,
        datum: BoundaryDatum,
        means: Vec<Mat>,
        grid: CubeGrid,
    ) -> Self {
        let p = w.p;
        Self::base(CellKind::DirichletGeneral, w, psi, p, datum, means, grid)
    }

    fn base(
        kind: CellKind,
        w: BulkDensity,
        psi: SurfaceDensity,
        p: f64,
        datum: BoundaryDatum,
        means: Vec<Mat>,
        grid: CubeGrid,
    ) -> Self {
        let x0 = grid.center.clone();
        CellProblemSpec {
            kind,
            w,
            psi,
            p,
            datum,
            means,
            grid,
            x0,
            collar: 1,
            energy: InnerEnergy::Plain,
            aux_start: Vec::new(),
            budget: Budget::default(),
            seed: 0,
            tol: 1e-9,
            recession_ladder: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_collar(mut self, collar: usize) -> Self {
        self.collar = collar;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.grid = self.grid.with_n(n);
        self
    }

    pub fn with_energy(mut self, energy: InnerEnergy) -> Self {
        self.energy = energy;
        self
    }

    /// Auxiliary starting fields; also fixes their mean targets. A leading
    /// gradient mean is kept.
    pub fn with_aux_start(mut self, aux: Vec<MatrixField>) -> Self {
        let lead = match &self.energy {
            InnerEnergy::Coupled(c) if self.means.len() == c.aux + 1 => Some(self.means[0].clone()),
            _ => None,
        };
        self.means = lead.into_iter().chain(aux.iter().map(|f| f.mean())).collect();
        self.aux_start = aux;
        self
    }

    /// `δ₁(p)`.
    pub fn delta1(&self) -> bool {
        self.p == 1.0
    }

    pub fn validate(&self) -> Result<(), CellError> {
        let g = self.grid.clone().checked()?;
        if !(self.p >= 1.0) {
            return Err(CellError::InvalidSpec(format!("p = {} < 1", self.p)));
        }
        if self.collar < 1 {
            return Err(CellError::InvalidSpec("collar must be at least one cell".into()));
        }
        self.datum.check()?;
        if self.datum.dim() != g.dim || self.datum.codim() != g.d {
            return Err(CellError::InvalidSpec(format!(
                "datum maps R^{} to R^{}, grid expects R^{} to R^{}",
                self.datum.dim(),
                self.datum.codim(),
                g.dim,
                g.d
            )));
        }
        if let BoundaryDatum::Jump { nu, .. } = &self.datum {
            if self.kind == CellKind::Surface && *nu != g.nu {
                return Err(CellError::InvalidSpec("datum normal differs from the cube orientation".into()));
            }
        }
        if self.x0.len() != g.dim {
            return Err(CellError::InvalidSpec("x0 has the wrong length".into()));
        }
        for m in &self.means {
            if m.shape() != (g.d, g.dim) || !m.is_finite() {
                return Err(CellError::InvalidSpec(format!(
                    "mean constraints must be finite {}x{} matrices",
                    g.d, g.dim
                )));
            }
        }
        let want = match (&self.kind, &self.energy) {
            (CellKind::Bulk, _) => Some(1),
            (CellKind::Surface, _) => Some(0),
            (CellKind::DirichletGeneral, InnerEnergy::Coupled(c)) if self.means.len() == c.aux + 1 => None,
            (CellKind::DirichletGeneral, InnerEnergy::Coupled(c)) => Some(c.aux),
            (CellKind::DirichletGeneral, InnerEnergy::Plain) => None,
        };
        let coupled_aux = match &self.energy {
            InnerEnergy::Coupled(c) if self.kind == CellKind::DirichletGeneral => Some(c.aux),
            _ => None,
        };
        match want {
            Some(k) if self.means.len() != k => {
                return Err(CellError::InvalidSpec(format!(
                    "expected {k} mean constraints, got {}",
                    self.means.len()
                )))
            }
            None if coupled_aux.is_none() && self.means.len() > 1 => {
                return Err(CellError::InvalidSpec("plain energy takes at most one mean".into()))
            }
            _ => {}
        }
        if !self.aux_start.is_empty() {
            if Some(self.aux_start.len()) != coupled_aux {
                return Err(CellError::InvalidSpec("one starting field per auxiliary field".into()));
            }
            if self.aux_start.iter().any(|f| f.grid != g) {
                return Err(CellError::InvalidSpec("auxiliary fields must live on the cube grid".into()));
            }
        }
        self.datum.check_alignment(&g)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    Trivial,
    Exact,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub path: SolvePath,
    pub iterations: usize,
    pub restarts_used: usize,
    /// Global optimality is certified (exact path or trivial competitor).
    pub certified: bool,
    /// Smoothing and recession-ladder error bound.
    pub gap: f64,
    pub converged: bool,
    /// Energy of the minimizer recomputed from the field itself.
    pub recomputed: f64,
    /// Largest violation of the mean constraints by the minimizer.
    pub constraint_residual: f64,
    pub collar: usize,
    pub sandwich: Option<Sandwich>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    pub value: f64,
    pub minimizer: DiscreteSBVField,
    pub aux: Vec<MatrixField>,
    pub diagnostics: Diagnostics,
    pub history: Vec<(usize, f64)>,
}

fn solve(spec: &CellProblemSpec, prev: Option<&SolveResult>) -> Result<SolveResult, CellError> {
    spec.validate()?;
    let disc = Discrete::build(spec)?;
    let extra = match prev {
        Some(r) => vec![disc.flatten_refined(r)?],
        None => Vec::new(),
    };
    let out = if let Some(r) = disc.trivial() {
        r
    } else if let Some(r) = exact::solve(&disc)? {
        r
    } else {
        general::solve(&disc, spec.budget, spec.seed, &extra)?
    };
    disc.finish(out)
}

fn check_kind(spec: &CellProblemSpec, kind: CellKind) -> Result<(), CellError> {
    if spec.kind != kind {
        return Err(CellError::InvalidSpec(format!(
            "expected a {kind:?} problem, got {:?}",
            spec.kind
        )));
    }
    Ok(())
}

/// `H_p(x0, A, B)`.
pub fn solve_bulk_cell(spec: &CellProblemSpec) -> Result<SolveResult, CellError> {
    check_kind(spec, CellKind::Bulk)?;
    solve(spec, None)
}

/// `h_p(x0, λ − θ, ν)`.
pub fn solve_surface_cell(spec: &CellProblemSpec) -> Result<SolveResult, CellError> {
    check_kind(spec, CellKind::Surface)?;
    solve(spec, None)
}

/// `m(g, B; O)` or `m_{2,p}(g, B₁, B₂; O)`.
pub fn solve_dirichlet(spec: &CellProblemSpec) -> Result<SolveResult, CellError> {
    check_kind(spec, CellKind::DirichletGeneral)?;
    solve(spec, None)
}

/// Any kind.
pub fn solve_cell(spec: &CellProblemSpec) -> Result<SolveResult, CellError> {
    solve(spec, None)
}

/// Refinement history of a problem on nested grids.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementHistory {
    pub history: Vec<(usize, f64)>,
    /// Every step went down or stayed within `1e-9`.
    pub monotone: bool,
    /// `value(n_{k−1}) − value(n_k)` for the last step.
    pub last_decrement: f64,
    pub results: Vec<SolveResult>,
}

/// Solves `spec` for every `n` of the ladder. Each solve after the first also
/// starts from the previous minimizer, refined.
pub fn refine_ladder(spec: &CellProblemSpec, ns: &[usize]) -> Result<RefinementHistory, CellError> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0] || w[1] % w[0] != 0) {
        return Err(CellError::NonNested(ns.to_vec()));
    }
    let mut results: Vec<SolveResult> = Vec::new();
    let mut history = Vec::new();
    for &n in ns {
        let s = spec.clone().with_n(n);
        let s = if s.aux_start.is_empty() {
            s
        } else {
            let aux = s.aux_start.iter().map(|f| f.refine_to(n)).collect::<Result<Vec<_>, _>>()?;
            s.with_aux_start(aux)
        };
        let mut r = solve(&s, results.last())?;
        history.push((n, r.value));
        r.history = history.clone();
        results.push(r);
    }
    let monotone = history.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    let last_decrement = if history.len() >= 2 {
        history[history.len() - 2].1 - history[history.len() - 1].1
    } else {
        0.0
    };
    Ok(RefinementHistory {
        history,
        monotone,
        last_decrement,
        results,
    })
}

/// Ratios `m/ε^k` on a decreasing ladder of cube sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupReport {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio over the second half of the ladder (at least 3 entries).
    pub estimate: f64,
    /// `max − min` over all ratios.
    pub spread: f64,
    pub results: Vec<SolveResult>,
}

/// Cubes must stay inside this domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Domain {
    fn contains_cube(&self, x0: &[f64], eps: f64, rotated: bool) -> bool {
        let half = if rotated {
            eps * (x0.len() as f64).sqrt() / 2.0
        } else {
            eps / 2.0
        };
        x0.iter()
            .zip(&self.center)
            .all(|(x, c)| (x - c).abs() + half <= self.side / 2.0 + 1e-12)
    }
}

/// Shared settings for the two blow-ups.
#[derive(Clone, Debug)]
pub struct BlowupSetup {
    pub w: BulkDensity,
    pub psi: SurfaceDensity,
    pub energy: InnerEnergy,
    pub domain: Domain,
    pub eps: Vec<f64>,
    pub n: usize,
    pub budget: Budget,
    pub seed: u64,
}

fn check_ladder(eps: &[f64]) -> Result<(), CellError> {
    if eps.len() < 3 {
        return Err(CellError::LadderTooShort(eps.len()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(CellError::InvalidSpec("ε-ladder must be positive and decreasing".into()));
    }
    Ok(())
}

fn ladder_report(eps: Vec<f64>, results: Vec<SolveResult>, power: i32) -> BlowupReport {
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let ratios: Vec<f64> = values.iter().zip(&eps).map(|(v, e)| v / e.powi(power)).collect();
    let tail = (ratios.len() / 2).max(3).min(ratios.len());
    let estimate = ratios[ratios.len() - tail..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    BlowupReport {
        eps,
        values,
        ratios,
        estimate,
        spread: max - min,
        results,
    }
}

/// `m(a + ξ(· − x0), B₁[, B₂]; Q(x0, ε)) / ε^N` along the ladder.
pub fn blowup_bulk(
    setup: &BlowupSetup,
    x0: &[f64],
    a: &[f64],
    xi: &Mat,
    means: &[Mat],
) -> Result<BlowupReport, CellError> {
    check_ladder(&setup.eps)?;
    let (d, dim) = xi.shape();
    let mut results = Vec::new();
    for &eps in &setup.eps {
        if !setup.domain.contains_cube(x0, eps, false) {
            return Err(CellError::CubeExitsDomain {
                x0: x0.to_vec(),
                eps,
            });
        }
        let grid = CubeGrid::new(dim, d, setup.n, x0.to_vec(), eps)?;
        let datum = BoundaryDatum::Affine {
            a: a.to_vec(),
            m: xi.clone(),
            x0: x0.to_vec(),
        };
        let spec = CellProblemSpec::dirichlet(setup.w.clone(), setup.psi.clone(), datum, means.to_vec(), grid)
            .with_energy(setup.energy.clone())
            .with_budget(setup.budget)
            .with_seed(setup.seed);
        results.push(solve_dirichlet(&spec)?);
    }
    Ok(ladder_report(setup.eps.clone(), results, dim as i32))
}

/// `m(v_{λ,θ,ν}(· − x0), 0[, 0]; Q_ν(x0, ε)) / ε^{N−1}` along the ladder.
pub fn blowup_surface(
    setup: &BlowupSetup,
    x0: &[f64],
    lambda: &[f64],
    theta: &[f64],
    nu: &[f64],
) -> Result<BlowupReport, CellError> {
    check_ladder(&setup.eps)?;
    let (d, dim) = (lambda.len(), nu.len());
    let rotated = nu.iter().filter(|v| **v != 0.0).count() > 1;
    let aux = match &setup.energy {
        InnerEnergy::Plain => 0,
        InnerEnergy::Coupled(c) => c.aux,
    };
    let mut results = Vec::new();
    for &eps in &setup.eps {
        if !setup.domain.contains_cube(x0, eps, rotated) {
            return Err(CellError::CubeExitsDomain {
                x0: x0.to_vec(),
                eps,
            });
        }
        let grid = CubeGrid::new(dim, d, setup.n, x0.to_vec(), eps)?.with_normal(nu.to_vec())?;
        let datum = BoundaryDatum::Jump {
            lambda: lambda.to_vec(),
            theta: theta.to_vec(),
            nu: nu.to_vec(),
            x0: x0.to_vec(),
        };
        let means = match aux {
            0 => vec![Mat::zeros(d, dim)],
            k => vec![Mat::zeros(d, dim); k],
        };
        let spec = CellProblemSpec::dirichlet(setup.w.clone(), setup.psi.clone(), datum, means, grid)
            .with_energy(setup.energy.clone())
            .with_budget(setup.budget)
            .with_seed(setup.seed);
        results.push(solve_dirichlet(&spec)?);
    }
    Ok(ladder_report(setup.eps.clone(), results, dim as i32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::catalog;

    fn h(a: f64, b: f64) -> SolveResult {
        let s = CellProblemSpec::bulk(catalog::quadratic(), catalog::norm_jump(), Mat::scalar(a), Mat::scalar(b), 8)
            .unwrap();
        solve_bulk_cell(&s).unwrap()
    }

    #[test]
    fn one_dimensional_bulk_cells() {
        for (a, b, want) in [(1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (2.0, 1.0, 2.0), (-2.0, 1.0, 4.0)] {
            let r = h(a, b);
            assert!((r.value - want).abs() < 1e-12, "H({a},{b}) = {}", r.value);
            assert!((r.diagnostics.recomputed - r.value).abs() < 1e-10);
            assert!(r.diagnostics.certified);
            assert!(r.diagnostics.sandwich.as_ref().unwrap().holds(r.value));
        }
        assert_eq!(h(1.0, 1.0).diagnostics.path, SolvePath::Trivial);
        assert_eq!(h(1.0, 0.0).diagnostics.path, SolvePath::Exact);
    }

    #[test]
    fn surface_cells() {
        let s = CellProblemSpec::surface(catalog::quadratic(), catalog::norm_jump(), 2.0, &[3.0], &[0.0], &[1.0], 8)
            .unwrap();
        assert!((solve_surface_cell(&s).unwrap().value - 3.0).abs() < 1e-12);
        let lin = catalog::bulk("linear").unwrap();
        let two = catalog::surface("scaled-jump").unwrap();
        let s = CellProblemSpec::surface(lin, two, 1.0, &[1.0], &[0.0], &[1.0], 8).unwrap();
        let r = solve_surface_cell(&s).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn general_path_in_two_dimensions() {
        let s = 0.5f64.sqrt();
        let spec = CellProblemSpec::surface(catalog::quadratic(), catalog::norm_jump(), 2.0, &[1.0], &[0.0], &[s, s], 8)
            .unwrap();
        let r = solve_surface_cell(&spec).unwrap();
        assert_eq!(r.diagnostics.path, SolvePath::General);
        assert!((r.value - 1.0).abs() < 1e-3, "{}", r.value);
        assert!((r.diagnostics.recomputed - r.value).abs() < 1e-10);

        let spec = CellProblemSpec::bulk(
            catalog::quadratic(),
            catalog::norm_jump(),
            Mat::from_rows(&[vec![1.0, 0.0]]),
            Mat::from_rows(&[vec![0.0, 0.0]]),
            4,
        )
        .unwrap();
        let r = solve_bulk_cell(&spec).unwrap();
        assert!(r.value <= 1.0 + 1e-9 && r.value >= 1.0 - 1e-6, "{}", r.value);
        assert!(r.diagnostics.constraint_residual < 1e-10);
    }

    #[test]
    fn refine_ladder_rejects_non_nested() {
        let s = CellProblemSpec::bulk(catalog::quadratic(), catalog::norm_jump(), Mat::scalar(1.0), Mat::scalar(0.0), 2)
            .unwrap();
        assert!(matches!(refine_ladder(&s, &[2, 3]), Err(CellError::NonNested(_))));
        let h = refine_ladder(&s, &[2, 4, 8]).unwrap();
        assert!(h.monotone);
        assert!((h.history[2].1 - 1.0).abs() < 1e-6);
    }
}
