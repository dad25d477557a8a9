//! One runner per command. Each returns its CSV table and a JSON summary.
//!
//! CSV columns after `config_hash`:
//!
//! | command | columns |
//! |---|---|
//! | relax-bulk, relax-surface, dirichlet | `n, value, path, certified, gap, converged, iterations, sandwich_lower, sandwich_upper, sandwich_holds` |
//! | blowup | `eps, value, ratio, path, certified, sandwich_holds` |
//! | approx | `quantity, index, value, tolerance, pass` |
//! | multilevel | `method, value, lower, upper, certified, budget_used, gap, pass` |
//! | validate | `density, kind, hypothesis, verdict, violations, worst_ratio` |
//! | catalog | `name, kind, formula, constants, core` |

use super::{list_catalog, Artifacts, CliError, Command, MatrixSpec, Params, RunConfig, Table};
use crate::approx::{
    build_multilevel_sequence, sequence_decay, verify_hsd_convergence, Integrability, MultiLevelDeformation,
    StructuredDeformation, Tolerances,
};
use crate::cell::{
    blowup_bulk, blowup_surface, refine_ladder, solve_cell, BlowupSetup, BoundaryDatum, Budget, CellProblemSpec,
    Domain, InnerEnergy, SolvePath, SolveResult,
};
use crate::density::{catalog, validate_bulk, validate_surface, BulkDensity, SurfaceDensity, ValidationReport};
use crate::linalg::Mat;
use crate::multilevel::{estimate_both, par_map, EstimatorOptions};
use crate::sbv::{CubeGrid, DiscreteSBVField, MatrixField};
use serde_json::json;

pub(super) fn execute(cfg: &RunConfig, workers: usize) -> Result<Artifacts, CliError> {
    match cfg.command {
        Command::RelaxBulk => relax_bulk(cfg),
        Command::RelaxSurface => relax_surface(cfg),
        Command::Dirichlet => dirichlet(cfg),
        Command::Blowup => blowup(cfg),
        Command::Approx => approx(cfg),
        Command::Multilevel => multilevel(cfg, workers),
        Command::Validate => validate(cfg, workers),
        Command::Catalog => Ok(Artifacts {
            table: list_catalog(),
            json: json!(catalog::list_catalog()
                .iter()
                .map(|e| json!({"name": e.name, "kind": e.kind, "formula": e.formula, "constants": e.constants, "core": e.core}))
                .collect::<Vec<_>>()),
        }),
    }
}

/// Shortest round-trip text, in exponent form far from unity.
pub(super) fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Config(format!("missing parameter `{what}`")))
}

fn mat(v: &Option<MatrixSpec>, what: &str) -> Result<Option<Mat>, CliError> {
    v.as_ref().map(|m| m.to_mat(what)).transpose()
}

fn check_len(v: &[f64], n: usize, what: &str) -> Result<(), CliError> {
    if v.len() != n {
        return Err(CliError::Config(format!("`{what}` has length {}, expected {n}", v.len())));
    }
    Ok(())
}

fn check_shape(m: &Mat, shape: (usize, usize), what: &str) -> Result<(), CliError> {
    if m.shape() != shape {
        return Err(CliError::Config(format!(
            "`{what}` is {}×{}, expected {}×{}",
            m.rows(),
            m.cols(),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

/// `(d, N)` against the declared dimensions of the densities.
fn check_dims(w: &BulkDensity, psi: &SurfaceDensity, d: usize, dim: usize) -> Result<(), CliError> {
    for (name, dims) in [(&w.name, w.dims), (&psi.name, psi.dims)] {
        if let Some((n, dd)) = dims {
            if (n, dd) != (dim, d) {
                return Err(CliError::Config(format!(
                    "density `{name}` is declared for N = {n}, d = {dd}, parameters have N = {dim}, d = {d}"
                )));
            }
        }
    }
    Ok(())
}

fn budget(p: &Params) -> Budget {
    let b = Budget::default();
    Budget {
        iterations: p.iterations.unwrap_or(b.iterations),
        restarts: p.restarts.unwrap_or(b.restarts),
    }
}

fn finish_spec(spec: CellProblemSpec, cfg: &RunConfig) -> CellProblemSpec {
    let p = &cfg.params;
    let mut s = spec.with_seed(cfg.seed).with_budget(budget(p));
    if let Some(c) = p.collar {
        s = s.with_collar(c);
    }
    if let Some(x0) = &p.x0 {
        s = s.with_x0(x0.clone());
    }
    s
}

fn path_name(p: SolvePath) -> &'static str {
    match p {
        SolvePath::Trivial => "trivial",
        SolvePath::Exact => "exact",
        SolvePath::General => "general",
    }
}

const SOLVE_COLUMNS: &[&str] = &[
    "n",
    "value",
    "path",
    "certified",
    "gap",
    "converged",
    "iterations",
    "sandwich_lower",
    "sandwich_upper",
    "sandwich_holds",
];

fn solve_summary(r: &SolveResult) -> serde_json::Value {
    json!({
        "n": r.minimizer.grid().n,
        "value": r.value,
        "diagnostics": r.diagnostics,
        "values": r.minimizer.values(),
        "gradients": r.minimizer.gradients(),
    })
}

/// Solves once, or along `params.ladder` when given.
fn solve_table(spec: CellProblemSpec, cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (results, monotone) = match &cfg.params.ladder {
        Some(ns) => {
            let h = refine_ladder(&spec, ns)?;
            (h.results, Some(h.monotone))
        }
        None => (vec![solve_cell(&spec)?], None),
    };
    let mut table = Table::new(SOLVE_COLUMNS);
    for r in &results {
        let d = &r.diagnostics;
        let (lo, hi, holds) = match &d.sandwich {
            Some(s) => (num(s.lower), num(s.upper), s.holds(r.value).to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        table.push(vec![
            r.minimizer.grid().n.to_string(),
            num(r.value),
            path_name(d.path).into(),
            d.certified.to_string(),
            num(d.gap),
            d.converged.to_string(),
            d.iterations.to_string(),
            lo,
            hi,
            holds,
        ]);
    }
    let json = json!({
        "kind": spec.kind,
        "bulk": spec.w.name,
        "surface": spec.psi.name,
        "p": spec.p,
        "monotone": monotone,
        "results": results.iter().map(solve_summary).collect::<Vec<_>>(),
    });
    Ok(Artifacts { table, json })
}

fn relax_bulk(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = &cfg.params;
    let (w, psi) = (cfg.bulk_density()?, cfg.surface_density()?);
    let a = mat(&p.a, "A")?.ok_or_else(|| CliError::Config("missing parameter `A`".into()))?;
    let b = mat(&p.b, "B")?.unwrap_or_else(|| Mat::zeros(a.rows(), a.cols()));
    check_shape(&b, a.shape(), "B")?;
    check_dims(&w, &psi, a.rows(), a.cols())?;
    let spec = CellProblemSpec::bulk(w, psi, a, b, p.n.unwrap_or(8))?;
    solve_table(finish_spec(spec, cfg), cfg)
}

fn relax_surface(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = &cfg.params;
    let (w, psi) = (cfg.bulk_density()?, cfg.surface_density()?);
    let lambda = need(&p.lambda, "lambda")?;
    let theta = p.theta.clone().unwrap_or_else(|| vec![0.0; lambda.len()]);
    check_len(&theta, lambda.len(), "theta")?;
    let nu = p.nu.clone().unwrap_or_else(|| vec![1.0]);
    check_dims(&w, &psi, lambda.len(), nu.len())?;
    let pp = p.p.unwrap_or(w.p);
    let spec = CellProblemSpec::surface(w, psi, pp, lambda, &theta, &nu, p.n.unwrap_or(8))?;
    solve_table(finish_spec(spec, cfg), cfg)
}

/// Jump datum when `lambda` is given, affine `offset + A(x − center)` otherwise.
fn datum(p: &Params, center: &[f64]) -> Result<(BoundaryDatum, usize, usize), CliError> {
    if let Some(lambda) = &p.lambda {
        let nu = need(&p.nu, "nu")?.clone();
        check_len(&nu, center.len(), "nu")?;
        let theta = p.theta.clone().unwrap_or_else(|| vec![0.0; lambda.len()]);
        check_len(&theta, lambda.len(), "theta")?;
        let d = lambda.len();
        Ok((
            BoundaryDatum::Jump {
                lambda: lambda.clone(),
                theta,
                nu,
                x0: center.to_vec(),
            },
            d,
            center.len(),
        ))
    } else {
        let m = mat(&p.a, "A")?.ok_or_else(|| CliError::Config("missing parameter `A` or `lambda`".into()))?;
        check_len(center, m.cols(), "center")?;
        let a = p.offset.clone().unwrap_or_else(|| vec![0.0; m.rows()]);
        check_len(&a, m.rows(), "offset")?;
        let (d, n) = m.shape();
        Ok((
            BoundaryDatum::Affine {
                a,
                m,
                x0: center.to_vec(),
            },
            d,
            n,
        ))
    }
}

fn means(p: &Params, d: usize, dim: usize, default_zero: bool) -> Result<Vec<Mat>, CliError> {
    let list = match (&p.means, &p.b) {
        (Some(ms), _) => ms.iter().map(|m| m.to_mat("means")).collect::<Result<Vec<_>, _>>()?,
        (None, Some(b)) => vec![b.to_mat("B")?],
        (None, None) if default_zero => vec![Mat::zeros(d, dim)],
        (None, None) => Vec::new(),
    };
    for m in &list {
        check_shape(m, (d, dim), "means")?;
    }
    Ok(list)
}

fn dirichlet(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = &cfg.params;
    let (w, psi) = (cfg.bulk_density()?, cfg.surface_density()?);
    let dim = match (&p.center, &p.nu, mat(&p.a, "A")?) {
        (Some(c), _, _) => c.len(),
        (None, Some(nu), _) => nu.len(),
        (None, None, Some(m)) => m.cols(),
        _ => return Err(CliError::Config("cannot infer N: give `center`, `nu` or `A`".into())),
    };
    let center = p.center.clone().unwrap_or_else(|| vec![0.0; dim]);
    let (datum, d, dim) = datum(p, &center)?;
    check_dims(&w, &psi, d, dim)?;
    let ms = means(p, d, dim, false)?;
    let mut grid = CubeGrid::new(dim, d, p.n.unwrap_or(8), center, p.side.unwrap_or(1.0))?;
    if let Some(nu) = &p.nu {
        grid = grid.with_normal(nu.clone())?;
    }
    let spec = CellProblemSpec::dirichlet(w, psi, datum, ms, grid);
    solve_table(finish_spec(spec, cfg), cfg)
}

fn blowup(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = &cfg.params;
    let (w, psi) = (cfg.bulk_density()?, cfg.surface_density()?);
    let eps = p.eps.clone().unwrap_or_else(|| vec![1.0, 0.5, 0.25]);
    let mode = p.mode.unwrap_or_default();
    let dim = match mode {
        super::BlowupMode::Bulk => mat(&p.a, "A")?.map(|m| m.cols()),
        super::BlowupMode::Surface => p.nu.as_ref().map(Vec::len),
    }
    .ok_or_else(|| CliError::Config("missing parameter `A` (bulk) or `nu` (surface)".into()))?;
    let x0 = p.x0.clone().unwrap_or_else(|| vec![0.0; dim]);
    check_len(&x0, dim, "x0")?;
    let e0 = eps.first().copied().unwrap_or(1.0);
    let domain = Domain {
        center: p.domain_center.clone().unwrap_or_else(|| x0.clone()),
        side: p.domain_side.unwrap_or(2.0 * e0 * (dim as f64).sqrt()),
    };
    let setup = BlowupSetup {
        w: w.clone(),
        psi: psi.clone(),
        energy: InnerEnergy::Plain,
        domain,
        eps,
        n: p.n.unwrap_or(8),
        budget: budget(p),
        seed: cfg.seed,
    };
    let (report, power) = match mode {
        super::BlowupMode::Bulk => {
            let xi = mat(&p.a, "A")?.unwrap();
            let (d, dim) = xi.shape();
            check_dims(&w, &psi, d, dim)?;
            let a = p.offset.clone().unwrap_or_else(|| vec![0.0; d]);
            check_len(&a, d, "offset")?;
            let ms = means(p, d, dim, true)?;
            (blowup_bulk(&setup, &x0, &a, &xi, &ms)?, dim as i32)
        }
        super::BlowupMode::Surface => {
            let lambda = need(&p.lambda, "lambda")?;
            let theta = p.theta.clone().unwrap_or_else(|| vec![0.0; lambda.len()]);
            check_len(&theta, lambda.len(), "theta")?;
            let nu = p.nu.clone().unwrap();
            check_dims(&w, &psi, lambda.len(), dim)?;
            (blowup_surface(&setup, &x0, lambda, &theta, &nu)?, dim as i32 - 1)
        }
    };
    let mut table = Table::new(&["eps", "value", "ratio", "path", "certified", "sandwich_holds"]);
    for ((e, r), ratio) in report.eps.iter().zip(&report.results).zip(&report.ratios) {
        let d = &r.diagnostics;
        table.push(vec![
            num(*e),
            num(r.value),
            num(*ratio),
            path_name(d.path).into(),
            d.certified.to_string(),
            d.sandwich.as_ref().map_or(String::new(), |s| s.holds(r.value).to_string()),
        ]);
    }
    let json = json!({
        "mode": mode,
        "power": power,
        "eps": report.eps,
        "values": report.values,
        "ratios": report.ratios,
        "estimate": report.estimate,
        "spread": report.spread,
        "diagnostics": report.results.iter().map(|r| &r.diagnostics).collect::<Vec<_>>(),
    });
    Ok(Artifacts { table, json })
}

/// `g` from `field`, or `g(x) = offset + A(x − center)` on the unit cube
/// with `offset` defaulting to `A·center`.
fn deformation(p: &Params) -> Result<DiscreteSBVField, CliError> {
    if let Some(f) = &p.field {
        let grid = CubeGrid::unit(f.dim, f.d, f.n)?;
        return Ok(DiscreteSBVField::new(grid, f.values.clone(), f.gradients.clone())?);
    }
    let m = mat(&p.a, "A")?.ok_or_else(|| CliError::Config("missing parameter `A` or `field`".into()))?;
    let (d, dim) = m.shape();
    let grid = CubeGrid::unit(dim, d, p.n.unwrap_or(1))?;
    let offset = p.offset.clone().unwrap_or_else(|| m.mul_vec(&grid.center));
    check_len(&offset, d, "offset")?;
    let c = grid.center.clone();
    Ok(DiscreteSBVField::affine(grid, &offset, &m, &c)?)
}

fn constant(g: &DiscreteSBVField, v: &Option<MatrixSpec>, what: &str) -> Result<MatrixField, CliError> {
    let m = mat(v, what)?.ok_or_else(|| CliError::Config(format!("missing parameter `{what}`")))?;
    let grid = g.grid();
    check_shape(&m, (grid.d, grid.dim), what)?;
    Ok(MatrixField::constant(grid.clone(), &m)?)
}

fn multilevel_target(cfg: &RunConfig) -> Result<MultiLevelDeformation, CliError> {
    let p = &cfg.params;
    let g = deformation(p)?;
    let g1 = constant(&g, &p.g1, "G1")?;
    let g2 = constant(&g, &p.g2, "G2")?;
    let mode = p.integrability.unwrap_or(Integrability::Hsd);
    Ok(MultiLevelDeformation::new(g, g1, g2, p.p.unwrap_or(2.0), mode)?)
}

fn approx(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let p = &cfg.params;
    let mut table = Table::new(&["quantity", "index", "value", "tolerance", "pass"]);
    if p.g1.is_some() || p.g2.is_some() {
        let ml = multilevel_target(cfg)?;
        let t = &cfg.tolerances;
        let d = Tolerances::default();
        let tol = Tolerances {
            strong: t.strong.unwrap_or(d.strong),
            weak: t.weak.unwrap_or(d.weak),
            inner_factor: t.inner_factor.or(d.inner_factor),
        };
        let ladder = p.ladder.clone().unwrap_or_else(|| vec![2, 4, 8]);
        let fam = |a: usize, b: usize| build_multilevel_sequence(&ml, a, b);
        let report = verify_hsd_convergence(&fam, &ml, &ladder, p.order.unwrap_or_default(), &tol)?;
        for v in &report.verdicts {
            for (m, x) in ladder.iter().zip(&v.values) {
                table.push(vec![format!("clause-{}", v.clause), m.to_string(), num(*x), num(v.tolerance), v.pass.to_string()]);
            }
        }
        table.push(vec!["passed".into(), String::new(), String::new(), String::new(), report.passed.to_string()]);
        let json = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
        return Ok(Artifacts { table, json });
    }
    let g = deformation(p)?;
    let big_g = constant(&g, &p.big_g, "G")?;
    let sd = StructuredDeformation::new(g, big_g, p.p.unwrap_or(2.0))?;
    let ladder = p.ladder.clone().unwrap_or_else(|| vec![4, 8, 16]);
    let decay = sequence_decay(&sd, &ladder)?;
    for (n, e) in decay.ns.iter().zip(&decay.distances) {
        table.push(vec!["l1-distance".into(), n.to_string(), num(*e), String::new(), String::new()]);
    }
    if let Some(r) = decay.rate {
        table.push(vec!["rate".into(), String::new(), num(r), String::new(), String::new()]);
    }
    let json = serde_json::to_value(&decay).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Artifacts { table, json })
}

fn multilevel(cfg: &RunConfig, workers: usize) -> Result<Artifacts, CliError> {
    let (w, psi) = (cfg.bulk_density()?, cfg.surface_density()?);
    let ml = multilevel_target(cfg)?;
    let mut opts = cfg.params.estimator.clone().unwrap_or_else(EstimatorOptions::default);
    opts.seed = cfg.seed;
    if workers > 1 {
        opts.workers = workers;
    }
    let tol = cfg.tolerances.compare.unwrap_or(5e-2);
    let (direct, iterated, cmp) = estimate_both(&ml, &w, &psi, &opts, tol)?;
    let mut table = Table::new(&["method", "value", "lower", "upper", "certified", "budget_used", "gap", "pass"]);
    for (name, e) in [("direct", &direct), ("iterated", &iterated)] {
        table.push(vec![
            name.into(),
            num(e.value),
            num(e.lower),
            num(e.upper),
            e.certified.to_string(),
            e.budget_used.to_string(),
            num(cmp.gap),
            cmp.pass.to_string(),
        ]);
    }
    let json = json!({"direct": direct, "iterated": iterated, "comparison": cmp});
    Ok(Artifacts { table, json })
}

enum Target {
    Bulk(BulkDensity),
    Surface(SurfaceDensity),
}

fn validate(cfg: &RunConfig, workers: usize) -> Result<Artifacts, CliError> {
    let mut targets = Vec::new();
    if cfg.bulk.is_some() {
        targets.push(Target::Bulk(cfg.bulk_density()?));
    }
    if cfg.surface.is_some() {
        targets.push(Target::Surface(cfg.surface_density()?));
    }
    for name in cfg.params.names.iter().flatten() {
        let t = match (catalog::bulk(name), catalog::surface(name)) {
            (Some(w), _) => Target::Bulk(w),
            (None, Some(s)) => Target::Surface(s),
            (None, None) => return Err(CliError::Config(format!("unknown catalog density `{name}`"))),
        };
        targets.push(t);
    }
    if targets.is_empty() {
        return Err(CliError::Config("nothing to validate: give `bulk`, `surface` or `params.names`".into()));
    }
    let samples = cfg.params.samples.unwrap_or(10_000);
    let seed = cfg.seed;
    let reports: Vec<(&str, ValidationReport)> = par_map(&targets, workers, |t| {
        Ok::<_, CliError>(match t {
            Target::Bulk(w) => ("bulk", validate_bulk(w, seed, samples)),
            Target::Surface(s) => ("surface", validate_surface(s, seed, samples)),
        })
    })?;
    let mut table = Table::new(&["density", "kind", "hypothesis", "verdict", "violations", "worst_ratio"]);
    for (kind, r) in &reports {
        for v in &r.verdicts {
            let verdict = serde_json::to_value(v.kind).map_err(|e| CliError::Io(e.to_string()))?;
            table.push(vec![
                r.density.clone(),
                kind.to_string(),
                v.hypothesis.label().into(),
                verdict.as_str().unwrap_or_default().to_string(),
                v.violations.to_string(),
                v.witness.as_ref().map_or(String::new(), |w| num(w.ratio)),
            ]);
        }
    }
    let json = json!(reports.iter().map(|(_, r)| r).collect::<Vec<_>>());
    Ok(Artifacts { table, json })
}
