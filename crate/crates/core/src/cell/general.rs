//! Projected multi-start local search.
//!
//! Each start runs L-BFGS with Armijo backtracking on a smoothed surface
//! term, driving the smoothing `μ` down by decades, then sweeps
//! jump-placement moves on the cell values with the exact energy. The
//! best exact energy over all starts wins; ties go to the lexicographically
//! smallest serialised field.

use super::problem::{Discrete, Raw};
use super::{Budget, CellError, SolvePath};
use crate::linalg;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

const STAGES: usize = 6;
const MEMORY: usize = 8;

struct Outcome {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    linalg::dot(a, b)
}

/// L-BFGS on the feasible affine set for one value of `μ`.
fn lbfgs(disc: &Discrete, x: &mut Vec<f64>, mu: f64, iters: usize) -> (usize, bool) {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut f = disc.energy_grad(x, mu, &mut g);
    disc.project(&mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut stall = 0;
    for it in 0..iters {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= 1e-11 * (1.0 + f.abs()) {
            return (it, true);
        }
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / gmax.max(1e-300);
            q.iter_mut().for_each(|v| *v *= scale.min(1.0));
        }
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        disc.project(&mut dir);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
            if !(slope < 0.0) {
                return (it, true);
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        let mut trial = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        for _ in 0..50 {
            trial.iter_mut().zip(x.iter().zip(&dir)).for_each(|(t, (xi, di))| *t = xi + step * di);
            let f_new = disc.energy_grad(&trial, mu, &mut g_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            return (it, true);
        };
        disc.project(&mut g_new);
        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let decrease = f - f_new;
        std::mem::swap(x, &mut trial);
        g.copy_from_slice(&g_new);
        f = f_new;
        if decrease <= 1e-14 * (1.0 + f.abs()) {
            stall += 1;
            if stall >= 5 {
                return (it + 1, true);
            }
        } else {
            stall = 0;
        }
    }
    (iters, false)
}

/// Moves each cell value so that one of its facet traces matches the
/// neighbour (or the datum), whenever that lowers the exact energy.
fn polish(disc: &Discrete, x: &mut [f64]) {
    let adj = disc.cell_facets();
    let d = disc.d;
    for _ in 0..100 {
        let mut changed = false;
        for k in 0..disc.cells {
            let (int, bnd) = &adj[k];
            let base = disc.local_surface(x, int, bnd);
            let mut cands: Vec<Vec<f64>> = Vec::new();
            for &i in int {
                let f = &disc.interior[i];
                let other = if f.plus == k { f.minus } else { f.plus };
                let target = disc.trace(x, other, &f.midpoint);
                let own = disc.trace(x, k, &f.midpoint);
                cands.push(linalg::add(disc.value(x, k), &linalg::sub(&target, &own)));
            }
            for &i in bnd {
                let f = &disc.boundary[i];
                let own = disc.trace(x, k, &f.midpoint);
                cands.push(linalg::add(disc.value(x, k), &linalg::sub(&disc.bvals[i], &own)));
            }
            let old = disc.value(x, k).to_vec();
            let mut best = (base, old.clone());
            for c in cands {
                x[k * d..(k + 1) * d].copy_from_slice(&c);
                let e = disc.local_surface(x, int, bnd);
                if e < best.0 - 1e-14 * (1.0 + base.abs()) {
                    best = (e, c);
                }
            }
            x[k * d..(k + 1) * d].copy_from_slice(&best.1);
            if best.1 != old {
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

fn scale_of(disc: &Discrete) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in disc.bvals.iter().flatten() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let spread = if hi > lo { hi - lo } else { 0.0 };
    spread.max(1e-3 * disc.grid.side).max(1e-6)
}

fn run_start(disc: &Discrete, mut x: Vec<f64>, budget: Budget) -> Outcome {
    let scale = scale_of(disc);
    let per_stage = (budget.iterations / STAGES).max(1);
    let mut iterations = 0;
    let mut converged = false;
    for stage in 0..STAGES {
        let mu = 0.1 * scale * 10f64.powi(-(stage as i32));
        let (it, ok) = lbfgs(disc, &mut x, mu, per_stage);
        iterations += it;
        converged = ok;
        disc.enforce_means(&mut x);
    }
    polish(disc, &mut x);
    Outcome {
        x,
        iterations,
        converged,
    }
}

fn perturbed(disc: &Discrete, seed: u64, r: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let scale = scale_of(disc);
    let mut x = disc.start.clone();
    let nv = disc.grad_offset();
    for v in x[..nv].iter_mut() {
        *v += 0.5 * scale * rng.gen_range(-1.0..1.0);
    }
    for v in x[nv..].iter_mut() {
        *v += 0.5 * rng.gen_range(-1.0..1.0);
    }
    disc.enforce_means(&mut x);
    x
}

pub(super) fn solve(disc: &Discrete, budget: Budget, seed: u64, extra: &[Vec<f64>]) -> Result<Raw, CellError> {
    let mut starts = vec![disc.start.clone()];
    starts.extend(extra.iter().cloned());
    starts.extend((1..=budget.restarts).map(|r| perturbed(disc, seed, r)));

    let mut best: Option<(f64, String, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = true;
    let consider = |best: &mut Option<(f64, String, Vec<f64>)>, x: Vec<f64>| -> Result<(), CellError> {
        let e = disc.energy(&x, 0.0);
        if !e.is_finite() {
            return Ok(());
        }
        let tie = 1e-12 * (1.0 + e.abs());
        let replace = match best {
            None => true,
            Some((b, key, _)) => {
                if e < *b - tie {
                    true
                } else if e <= *b + tie {
                    let k = disc.field(&x)?.to_json();
                    k < *key
                } else {
                    false
                }
            }
        };
        if replace {
            let key = disc.field(&x)?.to_json();
            *best = Some((e, key, x));
        }
        Ok(())
    };
    for x in starts.iter().take(1 + extra.len()) {
        consider(&mut best, x.clone())?;
    }
    for x in starts.iter() {
        let out = run_start(disc, x.clone(), budget);
        iterations += out.iterations;
        converged &= out.converged;
        consider(&mut best, out.x)?;
    }
    let (value, _, x) = best.ok_or_else(|| CellError::Infeasible("no finite energy among the starts".into()))?;
    let skeleton = (disc.interior.len() + disc.boundary.len()) as f64 * disc.area;
    let mu_final = 0.1 * scale_of(disc) * 10f64.powi(-(STAGES as i32 - 1));
    Ok(Raw {
        x,
        value,
        path: SolvePath::General,
        iterations,
        restarts_used: budget.restarts,
        certified: false,
        gap: disc.psi_orig.upper * mu_final * skeleton,
        converged,
    })
}
