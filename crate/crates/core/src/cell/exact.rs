//! Closed-form path for `N = 1`, convex bulk term and `ψ = c|λ|`.
//!
//! Jensen bounds the bulk part below by `|O|·D(mean ∇u)` and subadditivity
//! bounds the surface part below by `c|Flux − |O| mean ∇u|`; both bounds are
//! attained by a field with constant gradient whose net jump is split
//! between the two boundary points.

use super::problem::{BulkTerm, Discrete, Grad, Raw};
use super::{CellError, SolvePath};
use crate::linalg::{self, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLE_SEED: u64 = 0x5eed_ce11;

/// Sampled midpoint convexity of `f` on `R^k` over several scales.
pub(crate) fn midpoint_convex(f: &dyn Fn(&[f64]) -> f64, k: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    for scale in [0.1, 1.0, 10.0] {
        for _ in 0..200 {
            let a: Vec<f64> = (0..k).map(|_| rng.gen_range(-scale..scale)).collect();
            let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-scale..scale)).collect();
            let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let (fa, fb, fm) = (f(&a), f(&b), f(&m));
            if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
                return false;
            }
            let avg = 0.5 * (fa + fb);
            if fm > avg + 1e-9 * (1.0 + avg.abs()) {
                return false;
            }
        }
    }
    true
}

/// `c` when `ψ(λ, ±1) = c|λ|` on samples, in one dimension.
fn psi_constant(disc: &Discrete) -> Option<f64> {
    let x = &disc.centers[0];
    let d = disc.d;
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    let c = disc.psi.raw(x, &e, &[1.0]);
    if !(c.is_finite() && c >= 0.0) {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED + 1);
    for i in 0..200 {
        let mag = 10f64.powf(rng.gen_range(-3.0..3.0));
        let mut l: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = linalg::norm(&l);
        if n == 0.0 {
            continue;
        }
        l.iter_mut().for_each(|v| *v *= mag / n);
        let nu = if i % 2 == 0 { [1.0] } else { [-1.0] };
        let v = disc.psi.raw(x, &l, &nu);
        if (v - c * mag).abs() > 1e-12 * (c * mag).max(1e-300) {
            return None;
        }
    }
    Some(c)
}

/// Minimises a convex function of one variable.
fn minimize_convex(f: &dyn Fn(f64) -> f64, candidates: &[f64]) -> f64 {
    let lo0 = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi0 = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1.0 + (hi0 - lo0);
    let (mut lo, mut hi) = (lo0 - pad, hi0 + pad);
    for _ in 0..60 {
        let w = hi - lo;
        if f(lo) > f(lo + 1e-3 * w) {
            break;
        }
        lo -= w;
    }
    for _ in 0..60 {
        let w = hi - lo;
        if f(hi) > f(hi - 1e-3 * w) {
            break;
        }
        hi += w;
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
    }
    let mut best = 0.5 * (a + b);
    let mut fbest = f(best);
    for &t in candidates {
        let ft = f(t);
        if ft < fbest {
            best = t;
            fbest = ft;
        }
    }
    best
}

pub(super) fn solve(disc: &Discrete) -> Result<Option<Raw>, CellError> {
    if disc.dim != 1 || disc.x_dependent {
        return Ok(None);
    }
    let Some(c) = psi_constant(disc) else {
        return Ok(None);
    };
    let d = disc.d;
    let len = disc.grid.side;
    let flux = disc.flux.column(0);
    let x0 = disc.centers[0].clone();
    let jump_cost = |a: &[f64]| c * linalg::norm(&linalg::sub(&flux, &linalg::scale(a, len)));

    let a: Vec<f64> = match (&disc.bulk, &disc.grad) {
        (BulkTerm::None, Grad::Zero) => vec![0.0; d],
        (BulkTerm::Plain(w), Grad::Mean(b)) => {
            let f = |v: &[f64]| w.raw(&x0, &Mat::from_vec(d, 1, v.to_vec()));
            if !w.convex || !midpoint_convex(&f, d) {
                return Ok(None);
            }
            b.column(0)
        }
        (BulkTerm::Plain(w), Grad::Free) if d == 1 => {
            let f = |v: &[f64]| w.raw(&x0, &Mat::from_vec(1, 1, v.to_vec()));
            if !w.convex || !midpoint_convex(&f, 1) {
                return Ok(None);
            }
            let obj = |t: f64| len * w.raw(&x0, &Mat::scalar(t)) + jump_cost(&[t]);
            vec![minimize_convex(&obj, &[0.0, flux[0] / len])]
        }
        (BulkTerm::Coupled(cd), Grad::Mean(b)) => {
            let k = cd.aux;
            let m = d;
            let f = |v: &[f64]| {
                let us: Vec<Mat> = v[m..].chunks(m).map(|c| Mat::from_vec(d, 1, c.to_vec())).collect();
                cd.eval(&Mat::from_vec(d, 1, v[..m].to_vec()), &us)
            };
            if !cd.convex || !midpoint_convex(&f, m * (1 + k)) {
                return Ok(None);
            }
            b.column(0)
        }
        (BulkTerm::Coupled(cd), Grad::Free) if d == 1 => {
            let k = cd.aux;
            let f = |v: &[f64]| {
                let us: Vec<Mat> = v[1..].iter().map(|u| Mat::scalar(*u)).collect();
                cd.eval(&Mat::scalar(v[0]), &us)
            };
            if !cd.convex || !midpoint_convex(&f, 1 + k) {
                return Ok(None);
            }
            let targets = disc.aux_targets.clone();
            let obj = |t: f64| len * cd.eval(&Mat::scalar(t), &targets) + jump_cost(&[t]);
            let mut cands = vec![0.0, flux[0] / len];
            cands.extend(targets.iter().map(|m| m.get(0, 0)));
            vec![minimize_convex(&obj, &cands)]
        }
        _ => return Ok(None),
    };

    let grad = Mat::from_vec(d, 1, a.clone());
    let bulk = match &disc.bulk {
        BulkTerm::None => 0.0,
        BulkTerm::Plain(w) => len * w.raw(&x0, &grad),
        BulkTerm::Coupled(cd) => len * cd.eval(&grad, &disc.aux_targets),
    };
    let value = bulk + jump_cost(&a);

    let left = disc
        .boundary
        .iter()
        .position(|f| f.side == crate::sbv::Side::Low)
        .expect("a line has a left end");
    let u_left = &disc.bvals[left];
    let net = linalg::sub(&flux, &linalg::scale(&a, len));
    let h = disc.grid.h();
    let mut x = vec![0.0; disc.len()];
    for k in 0..disc.cells {
        let s = h * (k as f64 + 0.5);
        for i in 0..d {
            x[k * d + i] = u_left[i] + 0.5 * net[i] + a[i] * s;
        }
    }
    if disc.has_grads() {
        let off = disc.grad_offset();
        for k in 0..disc.cells {
            x[off + k * d..off + (k + 1) * d].copy_from_slice(&a);
        }
    }
    for (j, t) in disc.aux_targets.iter().enumerate() {
        let off = disc.aux_offset(j);
        for k in 0..disc.cells {
            x[off + k * d..off + (k + 1) * d].copy_from_slice(t.as_slice());
        }
    }
    Ok(Some(Raw {
        x,
        value,
        path: SolvePath::Exact,
        iterations: 0,
        restarts_used: 0,
        certified: true,
        gap: 0.0,
        converged: true,
    }))
}
