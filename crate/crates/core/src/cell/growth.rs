//! Discrete growth sandwich for plain energies.
//!
//! Lower bound: coercivity with Jensen on `|·|^p`, plus `c_ψ` times the net
//! jump forced by the boundary flux. Upper bound: the datum extension with
//! the admissible gradients is a competitor, and its energy is bounded by
//! `C(|O| + Σ|G|^p|cell| + |Dg|)` with
//! `C = max(K + 2N C_ψ, K₂ + 2N C_ψ, (1 + 2N) C_ψ)`, where
//! `W(A) ≤ K + K₂|A|^p` follows from the Lipschitz bound around `A₀`.

use super::problem::{BulkTerm, Discrete, Grad};
use super::CellKind;
use crate::linalg::{self, Mat};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub constant: f64,
}

impl Sandwich {
    pub fn holds(&self, value: f64) -> bool {
        let slack = 1e-9 * (1.0 + value.abs());
        self.lower <= value + slack && value <= self.upper + slack
    }
}

/// `|Dg|(O)` of the datum extension, counting mismatches with the collar.
fn datum_variation(disc: &Discrete) -> f64 {
    let vol = disc.vol;
    let d = disc.d;
    let ext = |k: usize, pt: &[f64]| -> Vec<f64> {
        let v = &disc.start[k * d..(k + 1) * d];
        let g = &disc.ext_grads[k];
        let c = &disc.centers[k];
        linalg::add(v, &g.mul_vec(&linalg::sub(pt, c)))
    };
    let mut tv: f64 = disc.ext_grads.iter().map(|g| g.norm() * vol).sum();
    for f in &disc.interior {
        tv += disc.area * linalg::norm(&linalg::sub(&ext(f.plus, &f.midpoint), &ext(f.minus, &f.midpoint)));
    }
    for (f, b) in disc.boundary.iter().zip(&disc.bvals) {
        tv += disc.area * linalg::norm(&linalg::sub(&ext(f.cell, &f.midpoint), b));
    }
    tv
}

pub(super) fn sandwich(disc: &Discrete, _value: f64) -> Option<Sandwich> {
    let w = &disc.w_orig;
    let p = match disc.bulk {
        BulkTerm::Coupled(_) => return None,
        BulkTerm::Plain(_) if disc.kind == CellKind::Surface => 1.0,
        _ => w.p,
    };
    let vol = disc.grid.volume();
    let n = disc.dim as f64;
    let (cw, lw) = (w.coercivity, w.lipschitz);
    let (cl, cu) = (disc.psi_orig.lower, disc.psi_orig.upper);
    let flux = &disc.flux;
    let recession = disc.kind == CellKind::Surface;

    let lower = match (&disc.bulk, &disc.grad) {
        (BulkTerm::None, _) => cl * flux.norm(),
        (BulkTerm::Plain(_), Grad::Mean(b)) => {
            let net = flux.sub(&b.scale(vol)).norm();
            if recession {
                cw * vol * b.norm() + cl * net
            } else {
                cw * vol * b.norm().powf(p) - vol / cw + cl * net
            }
        }
        (BulkTerm::Plain(_), Grad::Free) => {
            let f = flux.norm();
            let t = if p == 1.0 {
                if cw < cl {
                    f
                } else {
                    0.0
                }
            } else {
                let t = (cl / (p * cw * vol.powf(1.0 - p))).powf(1.0 / (p - 1.0));
                t.clamp(0.0, f)
            };
            cw * vol.powf(1.0 - p) * t.powf(p) + cl * (f - t) - vol / cw
        }
        _ => return None,
    };

    let a0 = w.reference_or_zero(disc.d, disc.dim);
    let a = a0.norm();
    let w_a0 = disc
        .centers
        .iter()
        .map(|c| match &disc.bulk {
            BulkTerm::Plain(wb) => wb.raw(c, &a0),
            _ => 0.0,
        })
        .fold(0.0f64, f64::max);
    let k1 = w_a0 + lw * (1.0 + a + a.powf(p - 1.0) + a.powf(p));
    let k2 = lw * (2.0 + a + a.powf(p - 1.0));
    let (k1, k2) = if recession {
        (0.0, 3.0 * lw)
    } else if matches!(disc.bulk, BulkTerm::None) {
        (0.0, 0.0)
    } else {
        (k1, k2)
    };
    let constant = (k1 + 2.0 * n * cu).max(k2 + 2.0 * n * cu).max((1.0 + 2.0 * n) * cu);
    let m = disc.d * disc.dim;
    let power_sum: f64 = if disc.has_grads() {
        let off = disc.grad_offset();
        (0..disc.cells)
            .map(|k| {
                let g = Mat::from_vec(disc.d, disc.dim, disc.start[off + k * m..off + (k + 1) * m].to_vec());
                g.norm().powf(p) * disc.vol
            })
            .sum()
    } else {
        0.0
    };
    let upper = constant * (vol + power_sum + datum_variation(disc));
    Some(Sandwich {
        lower,
        upper,
        constant,
    })
}
