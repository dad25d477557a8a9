//! Sample-based checks of the density hypotheses.
//!
//! Every check has the form `lhs ≤ rhs` on a random input. A violation is
//! recorded when `lhs > rhs + tol` with `tol = 1e-9·max(|lhs|, |rhs|) + 1e-12`.
//! Verdicts mean "no violation found on the samples", nothing more.

use super::{recession_estimate, BulkDensity, SurfaceDensity};
use crate::linalg::{norm, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const REL_TOL: f64 = 1e-9;
pub const ABS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    Nonnegativity,
    /// p-Lipschitz continuity in `A`.
    W1,
    /// Modulus of continuity in `x`.
    W2,
    /// Recession rate.
    W3,
    /// `W(·, A_0)` bounded.
    W4,
    /// Coercivity.
    W5,
    /// Symmetry.
    Psi1,
    /// `c_ψ|λ| ≤ ψ`.
    Psi2Lower,
    /// `ψ ≤ C_ψ|λ|`.
    Psi2Upper,
    /// Positive 1-homogeneity.
    Psi3,
    /// Subadditivity.
    Psi4,
    /// Modulus of continuity in `x`.
    Psi5,
}

impl Hypothesis {
    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::Nonnegativity => "nonneg",
            Hypothesis::W1 => "W1",
            Hypothesis::W2 => "W2",
            Hypothesis::W3 => "W3",
            Hypothesis::W4 => "W4",
            Hypothesis::W5 => "W5",
            Hypothesis::Psi1 => "psi1",
            Hypothesis::Psi2Lower => "psi2-lower",
            Hypothesis::Psi2Upper => "psi2-upper",
            Hypothesis::Psi3 => "psi3",
            Hypothesis::Psi4 => "psi4",
            Hypothesis::Psi5 => "psi5",
        }
    }

    pub fn bulk() -> [Hypothesis; 6] {
        use Hypothesis::*;
        [Nonnegativity, W1, W2, W3, W4, W5]
    }

    pub fn surface() -> [Hypothesis; 6] {
        use Hypothesis::*;
        [Psi1, Psi2Lower, Psi2Upper, Psi3, Psi4, Psi5]
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Pass,
    Fail,
    Skipped,
}

/// Inputs that produced the largest violation (or, for a pass, the largest
/// `lhs/rhs` seen).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    /// Named inputs besides `x`, e.g. `A1`, `A2`, `lambda`, `nu`, `t`.
    pub inputs: Vec<(String, Vec<f64>)>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, infinite when `rhs ≤ 0 < lhs`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub hypothesis: Hypothesis,
    pub kind: VerdictKind,
    pub witness: Option<Witness>,
    pub violations: usize,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub density: String,
    pub verdicts: Vec<Verdict>,
    pub samples: usize,
    pub seed: u64,
}

impl ValidationReport {
    pub fn verdict(&self, h: Hypothesis) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.hypothesis == h)
    }

    pub fn kind(&self, h: Hypothesis) -> Option<VerdictKind> {
        self.verdict(h).map(|v| v.kind)
    }
}

fn tol(lhs: f64, rhs: f64) -> f64 {
    REL_TOL * lhs.abs().max(rhs.abs()) + ABS_TOL
}

/// Accumulates samples of one inequality.
struct Check {
    hypothesis: Hypothesis,
    violations: usize,
    worst: Option<(f64, Witness)>,
    best_pass: Option<(f64, Witness)>,
    non_finite: bool,
}

impl Check {
    fn new(hypothesis: Hypothesis) -> Self {
        Check {
            hypothesis,
            violations: 0,
            worst: None,
            best_pass: None,
            non_finite: false,
        }
    }

    fn record(&mut self, x: &[f64], inputs: Vec<(&str, Vec<f64>)>, lhs: f64, rhs: f64) {
        self.record_with_tol(x, inputs, lhs, rhs, tol(lhs, rhs));
    }

    /// Equality check `a = b`, recorded as `|a − b| ≤ 0` with the tolerance
    /// taken from the magnitudes of `a` and `b`.
    fn record_eq(&mut self, x: &[f64], inputs: Vec<(&str, Vec<f64>)>, a: f64, b: f64) {
        self.record_with_tol(x, inputs, (a - b).abs(), 0.0, tol(a, b));
    }

    fn record_with_tol(
        &mut self,
        x: &[f64],
        inputs: Vec<(&str, Vec<f64>)>,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) {
        if !lhs.is_finite() || !rhs.is_finite() {
            self.non_finite = true;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 || lhs.is_nan() || rhs.is_nan() {
            f64::INFINITY
        } else {
            0.0
        };
        let violated = !(lhs <= rhs + tol);
        let score = if violated {
            let s = (lhs - rhs) / (rhs.abs() + 1e-300);
            if s.is_nan() {
                f64::INFINITY
            } else {
                s
            }
        } else {
            ratio
        };
        let slot = if violated {
            self.violations += 1;
            &mut self.worst
        } else {
            &mut self.best_pass
        };
        if slot.as_ref().map_or(true, |(s, _)| score > *s) {
            *slot = Some((
                score,
                Witness {
                    x: x.to_vec(),
                    inputs: inputs
                        .into_iter()
                        .map(|(k, v)| (k.to_string(), v))
                        .collect(),
                    lhs,
                    rhs,
                    ratio,
                },
            ));
        }
    }

    fn finish(self) -> Verdict {
        let fail = self.violations > 0;
        Verdict {
            hypothesis: self.hypothesis,
            kind: if fail {
                VerdictKind::Fail
            } else {
                VerdictKind::Pass
            },
            witness: if fail { self.worst } else { self.best_pass }.map(|(_, w)| w),
            violations: self.violations,
            note: self
                .non_finite
                .then(|| "non-finite values encountered".to_string()),
        }
    }
}

fn skipped(h: Hypothesis, why: &str) -> Verdict {
    Verdict {
        hypothesis: h,
        kind: VerdictKind::Skipped,
        witness: None,
        violations: 0,
        note: Some(why.to_string()),
    }
}

fn rng_for(seed: u64, h: Hypothesis) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(h as u64 + 1);
    r
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let l = norm(&v);
        if l > 1e-3 && l <= 1.0 {
            return v.into_iter().map(|c| c / l).collect();
        }
    }
}

/// Log-uniform magnitude in `[10^-2, 10^2]`.
fn magnitude(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-2.0..=2.0))
}

fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn matrix(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Mat {
    let dir = unit_vector(rng, d * n);
    let m = magnitude(rng);
    Mat::from_vec(d, n, dir.into_iter().map(|c| c * m).collect())
}

fn vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let m = magnitude(rng);
    unit_vector(rng, d).into_iter().map(|c| c * m).collect()
}

/// A second sample: independent half of the time, a relative perturbation
/// of the first otherwise.
fn partner(rng: &mut ChaCha8Rng, a: &Mat) -> Mat {
    if rng.gen_bool(0.5) {
        matrix(rng, a.rows(), a.cols())
    } else {
        let eps = 10f64.powf(rng.gen_range(-6.0..=-1.0)) * a.norm().max(1e-2);
        let dir = unit_vector(rng, a.rows() * a.cols());
        let mut b = a.clone();
        for (v, d) in b.as_mut_slice().iter_mut().zip(dir) {
            *v += eps * d;
        }
        b
    }
}

fn near_point(rng: &mut ChaCha8Rng, x: &[f64]) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        point(rng, x.len())
    } else {
        let eps = 10f64.powf(rng.gen_range(-6.0..=-1.0));
        let dir = unit_vector(rng, x.len());
        x.iter()
            .zip(dir)
            .map(|(a, b)| (a + eps * b).clamp(-1.0, 1.0))
            .collect()
    }
}

fn dims_bulk(w: &BulkDensity) -> (usize, usize) {
    w.dims.unwrap_or((2, 2))
}

/// Checks nonnegativity and W1, W2, W3, W4, W5 on `n_samples` random inputs
/// each. W2 needs a declared modulus, W3 needs `p = 1` and declared rate
/// constants; otherwise they are skipped.
pub fn validate_bulk(w: &BulkDensity, seed: u64, n_samples: usize) -> ValidationReport {
    let n_samples = n_samples.max(1);
    let (n, d) = dims_bulk(w);
    let p = w.p;
    let growth = |a: &Mat| a.norm().powf(p - 1.0);
    let mut verdicts = Vec::new();

    let mut rng = rng_for(seed, Hypothesis::Nonnegativity);
    let mut c = Check::new(Hypothesis::Nonnegativity);
    for _ in 0..n_samples {
        let x = point(&mut rng, n);
        let a = matrix(&mut rng, d, n);
        let v = w.raw(&x, &a);
        c.record(&x, vec![("A", a.as_slice().to_vec())], 0.0, v);
    }
    verdicts.push(c.finish());

    let mut rng = rng_for(seed, Hypothesis::W1);
    let mut c = Check::new(Hypothesis::W1);
    for _ in 0..n_samples {
        let x = point(&mut rng, n);
        let a1 = matrix(&mut rng, d, n);
        let a2 = partner(&mut rng, &a1);
        let lhs = (w.raw(&x, &a1) - w.raw(&x, &a2)).abs();
        let rhs = w.lipschitz * a1.sub(&a2).norm() * (1.0 + growth(&a1) + growth(&a2));
        c.record(
            &x,
            vec![("A1", a1.as_slice().to_vec()), ("A2", a2.as_slice().to_vec())],
            lhs,
            rhs,
        );
    }
    verdicts.push(c.finish());

    match &w.modulus {
        None => verdicts.push(skipped(Hypothesis::W2, "no modulus declared")),
        Some(m) => {
            let mut rng = rng_for(seed, Hypothesis::W2);
            let mut c = Check::new(Hypothesis::W2);
            for _ in 0..n_samples {
                let x = point(&mut rng, n);
                let y = near_point(&mut rng, &x);
                let a = matrix(&mut rng, d, n);
                let lhs = (w.raw(&x, &a) - w.raw(&y, &a)).abs();
                let dist = norm(&crate::linalg::sub(&x, &y));
                let rhs = m.eval(dist) * (1.0 + a.norm().powf(p));
                c.record(&x, vec![("y", y), ("A", a.as_slice().to_vec())], lhs, rhs);
            }
            verdicts.push(c.finish());
        }
    }

    match (&w.w3, p == 1.0) {
        (Some(w3), true) => {
            let mut rng = rng_for(seed, Hypothesis::W3);
            let mut c = Check::new(Hypothesis::W3);
            let mut note = None;
            for _ in 0..n_samples {
                let x = point(&mut rng, n);
                let a = Mat::from_vec(d, n, unit_vector(&mut rng, d * n));
                let t = w3.l * 10f64.powf(rng.gen_range(1e-6..=4.0));
                let rec = match w.recession_raw(&x, &a) {
                    Some(v) => v,
                    None => {
                        let ladder: Vec<f64> = (3..=9).map(|k| w3.l * 10f64.powi(k)).collect();
                        match recession_estimate(w, &x, &a, &ladder) {
                            Ok(r) => r.value,
                            Err(e) => {
                                note = Some(format!("recession estimate failed: {e}"));
                                f64::NAN
                            }
                        }
                    }
                };
                let lhs = (rec - w.raw(&x, &a.scale(t)) / t).abs();
                let rhs = w3.c / t.powf(w3.alpha);
                c.record(&x, vec![("A", a.as_slice().to_vec()), ("t", vec![t])], lhs, rhs);
            }
            let mut v = c.finish();
            if note.is_some() {
                v.note = note;
            }
            verdicts.push(v);
        }
        (None, _) => verdicts.push(skipped(Hypothesis::W3, "no rate constants declared")),
        (Some(_), false) => verdicts.push(skipped(Hypothesis::W3, "only meaningful for p = 1")),
    }

    let mut rng = rng_for(seed, Hypothesis::W4);
    let a0 = w.reference_or_zero(d, n);
    let mut sup = 0.0f64;
    let mut bad: Option<Witness> = None;
    for _ in 0..n_samples {
        let x = point(&mut rng, n);
        let v = w.raw(&x, &a0);
        if v.is_finite() {
            sup = sup.max(v.abs());
        } else if bad.is_none() {
            bad = Some(Witness {
                x: x.clone(),
                inputs: vec![("A0".into(), a0.as_slice().to_vec())],
                lhs: v,
                rhs: f64::INFINITY,
                ratio: f64::INFINITY,
            });
        }
    }
    verdicts.push(match bad {
        Some(wit) => Verdict {
            hypothesis: Hypothesis::W4,
            kind: VerdictKind::Fail,
            witness: Some(wit),
            violations: 1,
            note: Some("W(x, A0) not finite".into()),
        },
        None => Verdict {
            hypothesis: Hypothesis::W4,
            kind: VerdictKind::Pass,
            witness: None,
            violations: 0,
            note: Some(format!("sup_x |W(x, A0)| = {sup}")),
        },
    });

    let mut rng = rng_for(seed, Hypothesis::W5);
    let mut c = Check::new(Hypothesis::W5);
    for _ in 0..n_samples {
        let x = point(&mut rng, n);
        let a = matrix(&mut rng, d, n);
        let lhs = w.coercivity * a.norm().powf(p) - 1.0 / w.coercivity;
        c.record(&x, vec![("A", a.as_slice().to_vec())], lhs, w.raw(&x, &a));
    }
    verdicts.push(c.finish());

    ValidationReport {
        density: w.name.clone(),
        verdicts,
        samples: n_samples,
        seed,
    }
}

/// Checks ψ1–ψ5 (ψ2 split into its two inequalities). ψ5 needs a declared
/// modulus.
pub fn validate_surface(s: &SurfaceDensity, seed: u64, n_samples: usize) -> ValidationReport {
    let n_samples = n_samples.max(1);
    let (n, d) = s.dims.unwrap_or((2, 2));
    let mut verdicts = Vec::new();
    let draw = |rng: &mut ChaCha8Rng| (point(rng, n), vector(rng, d), unit_vector(rng, n));
    let neg = |v: &[f64]| v.iter().map(|c| -c).collect::<Vec<f64>>();

    let mut rng = rng_for(seed, Hypothesis::Psi1);
    let mut c = Check::new(Hypothesis::Psi1);
    for _ in 0..n_samples {
        let (x, l, nu) = draw(&mut rng);
        let a = s.raw(&x, &l, &nu);
        let b = s.raw(&x, &neg(&l), &neg(&nu));
        c.record_eq(&x, vec![("lambda", l), ("nu", nu)], a, b);
    }
    verdicts.push(c.finish());

    let mut rng = rng_for(seed, Hypothesis::Psi2Lower);
    let mut c = Check::new(Hypothesis::Psi2Lower);
    for _ in 0..n_samples {
        let (x, l, nu) = draw(&mut rng);
        let lhs = s.lower * norm(&l);
        let rhs = s.raw(&x, &l, &nu);
        c.record(&x, vec![("lambda", l), ("nu", nu)], lhs, rhs);
    }
    verdicts.push(c.finish());

    let mut rng = rng_for(seed, Hypothesis::Psi2Upper);
    let mut c = Check::new(Hypothesis::Psi2Upper);
    for _ in 0..n_samples {
        let (x, l, nu) = draw(&mut rng);
        let lhs = s.raw(&x, &l, &nu);
        let rhs = s.upper * norm(&l);
        c.record(&x, vec![("lambda", l), ("nu", nu)], lhs, rhs);
    }
    verdicts.push(c.finish());

    let mut rng = rng_for(seed, Hypothesis::Psi3);
    let mut c = Check::new(Hypothesis::Psi3);
    for _ in 0..n_samples {
        let (x, l, nu) = draw(&mut rng);
        let t = 10f64.powf(rng.gen_range(-1.0..=1.0));
        let tl: Vec<f64> = l.iter().map(|v| v * t).collect();
        let a = s.raw(&x, &tl, &nu);
        let b = t * s.raw(&x, &l, &nu);
        c.record_eq(&x, vec![("lambda", l), ("nu", nu), ("t", vec![t])], a, b);
    }
    verdicts.push(c.finish());

    let mut rng = rng_for(seed, Hypothesis::Psi4);
    let mut c = Check::new(Hypothesis::Psi4);
    for _ in 0..n_samples {
        let (x, l1, nu) = draw(&mut rng);
        let l2 = if rng.gen_bool(0.5) {
            vector(&mut rng, d)
        } else {
            let t = 10f64.powf(rng.gen_range(-1.0..=1.0));
            l1.iter().map(|v| v * t).collect()
        };
        let sum = crate::linalg::add(&l1, &l2);
        let lhs = s.raw(&x, &sum, &nu);
        let rhs = s.raw(&x, &l1, &nu) + s.raw(&x, &l2, &nu);
        c.record(&x, vec![("lambda1", l1), ("lambda2", l2), ("nu", nu)], lhs, rhs);
    }
    verdicts.push(c.finish());

    match &s.modulus {
        None => verdicts.push(skipped(Hypothesis::Psi5, "no modulus declared")),
        Some(m) => {
            let mut rng = rng_for(seed, Hypothesis::Psi5);
            let mut c = Check::new(Hypothesis::Psi5);
            for _ in 0..n_samples {
                let (x, l, nu) = draw(&mut rng);
                let y = near_point(&mut rng, &x);
                let lhs = (s.raw(&x, &l, &nu) - s.raw(&y, &l, &nu)).abs();
                let rhs = m.eval(norm(&crate::linalg::sub(&x, &y))) * norm(&l);
                c.record(&x, vec![("y", y), ("lambda", l), ("nu", nu)], lhs, rhs);
            }
            verdicts.push(c.finish());
        }
    }

    ValidationReport {
        density: s.name.clone(),
        verdicts,
        samples: n_samples,
        seed,
    }
}
