//! Bulk and surface energy densities.
//!
//! A [`BulkDensity`] wraps `W(x, A)` together with the constants of its growth
//! and continuity hypotheses; a [`SurfaceDensity`] wraps `ψ(x, λ, ν)`. Both can
//! be built from closures or from the expression language in [`expr`].

pub mod catalog;
pub mod expr;
pub mod validate;

use crate::linalg::{norm, Mat};
use expr::{parse_expr, Bindings, DensityKind, Expr, ParseError, Var};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub use validate::{
    validate_bulk, validate_surface, Hypothesis, ValidationReport, Verdict, VerdictKind, Witness,
};

pub type BulkFn = Arc<dyn Fn(&[f64], &Mat) -> f64 + Send + Sync>;
pub type SurfaceFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync>;

/// Tolerance on `|ν| = 1`.
pub const UNIT_NORMAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DensityError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("density `{name}` returned negative value {value}")]
    Negative { name: String, value: f64 },
    #[error("normal is not a unit vector (|nu| = {0})")]
    NonUnitNormal(f64),
    #[error("recession ladder needs at least 3 entries, got {0}")]
    LadderTooShort(usize),
    #[error("recession ladder must be strictly increasing and positive")]
    LadderNotIncreasing,
    #[error("ladder entry {t} does not exceed L = {l}")]
    LadderBelowL { t: f64, l: f64 },
    #[error("recession undefined/infinite in this direction (ratio slope {slope:.3})")]
    RecessionUndefined { slope: f64 },
    #[error("direction A has zero norm")]
    ZeroDirection,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("missing constant `{0}`")]
    MissingConstant(String),
}

/// Modulus of continuity `ω(s) = k · s^β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub k: f64,
    pub beta: f64,
}

impl Modulus {
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            self.k * s.powf(self.beta)
        }
    }
}

/// Constants `(C, L, α)` of the recession rate hypothesis:
/// `|W^∞(x, A) − W(x, tA)/t| ≤ C / t^α` for `t > L`, `|A| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct W3Params {
    pub c: f64,
    pub l: f64,
    pub alpha: f64,
}

#[derive(Clone)]
pub struct BulkDensity {
    pub name: String,
    /// Expression text, when the density came from the DSL.
    pub formula: Option<String>,
    eval: BulkFn,
    /// Growth exponent `p ≥ 1`.
    pub p: f64,
    /// `C_W`
    pub lipschitz: f64,
    /// `c_W`
    pub coercivity: f64,
    /// `A_0`; the zero matrix of the evaluation shape when absent.
    pub reference: Option<Mat>,
    pub modulus: Option<Modulus>,
    recession: Option<BulkFn>,
    pub recession_formula: Option<String>,
    pub w3: Option<W3Params>,
    /// Declared convexity in `A`; the exact cell solver double-checks it.
    pub convex: bool,
    pub x_dependent: bool,
    /// Declared `(N, d)`.
    pub dims: Option<(usize, usize)>,
}

impl fmt::Debug for BulkDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BulkDensity")
            .field("name", &self.name)
            .field("formula", &self.formula)
            .field("p", &self.p)
            .field("lipschitz", &self.lipschitz)
            .field("coercivity", &self.coercivity)
            .finish_non_exhaustive()
    }
}

impl BulkDensity {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[f64], &Mat) -> f64 + Send + Sync + 'static,
        p: f64,
        lipschitz: f64,
        coercivity: f64,
    ) -> Self {
        BulkDensity {
            name: name.into(),
            formula: None,
            eval: Arc::new(f),
            p,
            lipschitz,
            coercivity,
            reference: None,
            modulus: None,
            recession: None,
            recession_formula: None,
            w3: None,
            convex: false,
            x_dependent: true,
            dims: None,
        }
    }

    /// Parses `text` as `W(x, A)`.
    pub fn from_expr(
        name: impl Into<String>,
        text: &str,
        p: f64,
        lipschitz: f64,
        coercivity: f64,
    ) -> Result<Self, DensityError> {
        let e = parse_expr(text, DensityKind::Bulk)?;
        let x_dependent = e.uses_x();
        let mut w = BulkDensity::new(name, bulk_closure(e), p, lipschitz, coercivity);
        w.formula = Some(text.to_string());
        w.x_dependent = x_dependent;
        Ok(w)
    }

    pub fn with_recession(
        mut self,
        f: impl Fn(&[f64], &Mat) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.recession = Some(Arc::new(f));
        self
    }

    pub fn with_recession_expr(mut self, text: &str) -> Result<Self, DensityError> {
        let e = parse_expr(text, DensityKind::Bulk)?;
        self.recession = Some(Arc::new(bulk_closure(e)));
        self.recession_formula = Some(text.to_string());
        Ok(self)
    }

    pub fn with_w3(mut self, w3: W3Params) -> Self {
        self.w3 = Some(w3);
        self
    }

    pub fn with_modulus(mut self, m: Modulus) -> Self {
        self.modulus = Some(m);
        self
    }

    pub fn with_reference(mut self, a0: Mat) -> Self {
        self.reference = Some(a0);
        self
    }

    pub fn with_convex(mut self, convex: bool) -> Self {
        self.convex = convex;
        self
    }

    pub fn with_x_independent(mut self) -> Self {
        self.x_dependent = false;
        self
    }

    pub fn with_dims(mut self, n: usize, d: usize) -> Self {
        self.dims = Some((n, d));
        self
    }

    /// Unchecked evaluation; may return negative or non-finite values.
    #[inline]
    pub fn raw(&self, x: &[f64], a: &Mat) -> f64 {
        (self.eval)(x, a)
    }

    pub fn has_recession_closed_form(&self) -> bool {
        self.recession.is_some()
    }

    pub fn recession_raw(&self, x: &[f64], a: &Mat) -> Option<f64> {
        self.recession.as_ref().map(|r| r(x, a))
    }

    pub fn reference_or_zero(&self, d: usize, n: usize) -> Mat {
        self.reference.clone().unwrap_or_else(|| Mat::zeros(d, n))
    }

    /// `W(x, A)` with dimension and finiteness checks.
    pub fn eval_bulk(&self, x: &[f64], a: &Mat) -> Result<f64, DensityError> {
        if let Some((n, d)) = self.dims {
            if x.len() != n || a.shape() != (d, n) {
                return Err(DensityError::Dimension(format!(
                    "expected x in R^{n} and A in R^{d}x{n}, got x in R^{} and A in R^{}x{}",
                    x.len(),
                    a.rows(),
                    a.cols()
                )));
            }
        } else if a.cols() != x.len() {
            return Err(DensityError::Dimension(format!(
                "A has {} columns but x has {} entries",
                a.cols(),
                x.len()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) || !a.is_finite() {
            return Err(DensityError::NonFinite("input"));
        }
        let v = self.raw(x, a);
        if !v.is_finite() {
            return Err(DensityError::NonFinite("density value"));
        }
        if v < 0.0 {
            return Err(DensityError::Negative {
                name: self.name.clone(),
                value: v,
            });
        }
        Ok(v)
    }

    /// The bulk density frozen at `x0`, as a function of `A` only.
    pub fn frozen(&self, x0: &[f64]) -> BulkDensity {
        let inner = self.eval.clone();
        let x0 = x0.to_vec();
        let mut w = self.clone();
        let xf = x0.clone();
        w.eval = Arc::new(move |_x, a| inner(&xf, a));
        if let Some(r) = self.recession.clone() {
            w.recession = Some(Arc::new(move |_x, a| r(&x0, a)));
        }
        w.x_dependent = false;
        w
    }

    /// Composes with a right multiplication: `A ↦ W(φ(x), A·R)`, used to
    /// express a density in rotated coordinates.
    pub fn conjugated(&self, x_map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>, r: Mat) -> Self {
        let inner = self.eval.clone();
        let mut w = self.clone();
        let (xm, rm) = (x_map.clone(), r.clone());
        w.eval = Arc::new(move |x, a| inner(&xm(x), &a.matmul(&rm)));
        if let Some(rec) = self.recession.clone() {
            w.recession = Some(Arc::new(move |x, a| rec(&x_map(x), &a.matmul(&r))));
        }
        w.formula = None;
        w
    }
}

#[derive(Clone)]
pub struct SurfaceDensity {
    pub name: String,
    pub formula: Option<String>,
    eval: SurfaceFn,
    /// `c_ψ`
    pub lower: f64,
    /// `C_ψ`
    pub upper: f64,
    pub modulus: Option<Modulus>,
    pub x_dependent: bool,
    pub dims: Option<(usize, usize)>,
}

impl fmt::Debug for SurfaceDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceDensity")
            .field("name", &self.name)
            .field("formula", &self.formula)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl SurfaceDensity {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
        lower: f64,
        upper: f64,
    ) -> Self {
        SurfaceDensity {
            name: name.into(),
            formula: None,
            eval: Arc::new(f),
            lower,
            upper,
            modulus: None,
            x_dependent: true,
            dims: None,
        }
    }

    /// Parses `text` as `ψ(x, λ, ν)`.
    pub fn from_expr(
        name: impl Into<String>,
        text: &str,
        lower: f64,
        upper: f64,
    ) -> Result<Self, DensityError> {
        let e = parse_expr(text, DensityKind::Surface)?;
        let x_dependent = e.uses_x();
        let mut s = SurfaceDensity::new(name, surface_closure(e), lower, upper);
        s.formula = Some(text.to_string());
        s.x_dependent = x_dependent;
        Ok(s)
    }

    /// `c · |λ|`.
    pub fn norm_jump(c: f64) -> Self {
        let mut s = SurfaceDensity::new(
            format!("{c}|lambda|"),
            move |_x, l, _n| c * norm(l),
            c,
            c,
        );
        s.x_dependent = false;
        s
    }

    pub fn with_modulus(mut self, m: Modulus) -> Self {
        self.modulus = Some(m);
        self
    }

    #[inline]
    pub fn raw(&self, x: &[f64], lambda: &[f64], nu: &[f64]) -> f64 {
        (self.eval)(x, lambda, nu)
    }

    /// `ψ(x, λ, ν)` with checks on the normal, dimensions and the result.
    pub fn eval_surface(&self, x: &[f64], lambda: &[f64], nu: &[f64]) -> Result<f64, DensityError> {
        let nn = norm(nu);
        if (nn - 1.0).abs() > UNIT_NORMAL_TOL {
            return Err(DensityError::NonUnitNormal(nn));
        }
        if nu.len() != x.len() {
            return Err(DensityError::Dimension(format!(
                "nu has {} entries but x has {}",
                nu.len(),
                x.len()
            )));
        }
        if let Some((n, d)) = self.dims {
            if x.len() != n || lambda.len() != d {
                return Err(DensityError::Dimension(format!(
                    "expected x in R^{n} and lambda in R^{d}"
                )));
            }
        }
        if !x.iter().chain(lambda).all(|v| v.is_finite()) {
            return Err(DensityError::NonFinite("input"));
        }
        let v = self.raw(x, lambda, nu);
        if !v.is_finite() {
            return Err(DensityError::NonFinite("density value"));
        }
        if v < 0.0 {
            return Err(DensityError::Negative {
                name: self.name.clone(),
                value: v,
            });
        }
        Ok(v)
    }

    pub fn frozen(&self, x0: &[f64]) -> SurfaceDensity {
        let inner = self.eval.clone();
        let x0 = x0.to_vec();
        let mut s = self.clone();
        s.eval = Arc::new(move |_x, l, n| inner(&x0, l, n));
        s.x_dependent = false;
        s
    }

    /// `(y, λ, n) ↦ ψ(φ(y), λ, Rᵀ n)`.
    pub fn conjugated(&self, x_map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>, r: Mat) -> Self {
        let inner = self.eval.clone();
        let mut s = self.clone();
        let rt = r.transpose();
        s.eval = Arc::new(move |x, l, n| inner(&x_map(x), l, &rt.mul_vec(n)));
        s.formula = None;
        s
    }

    /// Wraps a tabulated or otherwise computed function.
    pub fn from_fn(
        name: impl Into<String>,
        f: SurfaceFn,
        lower: f64,
        upper: f64,
        x_dependent: bool,
    ) -> Self {
        SurfaceDensity {
            name: name.into(),
            formula: None,
            eval: f,
            lower,
            upper,
            modulus: None,
            x_dependent,
            dims: None,
        }
    }
}

fn bulk_closure(e: Expr) -> impl Fn(&[f64], &Mat) -> f64 + Send + Sync + 'static {
    move |x, a| {
        e.eval(&Bindings {
            x: Some(x),
            a: Some(a),
            ..Default::default()
        })
        .unwrap_or(f64::NAN)
    }
}

fn surface_closure(e: Expr) -> impl Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static {
    move |x, l, n| {
        e.eval(&Bindings {
            x: Some(x),
            lambda: Some(l),
            nu: Some(n),
            ..Default::default()
        })
        .unwrap_or(f64::NAN)
    }
}

/// Smallest `(N, d)` an expression needs, from the entries it addresses.
pub fn required_dims(e: &Expr) -> (usize, usize) {
    let a = e.index_extent(Var::A);
    let x = e.index_extent(Var::X);
    let l = e.index_extent(Var::Lambda);
    let nu = e.index_extent(Var::Nu);
    let n = [a.get(1), x.first(), nu.first()]
        .into_iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(1)
        .max(1);
    let d = [a.first(), l.first()]
        .into_iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(1)
        .max(1);
    (n, d)
}

/// Result of [`recession_estimate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecessionEstimate {
    /// Estimate of `W^∞(x, A)` for the direction as given (not normalised).
    pub value: f64,
    /// `max − min` of the ratios over the ladder tail, scaled by `|A|`.
    pub spread: f64,
    /// `(t, W(x, tÂ)/t)` for every ladder entry, with `Â = A/|A|`.
    pub ratios: Vec<(f64, f64)>,
    pub closed_form: bool,
    /// `|closed form − ladder estimate|` when a closed form is declared.
    pub ladder_agreement: Option<f64>,
    /// `C / t_last^α`, scaled by `|A|`, when rate constants are declared.
    pub certified_bound: Option<f64>,
}

impl RecessionEstimate {
    /// Error proxy to add to anything built on this estimate.
    pub fn error(&self) -> f64 {
        if self.closed_form {
            0.0
        } else {
            self.certified_bound.unwrap_or(self.spread).max(self.spread)
        }
    }
}

/// Estimates `W^∞(x, A) = limsup_t W(x, tA)/t` on a ladder of `t` values.
///
/// `A` is normalised internally and the result scaled back, using positive
/// 1-homogeneity of `W^∞`.
pub fn recession_estimate(
    w: &BulkDensity,
    x: &[f64],
    a: &Mat,
    ladder: &[f64],
) -> Result<RecessionEstimate, DensityError> {
    if ladder.len() < 3 {
        return Err(DensityError::LadderTooShort(ladder.len()));
    }
    if ladder[0] <= 0.0 || ladder.windows(2).any(|p| p[1] <= p[0]) {
        return Err(DensityError::LadderNotIncreasing);
    }
    if let Some(w3) = &w.w3 {
        if let Some(&t) = ladder.iter().find(|&&t| t <= w3.l) {
            return Err(DensityError::LadderBelowL { t, l: w3.l });
        }
    }
    let scale = a.norm();
    if !scale.is_finite() {
        return Err(DensityError::NonFinite("input"));
    }
    if scale == 0.0 {
        return Err(DensityError::ZeroDirection);
    }
    let unit = a.scale(1.0 / scale);
    let mut ratios = Vec::with_capacity(ladder.len());
    for &t in ladder {
        let v = w.eval_bulk(x, &unit.scale(t))?;
        ratios.push((t, v / t));
    }
    let tail_len = (ladder.len() / 2).max(3);
    let tail = &ratios[ratios.len() - tail_len..];
    let (t0, r0) = tail[0];
    let (t1, r1) = tail[tail.len() - 1];
    let floor = 1e-300;
    let slope = if r0 <= floor && r1 <= floor {
        0.0
    } else {
        (r1.max(floor) / r0.max(floor)).ln() / (t1 / t0).ln()
    };
    if slope > 0.1 {
        return Err(DensityError::RecessionUndefined { slope });
    }
    let max = tail.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let spread = (max - min) * scale;
    let certified_bound = w.w3.map(|w3| w3.c / t1.powf(w3.alpha) * scale);
    let estimate = max * scale;
    match w.recession_raw(x, a) {
        Some(v) => Ok(RecessionEstimate {
            value: v,
            spread,
            ratios,
            closed_form: true,
            ladder_agreement: Some((v - estimate).abs()),
            certified_bound,
        }),
        None => Ok(RecessionEstimate {
            value: estimate,
            spread,
            ratios,
            closed_form: false,
            ladder_agreement: None,
            certified_bound,
        }),
    }
}

/// Named numeric constants accompanying an expression density in configs.
pub type Constants = BTreeMap<String, f64>;
