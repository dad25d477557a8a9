//! Built-in densities and their documented validation verdicts.

use super::validate::{Hypothesis, VerdictKind};
use super::{BulkDensity, Modulus, SurfaceDensity, W3Params};
use serde::Serialize;

/// One row of the catalog listing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: &'static str,
    pub formula: &'static str,
    pub constants: Vec<(&'static str, f64)>,
    /// Part of the six-density core set.
    pub core: bool,
}

struct BulkSpec {
    name: &'static str,
    formula: &'static str,
    p: f64,
    lipschitz: f64,
    coercivity: f64,
    recession: Option<&'static str>,
    w3: Option<W3Params>,
    modulus: Option<Modulus>,
    convex: bool,
    core: bool,
}

struct SurfaceSpec {
    name: &'static str,
    formula: &'static str,
    lower: f64,
    upper: f64,
    core: bool,
}

const BULK: &[BulkSpec] = &[
    BulkSpec {
        name: "quadratic",
        formula: "normsq(A)",
        p: 2.0,
        lipschitz: 2.0,
        coercivity: 0.5,
        recession: None,
        w3: None,
        modulus: Some(Modulus { k: 0.0, beta: 1.0 }),
        convex: true,
        core: true,
    },
    BulkSpec {
        name: "p-power",
        formula: "norm(A)^3",
        p: 3.0,
        lipschitz: 3.0,
        coercivity: 0.5,
        recession: None,
        w3: None,
        modulus: Some(Modulus { k: 0.0, beta: 1.0 }),
        convex: true,
        core: true,
    },
    BulkSpec {
        name: "perturbed-linear",
        formula: "sqrt(1 + normsq(A))",
        p: 1.0,
        lipschitz: 1.0,
        coercivity: 1.0,
        recession: Some("norm(A)"),
        w3: Some(W3Params {
            c: 1.0,
            l: 1.0,
            alpha: 0.5,
        }),
        modulus: Some(Modulus { k: 0.0, beta: 1.0 }),
        convex: true,
        core: true,
    },
    BulkSpec {
        name: "linear",
        formula: "norm(A)",
        p: 1.0,
        lipschitz: 1.0,
        coercivity: 1.0,
        recession: Some("norm(A)"),
        w3: Some(W3Params {
            c: 1.0,
            l: 1.0,
            alpha: 0.5,
        }),
        modulus: Some(Modulus { k: 0.0, beta: 1.0 }),
        convex: true,
        core: false,
    },
    BulkSpec {
        name: "sine-perturbed-linear",
        formula: "norm(A) + sin(norm(A)) / (1 + norm(A))",
        p: 1.0,
        lipschitz: 2.0,
        coercivity: 0.5,
        recession: None,
        w3: None,
        modulus: None,
        convex: false,
        core: false,
    },
    BulkSpec {
        name: "weighted-quadratic",
        formula: "(1 + x[0]^2) * normsq(A)",
        p: 2.0,
        lipschitz: 4.0,
        coercivity: 0.5,
        recession: None,
        w3: None,
        modulus: Some(Modulus { k: 2.0, beta: 1.0 }),
        convex: true,
        core: false,
    },
    BulkSpec {
        name: "cubic-misdeclared",
        formula: "norm(A)^3",
        p: 2.0,
        lipschitz: 3.0,
        coercivity: 0.5,
        recession: None,
        w3: None,
        modulus: None,
        convex: true,
        core: false,
    },
    BulkSpec {
        name: "negative",
        formula: "-1",
        p: 1.0,
        lipschitz: 1.0,
        coercivity: 1.0,
        recession: None,
        w3: None,
        modulus: None,
        convex: true,
        core: false,
    },
];

const SURFACE: &[SurfaceSpec] = &[
    SurfaceSpec {
        name: "norm-jump",
        formula: "norm(lambda)",
        lower: 1.0,
        upper: 1.0,
        core: true,
    },
    SurfaceSpec {
        name: "anisotropic",
        formula: "abs(dot(lambda, nu))",
        lower: 1.0,
        upper: 1.0,
        core: true,
    },
    SurfaceSpec {
        name: "scaled-jump",
        formula: "2 * norm(lambda)",
        lower: 2.0,
        upper: 2.0,
        core: true,
    },
    SurfaceSpec {
        name: "quadratic-jump",
        formula: "normsq(lambda)",
        lower: 1.0,
        upper: 1.0,
        core: false,
    },
];

fn build_bulk(s: &BulkSpec) -> BulkDensity {
    let mut w = BulkDensity::from_expr(s.name, s.formula, s.p, s.lipschitz, s.coercivity)
        .expect("catalog formulas parse");
    if let Some(r) = s.recession {
        w = w.with_recession_expr(r).expect("catalog formulas parse");
    }
    if let Some(w3) = s.w3 {
        w = w.with_w3(w3);
    }
    if let Some(m) = s.modulus {
        w = w.with_modulus(m);
    }
    w.with_convex(s.convex)
}

fn build_surface(s: &SurfaceSpec) -> SurfaceDensity {
    let mut psi = SurfaceDensity::from_expr(s.name, s.formula, s.lower, s.upper)
        .expect("catalog formulas parse");
    psi.modulus = Some(Modulus { k: 0.0, beta: 1.0 });
    psi
}

pub fn bulk(name: &str) -> Option<BulkDensity> {
    BULK.iter().find(|s| s.name == name).map(build_bulk)
}

pub fn surface(name: &str) -> Option<SurfaceDensity> {
    SURFACE.iter().find(|s| s.name == name).map(build_surface)
}

pub fn bulk_names() -> Vec<&'static str> {
    BULK.iter().map(|s| s.name).collect()
}

pub fn surface_names() -> Vec<&'static str> {
    SURFACE.iter().map(|s| s.name).collect()
}

/// The six core densities: three bulk, three surface.
pub fn core_names() -> Vec<&'static str> {
    BULK.iter()
        .filter(|s| s.core)
        .map(|s| s.name)
        .chain(SURFACE.iter().filter(|s| s.core).map(|s| s.name))
        .collect()
}

pub fn list_catalog() -> Vec<CatalogEntry> {
    let mut out: Vec<CatalogEntry> = BULK
        .iter()
        .map(|s| {
            let mut constants = vec![("p", s.p), ("C_W", s.lipschitz), ("c_W", s.coercivity)];
            if let Some(w3) = s.w3 {
                constants.extend([("C", w3.c), ("L", w3.l), ("alpha", w3.alpha)]);
            }
            if let Some(m) = s.modulus {
                constants.extend([("omega_k", m.k), ("omega_beta", m.beta)]);
            }
            CatalogEntry {
                name: s.name,
                kind: "bulk",
                formula: s.formula,
                constants,
                core: s.core,
            }
        })
        .collect();
    out.extend(SURFACE.iter().map(|s| CatalogEntry {
        name: s.name,
        kind: "surface",
        formula: s.formula,
        constants: vec![("c_psi", s.lower), ("C_psi", s.upper)],
        core: s.core,
    }));
    out
}

/// Documented verdicts for every catalog density under [`super::validate_bulk`]
/// or [`super::validate_surface`].
pub fn documented_verdicts(name: &str) -> Option<Vec<(Hypothesis, VerdictKind)>> {
    use Hypothesis::*;
    use VerdictKind::*;
    let v = match name {
        "quadratic" | "p-power" | "weighted-quadratic" => vec![
            (Nonnegativity, Pass),
            (W1, Pass),
            (W2, Pass),
            (W3, Skipped),
            (W4, Pass),
            (W5, Pass),
        ],
        "perturbed-linear" | "linear" => vec![
            (Nonnegativity, Pass),
            (W1, Pass),
            (W2, Pass),
            (W3, Pass),
            (W4, Pass),
            (W5, Pass),
        ],
        "sine-perturbed-linear" => vec![
            (Nonnegativity, Pass),
            (W1, Pass),
            (W2, Skipped),
            (W3, Skipped),
            (W4, Pass),
            (W5, Pass),
        ],
        "cubic-misdeclared" => vec![
            (Nonnegativity, Pass),
            (W1, Fail),
            (W2, Skipped),
            (W3, Skipped),
            (W4, Pass),
            (W5, Pass),
        ],
        "negative" => vec![
            (Nonnegativity, Fail),
            (W1, Pass),
            (W2, Skipped),
            (W3, Skipped),
            (W4, Pass),
            (W5, Fail),
        ],
        "norm-jump" | "scaled-jump" => vec![
            (Psi1, Pass),
            (Psi2Lower, Pass),
            (Psi2Upper, Pass),
            (Psi3, Pass),
            (Psi4, Pass),
            (Psi5, Pass),
        ],
        "anisotropic" => vec![
            (Psi1, Pass),
            (Psi2Lower, Fail),
            (Psi2Upper, Pass),
            (Psi3, Pass),
            (Psi4, Pass),
            (Psi5, Pass),
        ],
        "quadratic-jump" => vec![
            (Psi1, Pass),
            (Psi2Lower, Fail),
            (Psi2Upper, Fail),
            (Psi3, Fail),
            (Psi4, Fail),
            (Psi5, Pass),
        ],
        _ => return None,
    };
    Some(v)
}

/// `W(A) = |A|²` on scalars, the workhorse of the one-dimensional examples.
pub fn quadratic() -> BulkDensity {
    bulk("quadratic").expect("in catalog")
}

pub fn norm_jump() -> SurfaceDensity {
    surface("norm-jump").expect("in catalog")
}
