//! JSON schema of a run.
//!
//! ```json
//! {
//!   "command": "relax-bulk",
//!   "bulk": "quadratic",
//!   "surface": {"formula": "2*norm(lambda)", "lower": 2, "upper": 2},
//!   "params": {"A": 1, "B": 0, "n": 8, "ladder": [2, 4, 8]},
//!   "seed": 0
//! }
//! ```
//!
//! Matrices are written as a number (1×1) or as a list of rows.

use super::CliError;
use crate::approx::{Integrability, LimitOrder};
use crate::density::{catalog, BulkDensity, SurfaceDensity};
use crate::linalg::Mat;
use crate::multilevel::EstimatorOptions;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RelaxBulk,
    RelaxSurface,
    Dirichlet,
    Blowup,
    Approx,
    Multilevel,
    Validate,
    Catalog,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RelaxBulk => "relax-bulk",
            Command::RelaxSurface => "relax-surface",
            Command::Dirichlet => "dirichlet",
            Command::Blowup => "blowup",
            Command::Approx => "approx",
            Command::Multilevel => "multilevel",
            Command::Validate => "validate",
            Command::Catalog => "catalog",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_mat(&self, what: &str) -> Result<Mat, CliError> {
        match self {
            MatrixSpec::Scalar(v) => Ok(Mat::scalar(*v)),
            MatrixSpec::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
                    return Err(CliError::Config(format!("`{what}` must be a non-empty rectangular matrix")));
                }
                Ok(Mat::from_rows(rows))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BulkSpec {
    Catalog(String),
    Custom(CustomBulk),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomBulk {
    #[serde(default)]
    pub name: Option<String>,
    pub formula: String,
    pub p: f64,
    pub lipschitz: f64,
    pub coercivity: f64,
    #[serde(default)]
    pub convex: bool,
    /// Closed form of `W^∞`.
    #[serde(default)]
    pub recession: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceSpec {
    Catalog(String),
    Custom(CustomSurface),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSurface {
    #[serde(default)]
    pub name: Option<String>,
    pub formula: String,
    pub lower: f64,
    pub upper: f64,
}

impl BulkSpec {
    pub fn build(&self) -> Result<BulkDensity, CliError> {
        match self {
            BulkSpec::Catalog(name) => catalog::bulk(name)
                .ok_or_else(|| CliError::Config(format!("unknown bulk density `{name}`"))),
            BulkSpec::Custom(c) => {
                let name = c.name.clone().unwrap_or_else(|| c.formula.clone());
                let w = BulkDensity::from_expr(name, &c.formula, c.p, c.lipschitz, c.coercivity)
                    .map_err(|e| CliError::Config(format!("bulk formula `{}`: {e}", c.formula)))?
                    .with_convex(c.convex);
                match &c.recession {
                    Some(r) => w
                        .with_recession_expr(r)
                        .map_err(|e| CliError::Config(format!("recession formula `{r}`: {e}"))),
                    None => Ok(w),
                }
            }
        }
    }
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<SurfaceDensity, CliError> {
        match self {
            SurfaceSpec::Catalog(name) => catalog::surface(name)
                .ok_or_else(|| CliError::Config(format!("unknown surface density `{name}`"))),
            SurfaceSpec::Custom(c) => {
                let name = c.name.clone().unwrap_or_else(|| c.formula.clone());
                SurfaceDensity::from_expr(name, &c.formula, c.lower, c.upper)
                    .map_err(|e| CliError::Config(format!("surface formula `{}`: {e}", c.formula)))
            }
        }
    }
}

/// An explicit field on the unit cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub dim: usize,
    pub d: usize,
    pub n: usize,
    pub values: Vec<f64>,
    pub gradients: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlowupMode {
    #[default]
    Bulk,
    Surface,
}

/// Problem parameters; each command reads the ones it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[serde(rename = "A")]
    pub a: Option<MatrixSpec>,
    #[serde(rename = "B")]
    pub b: Option<MatrixSpec>,
    pub lambda: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub p: Option<f64>,
    /// Cells per side.
    pub n: Option<usize>,
    /// Refinement ladder (cell commands) or index ladder (approx, multilevel).
    pub ladder: Option<Vec<usize>>,
    /// Cube sides of a blow-up.
    pub eps: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    /// Value of an affine datum or deformation at the cube center.
    pub offset: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub side: Option<f64>,
    pub means: Option<Vec<MatrixSpec>>,
    pub mode: Option<BlowupMode>,
    pub domain_center: Option<Vec<f64>>,
    pub domain_side: Option<f64>,
    pub iterations: Option<usize>,
    pub restarts: Option<usize>,
    pub collar: Option<usize>,
    #[serde(rename = "G")]
    pub big_g: Option<MatrixSpec>,
    #[serde(rename = "G1")]
    pub g1: Option<MatrixSpec>,
    #[serde(rename = "G2")]
    pub g2: Option<MatrixSpec>,
    pub field: Option<FieldSpec>,
    pub integrability: Option<Integrability>,
    pub order: Option<LimitOrder>,
    pub estimator: Option<EstimatorOptions>,
    /// Catalog names to validate besides the configured densities.
    pub names: Option<Vec<String>>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub strong: Option<f64>,
    pub weak: Option<f64>,
    pub inner_factor: Option<usize>,
    /// Bracket tolerance of the multilevel comparison.
    pub compare: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub bulk: Option<BulkSpec>,
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("parse error: {e}"))
        })
    }

    pub fn bulk_density(&self) -> Result<BulkDensity, CliError> {
        self.bulk
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `bulk` density".into()))?
            .build()
    }

    pub fn surface_density(&self) -> Result<SurfaceDensity, CliError> {
        self.surface
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `surface` density".into()))?
            .build()
    }
}
